// Copyright 2026 The cavsync Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// rate.hpp: weak-damping expansion of the steady state in powers of the
// dissipator, written in the eigenbasis of the RWA Hamiltonian.
//
// Order 0 is diagonal, rho_0 = sum_n P_n |n><n| with K P = 0. Each further
// order takes its off-diagonal part from the previous order,
//     (rho_{j+1})_{nm} = -[Lg rho_j]_{nm} / d_nm,
// fixes its diagonal with P_D Lg rho_{j+1} = 0 (K pseudoinverse), and is then
// made traceless with rho_{j+1} <- rho_{j+1} - rho_0 tr(rho_{j+1}).
//
// Variant R uses d_nm = i(e_m - e_n). Variant R* moves the eigenbasis-diagonal
// part of the dissipator, kappa_nm = <n|Lg(|n><m|)|m>, into the denominator:
// d_nm = i(e_m - e_n) + kappa_nm, numerator [Lg rho_j]_nm - kappa_nm (rho_j)_nm.

#pragma once

#include "cavsync/core.hpp"
#include "cavsync/hilbert.hpp"
#include "cavsync/model.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <limits>
#include <sstream>
#include <string>
#include <vector>

namespace cavsync {

enum class SeriesVariant { r, r_star };
enum class SeriesStatus { converged, truncated_at_min_residual, diverged_immediately };

inline const char* to_string(SeriesVariant v) { return v == SeriesVariant::r ? "R" : "R*"; }
inline const char* to_string(SeriesStatus s) {
    switch (s) {
        case SeriesStatus::converged: return "converged";
        case SeriesStatus::truncated_at_min_residual: return "truncated_at_min_residual";
        case SeriesStatus::diverged_immediately: return "diverged_immediately";
    }
    return "?";
}

/// Spectral decomposition H = sum_n e_n |n><n|.
struct EigenBasis {
    RVector values;
    CMatrix vectors;  ///< columns are |n>
    double degeneracy_threshold = 0.0;
    /// Groups of consecutive indices whose eigenvalues differ by less than the threshold.
    std::vector<std::vector<Index>> degenerate_groups;

    Index dim() const noexcept { return values.size(); }

    static EigenBasis of(const CMatrix& H, double relative_threshold = 1e-9) {
        Eigen::SelfAdjointEigenSolver<CMatrix> es(H);
        if (es.info() != Eigen::Success) throw Error("EigenBasis: diagonalization failed");
        EigenBasis b;
        b.values = es.eigenvalues();
        b.vectors = es.eigenvectors();
        const double scale = b.values.cwiseAbs().maxCoeff();
        b.degeneracy_threshold = relative_threshold * std::max(scale, 1e-300);
        for (Index i = 1; i < b.dim(); ++i) {
            if (b.values(i) - b.values(i - 1) < b.degeneracy_threshold) {
                if (b.degenerate_groups.empty() || b.degenerate_groups.back().back() != i - 1) {
                    b.degenerate_groups.push_back({i - 1});
                }
                b.degenerate_groups.back().push_back(i);
            }
        }
        return b;
    }
};

struct RateSeriesReport {
    DensityMatrix rho;
    int terms_used = 0;                   ///< orders included in rho (0 = rho_0 only)
    std::vector<double> residual_history;  ///< ||L(partial sum)||_F / ||partial sum||_F per order
    SeriesStatus status = SeriesStatus::diverged_immediately;
    SeriesVariant variant = SeriesVariant::r_star;
    double clipped_probability = 0.0;  ///< magnitude removed when clipping negative P_n
    double best_residual() const {
        return residual_history.empty() ? std::numeric_limits<double>::infinity()
                                        : residual_history[std::size_t(terms_used)];
    }
};

struct SeriesOptions {
    int max_terms = 60;
    double tol = 1e-9;            ///< relative residual that counts as converged
    double plateau = 1e-14;       ///< stop early once the residual is this small
    double kernel_tolerance = 1e-10;  ///< relative singular value below which K is rank deficient
};

/// One order of the series, in the eigenbasis, together with Lg applied to it.
struct SeriesTerm {
    CMatrix rho;
    CMatrix lg_rho;
};

/// Precomputes everything the series needs for one model configuration.
class RateSeries {
public:
    explicit RateSeries(const ModelConfig& cfg, const SeriesOptions& opt = {})
        : spec_(build_lindblad_rwa(cfg)), opt_(opt) {
        if (!cfg.has_dissipation()) {
            throw DegenerateKernelError("rate series: no dissipation, the rate equations carry no kinetics");
        }
        basis_ = EigenBasis::of(spec_.hamiltonian().dense());
        build_rates();
    }

    const EigenBasis& basis() const noexcept { return basis_; }
    /// K(m, n) = <m| Lg(|n><n|) |m>; columns sum to zero.
    const RMatrix& k_matrix() const noexcept { return K_; }
    /// kappa(n, m) = <n| Lg(|n><m|) |m>.
    const CMatrix& diagonal_shift() const noexcept { return kappa_; }
    const LindbladSpec& lindblad() const noexcept { return spec_; }

    /// Dissipator in the eigenbasis: V^+ Lg(V X V^+) V.
    CMatrix apply_dissipator(const CMatrix& X) const {
        const CMatrix& V = basis_.vectors;
        const CMatrix Y = V * X * V.adjoint();
        return V.adjoint() * dissipator_original(Y) * V;
    }

    /// Hamiltonian part in the eigenbasis: (L_H X)_nm = i(e_m - e_n) X_nm.
    CMatrix apply_hamiltonian(const CMatrix& X) const {
        const Index d = X.rows();
        CMatrix out(d, d);
        for (Index m = 0; m < d; ++m)
            for (Index n = 0; n < d; ++n) out(n, m) = I_unit * (basis_.values(m) - basis_.values(n)) * X(n, m);
        return out;
    }

    /// Order 0: diagonal populations from the kernel of K.
    SeriesTerm zeroth_order() {
        const Index d = basis_.dim();
        const RVector& sv = svd_.singularValues();
        if (d >= 2 && sv(d - 2) < opt_.kernel_tolerance * sv(0)) throw DegenerateKernelError(sector_report());
        RVector P = svd_.matrixV().col(d - 1);
        if (P.sum() < 0.0) P = -P;
        clipped_ = 0.0;
        for (Index n = 0; n < d; ++n) {
            if (P(n) < -1e-10) {
                clipped_ += -P(n);
                P(n) = 0.0;
            }
        }
        P /= P.sum();
        SeriesTerm t;
        t.rho = CMatrix::Zero(d, d);
        t.rho.diagonal() = P.cast<cplx>();
        t.lg_rho = apply_dissipator(t.rho);
        rho0_ = t;
        have_rho0_ = true;
        return t;
    }

    double clipped_probability() const noexcept { return clipped_; }

    /// Next order of the series from the previous one.
    SeriesTerm step(const SeriesTerm& prev, SeriesVariant variant) {
        if (!have_rho0_) zeroth_order();
        const Index d = basis_.dim();
        const double thr = basis_.degeneracy_threshold;
        SeriesTerm next;
        next.rho = CMatrix::Zero(d, d);
        for (Index m = 0; m < d; ++m) {
            for (Index n = 0; n < d; ++n) {
                if (n == m) continue;
                cplx den = I_unit * (basis_.values(m) - basis_.values(n));
                cplx num = prev.lg_rho(n, m);
                if (variant == SeriesVariant::r_star) {
                    den += kappa_(n, m);
                    num -= kappa_(n, m) * prev.rho(n, m);
                }
                if (std::abs(den) < thr) {
                    std::ostringstream os;
                    os << "rate series: denominator |d(" << n << "," << m << ")| = " << std::abs(den)
                       << " below the near-degeneracy threshold " << thr;
                    throw SmallDenominatorError(os.str(), n, m);
                }
                next.rho(n, m) = -num / den;
            }
        }
        // diagonal: K p = -diag(Lg(offdiag))
        const RVector b = -apply_dissipator(next.rho).diagonal().real();
        const RVector p = pseudo_solve(b);
        next.rho.diagonal() = p.cast<cplx>();
        const cplx tr = next.rho.trace();
        next.rho -= tr * rho0_.rho;
        next.lg_rho = apply_dissipator(next.rho);
        return next;
    }

    /// Partial sums until convergence or until the residual grows.
    RateSeriesReport sum(SeriesVariant variant, int max_terms = -1) {
        if (max_terms < 0) max_terms = opt_.max_terms;
        RateSeriesReport rep;
        rep.variant = variant;
        SeriesTerm term = zeroth_order();
        rep.clipped_probability = clipped_;
        CMatrix sum = term.rho;
        CMatrix lsum = apply_hamiltonian(term.rho) + term.lg_rho;
        double best = lsum.norm() / sum.norm();
        rep.residual_history.push_back(best);
        CMatrix best_sum = sum;
        int best_order = 0;
        for (int j = 1; j <= max_terms && best > opt_.plateau; ++j) {
            term = step(term, variant);
            sum += term.rho;
            lsum += apply_hamiltonian(term.rho) + term.lg_rho;
            const double res = lsum.norm() / sum.norm();
            rep.residual_history.push_back(res);
            if (!std::isfinite(res) || res > rep.residual_history[std::size_t(j - 1)]) break;
            best = res;
            best_sum = sum;
            best_order = j;
        }
        rep.terms_used = best_order;
        if (best <= opt_.tol) {
            rep.status = SeriesStatus::converged;
        } else if (best_order == 0) {
            rep.status = SeriesStatus::diverged_immediately;
        } else {
            rep.status = SeriesStatus::truncated_at_min_residual;
        }
        const CMatrix& V = basis_.vectors;
        CMatrix rho = V * best_sum * V.adjoint();
        rho = hermitian_part(rho);
        rho /= rho.trace().real();
        rep.rho = DensityMatrix(std::move(rho), DensityMatrix::Validate::no);
        return rep;
    }

private:
    CMatrix dissipator_original(const CMatrix& Y) const {
        const SparseOp& decay = spec_.decay();
        CMatrix out = -0.5 * (decay * Y);
        out.noalias() -= 0.5 * (Y * decay);
        for (const auto& j : spec_.jumps()) {
            const SparseOp& L = j.op.sparse();
            const CMatrix LY = L * Y;
            out.noalias() += j.rate * (LY * SparseOp(L.adjoint()));
        }
        return out;
    }

    void build_rates() {
        const Index d = basis_.dim();
        const CMatrix& V = basis_.vectors;
        K_ = RMatrix::Zero(d, d);
        kappa_ = CMatrix::Zero(d, d);
        // decay diagonal: Gamma_nn = <n| sum r L+L |n>
        const CMatrix GV = spec_.decay() * V;
        RVector gamma_diag(d);
        for (Index n = 0; n < d; ++n) gamma_diag(n) = V.col(n).dot(GV.col(n)).real();
        for (const auto& j : spec_.jumps()) {
            const CMatrix Lt = V.adjoint() * (j.op.sparse() * V);
            K_ += j.rate * Lt.cwiseAbs2();
            const CVector diag = Lt.diagonal();
            kappa_ += j.rate * (diag * diag.adjoint());
        }
        for (Index n = 0; n < d; ++n) K_(n, n) -= gamma_diag(n);
        for (Index m = 0; m < d; ++m)
            for (Index n = 0; n < d; ++n) kappa_(n, m) -= 0.5 * (gamma_diag(n) + gamma_diag(m));
        svd_.compute(K_, Eigen::ComputeFullU | Eigen::ComputeFullV);
    }

    /// Minimum-norm solution of K p = b with the kernel direction removed.
    RVector pseudo_solve(const RVector& b) const {
        const Index d = basis_.dim();
        const RVector& sv = svd_.singularValues();
        const RVector ub = svd_.matrixU().transpose() * b;
        RVector coeff = RVector::Zero(d);
        for (Index i = 0; i + 1 < d; ++i) coeff(i) = ub(i) / sv(i);
        return svd_.matrixV() * coeff;
    }

    std::string sector_report() const {
        // connected components of the transition graph
        const Index d = basis_.dim();
        const double thr = opt_.kernel_tolerance * K_.cwiseAbs().maxCoeff();
        std::vector<Index> comp(std::size_t(d), -1);
        Index ncomp = 0;
        std::vector<Index> sizes;
        for (Index s = 0; s < d; ++s) {
            if (comp[std::size_t(s)] >= 0) continue;
            std::vector<Index> stack{s};
            comp[std::size_t(s)] = ncomp;
            Index size = 0;
            while (!stack.empty()) {
                const Index u = stack.back();
                stack.pop_back();
                ++size;
                for (Index v = 0; v < d; ++v) {
                    if (comp[std::size_t(v)] < 0 && (std::abs(K_(u, v)) > thr || std::abs(K_(v, u)) > thr)) {
                        comp[std::size_t(v)] = ncomp;
                        stack.push_back(v);
                    }
                }
            }
            sizes.push_back(size);
            ++ncomp;
        }
        std::ostringstream os;
        os << "rate series: degenerate kinetics, K has a multi-dimensional kernel; " << ncomp
           << " disconnected sector(s) of sizes";
        for (auto s : sizes) os << ' ' << s;
        return os.str();
    }

    LindbladSpec spec_;
    SeriesOptions opt_;
    EigenBasis basis_;
    RMatrix K_;
    CMatrix kappa_;
    Eigen::BDCSVD<RMatrix> svd_;
    SeriesTerm rho0_;
    bool have_rho0_ = false;
    double clipped_ = 0.0;
};

inline RateSeriesReport sum_series(const ModelConfig& cfg, SeriesVariant variant, int max_terms = 60,
                                   const SeriesOptions& opt = {}) {
    RateSeries rs(cfg, opt);
    return rs.sum(variant, max_terms);
}

/// Lab-frame drive frequencies of the k-photon resonances (k+1) w = k w0 + Omega, k = 1..k_max.
inline std::vector<double> multiphoton_resonance_positions(const ModelConfig& cfg, int k_max) {
    if (cfg.n_qubits() != 1) throw ConfigError("multiphoton_resonance_positions: needs exactly one qubit");
    std::vector<double> w;
    for (int k = 1; k <= k_max; ++k) w.push_back((k * cfg.omega0 + cfg.Omega[0]) / (k + 1));
    return w;
}

}  // namespace cavsync
