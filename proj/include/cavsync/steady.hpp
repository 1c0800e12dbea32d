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

// steady.hpp: exact RWA steady state.
//
// The Lindbladian is split as L(rho) = -(A rho + rho B) + L1(rho) with
//   A = iH + 1/2 sum_k r_k L_k^+ L_k,   B = A^+,   L1(rho) = sum_k r_k L_k rho L_k^+,
// and the steady state is the fixed point of rho <- (A . + . B)^{-1} L1(rho),
// each step being one Sylvester solve against a factorization computed once.

#pragma once

#include "cavsync/core.hpp"
#include "cavsync/hilbert.hpp"
#include "cavsync/model.hpp"
#include "cavsync/rate.hpp"
#include "cavsync/sylvester.hpp"

#include <Eigen/SVD>

#include <optional>
#include <string>
#include <vector>

namespace cavsync {

/// Sylvester-type part (A, B) and sandwich part (sqrt(r_k) L_k) of a Lindbladian.
///
/// Optionally each jump operator is split as L_k = (L_k - c_k) + c_k. This is
/// an exact rewrite of the same Lindbladian (the constant parts are absorbed
/// into the Hamiltonian), but the sandwich term then only carries the
/// fluctuations around c_k; with c_k = <L_k> it removes the coherent part of
/// the cavity field from L1 and the fixed point is reached in far fewer steps.
struct SylvesterSplit {
    CMatrix A;
    CMatrix B;
    std::vector<SparseOp> sandwich;
    std::vector<cplx> displacement;

    explicit SylvesterSplit(const LindbladSpec& spec, std::vector<cplx> shifts = {}) {
        const Index d = spec.dim();
        if (shifts.empty()) shifts.assign(spec.jumps().size(), cplx(0.0));
        if (shifts.size() != spec.jumps().size()) throw DimensionError("SylvesterSplit: one shift per jump");
        displacement = shifts;
        A = -CMatrix(spec.effective());
        for (std::size_t k = 0; k < spec.jumps().size(); ++k) {
            const auto& j = spec.jumps()[k];
            if (j.rate < 0.0) throw ConfigError("SylvesterSplit: gain rates are not supported");
            const cplx c = shifts[k];
            SparseOp L = j.op.sparse();
            if (c != cplx(0.0)) {
                // A' = A - r c* L + r |c|^2 / 2
                A -= j.rate * std::conj(c) * CMatrix(L);
                A.diagonal().array() += 0.5 * j.rate * std::norm(c);
                SparseOp Id(d, d);
                Id.setIdentity();
                L = SparseOp(L - c * Id);
            }
            sandwich.push_back(SparseOp(std::sqrt(j.rate) * L));
        }
        B = A.adjoint();
    }

    /// L1(rho) = sum_k (sqrt r_k L_k) rho (sqrt r_k L_k)^+
    CMatrix sandwich_term(const CMatrix& rho) const {
        CMatrix out = CMatrix::Zero(rho.rows(), rho.cols());
        for (const auto& L : sandwich) {
            const CMatrix Lrho = L * rho;
            out.noalias() += Lrho * SparseOp(L.adjoint());
        }
        return out;
    }

    /// -(A rho + rho B) + L1(rho); equals apply_lindblad.
    CMatrix apply(const CMatrix& rho) const { return -(A * rho + rho * B) + sandwich_term(rho); }
};

struct SteadyOptions {
    double tol = 1e-10;
    /// Budget of Sylvester solves.
    int max_iter = 200;
    /// Explicit starting point; overrides `rate_guess`.
    std::optional<CMatrix> initial_guess;
    /// Start from the (R)* rate series (its best partial sum when it does not
    /// converge), else from the maximally mixed state.
    bool rate_guess = true;
    int rate_guess_terms = 40;
    /// Krylov subspace size of the GMRES acceleration of the fixed-point map
    /// (restart length); 0 gives the plain iteration rho <- L0^{-1} L1 rho.
    int krylov_dim = 0;
    /// Split every jump as (L_k - <L_k>) + <L_k> using the initial guess.
    bool displace = true;
};

struct SteadySolveReport {
    DensityMatrix rho;
    int iterations = 0;
    double residual = 0.0;  ///< ||L(rho)||_F / ||rho||_F
    bool converged = false;
    /// Diagonal shift added to both sides of the splitting (0 unless the pencil was singular).
    double shift = 0.0;
    std::string initial_guess;  ///< "given", "rate_series", "rate_series_partial" or "maximally_mixed"
    std::vector<double> residual_history;
};

inline double relative_residual(const LindbladSpec& spec, const CMatrix& rho) {
    return apply_lindblad(spec, rho).norm() / std::max(rho.norm(), 1e-300);
}

/// |0><0| (x) |down...down><down...down|.
inline CMatrix ground_state(const SpaceSpec& space) {
    CMatrix g = CMatrix::Zero(space.dim(), space.dim());
    g(0, 0) = 1.0;
    return g;
}

namespace detail {

inline double total_rate(const LindbladSpec& spec) {
    double r = 0.0;
    for (const auto& j : spec.jumps()) r += std::abs(j.rate);
    return r;
}

}  // namespace detail

/// Fixed-point iteration of Sylvester solves for L(rho) = 0 in the RWA frame.
inline SteadySolveReport steady_state_rwa(const ModelConfig& cfg, const SteadyOptions& opt = {}) {
    cfg.validate();
    if (!cfg.has_dissipation()) {
        throw ConfigError("steady_state_rwa: gamma and all gamma_s vanish, the steady state is not unique");
    }
    const LindbladSpec spec = build_lindblad_rwa(cfg);
    const Index d = spec.dim();

    SteadySolveReport rep;
    CMatrix rho;
    if (opt.initial_guess) {
        if (opt.initial_guess->rows() != d) throw DimensionError("steady_state_rwa: initial guess dimension");
        rho = *opt.initial_guess;
        rep.initial_guess = "given";
    } else if (opt.rate_guess) {
        try {
            const auto rs = sum_series(cfg, SeriesVariant::r_star, opt.rate_guess_terms);
            if (rs.status != SeriesStatus::diverged_immediately) {
                rho = rs.rho.matrix();
                rep.initial_guess = rs.status == SeriesStatus::converged ? "rate_series" : "rate_series_partial";
            }
        } catch (const Error&) {
            // fall through
        }
    }
    // The ground state is no use as a start: L1 annihilates it at zero temperature.
    if (rho.size() == 0) {
        rho = CMatrix::Identity(d, d) / double(d);
        rep.initial_guess = "maximally_mixed";
    }
    rho = hermitian_part(rho);
    rho /= rho.trace().real();

    rep.residual = relative_residual(spec, rho);
    rep.residual_history.push_back(rep.residual);
    if (rep.residual < opt.tol) {
        rep.converged = true;
        rep.rho = DensityMatrix(rho, DensityMatrix::Validate::no);
        return rep;
    }

    std::vector<cplx> shifts;
    if (opt.displace) {
        for (const auto& j : spec.jumps()) shifts.push_back((j.op.sparse() * rho).trace());
    }
    const SylvesterSplit split(spec, shifts);

    // A singular pencil (e.g. a dark state at F = 0) is lifted by adding the
    // same multiple of the identity to both sides; the fixed point is unchanged.
    std::optional<SylvesterSolver> solver;
    try {
        solver.emplace(split.A, split.B);
    } catch (const SingularPencilError&) {
        rep.shift = detail::total_rate(spec);
        const CMatrix As = split.A + 0.5 * rep.shift * CMatrix::Identity(d, d);
        solver.emplace(As, CMatrix(As.adjoint()));
    }

    // Unnormalized fixed-point map M(x) = L0^{-1} L1(x), Hermitian by construction.
    auto fixed_point_map = [&](const CMatrix& x) {
        CMatrix rhs = split.sandwich_term(x);
        if (rep.shift != 0.0) rhs += rep.shift * x;
        return CMatrix(hermitian_part(solver->solve(rhs)));
    };
    auto normalized = [&](const CMatrix& x) {
        const double tr = x.trace().real();
        if (std::abs(tr) < 1e-8) {
            throw DegenerateKernelError("steady_state_rwa: trace collapsed to " + std::to_string(tr) +
                                        " after " + std::to_string(rep.iterations) + " Sylvester solves");
        }
        return CMatrix(x / tr);
    };

    double best = rep.residual;
    CMatrix best_rho = rho;
    auto record = [&]() {
        rep.residual = relative_residual(spec, rho);
        rep.residual_history.push_back(rep.residual);
        if (rep.residual < best) {
            best = rep.residual;
            best_rho = rho;
        }
        rep.converged = rep.residual < opt.tol;
    };

    if (opt.krylov_dim <= 0) {
        while (!rep.converged && rep.iterations < opt.max_iter) {
            ++rep.iterations;
            rho = normalized(fixed_point_map(rho));
            record();
        }
    } else {
        // Restarted GMRES on (I - M) delta = M rho - rho. The Hermitian matrices
        // form a real vector space, so the inner product is Re tr(X^+ Y) and all
        // Krylov coefficients are real.
        auto dot = [](const CMatrix& x, const CMatrix& y) { return (x.conjugate().cwiseProduct(y)).sum().real(); };
        const int m = opt.krylov_dim;
        std::vector<CMatrix> V;
        while (!rep.converged && rep.iterations < opt.max_iter) {
            ++rep.iterations;
            const CMatrix f = fixed_point_map(rho) - rho;
            const double beta = std::sqrt(dot(f, f));
            if (beta == 0.0) break;
            V.assign(1, f / beta);
            RMatrix Hh = RMatrix::Zero(m + 1, m);
            RVector g = RVector::Zero(m + 1), cs = RVector::Zero(m), sn = RVector::Zero(m);
            g(0) = beta;
            int k = 0;
            // the preconditioned residual is scaled like rho; aim well below the target
            const double inner_tol = 1e-2 * opt.tol * std::sqrt(dot(rho, rho));
            for (; k < m && rep.iterations < opt.max_iter; ++k) {
                ++rep.iterations;
                CMatrix w = V[std::size_t(k)] - fixed_point_map(V[std::size_t(k)]);
                for (int pass = 0; pass < 2; ++pass) {
                    for (int i = 0; i <= k; ++i) {
                        const double h = dot(V[std::size_t(i)], w);
                        Hh(i, k) += h;
                        w -= h * V[std::size_t(i)];
                    }
                }
                Hh(k + 1, k) = std::sqrt(dot(w, w));
                for (int i = 0; i < k; ++i) {
                    const double t = cs(i) * Hh(i, k) + sn(i) * Hh(i + 1, k);
                    Hh(i + 1, k) = -sn(i) * Hh(i, k) + cs(i) * Hh(i + 1, k);
                    Hh(i, k) = t;
                }
                const double r = std::hypot(Hh(k, k), Hh(k + 1, k));
                cs(k) = Hh(k, k) / r;
                sn(k) = Hh(k + 1, k) / r;
                Hh(k, k) = r;
                Hh(k + 1, k) = 0.0;
                g(k + 1) = -sn(k) * g(k);
                g(k) *= cs(k);
                const bool breakdown = Hh.coeff(k + 1, k) == 0.0 && r == 0.0;
                if (breakdown) break;
                if (std::abs(g(k + 1)) <= inner_tol) {
                    ++k;
                    break;
                }
                const double hn = std::sqrt(dot(w, w));
                if (hn == 0.0) {
                    ++k;
                    break;
                }
                V.push_back(w / hn);
            }
            if (k == 0) break;
            const RVector y = Hh.topLeftCorner(k, k).triangularView<Eigen::Upper>().solve(g.head(k));
            CMatrix delta = CMatrix::Zero(d, d);
            for (int i = 0; i < k; ++i) delta += y(i) * V[std::size_t(i)];
            rho = normalized(rho + delta);
            record();
        }
    }
    if (!rep.converged) {
        rho = best_rho;
        rep.residual = best;
    }
    rep.rho = DensityMatrix(std::move(rho), DensityMatrix::Validate::no);
    return rep;
}

/// Column-major vectorized Lindbladian: vec(L(rho)) = S vec(rho).
inline CMatrix lindblad_superoperator(const LindbladSpec& spec) {
    const Index d = spec.dim();
    const CMatrix G(spec.effective());
    CMatrix S = CMatrix::Zero(d * d, d * d);
    // vec(A X B) = (B^T (x) A) vec(X); entry ((i + j d), (k + l d)) = B(l, j) A(i, k)
    auto add_kron = [&](const CMatrix& A, const CMatrix& B, cplx w) {
        for (Index l = 0; l < d; ++l)
            for (Index j = 0; j < d; ++j) {
                const cplx b = w * B(l, j);
                if (b == cplx(0.0)) continue;
                S.block(j * d, l * d, d, d) += b * A;
            }
    };
    const CMatrix Id = CMatrix::Identity(d, d);
    add_kron(G, Id, 1.0);
    add_kron(Id, G.adjoint(), 1.0);
    for (const auto& j : spec.jumps()) {
        const CMatrix L = j.op.dense();
        add_kron(L, L.adjoint(), j.rate);
    }
    return S;
}

/// Small-dimension oracle: kernel of the full D^2 x D^2 superoperator via SVD.
inline DensityMatrix steady_state_dense_oracle(const ModelConfig& cfg) {
    cfg.validate();
    const Index d = cfg.space.dim();
    if (d > 32) throw ConfigError("steady_state_dense_oracle: dimension " + std::to_string(d) + " exceeds 32");
    const LindbladSpec spec = build_lindblad_rwa(cfg);
    const CMatrix S = lindblad_superoperator(spec);
    Eigen::BDCSVD<CMatrix> svd(S, Eigen::ComputeFullV);
    const RVector& sv = svd.singularValues();
    const Index n = sv.size();
    if (n >= 2 && sv(n - 2) < 1e-8 * sv(0)) {
        throw DegenerateKernelError("steady_state_dense_oracle: kernel is not one dimensional (sigma_{n-2} = " +
                                    std::to_string(sv(n - 2)) + ")");
    }
    const CVector k = svd.matrixV().col(n - 1);
    CMatrix rho = Eigen::Map<const CMatrix>(k.data(), d, d);
    const cplx tr = rho.trace();
    if (std::abs(tr) < 1e-12) throw DegenerateKernelError("steady_state_dense_oracle: kernel vector is traceless");
    rho /= tr;
    rho = hermitian_part(rho);
    rho /= rho.trace().real();
    return DensityMatrix(std::move(rho), DensityMatrix::Validate::no);
}

}  // namespace cavsync
