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

// semiclassical.hpp: product-state variational approximation
//   rho = |alpha><alpha| (x) prod_l (1 + b_l . sigma_l) / 2,
// scored by S = Tr[L(rho)^+ L(rho)] >= 0 and minimized with multistart
// Nelder-Mead (GSL nmsimplex2) over alpha and the Bloch vectors |b_l| <= 1.
//
// General closed form (any number of qubits). With
//   kappa = (w_r a_x + F + g a_y / 2) + i (w_r a_y - g a_x / 2),   S0 = 2 |kappa|^2,
//   B_l = (lambda_l a_x, -lambda_l a_y, W_l / 2)     (W_l = Omega_l - omega),
//   g_l = B_l x b_l - (gs_l b_lx / 4, gs_l b_ly / 4, gs_l (1 + b_lz) / 2),
//   u_l = (1 + |b_l|^2) / 2,  U = prod_l u_l,
// the functional is
//   S = S0 U
//     + sum_l (U/u_l) [2|g_l|^2 + lambda_l^2 (1 + |b_l|^2 + 2 b_lz)/2 + 2 lambda_l (Re kappa b_lx - Im kappa b_ly)]
//     + sum_{l<m} (U/(u_l u_m)) [2 (g_l.b_l)(g_m.b_m) + lambda_l lambda_m (b_lx b_mx + b_ly b_my)].
// It follows from writing L(rho) in the displaced basis as P (x) M0 + E (x) M1 + h.c.
// and reduces term by term to the printed one- and two-qubit expressions.

#pragma once

#include "cavsync/core.hpp"
#include "cavsync/hilbert.hpp"
#include "cavsync/model.hpp"

#include <gsl/gsl_errno.h>
#include <gsl/gsl_multimin.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <vector>

namespace cavsync {

struct SemiclassicalState {
    double alpha_x = 0.0;
    double alpha_y = 0.0;
    std::vector<Eigen::Vector3d> bloch;  ///< one per qubit

    cplx alpha() const { return {alpha_x, alpha_y}; }
    int n_qubits() const { return int(bloch.size()); }

    std::vector<double> to_vector() const {
        std::vector<double> v{alpha_x, alpha_y};
        for (const auto& b : bloch) v.insert(v.end(), {b.x(), b.y(), b.z()});
        return v;
    }
    static SemiclassicalState from_vector(const std::vector<double>& v) {
        SemiclassicalState s;
        s.alpha_x = v.at(0);
        s.alpha_y = v.at(1);
        for (std::size_t k = 2; k + 2 < v.size(); k += 3) s.bloch.emplace_back(v[k], v[k + 1], v[k + 2]);
        return s;
    }
    /// Every Bloch vector inside the unit ball (within 1e-9).
    bool physical() const {
        return std::all_of(bloch.begin(), bloch.end(), [](const auto& b) { return b.norm() <= 1.0 + 1e-9; });
    }
};

struct FunctionalValue {
    double S = 0.0;
    double gradient_norm = 0.0;  ///< central finite differences
    std::map<std::string, double> breakdown;
};

namespace detail {

inline void require_qubits(const ModelConfig& cfg, const SemiclassicalState& s, const char* who) {
    if (s.n_qubits() != cfg.n_qubits()) {
        throw DimensionError(std::string(who) + ": state has " + std::to_string(s.n_qubits()) +
                             " Bloch vectors, model has " + std::to_string(cfg.n_qubits()) + " qubits");
    }
}

inline double s0_closed_form(double ax, double ay, double wr, double F, double g) {
    return 2.0 * (F * F + 2.0 * F * ax * wr + (ax * ax + ay * ay) * wr * wr) + 2.0 * F * ay * g +
           g * g * (ax * ax + ay * ay) / 2.0;
}

/// Hamiltonian coupling part of one qubit, as printed (lambda-dependent terms only).
inline double s_lambda_hamiltonian(double lam, double ax, double ay, double F, double wr, double Wr,
                                   const Eigen::Vector3d& b) {
    const double bx = b.x(), by = b.y(), bz = b.z();
    return 2.0 * lam * (F * bx + (ax * bx - ay * by) * (wr - bz * Wr)) +
           lam * lam / 2.0 *
               (4.0 * bz * bz * (ax * ax + ay * ay) + (4.0 * ax * ax + 1.0) * by * by + 8.0 * ax * ay * bx * by +
                (4.0 * ay * ay + 1.0) * bx * bx + (bz + 1.0) * (bz + 1.0));
}

inline double s_gamma_s(double gs, double lam, double ax, double ay, const Eigen::Vector3d& b) {
    const double bx = b.x(), by = b.y(), bz = b.z();
    return -gs * lam * (ay * bx + ax * by) * (2.0 + bz) +
           gs * gs * (bx * bx + by * by + 4.0 * (1.0 + bz) * (1.0 + bz)) / 8.0;
}

inline double u_factor(const Eigen::Vector3d& b) { return (1.0 + b.squaredNorm()) / 2.0; }

}  // namespace detail

/// Driven cavity alone: S0 = S(|alpha><alpha|).
inline FunctionalValue eval_S_cavity(double alpha_x, double alpha_y, const ModelConfig& cfg) {
    if (cfg.n_qubits() != 0) throw ConfigError("eval_S_cavity: model has qubits");
    FunctionalValue v;
    v.S = detail::s0_closed_form(alpha_x, alpha_y, cfg.omega_r(), cfg.F, cfg.gamma);
    v.breakdown["S0"] = v.S;
    return v;
}

/// Exact steady-state amplitude of the driven damped cavity (S0 = 0).
inline cplx classical_amplitude(const ModelConfig& cfg) {
    const double wr = cfg.omega_r(), g = cfg.gamma, den = g * g + 4.0 * wr * wr;
    if (den == 0.0) return {0.0, 0.0};
    return {-4.0 * cfg.F * wr / den, -2.0 * cfg.F * g / den};
}

/// One qubit, transcribed term by term from the printed functional.
inline FunctionalValue eval_S_one_qubit(const SemiclassicalState& s, const ModelConfig& cfg) {
    if (cfg.n_qubits() != 1) throw ConfigError("eval_S_one_qubit: needs exactly one qubit");
    detail::require_qubits(cfg, s, "eval_S_one_qubit");
    const auto& b = s.bloch[0];
    const double ax = s.alpha_x, ay = s.alpha_y, wr = cfg.omega_r(), Wr = cfg.Omega_r(1);
    const double lam = cfg.lambda[0], gs = cfg.gamma_s[0], g = cfg.gamma;
    FunctionalValue v;
    v.breakdown["S0"] = detail::u_factor(b) * detail::s0_closed_form(ax, ay, wr, cfg.F, g);
    v.breakdown["Omega_r"] = Wr * Wr * (b.x() * b.x() + b.y() * b.y()) / 2.0;
    v.breakdown["S_lambda"] = detail::s_lambda_hamiltonian(lam, ax, ay, cfg.F, wr, Wr, b) +
                              g * lam * (ay * b.x() + ax * b.y());
    v.breakdown["S_gamma_s"] = detail::s_gamma_s(gs, lam, ax, ay, b);
    for (const auto& [k, x] : v.breakdown) v.S += x;
    return v;
}

/// Two qubits, transcribed from the printed assembly with independent per-qubit b_z.
inline FunctionalValue eval_S_two_qubit(const SemiclassicalState& s, const ModelConfig& cfg) {
    if (cfg.n_qubits() != 2) throw ConfigError("eval_S_two_qubit: needs exactly two qubits");
    detail::require_qubits(cfg, s, "eval_S_two_qubit");
    const auto& b1 = s.bloch[0];
    const auto& b2 = s.bloch[1];
    const double ax = s.alpha_x, ay = s.alpha_y, wr = cfg.omega_r(), g = cfg.gamma, F = cfg.F;
    const double W1 = cfg.Omega_r(1), W2 = cfg.Omega_r(2);
    const double l1 = cfg.lambda[0], l2 = cfg.lambda[1], g1 = cfg.gamma_s[0], g2 = cfg.gamma_s[1];
    const double u1 = detail::u_factor(b1), u2 = detail::u_factor(b2);
    FunctionalValue v;
    v.breakdown["S0"] = detail::s0_closed_form(ax, ay, wr, F, g) * u1 * u2;
    v.breakdown["Omega_r"] = W1 * W1 * (b1.x() * b1.x() + b1.y() * b1.y()) / 2.0 * u2 +
                             W2 * W2 * (b2.x() * b2.x() + b2.y() * b2.y()) / 2.0 * u1;
    v.breakdown["S_lambda"] = u2 * detail::s_lambda_hamiltonian(l1, ax, ay, F, wr, W1, b1) +
                              u1 * detail::s_lambda_hamiltonian(l2, ax, ay, F, wr, W2, b2) +
                              g * u2 * l1 * (ay * b1.x() + ax * b1.y()) + g * u1 * l2 * (ay * b2.x() + ax * b2.y());
    v.breakdown["S_gamma_s"] = u2 * detail::s_gamma_s(g1, l1, ax, ay, b1) + u1 * detail::s_gamma_s(g2, l2, ax, ay, b2);
    v.breakdown["cross"] =
        l1 * l2 * (b1.x() * b2.x() + b1.y() * b2.y()) +
        g1 * g2 * (b1.x() * b1.x() + b1.y() * b1.y() + 2.0 * b1.z() * (1.0 + b1.z())) *
            (b2.x() * b2.x() + b2.y() * b2.y() + 2.0 * b2.z() * (1.0 + b2.z())) / 8.0;
    for (const auto& [k, x] : v.breakdown) v.S += x;
    return v;
}

/// Any number of qubits (0..4), general closed form.
inline FunctionalValue eval_S_n_qubit(const SemiclassicalState& s, const ModelConfig& cfg) {
    const int q = cfg.n_qubits();
    if (q > SpaceSpec::max_qubits) throw ConfigError("eval_S_n_qubit: at most 4 qubits");
    detail::require_qubits(cfg, s, "eval_S_n_qubit");
    const double ax = s.alpha_x, ay = s.alpha_y, wr = cfg.omega_r(), g = cfg.gamma;
    const cplx kappa{wr * ax + cfg.F + g * ay / 2.0, wr * ay - g * ax / 2.0};
    const double S0 = 2.0 * std::norm(kappa);

    const auto nq = std::size_t(q);
    std::vector<double> u(nq), gb(nq), single(nq);
    for (int l = 0; l < q; ++l) {
        const auto& b = s.bloch[std::size_t(l)];
        const double lam = cfg.lambda[std::size_t(l)], gs = cfg.gamma_s[std::size_t(l)];
        const Eigen::Vector3d B(lam * ax, -lam * ay, cfg.Omega_r(l + 1) / 2.0);
        const Eigen::Vector3d gl =
            B.cross(b) - Eigen::Vector3d(gs * b.x() / 4.0, gs * b.y() / 4.0, gs * (1.0 + b.z()) / 2.0);
        u[std::size_t(l)] = detail::u_factor(b);
        gb[std::size_t(l)] = gl.dot(b);
        single[std::size_t(l)] = 2.0 * gl.squaredNorm() + lam * lam * (1.0 + b.squaredNorm() + 2.0 * b.z()) / 2.0 +
                                 2.0 * lam * (kappa.real() * b.x() - kappa.imag() * b.y());
    }
    // products of u over all qubits except one or two (no division: u may be tiny)
    auto spectators = [&](int skip1, int skip2) {
        double p = 1.0;
        for (int k = 0; k < q; ++k)
            if (k != skip1 && k != skip2) p *= u[std::size_t(k)];
        return p;
    };
    FunctionalValue v;
    v.breakdown["S0"] = S0 * spectators(-1, -1);
    double singles = 0.0, pairs = 0.0;
    for (int l = 0; l < q; ++l) singles += spectators(l, -1) * single[std::size_t(l)];
    for (int l = 0; l < q; ++l) {
        for (int m = l + 1; m < q; ++m) {
            const auto& bl = s.bloch[std::size_t(l)];
            const auto& bm = s.bloch[std::size_t(m)];
            pairs += spectators(l, m) * (2.0 * gb[std::size_t(l)] * gb[std::size_t(m)] +
                                         cfg.lambda[std::size_t(l)] * cfg.lambda[std::size_t(m)] *
                                             (bl.x() * bm.x() + bl.y() * bm.y()));
        }
    }
    v.breakdown["single"] = singles;
    v.breakdown["pairs"] = pairs;
    v.S = v.breakdown["S0"] + singles + pairs;
    return v;
}

/// Dispatches to the general form; fills in the finite-difference gradient norm.
inline FunctionalValue eval_S(const SemiclassicalState& s, const ModelConfig& cfg, bool with_gradient = false) {
    FunctionalValue v = eval_S_n_qubit(s, cfg);
    if (with_gradient) {
        const auto x = s.to_vector();
        double g2 = 0.0;
        for (std::size_t k = 0; k < x.size(); ++k) {
            const double h = 1e-6 * std::max(1.0, std::abs(x[k]));
            auto xp = x, xm = x;
            xp[k] += h;
            xm[k] -= h;
            const double d = (eval_S_n_qubit(SemiclassicalState::from_vector(xp), cfg).S -
                              eval_S_n_qubit(SemiclassicalState::from_vector(xm), cfg).S) /
                             (2.0 * h);
            g2 += d * d;
        }
        v.gradient_norm = std::sqrt(g2);
    }
    return v;
}

/// Cavity levels that hold |alpha> with a Poisson tail below ~1e-12.
inline int coherent_truncation(cplx alpha) {
    const double a = std::abs(alpha);
    return int(std::ceil(a * a + 10.0 * a + 20.0));
}

/// Qubit part of the trial state, (1 + b.sigma)/2 per qubit, in the register basis.
inline CMatrix spin_product_state(const SemiclassicalState& s) {
    CMatrix spin = CMatrix::Ones(1, 1);
    for (const auto& b : s.bloch) {
        Eigen::Matrix2cd r;  // basis (down, up)
        r << (1.0 - b.z()) / 2.0, cplx(b.x(), b.y()) / 2.0, cplx(b.x(), -b.y()) / 2.0, (1.0 + b.z()) / 2.0;
        CMatrix next(spin.rows() * 2, spin.cols() * 2);
        for (Index i = 0; i < spin.rows(); ++i)
            for (Index j = 0; j < spin.cols(); ++j) next.block(2 * i, 2 * j, 2, 2) = spin(i, j) * r;
        spin = next;
    }
    return spin;
}

/// The product trial state on a space with `n_cav` cavity levels.
inline CMatrix trial_density_matrix(const SemiclassicalState& s, int n_cav) {
    const CVector c = coherent_amplitudes(n_cav, s.alpha());
    const CMatrix spin = spin_product_state(s);
    const Index qd = spin.rows();
    CMatrix rho(n_cav * qd, n_cav * qd);
    for (int n = 0; n < n_cav; ++n)
        for (int m = 0; m < n_cav; ++m) rho.block(n * qd, m * qd, qd, qd) = c(n) * std::conj(c(m)) * spin;
    return rho;
}

struct MinimizeOptions {
    int starts = 32;
    std::uint64_t seed = 20240601;
    int max_iter = 20000;
    double size_tol = 1e-12;
    /// Minima within this factor of the best S are reported.
    double report_factor = 10.0;
    /// Tried before the random starts (e.g. the optimum at a neighbouring drive frequency).
    std::vector<SemiclassicalState> extra_starts;
};

struct LocalMinimum {
    SemiclassicalState state;
    double S = 0.0;
};

struct MinimizeResult {
    SemiclassicalState best;
    FunctionalValue value;
    std::vector<LocalMinimum> minima;  ///< distinct, sorted by S, within report_factor of the best
    int failed_starts = 0;
    bool ok = false;
    std::uint64_t seed = 0;
};

namespace detail {

/// Projects each Bloch vector onto the unit ball; returns the squared excess.
inline double project_ball(SemiclassicalState& s) {
    double excess = 0.0;
    for (auto& b : s.bloch) {
        const double n = b.norm();
        if (n > 1.0) {
            excess += (n - 1.0) * (n - 1.0);
            b /= n;
        }
    }
    return excess;
}

struct NmContext {
    const ModelConfig* cfg;
};

inline double nm_objective(const gsl_vector* x, void* params) {
    const auto* ctx = static_cast<const NmContext*>(params);
    std::vector<double> v(x->size);
    for (std::size_t i = 0; i < x->size; ++i) v[i] = gsl_vector_get(x, i);
    auto s = SemiclassicalState::from_vector(v);
    const double excess = project_ball(s);
    const double S = eval_S_n_qubit(s, *ctx->cfg).S;
    return std::isfinite(S) ? S + 1e3 * excess : GSL_POSINF;
}

/// One Nelder-Mead run from `x0`, restarted at its own result until the value stalls.
inline bool nelder_mead(const ModelConfig& cfg, std::vector<double>& x0, double& fval, const MinimizeOptions& opt) {
    const std::size_t n = x0.size();
    NmContext ctx{&cfg};
    gsl_multimin_function fn{&nm_objective, n, &ctx};
    gsl_vector* x = gsl_vector_alloc(n);
    gsl_vector* step = gsl_vector_alloc(n);
    gsl_multimin_fminimizer* m = gsl_multimin_fminimizer_alloc(gsl_multimin_fminimizer_nmsimplex2, n);
    bool ok = true;
    double prev = GSL_POSINF;
    for (int restart = 0; restart < 6; ++restart) {
        for (std::size_t i = 0; i < n; ++i) {
            gsl_vector_set(x, i, x0[i]);
            gsl_vector_set(step, i, restart == 0 ? 0.2 : 0.02);
        }
        if (gsl_multimin_fminimizer_set(m, &fn, x, step) != GSL_SUCCESS) {
            ok = false;
            break;
        }
        int status = GSL_CONTINUE;
        for (int it = 0; it < opt.max_iter && status == GSL_CONTINUE; ++it) {
            if (gsl_multimin_fminimizer_iterate(m) != GSL_SUCCESS) break;
            status = gsl_multimin_test_size(gsl_multimin_fminimizer_size(m), opt.size_tol);
        }
        for (std::size_t i = 0; i < n; ++i) x0[i] = gsl_vector_get(m->x, i);
        fval = m->fval;
        if (!std::isfinite(fval)) {
            ok = false;
            break;
        }
        if (prev - fval <= 1e-15 * std::max(1.0, std::abs(fval)) && restart > 0) break;
        prev = fval;
    }
    gsl_multimin_fminimizer_free(m);
    gsl_vector_free(step);
    gsl_vector_free(x);
    return ok;
}

}  // namespace detail

/// Multistart minimization of S. The first start is the decoupled solution
/// (classical amplitude, all qubits down); the rest are seeded random points
/// with |b| <= 1 and |alpha| up to three times the classical amplitude.
inline MinimizeResult minimize_S(const ModelConfig& cfg, const MinimizeOptions& opt = {}) {
    cfg.validate();
    const int q = cfg.n_qubits();
    gsl_set_error_handler_off();
    MinimizeResult res;
    res.seed = opt.seed;
    std::mt19937_64 rng(opt.seed);
    std::uniform_real_distribution<double> unif(-1.0, 1.0);
    const cplx a0 = classical_amplitude(cfg);
    const double radius = 3.0 * std::max(std::abs(a0), 1.0 / 3.0);

    std::vector<LocalMinimum> found;
    const int n_extra = int(opt.extra_starts.size());
    for (int k = -n_extra; k < std::max(1, opt.starts); ++k) {
        SemiclassicalState s;
        if (k < 0) {
            s = opt.extra_starts[std::size_t(k + n_extra)];
            detail::require_qubits(cfg, s, "minimize_S");
        } else if (k == 0) {
            s.alpha_x = a0.real();
            s.alpha_y = a0.imag();
            s.bloch.assign(std::size_t(q), Eigen::Vector3d(0, 0, -1));
        } else {
            double x, y;
            do {
                x = unif(rng);
                y = unif(rng);
            } while (x * x + y * y > 1.0);
            s.alpha_x = radius * x;
            s.alpha_y = radius * y;
            for (int l = 0; l < q; ++l) {
                Eigen::Vector3d b;
                do {
                    b = Eigen::Vector3d(unif(rng), unif(rng), unif(rng));
                } while (b.norm() > 1.0);
                s.bloch.push_back(b);
            }
        }
        auto x = s.to_vector();
        double f = 0.0;
        if (!detail::nelder_mead(cfg, x, f, opt)) {
            ++res.failed_starts;
            continue;
        }
        auto sol = SemiclassicalState::from_vector(x);
        detail::project_ball(sol);
        found.push_back({sol, eval_S_n_qubit(sol, cfg).S});
    }
    if (found.empty()) {
        res.ok = false;
        return res;
    }
    std::stable_sort(found.begin(), found.end(), [](const auto& a, const auto& b) { return a.S < b.S; });
    res.best = found.front().state;
    res.value = eval_S(res.best, cfg, true);
    res.ok = true;
    const double cut = std::max(opt.report_factor * found.front().S, 1e-14);
    for (const auto& m : found) {
        if (m.S > cut) break;
        const auto xv = m.state.to_vector();
        bool dup = false;
        for (const auto& r : res.minima) {
            const auto yv = r.state.to_vector();
            double d = 0.0;
            for (std::size_t i = 0; i < xv.size(); ++i) d = std::max(d, std::abs(xv[i] - yv[i]));
            if (d < 1e-3) {
                dup = true;
                break;
            }
        }
        if (!dup) res.minima.push_back(m);
    }
    return res;
}

/// Expectation values of the product state (S = sigma/2 convention).
struct SemiclassicalObservables {
    std::vector<double> Sx, Sy, Sz;
    double Sx_total = 0.0, Sy_total = 0.0, Sz_total = 0.0;
    double n_mean = 0.0;
    cplx alpha{0.0, 0.0};
    double S2 = 0.0;
};

inline SemiclassicalObservables semiclassical_observables(const SemiclassicalState& s) {
    SemiclassicalObservables o;
    o.alpha = s.alpha();
    o.n_mean = std::norm(o.alpha);
    const int q = s.n_qubits();
    for (const auto& b : s.bloch) {
        o.Sx.push_back(b.x() / 2.0);
        o.Sy.push_back(b.y() / 2.0);
        o.Sz.push_back(b.z() / 2.0);
        o.Sx_total += b.x() / 2.0;
        o.Sy_total += b.y() / 2.0;
        o.Sz_total += b.z() / 2.0;
    }
    o.S2 = 0.75 * q;
    for (int l = 0; l < q; ++l)
        for (int m = l + 1; m < q; ++m) o.S2 += 0.5 * s.bloch[std::size_t(l)].dot(s.bloch[std::size_t(m)]);
    return o;
}

}  // namespace cavsync
