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

// model.hpp: driven Jaynes-Cummings Hamiltonians and the zero-temperature
// Lindblad dissipator. Units: hbar = 1, every frequency and rate is a plain
// number (the CLI uses the coupling lambda as the unit).

#pragma once

#include "cavsync/core.hpp"
#include "cavsync/hilbert.hpp"

#include <cmath>
#include <string>
#include <vector>

namespace cavsync {

/// Physical parameters of one run.
struct ModelConfig {
    SpaceSpec space{2, 0};
    double omega0 = 0.0;  ///< cavity frequency (absolute; matters only for the full time-dependent model)
    double omega = 0.0;   ///< drive frequency
    double F = 0.0;       ///< drive strength
    std::vector<double> lambda;   ///< per-qubit coupling
    std::vector<double> Omega;    ///< per-qubit level splitting
    double gamma = 0.0;           ///< cavity damping
    std::vector<double> gamma_s;  ///< per-qubit damping
    /// Allows negative rates (gain). Only the rate-series diagnostics use it.
    bool gain_diagnostic = false;

    int n_qubits() const noexcept { return space.n_qubits(); }

    double omega_r() const noexcept { return omega0 - omega; }
    double Delta(int l) const { return Omega.at(std::size_t(l - 1)) - omega0; }
    double Omega_r(int l) const { return Omega.at(std::size_t(l - 1)) - omega; }

    /// Convenience constructor in the detuning parametrization used throughout:
    /// Omega_l = omega0 + Delta_l, omega = omega0 + drive_detuning.
    static ModelConfig from_detunings(SpaceSpec space, double omega0, double drive_detuning, double F,
                                      double lambda, std::vector<double> Deltas, double gamma,
                                      double gamma_s) {
        ModelConfig c;
        c.space = space;
        c.omega0 = omega0;
        c.omega = omega0 + drive_detuning;
        c.F = F;
        c.gamma = gamma;
        const auto q = std::size_t(space.n_qubits());
        if (Deltas.size() != q) throw ConfigError("from_detunings: need one Delta per qubit");
        c.lambda.assign(q, lambda);
        c.gamma_s.assign(q, gamma_s);
        c.Omega.resize(q);
        for (std::size_t l = 0; l < q; ++l) c.Omega[l] = omega0 + Deltas[l];
        return c;
    }

    /// Throws ConfigError on the first violated invariant.
    void validate() const {
        const auto q = std::size_t(space.n_qubits());
        if (lambda.size() != q || Omega.size() != q || gamma_s.size() != q) {
            throw ConfigError("ModelConfig: lambda, Omega and gamma_s need one entry per qubit (" +
                              std::to_string(q) + ")");
        }
        if (!gain_diagnostic) {
            if (gamma < 0.0) throw ConfigError("ModelConfig: gamma must be >= 0");
            for (double g : gamma_s)
                if (g < 0.0) throw ConfigError("ModelConfig: gamma_s must be >= 0");
        }
        bool active = F != 0.0;
        for (double l : lambda) active = active || l != 0.0;
        if (active && space.n_cav() < 2) {
            throw ConfigError("ModelConfig: n_cav must be >= 2 when drive or coupling is nonzero");
        }
        auto finite = [](double x) { return std::isfinite(x); };
        bool ok = finite(omega0) && finite(omega) && finite(F) && finite(gamma);
        for (std::size_t l = 0; l < q; ++l) ok = ok && finite(lambda[l]) && finite(Omega[l]) && finite(gamma_s[l]);
        if (!ok) throw ConfigError("ModelConfig: non-finite parameter");
    }

    bool has_dissipation() const {
        if (gamma != 0.0) return true;
        for (double g : gamma_s)
            if (g != 0.0) return true;
        return false;
    }
};

/// Jump operator with its rate.
struct Jump {
    OperatorMatrix op;
    double rate = 0.0;
};

/// Hamiltonian plus jump operators; caches the pieces used by every evaluation.
class LindbladSpec {
public:
    LindbladSpec(OperatorMatrix H, std::vector<Jump> jumps, bool allow_gain = false)
        : H_(std::move(H)), jumps_(std::move(jumps)) {
        const Index d = H_.dim();
        decay_ = SparseOp(d, d);
        for (const auto& j : jumps_) {
            if (j.op.dim() != d) throw DimensionError("LindbladSpec: jump operator dimension mismatch");
            if (j.rate < 0.0 && !allow_gain) throw ConfigError("LindbladSpec: negative rate");
            if (j.rate == 0.0) continue;
            decay_ += SparseOp(j.rate * (j.op.sparse().adjoint() * j.op.sparse()));
        }
        decay_.prune(cplx(0.0));
        effective_ = SparseOp(-I_unit * H_.sparse() - 0.5 * decay_);
        effective_.makeCompressed();
    }

    Index dim() const noexcept { return H_.dim(); }
    const OperatorMatrix& hamiltonian() const noexcept { return H_; }
    const std::vector<Jump>& jumps() const noexcept { return jumps_; }
    /// sum_k r_k L_k^dagger L_k
    const SparseOp& decay() const noexcept { return decay_; }
    /// G = -iH - decay/2, so that L(rho) = G rho + rho G^dagger + sum_k r_k L_k rho L_k^dagger.
    const SparseOp& effective() const noexcept { return effective_; }

private:
    OperatorMatrix H_;
    std::vector<Jump> jumps_;
    SparseOp decay_;
    SparseOp effective_;
};

/// Lab-frame Hamiltonian at time t:
/// w0 a+a + sum_l lambda_l sx_l (a + a+) + sum_l Omega_l/2 sz_l + 2F (a + a+) cos(w t).
inline OperatorMatrix build_H_full(const ModelConfig& cfg, double t) {
    cfg.validate();
    const auto& sp = cfg.space;
    const SparseOp a = build_annihilation(sp).sparse();
    const SparseOp ad = a.adjoint();
    const SparseOp x = a + ad;
    SparseOp H = cfg.omega0 * build_number(sp).sparse();
    for (int l = 1; l <= sp.n_qubits(); ++l) {
        const SparseOp sx = build_qubit_op(sp, l, QubitOp::sx).sparse();
        const SparseOp sz = build_qubit_op(sp, l, QubitOp::sz).sparse();
        H += SparseOp(cfg.lambda[std::size_t(l - 1)] * (sx * x));
        H += SparseOp(0.5 * cfg.Omega[std::size_t(l - 1)] * sz);
    }
    H += SparseOp(2.0 * cfg.F * std::cos(cfg.omega * t) * x);
    H.prune(cplx(0.0));
    return OperatorMatrix(H, true);
}

/// Stationary rotating-frame RWA Hamiltonian:
/// (w0 - w) a+a + sum_l lambda_l (a s+_l + a+ s-_l) + sum_l (Omega_l - w)/2 sz_l + F (a + a+).
inline OperatorMatrix build_H_rwa(const ModelConfig& cfg) {
    cfg.validate();
    const auto& sp = cfg.space;
    const SparseOp a = build_annihilation(sp).sparse();
    const SparseOp ad = a.adjoint();
    SparseOp H = cfg.omega_r() * build_number(sp).sparse();
    for (int l = 1; l <= sp.n_qubits(); ++l) {
        const SparseOp sp_l = build_qubit_op(sp, l, QubitOp::splus).sparse();
        const SparseOp sm_l = build_qubit_op(sp, l, QubitOp::sminus).sparse();
        const SparseOp sz = build_qubit_op(sp, l, QubitOp::sz).sparse();
        H += SparseOp(cfg.lambda[std::size_t(l - 1)] * (SparseOp(a * sp_l) + SparseOp(ad * sm_l)));
        H += SparseOp(0.5 * cfg.Omega_r(l) * sz);
    }
    H += SparseOp(cfg.F * (a + ad));
    H.prune(cplx(0.0));
    return OperatorMatrix(H, true);
}

/// Jump operators (a, gamma) and (s-_l, gamma_s_l); zero rates are dropped.
inline std::vector<Jump> build_jumps(const ModelConfig& cfg) {
    std::vector<Jump> jumps;
    if (cfg.gamma != 0.0) jumps.push_back({build_annihilation(cfg.space), cfg.gamma});
    for (int l = 1; l <= cfg.n_qubits(); ++l) {
        const double g = cfg.gamma_s[std::size_t(l - 1)];
        if (g != 0.0) jumps.push_back({build_qubit_op(cfg.space, l, QubitOp::sminus), g});
    }
    return jumps;
}

inline LindbladSpec build_lindblad_rwa(const ModelConfig& cfg) {
    return LindbladSpec(build_H_rwa(cfg), build_jumps(cfg), cfg.gain_diagnostic);
}

/// -i[H, rho] + sum_k r_k (L rho L+ - {L+L, rho}/2) for an arbitrary square rho.
inline CMatrix apply_lindblad(const LindbladSpec& spec, const CMatrix& rho) {
    if (rho.rows() != spec.dim() || rho.cols() != spec.dim()) {
        throw DimensionError("apply_lindblad: rho has dimension " + std::to_string(rho.rows()) +
                             ", operators have " + std::to_string(spec.dim()));
    }
    const SparseOp& G = spec.effective();
    CMatrix out = G * rho;
    out.noalias() += rho * SparseOp(G.adjoint());
    for (const auto& j : spec.jumps()) {
        const SparseOp& L = j.op.sparse();
        const CMatrix Lrho = L * rho;
        out.noalias() += j.rate * (Lrho * SparseOp(L.adjoint()));
    }
    return out;
}

inline CMatrix apply_lindblad(const LindbladSpec& spec, const DensityMatrix& rho) {
    return apply_lindblad(spec, rho.matrix());
}

/// Same map for Hermitian rho, exploiting (G rho)^dagger = rho G^dagger and
/// L rho L+ = L (L rho)^dagger. The output is Hermitian by construction.
inline void apply_lindblad_hermitian(const LindbladSpec& spec, const CMatrix& rho, CMatrix& out,
                                     CMatrix& scratch) {
    out.noalias() = spec.effective() * rho;
    out += out.adjoint().eval();
    for (const auto& j : spec.jumps()) {
        const SparseOp& L = j.op.sparse();
        scratch.noalias() = L * rho;
        out.noalias() += j.rate * (L * scratch.adjoint());
    }
}

}  // namespace cavsync
