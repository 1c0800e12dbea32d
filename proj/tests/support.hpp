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

// Shared helpers for the unit and acceptance tests.

#pragma once

#include "cavsync.hpp"

#include <random>

namespace cavsync::testing {

inline CMatrix random_matrix(Index d, std::mt19937_64& rng) {
    std::normal_distribution<double> g;
    CMatrix m(d, d);
    for (Index i = 0; i < d; ++i)
        for (Index j = 0; j < d; ++j) m(i, j) = cplx(g(rng), g(rng));
    return m;
}

inline CMatrix random_hermitian(Index d, std::mt19937_64& rng) {
    const CMatrix m = random_matrix(d, rng);
    return 0.5 * (m + m.adjoint());
}

/// Random full-rank density matrix.
inline CMatrix random_density(Index d, std::mt19937_64& rng) {
    const CMatrix m = random_matrix(d, rng);
    CMatrix r = m * m.adjoint();
    return r / r.trace().real();
}

/// Random model with every rate strictly positive.
inline ModelConfig random_config(int n_cav, int q, std::mt19937_64& rng, double scale = 1.0) {
    std::uniform_real_distribution<double> u(-1.0, 1.0), pos(0.2, 1.0);
    ModelConfig c;
    c.space = SpaceSpec(n_cav, q);
    c.omega0 = 10.0;
    c.omega = c.omega0 + u(rng);
    c.F = 0.5 * scale * u(rng);
    c.gamma = pos(rng);
    for (int l = 0; l < q; ++l) {
        c.lambda.push_back(scale * u(rng));
        c.Omega.push_back(c.omega0 + 2.0 * u(rng));
        c.gamma_s.push_back(pos(rng));
    }
    return c;
}

/// Pure driven damped cavity at detuning w_r = omega0 - omega.
inline ModelConfig cavity_config(int n_cav, double F, double w_r, double gamma) {
    ModelConfig c;
    c.space = SpaceSpec(n_cav, 0);
    c.omega0 = 10.0;
    c.omega = c.omega0 - w_r;
    c.F = F;
    c.gamma = gamma;
    return c;
}

inline CMatrix coherent_projector(int n_cav, cplx alpha) {
    const CVector v = coherent_amplitudes(n_cav, alpha);
    return v * v.adjoint();
}

/// Tr[L(rho)^dagger L(rho)] by brute force on the explicit product state.
inline double numerical_S(const SemiclassicalState& s, const ModelConfig& cfg) {
    ModelConfig c = cfg;
    const int n_cav = coherent_truncation(s.alpha());
    c.space = SpaceSpec(n_cav, cfg.n_qubits());
    const auto spec = build_lindblad_rwa(c);
    const CMatrix Lr = apply_lindblad(spec, trial_density_matrix(s, n_cav));
    return (Lr.adjoint() * Lr).trace().real();
}

inline SemiclassicalState random_state(int q, std::mt19937_64& rng, double amax = 2.0) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    SemiclassicalState s;
    s.alpha_x = amax * u(rng);
    s.alpha_y = amax * u(rng);
    for (int l = 0; l < q; ++l) {
        Eigen::Vector3d b;
        do {
            b = Eigen::Vector3d(u(rng), u(rng), u(rng));
        } while (b.norm() > 1.0);
        s.bloch.push_back(b);
    }
    return s;
}

}  // namespace cavsync::testing
