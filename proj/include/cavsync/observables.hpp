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

// observables.hpp: expectation values, occupation maps and two-qubit
// entanglement diagnostics (negativity, CHSH).
//
// Spin projections use S = sigma/2, so one qubit lies in [-1/2, 1/2] and the
// total over q qubits in [-q/2, q/2].

#pragma once

#include "cavsync/core.hpp"
#include "cavsync/hilbert.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <vector>

namespace cavsync {

struct ObservableSet {
    std::vector<double> Sx, Sy, Sz;  ///< per qubit
    double Sx_total = 0.0, Sy_total = 0.0, Sz_total = 0.0;
    double n_mean = 0.0;
    cplx alpha{0.0, 0.0};  ///< <a>
    double S2 = 0.0;       ///< <S^2>, S_a = sum_l sigma_{a,l}/2
    RMatrix Pn_by_spin;    ///< (n, spin configuration) -> rho(n,s; n,s)
    double singlet_prob = std::numeric_limits<double>::quiet_NaN();  ///< two qubits only
    double negativity = std::numeric_limits<double>::quiet_NaN();    ///< two qubits only
    double chsh_max = std::numeric_limits<double>::quiet_NaN();      ///< two qubits only, optimum over settings
    double tail = 0.0;  ///< probability in the top 10% of cavity levels
};

namespace detail {

inline const std::array<Eigen::Matrix2cd, 3>& pauli() {
    static const std::array<Eigen::Matrix2cd, 3> p = [] {
        std::array<Eigen::Matrix2cd, 3> m;
        // basis order (down, up) matching bit 0 = ground
        m[0] << 0, 1, 1, 0;
        m[1] << 0, I_unit, -I_unit, 0;
        m[2] << -1, 0, 0, 1;
        return m;
    }();
    return p;
}

/// Single-qubit operator `op` on qubit l (1-based) of a q-qubit register.
inline CMatrix embed_qubit(const Eigen::Matrix2cd& op, int l, int q) {
    const Index dim = Index{1} << q;
    const Index mask = Index{1} << (q - l);
    CMatrix out = CMatrix::Zero(dim, dim);
    for (Index s = 0; s < dim; ++s) {
        const int b = (s & mask) ? 1 : 0;
        for (int b2 = 0; b2 < 2; ++b2) {
            const Index t = b2 == b ? s : (s ^ mask);
            out(t, s) += op(b2, b);
        }
    }
    return out;
}

}  // namespace detail

/// Total spin component S_a = sum_l sigma_{a,l}/2 on the q-qubit register (a = 0,1,2 for x,y,z).
inline CMatrix total_spin(int a, int q) {
    const Index dim = Index{1} << q;
    CMatrix S = CMatrix::Zero(dim, dim);
    for (int l = 1; l <= q; ++l) S += 0.5 * detail::embed_qubit(detail::pauli()[std::size_t(a)], l, q);
    return S;
}

/// Two-qubit singlet (|up,down> - |down,up>)/sqrt(2) in the register basis.
inline CVector singlet_vector() {
    CVector s = CVector::Zero(4);
    s(2) = 1.0 / std::sqrt(2.0);   // qubit 1 up, qubit 2 down
    s(1) = -1.0 / std::sqrt(2.0);  // qubit 1 down, qubit 2 up
    return s;
}

/// Partial transpose of a two-qubit matrix over qubit 1 (or qubit 2).
inline CMatrix partial_transpose(const CMatrix& rho, int qubit = 1) {
    if (rho.rows() != 4 || rho.cols() != 4) throw DimensionError("partial_transpose: needs a 4x4 matrix");
    CMatrix out(4, 4);
    for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b)
            for (int c = 0; c < 2; ++c)
                for (int e = 0; e < 2; ++e) {
                    // rho(ab, ce) with a, c on qubit 1 and b, e on qubit 2
                    if (qubit == 1) out(c * 2 + b, a * 2 + e) = rho(a * 2 + b, c * 2 + e);
                    else out(a * 2 + e, c * 2 + b) = rho(a * 2 + b, c * 2 + e);
                }
    return out;
}

/// Sum of |negative eigenvalues| of the partial transpose.
inline double negativity(const CMatrix& rho_red, int qubit = 1) {
    if (rho_red.rows() != 4 || rho_red.cols() != 4) throw DimensionError("negativity: needs a two-qubit matrix");
    const double scale = std::max(max_abs(rho_red), 1e-300);
    if (hermiticity_defect(rho_red) > 1e-10 * scale) throw PhysicalityError("negativity: input is not Hermitian");
    Eigen::SelfAdjointEigenSolver<CMatrix> es(partial_transpose(hermitian_part(rho_red), qubit),
                                              Eigen::EigenvaluesOnly);
    double n = 0.0;
    for (Index i = 0; i < 4; ++i) n += std::max(0.0, -es.eigenvalues()(i));
    return n;
}

/// T_ij = tr[rho sigma_i (x) sigma_j].
inline Eigen::Matrix3d correlation_matrix(const CMatrix& rho_red) {
    if (rho_red.rows() != 4) throw DimensionError("correlation_matrix: needs a two-qubit matrix");
    Eigen::Matrix3d T;
    const auto& p = detail::pauli();
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
            Eigen::Matrix4cd op;
            for (int r = 0; r < 4; ++r)
                for (int c = 0; c < 4; ++c) op(r, c) = p[std::size_t(i)](r / 2, c / 2) * p[std::size_t(j)](r % 2, c % 2);
            T(i, j) = (rho_red * op).trace().real();
        }
    return T;
}

struct BellSetting {
    Eigen::Vector3d a{1, 0, 0}, a2{0, 1, 0}, b{1, 0, 0}, b2{0, 1, 0};
    int sample_count = 20000;
    std::uint64_t rng_seed = 12345;
};

/// E(u, v) = tr[rho (u.sigma) (x) (v.sigma)] = u^T T v.
inline double chsh_value(const Eigen::Matrix3d& T, const BellSetting& s) {
    auto E = [&](const Eigen::Vector3d& u, const Eigen::Vector3d& v) { return u.dot(T * v); };
    return E(s.a, s.b) - E(s.a, s.b2) + E(s.a2, s.b) + E(s.a2, s.b2);
}

inline double chsh_value(const CMatrix& rho_red, const BellSetting& s) {
    return chsh_value(correlation_matrix(rho_red), s);
}

/// Largest |CHSH| over all settings: 2 sqrt(t1^2 + t2^2) with t1 >= t2 the two
/// largest singular values of T.
inline double chsh_optimum(const CMatrix& rho_red) {
    Eigen::JacobiSVD<Eigen::Matrix3d> svd(correlation_matrix(rho_red));
    const auto& s = svd.singularValues();
    return 2.0 * std::hypot(s(0), s(1));
}

struct ChshResult {
    double value = 0.0;  ///< |CHSH| of the best setting
    BellSetting setting;
    /// Rotation between the a and b directions of the canonical optimal setting,
    /// atan(t2 / t1) in degrees (45 for the singlet). The optimum is degenerate
    /// under rotations inside the top singular plane, so the found setting's own
    /// a-b angle is not meaningful; see setting_angle_deg.
    double rotation_deg = 0.0;
    /// Angle between a and b of the setting actually found, folded into [0, 90].
    double setting_angle_deg = 0.0;
};

namespace detail {

inline Eigen::Vector3d random_unit(std::mt19937_64& rng) {
    std::normal_distribution<double> n(0.0, 1.0);
    Eigen::Vector3d v;
    do {
        v = Eigen::Vector3d(n(rng), n(rng), n(rng));
    } while (v.norm() < 1e-12);
    return v.normalized();
}

inline double angle_deg(const Eigen::Vector3d& u, const Eigen::Vector3d& v) {
    const double c = std::clamp(u.dot(v), -1.0, 1.0);
    return std::acos(c) * 180.0 / std::numbers::pi;
}

}  // namespace detail

/// Random search over settings (normalized Gaussian triples, seeded), followed
/// by coordinate ascent when `refine` is set. For fixed a, a' the optimal b, b'
/// are the directions of T^T(a + a') and T^T(a - a'), which the ascent uses.
inline ChshResult chsh_violation(const CMatrix& rho_red, const BellSetting& search, bool refine = true) {
    const Eigen::Matrix3d T = correlation_matrix(rho_red);
    std::mt19937_64 rng(search.rng_seed);
    ChshResult best;
    best.value = -1.0;
    for (int k = 0; k < search.sample_count; ++k) {
        BellSetting s = search;
        s.a = detail::random_unit(rng);
        s.a2 = detail::random_unit(rng);
        s.b = detail::random_unit(rng);
        s.b2 = detail::random_unit(rng);
        const double v = std::abs(chsh_value(T, s));
        if (v > best.value) {
            best.value = v;
            best.setting = s;
        }
    }
    if (refine && best.value >= 0.0) {
        BellSetting s = best.setting;
        if (chsh_value(T, s) < 0.0) s.b = -s.b, s.b2 = -s.b2;
        for (int it = 0; it < 200; ++it) {
            // b, b' given a, a'
            const Eigen::Vector3d p = T.transpose() * (s.a + s.a2), m = T.transpose() * (s.a2 - s.a);
            if (p.norm() > 1e-14) s.b = p.normalized();
            if (m.norm() > 1e-14) s.b2 = m.normalized();
            // a, a' given b, b'
            const Eigen::Vector3d u = T * (s.b - s.b2), w = T * (s.b + s.b2);
            if (u.norm() > 1e-14) s.a = u.normalized();
            if (w.norm() > 1e-14) s.a2 = w.normalized();
            const double v = chsh_value(T, s);
            if (v <= best.value + 1e-15) {
                if (v > best.value) best.value = v, best.setting = s;
                break;
            }
            best.value = v;
            best.setting = s;
        }
    }
    best.setting_angle_deg = detail::angle_deg(best.setting.a, best.setting.b);
    if (best.setting_angle_deg > 90.0) best.setting_angle_deg = 180.0 - best.setting_angle_deg;
    Eigen::JacobiSVD<Eigen::Matrix3d> svd(T);
    best.rotation_deg = std::atan2(svd.singularValues()(1), svd.singularValues()(0)) * 180.0 / std::numbers::pi;
    return best;
}

/// P(n, s) = rho(n,s; n,s).
inline RMatrix occupation_map(const CMatrix& rho, const SpaceSpec& space) {
    if (rho.rows() != space.dim()) throw DimensionError("occupation_map: dimension mismatch");
    const Index q = space.qubit_dim();
    RMatrix P(space.n_cav(), q);
    for (int n = 0; n < space.n_cav(); ++n)
        for (Index s = 0; s < q; ++s) P(n, s) = rho(space.index(n, s), space.index(n, s)).real();
    return P;
}

/// All linear expectations tr(rho O), plus the two-qubit diagnostics when q = 2.
inline ObservableSet expectations(const CMatrix& rho, const SpaceSpec& space) {
    if (rho.rows() != space.dim() || rho.cols() != space.dim()) {
        throw DimensionError("expectations: rho has dimension " + std::to_string(rho.rows()) + ", space has " +
                             std::to_string(space.dim()));
    }
    ObservableSet o;
    const int q = space.n_qubits();
    const CMatrix red = partial_trace_cavity(rho, space);
    const auto& p = detail::pauli();
    for (int l = 1; l <= q; ++l) {
        o.Sx.push_back(0.5 * (red * detail::embed_qubit(p[0], l, q)).trace().real());
        o.Sy.push_back(0.5 * (red * detail::embed_qubit(p[1], l, q)).trace().real());
        o.Sz.push_back(0.5 * (red * detail::embed_qubit(p[2], l, q)).trace().real());
        o.Sx_total += o.Sx.back();
        o.Sy_total += o.Sy.back();
        o.Sz_total += o.Sz.back();
    }
    for (int a = 0; a < 3 && q > 0; ++a) {
        const CMatrix S = total_spin(a, q);
        o.S2 += (red * S * S).trace().real();
    }
    const Index qd = space.qubit_dim();
    for (int n = 1; n < space.n_cav(); ++n) {
        for (Index s = 0; s < qd; ++s) {
            o.alpha += std::sqrt(double(n)) * rho(space.index(n, s), space.index(n - 1, s));
            o.n_mean += n * rho(space.index(n, s), space.index(n, s)).real();
        }
    }
    o.Pn_by_spin = occupation_map(rho, space);
    o.tail = cavity_tail_occupation(rho, space);
    if (q == 2) {
        const CVector sv = singlet_vector();
        o.singlet_prob = sv.dot(red * sv).real();
        o.negativity = negativity(red);
        o.chsh_max = chsh_optimum(red);
    }
    return o;
}

inline ObservableSet expectations(const DensityMatrix& rho, const SpaceSpec& space) {
    return expectations(rho.matrix(), space);
}

}  // namespace cavsync
