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

// hilbert.hpp: truncated cavity (x) qubits space and its elementary operators.
//
// Basis ordering is row-major over (cavity level n, qubit 1 bit, ..., qubit q bit):
//   index = n * 2^q + sum_l bit_l * 2^(q - l)
// with bit 0 = ground (sigma_z = -1) and bit 1 = excited (sigma_z = +1).

#pragma once

#include "cavsync/core.hpp"

#include <cmath>
#include <string>
#include <vector>

namespace cavsync {

/// Truncation of the cavity and number of qubits. Immutable once built.
class SpaceSpec {
public:
    static constexpr int max_qubits = 4;

    SpaceSpec(int n_cav, int n_qubits) : n_cav_(n_cav), n_qubits_(n_qubits) {
        if (n_cav < 1) throw ConfigError("SpaceSpec: n_cav must be >= 1");
        if (n_qubits < 0 || n_qubits > max_qubits) {
            throw ConfigError("SpaceSpec: n_qubits must lie in [0, 4]");
        }
    }

    int n_cav() const noexcept { return n_cav_; }
    int n_qubits() const noexcept { return n_qubits_; }
    Index qubit_dim() const noexcept { return Index{1} << n_qubits_; }
    Index dim() const noexcept { return Index(n_cav_) * qubit_dim(); }

    Index index(int n, Index spin_config) const noexcept { return Index(n) * qubit_dim() + spin_config; }
    int cavity_level(Index idx) const noexcept { return int(idx / qubit_dim()); }
    Index spin_config(Index idx) const noexcept { return idx % qubit_dim(); }
    /// Bit of qubit l (1-based) inside a spin configuration.
    int qubit_bit(Index spin_config, int l) const noexcept {
        return int((spin_config >> (n_qubits_ - l)) & 1);
    }

    bool operator==(const SpaceSpec&) const = default;

private:
    int n_cav_;
    int n_qubits_;
};

/// Operator on the truncated space. Sparse storage; `dense()` materializes.
class OperatorMatrix {
public:
    OperatorMatrix() = default;

    /// When `hermitian` is set the claim is verified to 1e-12 relative max-norm.
    OperatorMatrix(SparseOp m, bool hermitian = false) : m_(std::move(m)), hermitian_(hermitian) {
        if (m_.rows() != m_.cols()) throw DimensionError("OperatorMatrix: not square");
        m_.makeCompressed();
        if (hermitian_) {
            const CMatrix d = dense();
            const double scale = max_abs(d);
            if (hermiticity_defect(d) > 1e-12 * std::max(scale, 1e-300)) {
                throw Error("OperatorMatrix: hermiticity flag set on non-hermitian matrix");
            }
        }
    }

    Index dim() const noexcept { return m_.rows(); }
    const SparseOp& sparse() const noexcept { return m_; }
    CMatrix dense() const { return CMatrix(m_); }
    bool hermitian() const noexcept { return hermitian_; }
    Index nonzeros() const {
        Index c = 0;
        for (int k = 0; k < m_.outerSize(); ++k)
            for (SparseOp::InnerIterator it(m_, k); it; ++it)
                if (it.value() != cplx(0.0)) ++c;
        return c;
    }
    OperatorMatrix adjoint() const { return OperatorMatrix(SparseOp(m_.adjoint()), hermitian_); }

private:
    SparseOp m_;
    bool hermitian_ = false;
};

enum class QubitOp { sx, sy, sz, splus, sminus };

namespace detail {

inline SparseOp from_triplets(Index dim, const std::vector<Eigen::Triplet<cplx>>& t) {
    SparseOp m(dim, dim);
    m.setFromTriplets(t.begin(), t.end());
    m.makeCompressed();
    return m;
}

}  // namespace detail

/// Cavity annihilation operator, identity on the qubit factors.
inline OperatorMatrix build_annihilation(const SpaceSpec& spec) {
    std::vector<Eigen::Triplet<cplx>> t;
    const Index q = spec.qubit_dim();
    t.reserve(std::size_t((spec.n_cav() - 1) * q));
    for (int n = 1; n < spec.n_cav(); ++n) {
        const double amp = std::sqrt(double(n));
        for (Index s = 0; s < q; ++s) t.emplace_back(spec.index(n - 1, s), spec.index(n, s), amp);
    }
    return OperatorMatrix(detail::from_triplets(spec.dim(), t));
}

inline OperatorMatrix build_creation(const SpaceSpec& spec) { return build_annihilation(spec).adjoint(); }

/// Photon number a^dagger a (diagonal).
inline OperatorMatrix build_number(const SpaceSpec& spec) {
    std::vector<Eigen::Triplet<cplx>> t;
    for (Index i = 0; i < spec.dim(); ++i) {
        const int n = spec.cavity_level(i);
        if (n != 0) t.emplace_back(i, i, double(n));
    }
    return OperatorMatrix(detail::from_triplets(spec.dim(), t), true);
}

/// Pauli or ladder operator on qubit l (1-based), identity elsewhere.
/// sigma+ = (sx + i sy)/2 raises ground (bit 0) to excited (bit 1).
inline OperatorMatrix build_qubit_op(const SpaceSpec& spec, int l, QubitOp which) {
    if (l < 1 || l > spec.n_qubits()) {
        throw DimensionError("build_qubit_op: qubit index " + std::to_string(l) +
                                " outside [1, " + std::to_string(spec.n_qubits()) + "]");
    }
    const Index mask = Index{1} << (spec.n_qubits() - l);
    std::vector<Eigen::Triplet<cplx>> t;
    t.reserve(std::size_t(spec.dim()));
    for (Index i = 0; i < spec.dim(); ++i) {
        const Index s = spec.spin_config(i);
        const bool up = (s & mask) != 0;
        const Index flipped = i ^ mask;
        switch (which) {
            case QubitOp::sz: t.emplace_back(i, i, up ? 1.0 : -1.0); break;
            case QubitOp::sx: t.emplace_back(flipped, i, 1.0); break;
            // sy |down> = -i |up>, sy |up> = i |down>
            case QubitOp::sy: t.emplace_back(flipped, i, up ? I_unit : -I_unit); break;
            case QubitOp::splus:
                if (!up) t.emplace_back(flipped, i, 1.0);
                break;
            case QubitOp::sminus:
                if (up) t.emplace_back(flipped, i, 1.0);
                break;
        }
    }
    const bool herm = which == QubitOp::sx || which == QubitOp::sy || which == QubitOp::sz;
    return OperatorMatrix(detail::from_triplets(spec.dim(), t), herm);
}

/// Reduced qubit density matrix (dimension 2^q) obtained by tracing out the cavity.
inline CMatrix partial_trace_cavity(const CMatrix& rho, const SpaceSpec& spec) {
    if (rho.rows() != spec.dim() || rho.cols() != spec.dim()) {
        throw DimensionError("partial_trace_cavity: rho has dimension " + std::to_string(rho.rows()) +
                             ", space has " + std::to_string(spec.dim()));
    }
    const Index q = spec.qubit_dim();
    CMatrix red = CMatrix::Zero(q, q);
    for (int n = 0; n < spec.n_cav(); ++n) red += rho.block(n * q, n * q, q, q);
    return red;
}

inline DensityMatrix partial_trace_cavity(const DensityMatrix& rho, const SpaceSpec& spec) {
    return DensityMatrix(partial_trace_cavity(rho.matrix(), spec), DensityMatrix::Validate::no);
}

/// Reduced cavity density matrix (dimension n_cav).
inline CMatrix partial_trace_qubits(const CMatrix& rho, const SpaceSpec& spec) {
    if (rho.rows() != spec.dim()) throw DimensionError("partial_trace_qubits: dimension mismatch");
    const Index q = spec.qubit_dim();
    CMatrix red(spec.n_cav(), spec.n_cav());
    for (int n = 0; n < spec.n_cav(); ++n)
        for (int m = 0; m < spec.n_cav(); ++m) red(n, m) = rho.block(n * q, m * q, q, q).trace();
    return red;
}

/// Probability carried by the top `fraction` of cavity levels (at least one level).
inline double cavity_tail_occupation(const CMatrix& rho, const SpaceSpec& spec, double fraction = 0.1) {
    const int top = std::max(1, int(std::ceil(fraction * spec.n_cav())));
    double p = 0.0;
    for (Index i = spec.index(spec.n_cav() - top, 0); i < spec.dim(); ++i) p += rho(i, i).real();
    return p;
}

/// Threshold above which the truncation tail is reported as suspicious.
inline constexpr double tail_warning_threshold = 1e-6;

/// Fock amplitudes of the coherent state |alpha> truncated to n_cav levels (not renormalized).
inline CVector coherent_amplitudes(int n_cav, cplx alpha) {
    CVector v(n_cav);
    const double a2 = std::norm(alpha);
    cplx c = std::exp(-0.5 * a2);
    for (int n = 0; n < n_cav; ++n) {
        v(n) = c;
        c *= alpha / std::sqrt(double(n + 1));
    }
    return v;
}

}  // namespace cavsync
