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

// core.hpp: scalar/matrix aliases, error types and the DensityMatrix value type.

#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <complex>
#include <stdexcept>
#include <string>

namespace cavsync {

using cplx = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using RMatrix = Eigen::MatrixXd;
using RVector = Eigen::VectorXd;
using SparseOp = Eigen::SparseMatrix<cplx>;
using Index = Eigen::Index;

inline constexpr cplx I_unit{0.0, 1.0};

// ------------------------------------------------------------------ errors

/// Base class for every failure raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class DimensionError : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

/// Sylvester pencil whose eigenvalue sums come too close to zero.
class SingularPencilError : public Error {
public:
    SingularPencilError(const std::string& what, Index i, Index j, cplx a, cplx b)
        : Error(what), row_index(i), col_index(j), a_eig(a), b_eig(b) {}
    Index row_index;
    Index col_index;
    cplx a_eig;
    cplx b_eig;
};

/// A kernel that should be one dimensional is not (disconnected kinetics,
/// conservative dynamics, ...).
class DegenerateKernelError : public Error {
public:
    using Error::Error;
};

/// Rate series denominator below the near-degeneracy threshold.
class SmallDenominatorError : public Error {
public:
    SmallDenominatorError(const std::string& what, Index n, Index m)
        : Error(what), n(n), m(m) {}
    Index n;
    Index m;
};

/// Adaptive integration could not make progress.
class StiffnessError : public Error {
public:
    StiffnessError(const std::string& what, double t) : Error(what), time_reached(t) {}
    double time_reached;
};

/// A state drifted outside the set of density matrices.
class PhysicalityError : public Error {
public:
    using Error::Error;
};

// ------------------------------------------------------------------ helpers

inline double max_abs(const CMatrix& m) {
    return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff();
}

/// Max-norm of M - M^dagger.
inline double hermiticity_defect(const CMatrix& m) {
    return max_abs(m - m.adjoint());
}

inline CMatrix hermitian_part(const CMatrix& m) {
    return 0.5 * (m + m.adjoint());
}

inline void require_square(const CMatrix& m, const char* who) {
    if (m.rows() != m.cols()) {
        throw DimensionError(std::string(who) + ": matrix is not square");
    }
}

// ------------------------------------------------------------------ DensityMatrix

/// Tolerances used when checking density-matrix invariants.
struct DensityTolerance {
    double hermiticity = 1e-10;  // relative max-norm of rho - rho^dagger
    double trace = 1e-10;
    double min_eigenvalue = -1e-8;
};

/// Outcome of a density-matrix invariant check.
struct DensityCheck {
    double hermiticity = 0.0;
    double trace_error = 0.0;
    double min_eigenvalue = 0.0;
    bool ok = true;
    std::string message;
};

inline DensityCheck check_density(const CMatrix& rho, const DensityTolerance& tol = {}) {
    DensityCheck c;
    if (rho.rows() != rho.cols() || rho.rows() == 0) {
        c.ok = false;
        c.message = "density matrix must be square and non-empty";
        return c;
    }
    const double scale = std::max(max_abs(rho), 1e-300);
    c.hermiticity = hermiticity_defect(rho) / scale;
    c.trace_error = std::abs(rho.trace() - cplx(1.0, 0.0));
    Eigen::SelfAdjointEigenSolver<CMatrix> es(hermitian_part(rho), Eigen::EigenvaluesOnly);
    c.min_eigenvalue = es.eigenvalues().minCoeff();
    if (c.hermiticity > tol.hermiticity) {
        c.ok = false;
        c.message += "not hermitian (" + std::to_string(c.hermiticity) + "); ";
    }
    if (c.trace_error > tol.trace) {
        c.ok = false;
        c.message += "trace error " + std::to_string(c.trace_error) + "; ";
    }
    if (c.min_eigenvalue < tol.min_eigenvalue) {
        c.ok = false;
        c.message += "negative eigenvalue " + std::to_string(c.min_eigenvalue) + "; ";
    }
    return c;
}

/// Hermitian, unit-trace, positive semidefinite matrix on the full space.
/// Construction validates the invariants unless told otherwise.
class DensityMatrix {
public:
    enum class Validate { yes, no };

    DensityMatrix() = default;

    explicit DensityMatrix(CMatrix m, Validate v = Validate::yes,
                           const DensityTolerance& tol = {})
        : m_(std::move(m)) {
        if (v == Validate::yes) {
            const auto c = check_density(m_, tol);
            if (!c.ok) throw PhysicalityError("invalid density matrix: " + c.message);
        }
    }

    /// Hermitize and renormalize an arbitrary matrix, without a PSD check.
    static DensityMatrix projected(const CMatrix& m) {
        CMatrix h = hermitian_part(m);
        const cplx tr = h.trace();
        if (std::abs(tr) < 1e-300) throw PhysicalityError("cannot normalize traceless matrix");
        h /= tr.real();
        return DensityMatrix(std::move(h), Validate::no);
    }

    const CMatrix& matrix() const noexcept { return m_; }
    Index dim() const noexcept { return m_.rows(); }
    DensityCheck check(const DensityTolerance& tol = {}) const { return check_density(m_, tol); }

private:
    CMatrix m_;
};

}  // namespace cavsync
