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

// sylvester.hpp: Bartels-Stewart solver for A X + X B = C over complex matrices.
//
// Both coefficients are reduced to upper triangular (complex Schur) form once;
// every right-hand side then costs two back-transformations plus a triangular
// Sylvester solve, O(n^3) overall. The triangular solve halves the larger
// dimension recursively so most of the work is matrix products. When
// B = A^dagger (the Lindblad case) a single Schur form is shared; R^dagger is
// lower triangular and is made upper by reversing the index order.

#pragma once

#include "cavsync/core.hpp"

#include <Eigen/Eigenvalues>

#include <limits>
#include <sstream>

namespace cavsync {

class SylvesterSolver {
public:
    /// Relative threshold on min |a_i + b_j| below which the pencil counts as singular.
    static constexpr double singular_tolerance = 1e-12;

    SylvesterSolver(const CMatrix& A, const CMatrix& B) {
        require_square(A, "SylvesterSolver(A)");
        require_square(B, "SylvesterSolver(B)");
        const double scale = std::max(A.norm(), B.norm());
        adjoint_pair_ = A.rows() == B.rows() &&
                        max_abs(B - A.adjoint()) <= 1e-14 * std::max(scale, 1e-300);
        factor(A, adjoint_pair_ ? nullptr : &B);
        check_pencil(scale);
    }

    /// Factorization for the pair (A, A^dagger).
    static SylvesterSolver adjoint_pair(const CMatrix& A) { return SylvesterSolver(A); }

    Index rows() const noexcept { return RA_.rows(); }
    Index cols() const noexcept { return adjoint_pair_ ? RA_.rows() : RB_.rows(); }
    bool uses_adjoint_pair() const noexcept { return adjoint_pair_; }
    /// min |a_i + b_j| over the Schur diagonals (distance of the pencil from singularity).
    double pencil_gap() const noexcept { return gap_; }

    CMatrix solve(const CMatrix& C) const {
        if (C.rows() != rows() || C.cols() != cols()) {
            throw DimensionError("SylvesterSolver::solve: right-hand side has wrong shape");
        }
        if (adjoint_pair_) {
            // with P the index reversal: RA (Y P) + (Y P)(P RA^dagger P) = C' P
            CMatrix Ct = (UA_.adjoint() * C * UA_).rowwise().reverse();
            solve_upper(RA_, RB_, Ct);
            return UA_ * Ct.rowwise().reverse() * UA_.adjoint();
        }
        CMatrix Ct = UA_.adjoint() * C * UB_;
        solve_upper(RA_, RB_, Ct);
        return UA_ * Ct * UB_.adjoint();
    }

private:
    explicit SylvesterSolver(const CMatrix& A) : adjoint_pair_(true) {
        require_square(A, "SylvesterSolver(A)");
        factor(A, nullptr);
        check_pencil(A.norm());
    }

    void factor(const CMatrix& A, const CMatrix* B) {
        Eigen::ComplexSchur<CMatrix> sa(A);
        if (sa.info() != Eigen::Success) throw Error("SylvesterSolver: Schur decomposition of A failed");
        RA_ = sa.matrixT();
        UA_ = sa.matrixU();
        if (B != nullptr) {
            Eigen::ComplexSchur<CMatrix> sb(*B);
            if (sb.info() != Eigen::Success) throw Error("SylvesterSolver: Schur decomposition of B failed");
            RB_ = sb.matrixT();
            UB_ = sb.matrixU();
        } else {
            RB_ = RA_.adjoint().reverse();
        }
    }

    cplx b_diag(Index j) const { return adjoint_pair_ ? std::conj(RA_(j, j)) : RB_(j, j); }

    void check_pencil(double scale) {
        gap_ = std::numeric_limits<double>::infinity();
        Index bi = 0, bj = 0;
        for (Index j = 0; j < cols(); ++j) {
            const cplx b = b_diag(j);
            for (Index i = 0; i < rows(); ++i) {
                const double g = std::abs(RA_(i, i) + b);
                if (g < gap_) {
                    gap_ = g;
                    bi = i;
                    bj = j;
                }
            }
        }
        if (gap_ < singular_tolerance * std::max(scale, 1e-300)) {
            std::ostringstream os;
            os << "Sylvester pencil is singular: eigenvalue a[" << bi << "] = " << RA_(bi, bi)
               << " and b[" << bj << "] = " << b_diag(bj) << " sum to " << gap_;
            throw SingularPencilError(os.str(), bi, bj, RA_(bi, bi), b_diag(bj));
        }
    }

    static constexpr Index block_size = 48;

    /// Ta Y + Y Tb = C in place, both coefficients upper triangular.
    static void solve_upper(const Eigen::Ref<const CMatrix>& Ta, const Eigen::Ref<const CMatrix>& Tb,
                            Eigen::Ref<CMatrix> Y) {
        const Index m = Ta.rows(), n = Tb.rows();
        if (m >= n && m > block_size) {
            const Index h = m / 2;
            solve_upper(Ta.bottomRightCorner(m - h, m - h), Tb, Y.bottomRows(m - h));
            Y.topRows(h).noalias() -= Ta.topRightCorner(h, m - h) * Y.bottomRows(m - h);
            solve_upper(Ta.topLeftCorner(h, h), Tb, Y.topRows(h));
            return;
        }
        if (n > block_size) {
            const Index h = n / 2;
            solve_upper(Ta, Tb.topLeftCorner(h, h), Y.leftCols(h));
            Y.rightCols(n - h).noalias() -= Y.leftCols(h) * Tb.topRightCorner(h, n - h);
            solve_upper(Ta, Tb.bottomRightCorner(n - h, n - h), Y.rightCols(n - h));
            return;
        }
        // small blocks: columns forward, back substitution with (Ta + Tb(j, j) I)
        for (Index j = 0; j < n; ++j) {
            if (j > 0) Y.col(j).noalias() -= Y.leftCols(j) * Tb.col(j).head(j);
            auto y = Y.col(j);
            const cplx s = Tb(j, j);
            for (Index k = m - 1; k >= 0; --k) {
                y(k) /= Ta(k, k) + s;
                if (k > 0) y.head(k).noalias() -= y(k) * Ta.col(k).head(k);
            }
        }
    }

    bool adjoint_pair_ = false;
    CMatrix RA_, UA_, RB_, UB_;  ///< RB_ holds the reversed RA^dagger for an adjoint pair
    double gap_ = 0.0;
};

/// One-shot solve of A X + X B = C.
inline CMatrix solve_sylvester(const CMatrix& A, const CMatrix& B, const CMatrix& C) {
    return SylvesterSolver(A, B).solve(C);
}

/// Frobenius residual ||A X + X B - C||.
inline double sylvester_residual(const CMatrix& A, const CMatrix& B, const CMatrix& C, const CMatrix& X) {
    return (A * X + X * B - C).norm();
}

}  // namespace cavsync
