// SPDX-License-Identifier: Apache-2.0
//
// rsdoa: robust semiparametric DOA estimation toolkit
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

// Complex Hermitian linear-algebra primitives: vec / vecd, the row
// selection matrix that drops the first entry of vec(A), the projector onto
// the orthogonal complement of vec(I), Kronecker products, and Hermitian
// eigendecomposition / square roots.

#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <string>

#include "rsdoa/error.hpp"

namespace rsdoa {

using cdouble = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using RMatrix = Eigen::MatrixXd;
using RVector = Eigen::VectorXd;

/// Column-major stacking of a square matrix, vec(A)[j*N + i] = A(i, j).
template <typename Derived>
auto vec(const Eigen::MatrixBase<Derived>& a)
{
    using Scalar = typename Derived::Scalar;
    if (a.rows() != a.cols()) {
        throw ConfigError("vec: matrix must be square");
    }
    Eigen::Matrix<Scalar, Eigen::Dynamic, 1> out(a.size());
    const Eigen::Index n = a.rows();
    for (Eigen::Index j = 0; j < n; ++j) {
        out.segment(j * n, n) = a.col(j);
    }
    return out;
}

/// vec(A) with its first element (A(0,0)) removed; length N^2 - 1.
template <typename Derived>
auto vecd(const Eigen::MatrixBase<Derived>& a)
{
    auto v = vec(a);
    using V = decltype(v);
    return V(v.tail(v.size() - 1));
}

/// Inverse of vecd: rebuilds the N x N matrix whose (0,0) entry is `a11`.
inline CMatrix unvecd(cdouble a11, const CVector& d)
{
    const auto n = static_cast<Eigen::Index>(std::llround(std::sqrt(static_cast<double>(d.size() + 1))));
    if (n * n != d.size() + 1) {
        throw ConfigError("unvecd: length " + std::to_string(d.size()) + " is not N^2 - 1");
    }
    CMatrix out(n, n);
    out(0, 0) = a11;
    for (Eigen::Index k = 1; k < n * n; ++k) {
        out(k % n, k / n) = d(k - 1);
    }
    return out;
}

/// Dense (N^2-1) x N^2 selection matrix P = [e_2 | ... | e_{N^2}]^T.
/// Runtime code applies it implicitly through vecd(); the dense form is for checks.
inline RMatrix selection_matrix(Eigen::Index n)
{
    if (n < 1) {
        throw ConfigError("selection_matrix: N must be >= 1");
    }
    RMatrix p = RMatrix::Zero(n * n - 1, n * n);
    for (Eigen::Index k = 0; k + 1 < n * n; ++k) {
        p(k, k + 1) = 1.0;
    }
    return p;
}

/// Dense projector I_{N^2} - vec(I) vec(I)^T / N.
inline RMatrix perp_vec_identity(Eigen::Index n)
{
    if (n < 1) {
        throw ConfigError("perp_vec_identity: N must be >= 1");
    }
    const RVector vi = vec(RMatrix::Identity(n, n));
    return RMatrix::Identity(n * n, n * n) - vi * vi.transpose() / static_cast<double>(n);
}

/// Implicit application of the vec(I) complement projector: vec(M) -> vec(M - tr(M)/N I).
inline CVector apply_perp_vec_identity(const CVector& v)
{
    const auto n = static_cast<Eigen::Index>(std::llround(std::sqrt(static_cast<double>(v.size()))));
    if (n * n != v.size()) {
        throw ConfigError("apply_perp_vec_identity: length is not a perfect square");
    }
    cdouble trace = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        trace += v(i * n + i);
    }
    CVector out = v;
    for (Eigen::Index i = 0; i < n; ++i) {
        out(i * n + i) -= trace / static_cast<double>(n);
    }
    return out;
}

/// Kronecker product with the standard block layout: block (i,j) is a(i,j) * b.
template <typename DA, typename DB>
auto kron(const Eigen::MatrixBase<DA>& a, const Eigen::MatrixBase<DB>& b)
{
    using Scalar = typename Eigen::ScalarBinaryOpTraits<typename DA::Scalar, typename DB::Scalar>::ReturnType;
    Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
        for (Eigen::Index j = 0; j < a.cols(); ++j) {
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
        }
    }
    return out;
}

inline bool is_hermitian(const CMatrix& a, double tol = 0.0)
{
    if (a.rows() != a.cols()) {
        return false;
    }
    const double scale = std::max(1.0, a.norm());
    return (a - a.adjoint()).norm() <= tol * scale;
}

/// Copy of `a` made exactly Hermitian: (A + A^H)/2 with a real diagonal.
inline CMatrix hermitian_part(const CMatrix& a)
{
    CMatrix h = 0.5 * (a + a.adjoint());
    for (Eigen::Index i = 0; i < h.rows(); ++i) {
        h(i, i) = h(i, i).real();
    }
    return h;
}

struct HermitianEigen {
    RVector values;  ///< ascending
    CMatrix vectors; ///< column i pairs with values(i)
};

inline HermitianEigen hermitian_eig(const CMatrix& a)
{
    if (a.rows() != a.cols() || a.rows() == 0) {
        throw ConfigError("hermitian_eig: matrix must be square and non-empty");
    }
    Eigen::SelfAdjointEigenSolver<CMatrix> solver(a);
    if (solver.info() != Eigen::Success) {
        throw NumericalError("hermitian_eig: eigensolver did not converge");
    }
    return {solver.eigenvalues(), solver.eigenvectors()};
}

/// Positive-definiteness threshold relative to the largest eigenvalue.
inline constexpr double pd_relative_tolerance = 1e-12;

struct HermitianRoots {
    CMatrix sqrt;
    CMatrix inv_sqrt;
};

/// A^{1/2} and A^{-1/2} of a Hermitian positive-definite matrix.
inline HermitianRoots hermitian_sqrt_inv(const CMatrix& a)
{
    const auto eig = hermitian_eig(a);
    const double top = eig.values.maxCoeff();
    const double bottom = eig.values.minCoeff();
    if (!(top > 0.0) || bottom <= pd_relative_tolerance * top) {
        throw NotPositiveDefinite("hermitian_sqrt_inv: matrix is not positive definite (min eigenvalue "
                                  + std::to_string(bottom) + ")");
    }
    const RVector root = eig.values.cwiseSqrt();
    const CMatrix& u = eig.vectors;
    HermitianRoots out;
    out.sqrt = hermitian_part(u * root.cast<cdouble>().asDiagonal() * u.adjoint());
    out.inv_sqrt = hermitian_part(u * root.cwiseInverse().cast<cdouble>().asDiagonal() * u.adjoint());
    return out;
}

/// Throws NotPositiveDefinite unless the Hermitian matrix passes the relative PD test.
inline void require_positive_definite(const CMatrix& a, const char* what)
{
    const auto eig = hermitian_eig(a);
    const double top = eig.values.maxCoeff();
    if (!(top > 0.0) || eig.values.minCoeff() <= pd_relative_tolerance * top) {
        throw NotPositiveDefinite(std::string(what) + ": matrix is not positive definite");
    }
}

} // namespace rsdoa
