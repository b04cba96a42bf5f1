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

// Semiparametric stochastic Cramer-Rao bound on the spatial frequencies of a
// CES snapshot model:
//   SSCRB = N (N+1) sigma0^2 / (2 L E{Q^2 psi(Q)^2}) * C^{-1},
//   C     = Re[ (D^H Pi_A^perp D) .* (Gamma A^H Sigma^{-1} A Gamma)^T ].

#pragma once

#include <cmath>

#include "rsdoa/array_model.hpp"
#include "rsdoa/ces.hpp"
#include "rsdoa/error.hpp"
#include "rsdoa/hermitian.hpp"

namespace rsdoa {

inline constexpr double c_condition_warning = 1e10;

/// I - A (A^H A)^{-1} A^H.
inline CMatrix orthogonal_projector_complement(const CMatrix& a)
{
    const CMatrix gram = a.adjoint() * a;
    Eigen::LLT<CMatrix> llt(gram);
    if (llt.info() != Eigen::Success) {
        throw NumericalError("steering matrix is rank deficient");
    }
    const auto eig = hermitian_eig(gram);
    if (eig.values.minCoeff() <= 1e-12 * eig.values.maxCoeff()) {
        throw NumericalError("steering matrix is rank deficient");
    }
    const CMatrix n = CMatrix::Identity(a.rows(), a.rows());
    return hermitian_part(n - a * llt.solve(a.adjoint()));
}

inline RMatrix c_matrix(const SourceScene& scene)
{
    scene.validate();
    if (scene.sources() < 1) {
        throw ConfigError("c_matrix: scene has no sources");
    }
    const SteeringModel model(scene.n);
    const CMatrix a = model.matrix(scene.nu);
    const CMatrix d = model.derivative_matrix(scene.nu);
    const CMatrix perp = orthogonal_projector_complement(a);
    const CMatrix sigma = build_covariance(scene);
    const CMatrix ga = scene.gamma * a.adjoint() * sigma.llt().solve(a) * scene.gamma;
    const CMatrix first = d.adjoint() * perp * d;
    const CMatrix prod = first.cwiseProduct(ga.transpose());
    RMatrix c = prod.real();
    return 0.5 * (c + c.transpose());
}

struct BoundResult {
    RMatrix matrix;             ///< K x K
    double index = 0.0;         ///< Frobenius norm of `matrix`
    double scalar_factor = 0.0; ///< N (N+1) sigma0^2 / (2 L E{Q^2 psi^2})
    double c_condition = 0.0;   ///< condition number of C
    bool ill_conditioned = false;
};

inline BoundResult sscrb(const SourceScene& scene, const DensityGenerator& g, int l)
{
    if (l < 1) {
        throw ConfigError("sscrb: L must be >= 1");
    }
    const RMatrix c = c_matrix(scene);
    Eigen::SelfAdjointEigenSolver<RMatrix> eig(c);
    if (eig.info() != Eigen::Success) {
        throw NumericalError("sscrb: eigensolver failed on C");
    }
    const double lo = eig.eigenvalues().minCoeff();
    const double hi = eig.eigenvalues().maxCoeff();
    if (!(lo > 0.0)) {
        throw NumericalError("sscrb: C is singular (coherent or coincident sources)");
    }
    Eigen::LLT<RMatrix> llt(c);
    if (llt.info() != Eigen::Success) {
        throw NumericalError("sscrb: C is not positive definite");
    }
    const double n = scene.n;
    BoundResult out;
    out.c_condition = hi / lo;
    out.ill_conditioned = out.c_condition > c_condition_warning;
    out.scalar_factor = n * (n + 1.0) * scene.noise_power / (2.0 * l * g.score_moment(scene.n));
    const RMatrix c_inv = llt.solve(RMatrix::Identity(c.rows(), c.cols()));
    out.matrix = out.scalar_factor * 0.5 * (c_inv + c_inv.transpose());
    out.index = out.matrix.norm();
    return out;
}

} // namespace rsdoa
