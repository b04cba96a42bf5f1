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

// Shape-matrix estimators: sample covariance, Tyler's fixed-point M-estimator
// and the one-step rank-based R-estimator with van der Waerden scores.
//
// Snapshots are passed as an N x L matrix whose columns are z_1 .. z_L.
// Every returned shape has its top-left entry equal to exactly 1.

#pragma once

#include <boost/math/special_functions/gamma.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <vector>

#include "rsdoa/array_model.hpp"
#include "rsdoa/error.hpp"
#include "rsdoa/hermitian.hpp"

namespace rsdoa {

/// Hermitian positive-definite N x N matrix normalized so that V(0,0) == 1.
class ShapeMatrix {
public:
    /// Normalizes a scatter/covariance estimate by its (0,0) entry.
    static ShapeMatrix from_scatter(const CMatrix& sigma)
    {
        if (sigma.rows() != sigma.cols() || sigma.rows() == 0) {
            throw ConfigError("ShapeMatrix: matrix must be square and non-empty");
        }
        const double s11 = sigma(0, 0).real();
        if (!(s11 > 0.0) || !std::isfinite(s11)) {
            throw NotPositiveDefinite("ShapeMatrix: top-left entry must be positive");
        }
        CMatrix v = hermitian_part(sigma / s11);
        v(0, 0) = 1.0;
        require_positive_definite(v, "ShapeMatrix");
        return ShapeMatrix(std::move(v));
    }

    const CMatrix& matrix() const { return v_; }
    int dim() const { return static_cast<int>(v_.rows()); }

private:
    explicit ShapeMatrix(CMatrix v) : v_(std::move(v)) {}
    CMatrix v_;
};

/// V_{1,0} = Sigma(theta) / Sigma(theta)_{1,1} for a scene.
inline ShapeMatrix exact_shape(const SourceScene& scene) { return ShapeMatrix::from_scatter(build_covariance(scene)); }

inline void require_enough_snapshots(const CMatrix& z, const char* what)
{
    if (z.cols() < z.rows()) {
        throw DegenerateInput(std::string(what) + ": need at least N snapshots (L >= N)");
    }
}

// ---------------------------------------------------------------------------
// Sample covariance

inline ShapeMatrix scm_shape(const CMatrix& z)
{
    require_enough_snapshots(z, "scm_shape");
    const CMatrix scm = z * z.adjoint() / static_cast<double>(z.cols());
    try {
        return ShapeMatrix::from_scatter(scm);
    } catch (const NotPositiveDefinite&) {
        throw DegenerateInput("scm_shape: sample covariance is singular");
    }
}

// ---------------------------------------------------------------------------
// Tyler

struct TylerOptions {
    double tol = 1e-9;
    int max_iter = 500;
};

struct TylerResult {
    ShapeMatrix shape;
    int iterations = 0;
    double residual = 0.0; ///< relative Frobenius fixed-point residual of the returned iterate
};

namespace detail {

inline CMatrix unit_columns(const CMatrix& z)
{
    CMatrix s(z.rows(), z.cols());
    for (Eigen::Index l = 0; l < z.cols(); ++l) {
        const double norm = z.col(l).norm();
        if (!(norm > 0.0) || !std::isfinite(norm)) {
            throw DegenerateInput("snapshot " + std::to_string(l + 1) + " is zero or not finite");
        }
        s.col(l) = z.col(l) / norm;
    }
    return s;
}

/// (N/L) sum_l s_l s_l^H / (s_l^H Sigma^{-1} s_l).
inline CMatrix tyler_map(const CMatrix& s, const CMatrix& sigma)
{
    Eigen::LLT<CMatrix> llt(sigma);
    if (llt.info() != Eigen::Success) {
        throw NotPositiveDefinite("tyler: iterate lost positive definiteness");
    }
    const CMatrix x = llt.solve(s);
    RVector w(s.cols());
    for (Eigen::Index l = 0; l < s.cols(); ++l) {
        const double q = s.col(l).dot(x.col(l)).real();
        if (!(q > 0.0)) {
            throw DegenerateInput("tyler: quadratic form vanished");
        }
        w(l) = 1.0 / q;
    }
    const double scale = static_cast<double>(s.rows()) / static_cast<double>(s.cols());
    return hermitian_part(scale * (s * w.cast<cdouble>().asDiagonal() * s.adjoint()));
}

} // namespace detail

/// Relative residual ||(N/L) sum z z^H / (z^H Sigma^{-1} z) - Sigma||_F / ||Sigma||_F.
inline double tyler_fixed_point_residual(const CMatrix& z, const CMatrix& sigma)
{
    const CMatrix f = detail::tyler_map(detail::unit_columns(z), sigma);
    return (f - sigma).norm() / sigma.norm();
}

/// Tyler's shape estimator. Iterates are trace-normalized (trace N) starting
/// from the identity; the (0,0) normalization is applied once on exit.
inline TylerResult tyler_shape(const CMatrix& z, const TylerOptions& opt = {})
{
    require_enough_snapshots(z, "tyler_shape");
    const Eigen::Index n = z.rows();
    const CMatrix s = detail::unit_columns(z);
    CMatrix sigma = CMatrix::Identity(n, n);
    for (int it = 0; it <= opt.max_iter; ++it) {
        const CMatrix f = detail::tyler_map(s, sigma);
        const double residual = (f - sigma).norm() / sigma.norm();
        if (residual < opt.tol) {
            return {ShapeMatrix::from_scatter(sigma), it, residual};
        }
        sigma = f * (static_cast<double>(n) / f.trace().real());
    }
    throw NonConvergence("tyler_shape: no convergence within " + std::to_string(opt.max_iter) + " iterations");
}

// ---------------------------------------------------------------------------
// Ranks and scores

struct RankStatistics {
    RVector q_star;         ///< z_l^H V^{-1} z_l
    std::vector<int> ranks; ///< 1-based ascending ranks of q_star, ties broken by index
    CMatrix u_star;         ///< columns V^{-1/2} z_l / sqrt(q_star_l)
};

/// 1-based ascending ranks; equal values keep snapshot order.
inline std::vector<int> ascending_ranks(const RVector& values)
{
    std::vector<int> order(static_cast<std::size_t>(values.size()));
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return values(a) < values(b); });
    std::vector<int> ranks(order.size());
    for (std::size_t pos = 0; pos < order.size(); ++pos) {
        ranks[static_cast<std::size_t>(order[pos])] = static_cast<int>(pos) + 1;
    }
    return ranks;
}

inline RankStatistics rank_statistics_whitened(const CMatrix& z, const CMatrix& inv_sqrt)
{
    RankStatistics out;
    const CMatrix w = inv_sqrt * z;
    out.q_star.resize(z.cols());
    out.u_star.resize(z.rows(), z.cols());
    for (Eigen::Index l = 0; l < z.cols(); ++l) {
        const double q = w.col(l).squaredNorm();
        if (!(q > 0.0) || !std::isfinite(q)) {
            throw DegenerateInput("rank statistics: snapshot " + std::to_string(l + 1) + " has zero quadratic form");
        }
        out.q_star(l) = q;
        out.u_star.col(l) = w.col(l) / std::sqrt(q);
    }
    out.ranks = ascending_ranks(out.q_star);
    return out;
}

inline RankStatistics compute_rank_statistics(const CMatrix& z, const ShapeMatrix& v)
{
    return rank_statistics_whitened(z, hermitian_sqrt_inv(v.matrix()).inv_sqrt);
}

/// van der Waerden score K(u) = -G^{-1}(u), G the Gamma(N, 1) cdf.
inline double vdw_score(double u, int n)
{
    if (!(u > 0.0 && u < 1.0)) {
        throw DomainError("vdw_score: u must lie in (0, 1)");
    }
    if (n < 1) {
        throw DomainError("vdw_score: N must be >= 1");
    }
    return -boost::math::gamma_p_inv(static_cast<double>(n), u);
}

/// K(r / (L + 1)) for r = 1 .. L.
inline RVector vdw_score_table(int l, int n)
{
    RVector t(l);
    for (int r = 1; r <= l; ++r) {
        t(r - 1) = vdw_score(static_cast<double>(r) / (l + 1.0), n);
    }
    return t;
}

// ---------------------------------------------------------------------------
// L_V = P (V^{-T/2} kron V^{-1/2}) Pi_perp

/// The linear map L_V from N^2-vectors to (N^2-1)-vectors and its Gram matrix
/// L_V L_V^H, both applied implicitly:
///   L_V vec(M)          = vecd(W (M - tr(M)/N I) W),           W = V^{-1/2}
///   (L_V L_V^H) vecd(H) = vecd(V^{-1} H V^{-1} - tr(V^{-1} H)/N V^{-1}),  H(0,0) = 0
class ShapeScoreOperator {
public:
    explicit ShapeScoreOperator(const ShapeMatrix& v)
        : v_(v.matrix()), w_(hermitian_sqrt_inv(v.matrix()).inv_sqrt), v_inv_(hermitian_part(w_ * w_))
    {
    }

    int dim() const { return static_cast<int>(v_.rows()); }
    const CMatrix& inv_sqrt() const { return w_; }

    /// L_V applied to vec(M) given as an N x N matrix.
    CVector apply_matrix(const CMatrix& m) const
    {
        const Eigen::Index n = v_.rows();
        const CMatrix centered = m - (m.trace() / static_cast<double>(n)) * CMatrix::Identity(n, n);
        return vecd(w_ * centered * w_);
    }

    CVector apply(const CVector& x) const
    {
        const Eigen::Index n = v_.rows();
        if (x.size() != n * n) {
            throw ConfigError("ShapeScoreOperator::apply: expected a vector of length N^2");
        }
        return apply_matrix(Eigen::Map<const CMatrix>(x.data(), n, n));
    }

    /// (L L^H) x for x of length N^2 - 1.
    CVector gram_apply(const CVector& x) const
    {
        const CMatrix h = unvecd(0.0, x);
        const cdouble c = (v_inv_ * h).trace() / static_cast<double>(v_.rows());
        return vecd(v_inv_ * h * v_inv_ - c * v_inv_);
    }

    /// Solves (L L^H) x = g in closed form (O(N^3)).
    CVector gram_solve(const CVector& g) const
    {
        if (g.size() != v_.size() - 1) {
            throw ConfigError("ShapeScoreOperator::gram_solve: expected a vector of length N^2 - 1");
        }
        // With X = V^{-1} H V^{-1} - c V^{-1} matching g off the (0,0) slot:
        // tr(X V) = 0 fixes X(0,0), then H = V X V + c V with c = -(V X V)(0,0).
        CMatrix x = unvecd(0.0, g);
        x(0, 0) = -(x * v_).trace();
        const CMatrix vxv = v_ * x * v_;
        const cdouble c = -vxv(0, 0);
        CVector h = vecd(vxv + c * v_);
        if (!h.allFinite()) {
            throw NumericalError("ShapeScoreOperator::gram_solve: non-finite solution");
        }
        return h;
    }

    /// Dense (N^2-1) x N^2 matrix; for checks only.
    CMatrix dense() const
    {
        const Eigen::Index n = v_.rows();
        const CMatrix k = kron(CMatrix(w_.transpose()), w_);
        return selection_matrix(n).cast<cdouble>() * k * perp_vec_identity(n).cast<cdouble>();
    }

    CMatrix gram_dense() const
    {
        const CMatrix l = dense();
        return l * l.adjoint();
    }

private:
    CMatrix v_;
    CMatrix w_;
    CMatrix v_inv_;
};

/// Rank-based central sequence
///   T(V) = L^{-1/2} L_V sum_l K(r_l/(L+1)) vec(u_l u_l^H),
/// with ranks and directions recomputed under V.
inline CVector rank_central_sequence(const CMatrix& z, const ShapeScoreOperator& op, const RVector& scores)
{
    const RankStatistics rs = rank_statistics_whitened(z, op.inv_sqrt());
    RVector k(z.cols());
    for (Eigen::Index l = 0; l < z.cols(); ++l) {
        k(l) = scores(rs.ranks[static_cast<std::size_t>(l)] - 1);
    }
    const CMatrix m = rs.u_star * k.cast<cdouble>().asDiagonal() * rs.u_star.adjoint();
    return op.apply_matrix(m) / std::sqrt(static_cast<double>(z.cols()));
}

/// Size of the alpha-probing perturbation relative to the one-step direction.
/// A full-step probe picks up curvature of T at small L (alpha biased ~15% low
/// at N = 8, L = 40 under Gaussian data, where alpha = 1); a tenth of the step
/// measures the local slope.
inline constexpr double alpha_probe_fraction = 0.1;

struct AlphaEstimate {
    double alpha = 0.0;
    CVector central;   ///< T at the preliminary estimate
    CVector direction; ///< (L L^H)^{-1} T, the vecd of the one-step direction
    int halvings = 0;  ///< step halvings needed to keep the perturbed shape positive definite
};

namespace detail {

inline bool is_positive_definite(const CMatrix& a)
{
    Eigen::LLT<CMatrix> llt(a);
    if (llt.info() != Eigen::Success) {
        return false;
    }
    const auto eig = hermitian_eig(a);
    return eig.values.minCoeff() > pd_relative_tolerance * eig.values.maxCoeff();
}

inline AlphaEstimate estimate_alpha_with(const CMatrix& z, const ShapeMatrix& v, const RVector& scores)
{
    require_enough_snapshots(z, "estimate_alpha");
    const double root_l = std::sqrt(static_cast<double>(z.cols()));
    const ShapeScoreOperator op(v);
    AlphaEstimate out;
    out.central = rank_central_sequence(z, op, scores);
    const double central_norm = out.central.norm();
    if (!(central_norm > 0.0)) {
        throw DegenerateInput("estimate_alpha: zero-norm perturbation direction");
    }
    out.direction = op.gram_solve(out.central);
    const CMatrix step = unvecd(0.0, out.direction);

    // Perturb along the one-step direction: V - f H / sqrt(L), halving f until PD.
    double f = alpha_probe_fraction;
    for (;; f *= 0.5, ++out.halvings) {
        if (out.halvings > 60) {
            throw DegenerateInput("estimate_alpha: no positive-definite perturbation found");
        }
        CMatrix perturbed = hermitian_part(v.matrix() - (f / root_l) * step);
        perturbed(0, 0) = 1.0;
        if (!is_positive_definite(perturbed)) {
            continue;
        }
        const ShapeMatrix pv = ShapeMatrix::from_scatter(perturbed);
        const CVector shifted = rank_central_sequence(z, ShapeScoreOperator(pv), scores);
        // T(V + d/sqrt(L)) - T(V) ~ alpha (L L^H) vecd(d), and (L L^H) direction = T.
        out.alpha = (shifted - out.central).norm() / (f * central_norm);
        break;
    }
    if (!(out.alpha > 0.0) || !std::isfinite(out.alpha)) {
        throw DegenerateInput("estimate_alpha: degenerate cross-information estimate");
    }
    return out;
}

} // namespace detail

/// Data-driven cross-information coefficient alpha at the preliminary shape v.
inline AlphaEstimate estimate_alpha(const CMatrix& z, const ShapeMatrix& v)
{
    return detail::estimate_alpha_with(z, v, vdw_score_table(static_cast<int>(z.cols()), static_cast<int>(z.rows())));
}

struct REstimatorOptions {
    /// Replaces the data-driven alpha (e.g. +infinity to disable the update).
    std::optional<double> alpha_override;
    /// Eigenvalue floor, relative to the largest eigenvalue, for the PD repair.
    double pd_clip = 1e-8;
};

struct REstimate {
    ShapeMatrix shape;
    double alpha = 0.0;
    bool pd_repaired = false;
    int halvings = 0;
};

/// One-step R-estimator
///   vecd(V_R) = vecd(V_Ty) - 1/(L alpha) (L L^H)^{-1} L sum_l K(r_l/(L+1)) vec(u_l u_l^H)
/// around a preliminary (Tyler) shape.
inline REstimate r_estimator_shape(const CMatrix& z, const ShapeMatrix& preliminary, const REstimatorOptions& opt = {})
{
    require_enough_snapshots(z, "r_estimator_shape");
    const int l = static_cast<int>(z.cols());
    const RVector scores = vdw_score_table(l, static_cast<int>(z.rows()));

    REstimate out{preliminary};
    CVector direction;
    if (opt.alpha_override) {
        out.alpha = *opt.alpha_override;
        if (std::isinf(out.alpha)) {
            return out;
        }
        const ShapeScoreOperator op(preliminary);
        direction = op.gram_solve(rank_central_sequence(z, op, scores));
    } else {
        const auto a = detail::estimate_alpha_with(z, preliminary, scores);
        out.alpha = a.alpha;
        out.halvings = a.halvings;
        direction = a.direction;
    }
    if (!(out.alpha > 0.0)) {
        throw ConfigError("r_estimator_shape: alpha must be positive");
    }

    const CVector updated = vecd(preliminary.matrix()) - direction / (std::sqrt(static_cast<double>(l)) * out.alpha);
    CMatrix v = hermitian_part(unvecd(1.0, updated));
    v(0, 0) = 1.0;

    const auto eig = hermitian_eig(v);
    const double top = eig.values.maxCoeff();
    if (!(top > 0.0)) {
        throw NumericalError("r_estimator_shape: update produced a non-positive matrix");
    }
    if (eig.values.minCoeff() <= pd_relative_tolerance * top) {
        const RVector clipped = eig.values.cwiseMax(opt.pd_clip * top);
        v = hermitian_part(eig.vectors * clipped.cast<cdouble>().asDiagonal() * eig.vectors.adjoint());
        out.pd_repaired = true;
    }
    out.shape = ShapeMatrix::from_scatter(v);
    return out;
}

} // namespace rsdoa
