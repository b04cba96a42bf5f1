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

#include <algorithm>
#include <cmath>
#include <limits>

#include <gtest/gtest.h>

#include "rsdoa/ces.hpp"
#include "rsdoa/shape_estimators.hpp"
#include "test_support.hpp"

using namespace rsdoa;
using rsdoa::testing::random_complex;
using rsdoa::testing::random_pd;

namespace {

CMatrix draw(const CMatrix& sigma, const DensityGenerator& g, int l, std::uint64_t seed)
{
    return synthesize_snapshots(sigma, g, l, seed).data;
}

double shape_error(const ShapeMatrix& est, const ShapeMatrix& truth)
{
    return (est.matrix() - truth.matrix()).squaredNorm();
}

} // namespace

TEST(ShapeMatrix, NormalizesTopLeftEntry)
{
    std::mt19937_64 rng(1);
    const CMatrix s = random_pd(5, rng);
    const ShapeMatrix v = ShapeMatrix::from_scatter(3.7 * s);
    EXPECT_EQ(v.matrix()(0, 0), cdouble(1.0, 0.0));
    EXPECT_TRUE(is_hermitian(v.matrix()));
    EXPECT_LT((v.matrix() - s / s(0, 0).real()).norm(), 1e-13);
    EXPECT_THROW(ShapeMatrix::from_scatter(CMatrix::Zero(3, 3)), NotPositiveDefinite);
    EXPECT_THROW(ShapeMatrix::from_scatter(CMatrix(2, 3)), ConfigError);
}

TEST(Scm, HandExample)
{
    CMatrix z(2, 4);
    z << 1, 1, 0, 0, 0, 0, 1, 1;
    const ShapeMatrix v = scm_shape(z);
    EXPECT_TRUE(v.matrix().isApprox(CMatrix::Identity(2, 2), 1e-15));
    EXPECT_THROW(scm_shape(CMatrix::Ones(3, 2)), DegenerateInput);
    EXPECT_THROW(scm_shape(CMatrix::Ones(2, 4)), DegenerateInput);
}

TEST(Tyler, FixedPointAndResidual)
{
    const CMatrix sigma = build_covariance(reference_scene());
    const CMatrix z = draw(sigma, DensityGenerator::student_t(2.0), 200, 3);
    const TylerResult r = tyler_shape(z);
    EXPECT_LT(r.residual, 1e-9);
    EXPECT_GT(r.iterations, 0);
    EXPECT_LT(tyler_fixed_point_residual(z, r.shape.matrix()), 1e-8);
    EXPECT_EQ(r.shape.matrix()(0, 0), cdouble(1.0, 0.0));
}

TEST(Tyler, InvariantToSnapshotScaling)
{
    std::mt19937_64 rng(2);
    const CMatrix sigma = random_pd(6, rng);
    const CMatrix z = draw(sigma, DensityGenerator::gaussian(), 60, 5);
    CMatrix scaled = z;
    std::uniform_real_distribution<double> u(0.01, 100.0);
    for (Eigen::Index l = 0; l < z.cols(); ++l) {
        scaled.col(l) *= u(rng);
    }
    const ShapeMatrix a = tyler_shape(z).shape;
    const ShapeMatrix b = tyler_shape(scaled).shape;
    EXPECT_LT((a.matrix() - b.matrix()).norm() / a.matrix().norm(), 1e-10);
}

TEST(Tyler, ReportsNonConvergence)
{
    const CMatrix z = draw(CMatrix::Identity(4, 4), DensityGenerator::gaussian(), 20, 1);
    TylerOptions opt;
    opt.max_iter = 1;
    opt.tol = 1e-15;
    EXPECT_THROW(tyler_shape(z, opt), NonConvergence);
    const CMatrix zero = CMatrix::Zero(3, 5);
    EXPECT_THROW(tyler_shape(zero), DegenerateInput);
}

TEST(Tyler, BeatsScmUnderHeavyTails)
{
    const SourceScene scene = reference_scene();
    const CMatrix sigma = build_covariance(scene);
    const ShapeMatrix truth = exact_shape(scene);
    int wins = 0;
    for (int t = 0; t < 100; ++t) {
        const CMatrix z = draw(sigma, DensityGenerator::student_t(2.0), 10000, 100 + t);
        wins += shape_error(tyler_shape(z).shape, truth) < shape_error(scm_shape(z), truth) ? 1 : 0;
    }
    EXPECT_GE(wins, 90);
}

TEST(Ranks, AscendingWithIndexTies)
{
    EXPECT_EQ(ascending_ranks(RVector{{3.0, 1.0, 2.0}}), (std::vector<int>{3, 1, 2}));
    EXPECT_EQ(ascending_ranks(RVector{{5.0, 5.0}}), (std::vector<int>{1, 2}));
    const RVector q = RVector::LinSpaced(50, 10.0, 1.0);
    const auto r = ascending_ranks(q);
    for (int i = 0; i < 50; ++i) {
        EXPECT_EQ(r[static_cast<std::size_t>(i)], 50 - i);
    }
}

TEST(Ranks, StatisticsUnderShape)
{
    std::mt19937_64 rng(7);
    const CMatrix sigma = random_pd(4, rng);
    const ShapeMatrix v = ShapeMatrix::from_scatter(sigma);
    const CMatrix z = random_complex(4, 30, rng);
    const RankStatistics rs = compute_rank_statistics(z, v);
    const CMatrix v_inv = v.matrix().inverse();
    std::vector<int> sorted = rs.ranks;
    std::sort(sorted.begin(), sorted.end());
    for (int l = 0; l < 30; ++l) {
        EXPECT_NEAR(rs.q_star(l), (z.col(l).adjoint() * v_inv * z.col(l))(0, 0).real(), 1e-10 * rs.q_star(l));
        EXPECT_NEAR(rs.u_star.col(l).norm(), 1.0, 1e-14);
        EXPECT_EQ(sorted[static_cast<std::size_t>(l)], l + 1);
    }
}

TEST(Ranks, DirectionsUniformUnderTrueShape)
{
    const SourceScene scene = reference_scene();
    const CMatrix z = draw(build_covariance(scene), DensityGenerator::student_t(3.0), 1000, 11);
    const RankStatistics rs = compute_rank_statistics(z, exact_shape(scene));
    // |u_1|^2 ~ Beta(1, N - 1) for u uniform on the complex unit sphere.
    std::vector<double> x;
    for (int l = 0; l < 1000; ++l) {
        x.push_back(std::norm(rs.u_star(0, l)));
    }
    std::sort(x.begin(), x.end());
    double d = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double cdf = 1.0 - std::pow(1.0 - x[i], 7);
        d = std::max({d, std::abs(cdf - static_cast<double>(i) / 1000.0),
                      std::abs(cdf - static_cast<double>(i + 1) / 1000.0)});
    }
    EXPECT_LT(d, 0.05);
}

TEST(VdwScore, ValuesAndMonotonicity)
{
    EXPECT_NEAR(vdw_score(0.5, 1), -0.6931471805599453, 1e-15);
    for (double u : {0.01, 0.3, 0.5, 0.77, 0.99}) {
        const double k = vdw_score(u, 8);
        EXPECT_NEAR(boost::math::gamma_p(8.0, -k), u, 1e-13);
    }
    const RVector t = vdw_score_table(100, 8);
    for (int i = 1; i < 100; ++i) {
        EXPECT_LT(t(i), t(i - 1));
    }
    EXPECT_THROW(vdw_score(0.0, 8), DomainError);
    EXPECT_THROW(vdw_score(1.0, 8), DomainError);
}

TEST(VdwScore, InverseByBisection)
{
    const int n = 8;
    for (double u : {0.05, 0.2, 0.5, 0.8, 0.95}) {
        double lo = 0.0;
        double hi = 100.0;
        for (int i = 0; i < 200; ++i) {
            const double mid = 0.5 * (lo + hi);
            (boost::math::gamma_p(static_cast<double>(n), mid) < u ? lo : hi) = mid;
        }
        EXPECT_NEAR(-vdw_score(u, n), 0.5 * (lo + hi), 1e-10);
    }
}

TEST(ScoreOperator, AnnihilatesScaleDirection)
{
    const ShapeScoreOperator op(ShapeMatrix::from_scatter(CMatrix::Identity(5, 5)));
    EXPECT_LT(op.apply_matrix(CMatrix::Identity(5, 5)).norm(), 1e-15);
    std::mt19937_64 rng(3);
    const ShapeMatrix v = ShapeMatrix::from_scatter(random_pd(4, rng));
    const ShapeScoreOperator op2(v);
    EXPECT_LT(op2.apply_matrix(CMatrix::Identity(4, 4)).norm(), 1e-15);
    EXPECT_GT(op2.apply_matrix(v.matrix()).norm(), 1e-3);
}

TEST(ScoreOperator, ImplicitMatchesDense)
{
    std::mt19937_64 rng(5);
    for (int n : {2, 3, 6}) {
        const ShapeScoreOperator op(ShapeMatrix::from_scatter(random_pd(n, rng)));
        const CMatrix l = op.dense();
        ASSERT_EQ(l.rows(), n * n - 1);
        ASSERT_EQ(l.cols(), n * n);
        const CVector x = random_complex(n * n, 1, rng);
        EXPECT_LT((op.apply(x) - l * x).norm(), 1e-12 * (1.0 + (l * x).norm()));

        const CMatrix gram = op.gram_dense();
        const CVector y = random_complex(n * n - 1, 1, rng);
        EXPECT_LT((op.gram_apply(y) - gram * y).norm(), 1e-11 * (1.0 + (gram * y).norm()));
        EXPECT_GT(hermitian_eig(hermitian_part(gram)).values.minCoeff(), 0.0);

        const CVector solved = op.gram_solve(y);
        const CVector dense_solved = gram.lu().solve(y);
        EXPECT_LT((solved - dense_solved).norm(), 1e-9 * dense_solved.norm());
    }
}

TEST(Alpha, PositiveAndScaleInvariant)
{
    const CMatrix sigma = build_covariance(reference_scene());
    const CMatrix z = draw(sigma, DensityGenerator::student_t(3.0), 400, 21);
    const ShapeMatrix v = tyler_shape(z).shape;
    const AlphaEstimate a = estimate_alpha(z, v);
    EXPECT_GT(a.alpha, 0.0);
    const AlphaEstimate b = estimate_alpha(1e3 * z, v);
    EXPECT_NEAR(a.alpha, b.alpha, 1e-8 * a.alpha);
}

TEST(Alpha, StableAcrossReplications)
{
    const CMatrix sigma = build_covariance(reference_scene());
    const auto g = DensityGenerator::student_t(5.0);
    const CMatrix z1 = draw(sigma, g, 4000, 31);
    const CMatrix z2 = draw(sigma, g, 4000, 32);
    const double a1 = estimate_alpha(z1, tyler_shape(z1).shape).alpha;
    const double a2 = estimate_alpha(z2, tyler_shape(z2).shape).alpha;
    EXPECT_LT(std::abs(a1 - a2), 0.2 * std::max(a1, a2));
}

TEST(Alpha, NearOneForGaussianData)
{
    const CMatrix sigma = build_covariance(reference_scene());
    const CMatrix z = draw(sigma, DensityGenerator::gaussian(), 4000, 41);
    EXPECT_NEAR(estimate_alpha(z, tyler_shape(z).shape).alpha, 1.0, 0.15);
}

TEST(REstimator, InfiniteAlphaReturnsPreliminary)
{
    const CMatrix sigma = build_covariance(reference_scene());
    const CMatrix z = draw(sigma, DensityGenerator::student_t(3.0), 100, 51);
    const ShapeMatrix ty = tyler_shape(z).shape;
    REstimatorOptions opt;
    opt.alpha_override = std::numeric_limits<double>::infinity();
    EXPECT_TRUE(r_estimator_shape(z, ty, opt).shape.matrix() == ty.matrix());
}

TEST(REstimator, ReturnsNormalizedHermitianShape)
{
    const CMatrix sigma = build_covariance(reference_scene());
    const CMatrix z = draw(sigma, DensityGenerator::generalized_gaussian(0.5), 40, 61);
    const REstimate r = r_estimator_shape(z, tyler_shape(z).shape);
    EXPECT_TRUE(is_hermitian(r.shape.matrix()));
    EXPECT_EQ(r.shape.matrix().diagonal().imag().cwiseAbs().maxCoeff(), 0.0);
    EXPECT_EQ(r.shape.matrix()(0, 0), cdouble(1.0, 0.0));
    EXPECT_GT(hermitian_eig(r.shape.matrix()).values.minCoeff(), 0.0);
    EXPECT_GT(r.alpha, 0.0);
}

TEST(REstimator, InvariantToSnapshotScaling)
{
    const CMatrix sigma = build_covariance(reference_scene());
    const CMatrix z = draw(sigma, DensityGenerator::student_t(5.0), 80, 71);
    const REstimate a = r_estimator_shape(z, tyler_shape(z).shape);
    const CMatrix zs = 42.0 * z;
    const REstimate b = r_estimator_shape(zs, tyler_shape(zs).shape);
    EXPECT_LT((a.shape.matrix() - b.shape.matrix()).norm(), 1e-8 * a.shape.matrix().norm());
}

TEST(REstimator, CompetitiveWithTylerUnderTails)
{
    std::mt19937_64 rng(9);
    const CMatrix sigma = random_pd(4, rng);
    const ShapeMatrix truth = ShapeMatrix::from_scatter(sigma);
    double err_r = 0.0;
    double err_ty = 0.0;
    for (int t = 0; t < 500; ++t) {
        const CMatrix z = draw(sigma, DensityGenerator::student_t(3.0), 200, 1000 + t);
        const ShapeMatrix ty = tyler_shape(z).shape;
        err_ty += shape_error(ty, truth);
        err_r += shape_error(r_estimator_shape(z, ty).shape, truth);
    }
    EXPECT_LE(err_r, 1.05 * err_ty) << "R " << err_r / 500 << " Tyler " << err_ty / 500;
}
