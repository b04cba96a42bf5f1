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

// Acceptance run: one PASS/FAIL line per criterion. The exit status is nonzero
// only for failures that are not listed as known deviations in the README.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "rsdoa/io.hpp"

using namespace rsdoa;

namespace {

struct Outcome {
    bool pass = true;
    std::string detail;
    bool known_deviation = false; ///< every failing check is a documented deviation
};

struct Check {
    bool ok = true;
    bool unexpected = false;
    std::ostringstream notes;

    void require(bool cond, const std::string& what, bool known = false)
    {
        if (!cond) {
            ok = false;
            unexpected = unexpected || !known;
            notes << (notes.tellp() > 0 ? "; " : "") << what << (known ? " [known deviation]" : "");
        }
    }

    Outcome outcome(const std::string& summary)
    {
        Outcome o;
        o.pass = ok;
        o.known_deviation = !ok && !unexpected;
        o.detail = summary + (ok ? "" : " | failed: " + notes.str());
        return o;
    }
};

std::string fmt(double x, int digits = 4)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*g", digits, x);
    return buf;
}

std::vector<DensityGenerator> criterion_settings()
{
    std::vector<DensityGenerator> g{DensityGenerator::gaussian()};
    for (double l : {1.5, 2.0, 3.0, 5.0, 10.0}) {
        g.push_back(DensityGenerator::student_t(l));
    }
    for (double s : {0.1, 0.5, 1.0, 2.0, 4.0}) {
        g.push_back(DensityGenerator::generalized_gaussian(s));
    }
    return g;
}

Outcome score_moments()
{
    Check c;
    double worst = 0.0;
    for (const auto& g : criterion_settings()) {
        for (int n : {2, 4, 8}) {
            const double closed = g.score_moment(n);
            const double rel = std::abs(score_moment_quadrature(g, n) / closed - 1.0);
            worst = std::max(worst, rel);
            c.require(rel <= 1e-8, g.describe() + " N=" + std::to_string(n) + " rel " + fmt(rel));
        }
    }
    return c.outcome("max relative gap " + fmt(worst, 3) + " (tol 1e-8)");
}

Outcome gaussian_collapse()
{
    Check c;
    const SourceScene s = reference_scene();
    const int l = 40;
    const BoundResult gauss = sscrb(s, DensityGenerator::gaussian(), l);
    const double expected = s.noise_power / (2.0 * l);
    const double r0 = std::abs(gauss.scalar_factor / expected - 1.0);
    const double r1 = std::abs(sscrb(s, DensityGenerator::generalized_gaussian(1.0), l).index / gauss.index - 1.0);
    const double r2 = std::abs(sscrb(s, DensityGenerator::student_t(1e4), l).index / gauss.index - 1.0);
    c.require(r0 <= 1e-12, "scalar factor");
    c.require(r1 <= 1e-10, "GG s=1");
    c.require(r2 <= 1e-3, "t lambda=1e4");
    return c.outcome("scalar factor rel " + fmt(r0, 2) + ", GG s=1 rel " + fmt(r1, 2) + ", t 1e4 rel " + fmt(r2, 2));
}

Outcome sampler_mean()
{
    Check c;
    double worst = 0.0;
    const int draws = 100000;
    std::uint64_t key = 0;
    for (const auto& g : criterion_settings()) {
        for (int n : {2, 4, 8}) {
            Rng rng = make_stream(2024, key++);
            double sum = 0.0;
            double sum_sq = 0.0;
            for (int i = 0; i < draws; ++i) {
                const double q = g.sample_q(n, rng);
                sum += q;
                sum_sq += q * q;
            }
            const double mean = sum / draws;
            const double se = std::sqrt((sum_sq - sum * mean) / (draws - 1.0) / draws);
            const double z = (mean - n) / se;
            worst = std::max(worst, std::abs(z));
            c.require(std::abs(z) <= 4.0, g.describe() + " N=" + std::to_string(n) + " z=" + fmt(z, 3));
        }
    }
    return c.outcome("max |mean - N| / SE = " + fmt(worst, 3) + " (tol 4)");
}

Outcome tyler_fixed_point()
{
    Check c;
    const SourceScene scene = reference_scene();
    const CMatrix sigma = build_covariance(scene);
    const std::vector<DensityGenerator> gens{DensityGenerator::gaussian(), DensityGenerator::student_t(2.0),
                                             DensityGenerator::generalized_gaussian(0.3)};
    double worst_res = 0.0;
    double worst_scale = 0.0;
    for (int t = 0; t < 50; ++t) {
        const CMatrix z = synthesize_snapshots(sigma, gens[static_cast<std::size_t>(t) % 3], 40, 500 + t).data;
        const TylerResult r = tyler_shape(z);
        const double res = tyler_fixed_point_residual(z, r.shape.matrix());
        Rng rng = make_stream(77, t);
        std::lognormal_distribution<double> scale(0.0, 2.0);
        CMatrix zs = z;
        for (Eigen::Index l = 0; l < zs.cols(); ++l) {
            zs.col(l) *= scale(rng);
        }
        const CMatrix vs = tyler_shape(zs).shape.matrix();
        const double inv = (vs - r.shape.matrix()).norm() / r.shape.matrix().norm();
        worst_res = std::max(worst_res, res);
        worst_scale = std::max(worst_scale, inv);
        c.require(res < 1e-9, "dataset " + std::to_string(t) + " residual " + fmt(res, 3));
        c.require(inv < 1e-10, "dataset " + std::to_string(t) + " scale gap " + fmt(inv, 3));
    }
    return c.outcome("max residual " + fmt(worst_res, 3) + ", max scale gap " + fmt(worst_scale, 3));
}

Outcome exact_music()
{
    Check c;
    const SourceScene scene = reference_scene();
    const CMatrix v = exact_shape(scene).matrix();
    const SteeringGrid grid(8, default_grid_size);
    const DoaEstimate est = estimate_doa(v, 2, grid, true);
    const double err = (est.nu - scene.nu).cwiseAbs().maxCoeff();
    c.require(err <= 1e-5, "refined error " + fmt(err, 3));
    const DoaEstimate raw = estimate_doa(v, 2, grid, false);
    double refined_gap = 0.0;
    for (double a : {1e-3, 1e3}) {
        const CMatrix av = a * v;
        c.require(estimate_doa(av, 2, grid, false).nu == raw.nu, "grid estimate changed under a=" + fmt(a));
        const double gap = (estimate_doa(av, 2, grid, true).nu - est.nu).cwiseAbs().maxCoeff();
        refined_gap = std::max(refined_gap, gap);
        c.require(gap <= 1e-12, "refined estimate moved by " + fmt(gap, 3) + " under a=" + fmt(a));
    }
    return c.outcome("max error " + fmt(err, 3) + "; homogeneity: grid bitwise, refined within " +
                     fmt(refined_gap, 2));
}

struct Sweep {
    ExperimentResult result;
    std::string csv;
};

Sweep run_sweep(Family family, std::vector<double> sweep, int workers)
{
    ExperimentConfig cfg;
    cfg.family = family;
    cfg.sweep = std::move(sweep);
    cfg.runs = 2000;
    cfg.master_seed = 1;
    Sweep s;
    s.result = run_experiment(cfg, workers);
    std::ostringstream os;
    write_result_csv(os, s.result, true);
    s.csv = os.str();
    return s;
}

double mse(const SweepPointResult& p, EstimatorKind k) { return find_estimator(p, k)->mse_index; }

std::string sweep_table(const ExperimentResult& r, const char* name)
{
    std::string t;
    for (const auto& p : r.points) {
        t += std::string(t.empty() ? "" : " ") + name + "=" + fmt(p.parameter) + ":" +
             fmt(mse(p, EstimatorKind::scm), 3) + "/" + fmt(mse(p, EstimatorKind::tyler), 3) + "/" +
             fmt(mse(p, EstimatorKind::r), 3) + "/" + fmt(p.bound.index, 3);
    }
    return t + " (scm/tyler/r/sscrb)";
}

Outcome fig1(const Sweep& s)
{
    Check c;
    const auto& pts = s.result.points;
    double ty_lo = INFINITY;
    double ty_hi = 0.0;
    for (const auto& p : pts) {
        const double r = mse(p, EstimatorKind::r);
        const double ty = mse(p, EstimatorKind::tyler);
        // At lambda = 2 the asymptotic R/Tyler variance ratio N / ((N+1) alpha^2) is 1.02 > 1.
        c.require(r <= ty, "(a) R > Tyler at lambda=" + fmt(p.parameter) + " (" + fmt(r / ty, 4) + "x)",
                  p.parameter == 2.0);
        ty_lo = std::min(ty_lo, ty);
        ty_hi = std::max(ty_hi, ty);
        for (const auto& e : p.estimators) {
            c.require(e.mse_index >= p.bound.index, "(d) " + to_string(e.kind) + " below SSCRB at lambda=" +
                                                        fmt(p.parameter));
        }
    }
    const double scm_ratio = mse(pts.front(), EstimatorKind::scm) / mse(pts.back(), EstimatorKind::scm);
    c.require(scm_ratio >= 2.0, "(b) SCM ratio " + fmt(scm_ratio, 3));
    const double mid = 0.5 * (ty_lo + ty_hi);
    const double spread = (ty_hi - ty_lo) / (2.0 * mid);
    c.require(spread < 0.15, "(c) Tyler spread +-" + fmt(100 * spread, 3) + "%");
    return c.outcome(sweep_table(s.result, "lambda") + "; SCM(2)/SCM(100)=" + fmt(scm_ratio, 3) + ", Tyler +-" +
                     fmt(100 * spread, 3) + "%");
}

Outcome fig2(const Sweep& s)
{
    Check c;
    for (const auto& p : s.result.points) {
        const double sc = mse(p, EstimatorKind::scm);
        const double ty = mse(p, EstimatorKind::tyler);
        const double r = mse(p, EstimatorKind::r);
        if (p.parameter <= 0.5) {
            c.require(r <= 1.05 * std::min(sc, ty), "(a) s=" + fmt(p.parameter) + " R/min " +
                                                        fmt(r / std::min(sc, ty), 4));
        }
        if (p.parameter == 1.0 || p.parameter == 2.0) {
            c.require(std::abs(r / sc - 1.0) <= 0.15, "(b) s=" + fmt(p.parameter) + " R/SCM " + fmt(r / sc, 4));
        }
        if (p.parameter >= 1.0) {
            c.require(sc < ty, "(c) s=" + fmt(p.parameter) + " SCM >= Tyler");
        }
    }
    return c.outcome(sweep_table(s.result, "s"));
}

Outcome shape_efficiency()
{
    Check c;
    const SourceScene scene = two_source_scene(4, 0.1, 0.2, 5.0, 0.5, 1.0);
    const CMatrix sigma = build_covariance(scene);
    const CMatrix truth = exact_shape(scene).matrix();
    double err_r = 0.0;
    double err_ty = 0.0;
    for (int t = 0; t < 500; ++t) {
        const CMatrix z = synthesize_snapshots(sigma, DensityGenerator::gaussian(), 200, 9000 + t).data;
        const ShapeMatrix ty = tyler_shape(z).shape;
        err_ty += (ty.matrix() - truth).squaredNorm();
        err_r += (r_estimator_shape(z, ty).shape.matrix() - truth).squaredNorm();
    }
    c.require(err_r <= err_ty, "R shape error exceeds Tyler");
    return c.outcome("mean ||V-V0||^2: R " + fmt(err_r / 500, 4) + ", Tyler " + fmt(err_ty / 500, 4) + " (ratio " +
                     fmt(err_r / err_ty, 4) + ")");
}

} // namespace

int main()
{
    int unexpected = 0;
    auto report = [&](int id, const char* name, double budget_s, const std::function<Outcome()>& body) {
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = body();
        } catch (const std::exception& e) {
            o.pass = false;
            o.detail = std::string("exception: ") + e.what();
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        std::printf("%s criterion %d: %s | %s | %.1f s (target %.0f s)%s\n", o.pass ? "PASS" : "FAIL", id, name,
                    o.detail.c_str(), secs, budget_s, o.known_deviation ? " | known deviation" : "");
        std::fflush(stdout);
        if (!o.pass && !o.known_deviation) {
            ++unexpected;
        }
    };

    report(1, "score-moment closed forms vs quadrature", 10, score_moments);
    report(2, "Gaussian collapse of the SSCRB", 1, gaussian_collapse);
    report(3, "sampler mean E{Q} = N", 30, sampler_mean);
    report(4, "Tyler fixed point and scale invariance", 10, tyler_fixed_point);
    report(5, "exact-covariance MUSIC", 5, exact_music);

    Sweep t_single;
    Sweep t_multi;
    report(6, "t-data sweep ordering (R = 2000)", 600, [&] {
        t_single = run_sweep(Family::student_t, {2, 3, 5, 10, 100}, 1);
        return fig1(t_single);
    });
    report(7, "GG-data sweep ordering (R = 2000)", 600,
           [] { return fig2(run_sweep(Family::generalized_gaussian, {0.1, 0.3, 0.5, 1, 2, 4}, 1)); });
    report(8, "R-estimator shape efficiency at the Gaussian", 120, shape_efficiency);
    report(9, "determinism across worker counts", 600, [&] {
        Check c;
        if (t_single.csv.empty()) {
            t_single = run_sweep(Family::student_t, {2, 3, 5, 10, 100}, 1);
        }
        t_multi = run_sweep(Family::student_t, {2, 3, 5, 10, 100}, 8);
        c.require(t_single.csv == t_multi.csv, "CSV differs between 1 and 8 workers");
        return c.outcome("t-sweep CSV (" + std::to_string(t_single.csv.size()) + " bytes) workers 1 vs 8 " +
                         (t_single.csv == t_multi.csv ? "identical" : "different"));
    });

    std::printf("%s: %d unexpected failure(s)\n", unexpected == 0 ? "OK" : "NOT OK", unexpected);
    return unexpected == 0 ? 0 : 1;
}
