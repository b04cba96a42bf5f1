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

// Monte Carlo engine: sweeps a non-Gaussianity parameter, runs paired trials
// (every estimator sees the same snapshots) and reduces MSE indices in fixed
// trial order, so results do not depend on the number of worker threads.

#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "rsdoa/array_model.hpp"
#include "rsdoa/ces.hpp"
#include "rsdoa/music.hpp"
#include "rsdoa/shape_estimators.hpp"
#include "rsdoa/sscrb.hpp"

namespace rsdoa {

enum class EstimatorKind { scm, tyler, r };

inline std::string to_string(EstimatorKind k)
{
    switch (k) {
    case EstimatorKind::scm: return "SCM";
    case EstimatorKind::tyler: return "Tyler";
    case EstimatorKind::r: return "R";
    }
    return "?";
}

inline EstimatorKind estimator_from_name(std::string name)
{
    std::transform(name.begin(), name.end(), name.begin(), [](unsigned char c) { return std::tolower(c); });
    if (name == "scm") {
        return EstimatorKind::scm;
    }
    if (name == "tyler" || name == "ty") {
        return EstimatorKind::tyler;
    }
    if (name == "r" || name == "r-estimator" || name == "rank") {
        return EstimatorKind::r;
    }
    throw ConfigError("unknown estimator '" + name + "' (expected scm, tyler or r)");
}

// ---------------------------------------------------------------------------
// Pairing and MSE

/// Circular distance min(|d|, 1 - |d|) between two spatial frequencies.
inline double circular_distance(double a, double b) { return std::abs(wrap_frequency(a - b)); }

/// Permutation of `estimate` minimizing the summed circular distance to `truth`
/// (exhaustive over K!; first minimum in lexicographic order wins).
inline RVector pair_frequencies(const RVector& estimate, const RVector& truth)
{
    if (estimate.size() != truth.size()) {
        throw ConfigError("pair_frequencies: length mismatch");
    }
    std::vector<int> perm(static_cast<std::size_t>(estimate.size()));
    std::iota(perm.begin(), perm.end(), 0);
    std::vector<int> best = perm;
    double best_cost = std::numeric_limits<double>::infinity();
    do {
        double cost = 0.0;
        for (std::size_t i = 0; i < perm.size(); ++i) {
            cost += circular_distance(estimate(perm[i]), truth(static_cast<Eigen::Index>(i)));
        }
        if (cost < best_cost) {
            best_cost = cost;
            best = perm;
        }
    } while (std::next_permutation(perm.begin(), perm.end()));
    RVector out(estimate.size());
    for (std::size_t i = 0; i < best.size(); ++i) {
        out(static_cast<Eigen::Index>(i)) = estimate(best[i]);
    }
    return out;
}

/// Wrapped error vector nu_hat - nu0 of an already paired estimate.
inline RVector frequency_error(const RVector& paired, const RVector& truth)
{
    RVector e(paired.size());
    for (Eigen::Index i = 0; i < paired.size(); ++i) {
        e(i) = wrap_frequency(paired(i) - truth(i));
    }
    return e;
}

/// Mean over trials of ||(nu_hat - nu0)(nu_hat - nu0)^T||_F.
inline double mse_index(const std::vector<RVector>& paired, const RVector& truth)
{
    if (paired.empty()) {
        throw ConfigError("mse_index: need at least one trial");
    }
    double sum = 0.0;
    for (const auto& est : paired) {
        const RVector e = frequency_error(est, truth);
        sum += (e * e.transpose()).norm();
    }
    return sum / static_cast<double>(paired.size());
}

// ---------------------------------------------------------------------------
// Configuration and results

struct OutlierPolicy {
    double threshold = 0.1; ///< paired error above this in any coordinate marks an outlier
    bool exclude = false;   ///< drop outliers from the MSE average
};

struct ExperimentConfig {
    SourceScene scene = reference_scene();
    Family family = Family::student_t;
    std::vector<double> sweep;
    int snapshots = 40;
    int runs = 2000;
    std::uint64_t master_seed = 1;
    std::vector<EstimatorKind> estimators{EstimatorKind::scm, EstimatorKind::tyler, EstimatorKind::r};
    int grid = default_grid_size;
    bool refine = true;
    OutlierPolicy outliers;
    TylerOptions tyler;

    DensityGenerator generator(double parameter) const
    {
        switch (family) {
        case Family::gaussian: return DensityGenerator::gaussian();
        case Family::student_t: return DensityGenerator::student_t(parameter);
        case Family::generalized_gaussian: return DensityGenerator::generalized_gaussian(parameter);
        }
        return DensityGenerator::gaussian();
    }

    void validate() const
    {
        scene.validate();
        if (scene.sources() < 1) {
            throw ConfigError("experiment: scene needs at least one source");
        }
        if (runs < 1) {
            throw ConfigError("experiment: runs must be >= 1");
        }
        if (sweep.empty()) {
            throw ConfigError("experiment: sweep must be non-empty");
        }
        if (snapshots < scene.n) {
            throw ConfigError("experiment: snapshots L must be >= N");
        }
        if (grid < 64) {
            throw ConfigError("experiment: grid size must be >= 64");
        }
        if (estimators.empty()) {
            throw ConfigError("experiment: no estimators selected");
        }
        for (double p : sweep) {
            (void)generator(p);
        }
    }
};

struct EstimatorSummary {
    EstimatorKind kind = EstimatorKind::scm;
    double mse_index = 0.0;
    double std_error = 0.0;
    int runs = 0;
    int successes = 0;
    int outliers = 0;
    int failures = 0;
    int fallbacks = 0;   ///< MUSIC fallback path taken
    int pd_repairs = 0;  ///< R-estimates projected back to the PD cone
    double mean_iterations = 0.0; ///< Tyler iterations (Tyler and R rows)
    double mean_residual = 0.0;   ///< Tyler fixed-point residual
    double mean_alpha = 0.0;      ///< R rows only
};

struct SweepPointResult {
    double parameter = 0.0;
    BoundResult bound;
    std::vector<EstimatorSummary> estimators;
};

struct ExperimentResult {
    std::vector<SweepPointResult> points;
};

namespace detail {

enum class TrialStatus : std::uint8_t { success, outlier, failure };

struct TrialOutcome {
    TrialStatus status = TrialStatus::failure;
    double error = 0.0; ///< ||e e^T||_F
    bool fallback = false;
    bool pd_repaired = false;
    int iterations = 0;
    double residual = 0.0;
    double alpha = 0.0;
};

struct TrialContext {
    const ExperimentConfig& config;
    const CMatrix& sigma_sqrt;
    const DensityGenerator& generator;
    const SteeringGrid& grid;
    std::size_t sweep_index;
};

inline TrialOutcome score_shape(const ShapeMatrix& v, const TrialContext& ctx)
{
    TrialOutcome out;
    const auto est = estimate_doa(v, ctx.config.scene.sources(), ctx.grid, ctx.config.refine);
    const RVector paired = pair_frequencies(est.nu, ctx.config.scene.nu);
    const RVector e = frequency_error(paired, ctx.config.scene.nu);
    out.error = (e * e.transpose()).norm();
    out.fallback = est.fallback;
    out.status = e.cwiseAbs().maxCoeff() > ctx.config.outliers.threshold ? TrialStatus::outlier : TrialStatus::success;
    return out;
}

/// Runs every selected estimator on one freshly drawn snapshot set.
inline std::vector<TrialOutcome> run_trial(const TrialContext& ctx, std::size_t trial)
{
    const auto& cfg = ctx.config;
    Rng rng = make_stream(cfg.master_seed, ctx.sweep_index, trial);
    CMatrix z(cfg.scene.n, cfg.snapshots);
    synthesize_into(ctx.sigma_sqrt, ctx.generator, rng, z);

    std::vector<TrialOutcome> outcomes(cfg.estimators.size());
    std::optional<TylerResult> tyler;
    bool tyler_failed = false;
    auto get_tyler = [&]() -> const TylerResult* {
        if (!tyler && !tyler_failed) {
            try {
                tyler = tyler_shape(z, cfg.tyler);
            } catch (const NumericalError&) {
                tyler_failed = true;
            }
        }
        return tyler ? &*tyler : nullptr;
    };

    for (std::size_t i = 0; i < cfg.estimators.size(); ++i) {
        TrialOutcome& out = outcomes[i];
        try {
            switch (cfg.estimators[i]) {
            case EstimatorKind::scm:
                out = score_shape(scm_shape(z), ctx);
                break;
            case EstimatorKind::tyler: {
                const TylerResult* ty = get_tyler();
                if (!ty) {
                    continue;
                }
                out = score_shape(ty->shape, ctx);
                out.iterations = ty->iterations;
                out.residual = ty->residual;
                break;
            }
            case EstimatorKind::r: {
                const TylerResult* ty = get_tyler();
                if (!ty) {
                    continue;
                }
                const REstimate r = r_estimator_shape(z, ty->shape);
                out = score_shape(r.shape, ctx);
                out.iterations = ty->iterations;
                out.residual = ty->residual;
                out.alpha = r.alpha;
                out.pd_repaired = r.pd_repaired;
                break;
            }
            }
        } catch (const Error&) {
            out = TrialOutcome{};
        }
    }
    return outcomes;
}

inline EstimatorSummary summarize(EstimatorKind kind, const std::vector<std::vector<TrialOutcome>>& trials,
                                  std::size_t column, const OutlierPolicy& policy)
{
    EstimatorSummary s;
    s.kind = kind;
    s.runs = static_cast<int>(trials.size());
    double sum = 0.0;
    double sum_sq = 0.0;
    int included = 0;
    int with_tyler = 0;
    int with_alpha = 0;
    for (const auto& row : trials) {
        const TrialOutcome& t = row[column];
        if (t.status == TrialStatus::failure) {
            ++s.failures;
            continue;
        }
        if (t.status == TrialStatus::outlier) {
            ++s.outliers;
        } else {
            ++s.successes;
        }
        s.fallbacks += t.fallback ? 1 : 0;
        s.pd_repairs += t.pd_repaired ? 1 : 0;
        if (kind != EstimatorKind::scm) {
            s.mean_iterations += t.iterations;
            s.mean_residual += t.residual;
            ++with_tyler;
        }
        if (kind == EstimatorKind::r) {
            s.mean_alpha += t.alpha;
            ++with_alpha;
        }
        if (t.status == TrialStatus::outlier && policy.exclude) {
            continue;
        }
        sum += t.error;
        sum_sq += t.error * t.error;
        ++included;
    }
    if (included > 0) {
        s.mse_index = sum / included;
        const double var = included > 1 ? (sum_sq - sum * sum / included) / (included - 1) : 0.0;
        s.std_error = std::sqrt(std::max(var, 0.0) / included);
    } else {
        s.mse_index = std::numeric_limits<double>::quiet_NaN();
    }
    if (with_tyler > 0) {
        s.mean_iterations /= with_tyler;
        s.mean_residual /= with_tyler;
    }
    if (with_alpha > 0) {
        s.mean_alpha /= with_alpha;
    }
    return s;
}

} // namespace detail

inline int default_worker_count()
{
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

/// Runs one sweep point with `workers` threads.
inline SweepPointResult run_sweep_point(const ExperimentConfig& config, std::size_t sweep_index, int workers,
                                        const SteeringGrid& grid)
{
    const double parameter = config.sweep.at(sweep_index);
    const DensityGenerator gen = config.generator(parameter);
    const CMatrix sigma_sqrt = hermitian_sqrt_inv(build_covariance(config.scene)).sqrt;
    const detail::TrialContext ctx{config, sigma_sqrt, gen, grid, sweep_index};

    const auto runs = static_cast<std::size_t>(config.runs);
    std::vector<std::vector<detail::TrialOutcome>> trials(runs);
    std::atomic<std::size_t> next{0};
    auto worker = [&]() {
        for (std::size_t t = next.fetch_add(1); t < runs; t = next.fetch_add(1)) {
            trials[t] = detail::run_trial(ctx, t);
        }
    };
    const int count = std::max(1, std::min<int>(workers, config.runs));
    if (count == 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        pool.reserve(static_cast<std::size_t>(count));
        for (int w = 0; w < count; ++w) {
            pool.emplace_back(worker);
        }
    }

    SweepPointResult point;
    point.parameter = parameter;
    point.bound = sscrb(config.scene, gen, config.snapshots);
    for (std::size_t i = 0; i < config.estimators.size(); ++i) {
        point.estimators.push_back(detail::summarize(config.estimators[i], trials, i, config.outliers));
    }
    return point;
}

/// Full sweep. `on_point` (optional) is called after each completed sweep point.
inline ExperimentResult run_experiment(const ExperimentConfig& config, int workers = default_worker_count(),
                                       const std::function<void(const SweepPointResult&)>& on_point = {})
{
    config.validate();
    const SteeringGrid grid(config.scene.n, config.grid);
    ExperimentResult result;
    for (std::size_t s = 0; s < config.sweep.size(); ++s) {
        result.points.push_back(run_sweep_point(config, s, workers, grid));
        if (on_point) {
            on_point(result.points.back());
        }
    }
    return result;
}

inline const EstimatorSummary* find_estimator(const SweepPointResult& p, EstimatorKind k)
{
    for (const auto& e : p.estimators) {
        if (e.kind == k) {
            return &e;
        }
    }
    return nullptr;
}

} // namespace rsdoa
