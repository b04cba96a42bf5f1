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

// Command front end: sample, estimate, bound, simulate.
// Exit codes: 0 ok, 2 config/validation, 3 I/O, 4 numerical failure.

#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "rsdoa/error.hpp"
#include "rsdoa/experiment.hpp"
#include "rsdoa/io.hpp"
#include "rsdoa/music.hpp"
#include "rsdoa/shape_estimators.hpp"
#include "rsdoa/sscrb.hpp"

namespace rsdoa {

enum ExitCode : int { exit_ok = 0, exit_config = 2, exit_io = 3, exit_numerical = 4 };

struct CliOptions {
    std::string config;
    std::string out;
    std::string input;
    bool has_seed = false;
    std::uint64_t seed = 1;
    int workers = default_worker_count();
    bool plot = false;
    bool verbose = false;
};

inline RunConfig effective_config(const CliOptions& o)
{
    RunConfig rc;
    if (o.config.empty()) {
        std::istringstream empty;
        rc = parse_config(empty);
    } else {
        rc = load_config(o.config);
    }
    if (o.has_seed) {
        rc.experiment.master_seed = o.seed;
    }
    if (!o.out.empty()) {
        rc.output = o.out;
    }
    if (!o.input.empty()) {
        rc.input = o.input;
    }
    return rc;
}

inline std::string require_output(const RunConfig& rc, const char* what)
{
    if (rc.output.empty()) {
        throw ConfigError(std::string(what) + ": output path required (--out or [output] path)");
    }
    return rc.output;
}

inline int cmd_sample(const CliOptions& o, std::ostream& /*out*/, std::ostream& err)
{
    const RunConfig rc = effective_config(o);
    const ExperimentConfig& cfg = rc.experiment;
    const std::string path = require_output(rc, "sample");
    if (cfg.sweep.size() > 1 && o.verbose) {
        err << "sample: using the first sweep value " << format_double(cfg.sweep.front()) << '\n';
    }
    const DensityGenerator g = cfg.generator(cfg.sweep.front());
    const SnapshotSet set = synthesize_snapshots(build_covariance(cfg.scene), g, cfg.snapshots, cfg.master_seed);
    save_snapshots(path, set);
    if (o.verbose) {
        err << "sample: wrote " << set.count() << " snapshots (" << g.describe() << ", seed " << set.seed << ") to "
            << path << '\n';
    }
    return exit_ok;
}

namespace detail {

inline std::vector<EstimatorKind> estimator_selection(const std::string& spec)
{
    if (trim(spec) == "all" || trim(spec).empty()) {
        return {EstimatorKind::scm, EstimatorKind::tyler, EstimatorKind::r};
    }
    std::vector<EstimatorKind> out;
    for (const auto& name : split(spec, ',')) {
        out.push_back(estimator_from_name(name));
    }
    return out;
}

inline std::string doa_diagnostics(const DoaEstimate& d)
{
    return "peaks=" + std::to_string(d.peaks_found) + ";fallback=" + (d.fallback ? "1" : "0");
}

} // namespace detail

inline std::vector<EstimateRow> estimate_rows(const CMatrix& z, int k, const std::vector<EstimatorKind>& kinds,
                                              int grid_size, bool refine, const TylerOptions& topt)
{
    const SteeringGrid grid(static_cast<int>(z.rows()), grid_size);
    std::vector<EstimateRow> rows;
    std::optional<TylerResult> tyler;
    std::string tyler_error;
    auto get_tyler = [&]() -> const TylerResult& {
        if (!tyler && tyler_error.empty()) {
            try {
                tyler = tyler_shape(z, topt);
            } catch (const NumericalError& e) {
                tyler_error = e.what();
            }
        }
        if (!tyler) {
            throw NumericalError("Tyler: " + tyler_error);
        }
        return *tyler;
    };
    for (EstimatorKind kind : kinds) {
        EstimateRow row{to_string(kind), std::nullopt, {}};
        try {
            switch (kind) {
            case EstimatorKind::scm: {
                const auto d = estimate_doa(scm_shape(z), k, grid, refine);
                row.nu = d.nu;
                row.diagnostics = detail::doa_diagnostics(d);
                break;
            }
            case EstimatorKind::tyler: {
                const TylerResult& ty = get_tyler();
                const auto d = estimate_doa(ty.shape, k, grid, refine);
                row.nu = d.nu;
                row.diagnostics = "iterations=" + std::to_string(ty.iterations) +
                                  ";residual=" + format_double(ty.residual) + ";" + detail::doa_diagnostics(d);
                break;
            }
            case EstimatorKind::r: {
                const TylerResult& ty = get_tyler();
                const REstimate r = r_estimator_shape(z, ty.shape);
                const auto d = estimate_doa(r.shape, k, grid, refine);
                row.nu = d.nu;
                row.diagnostics = "iterations=" + std::to_string(ty.iterations) +
                                  ";residual=" + format_double(ty.residual) + ";alpha=" + format_double(r.alpha) +
                                  ";pd_repaired=" + (r.pd_repaired ? "1" : "0") + ";" + detail::doa_diagnostics(d);
                break;
            }
            }
        } catch (const NumericalError& e) {
            row.nu.reset();
            std::string msg = e.what();
            std::replace(msg.begin(), msg.end(), ',', ';');
            row.diagnostics = "failed: " + msg;
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

inline int cmd_estimate(const CliOptions& o, std::ostream& out, std::ostream& err)
{
    const RunConfig rc = effective_config(o);
    if (rc.input.empty()) {
        throw ConfigError("estimate: snapshot file required (--input or [estimate] input)");
    }
    const auto kinds = detail::estimator_selection(rc.estimator);
    const SnapshotSet set = load_snapshots(rc.input);
    const int n = set.dim();
    const int k = rc.experiment.scene.sources();
    if (k < 1 || k >= n) {
        throw ConfigError("estimate: need 1 <= K < N (K = " + std::to_string(k) + ", N = " + std::to_string(n) + ")");
    }
    if (set.count() < n) {
        throw ConfigError("estimate: need L >= N snapshots (L = " + std::to_string(set.count()) + ")");
    }
    const auto rows =
        estimate_rows(set.data, k, kinds, rc.experiment.grid, rc.experiment.refine, rc.experiment.tyler);
    if (rc.output.empty()) {
        write_estimate_csv(out, rows, k);
    } else {
        auto os = open_output(rc.output);
        write_estimate_csv(os, rows, k);
        check_written(os, rc.output);
    }
    if (o.verbose) {
        err << "estimate: " << rows.size() << " estimator(s) on N=" << n << ", L=" << set.count() << '\n';
    }
    return exit_ok;
}

inline std::vector<BoundRow> bound_rows(const ExperimentConfig& cfg)
{
    std::vector<BoundRow> rows;
    for (double p : cfg.sweep) {
        BoundRow row;
        row.parameter = p;
        try {
            row.bound = sscrb(cfg.scene, cfg.generator(p), cfg.snapshots);
        } catch (const NumericalError& e) {
            row.error = e.what();
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

inline int cmd_bound(const CliOptions& o, std::ostream& out, std::ostream& err)
{
    const RunConfig rc = effective_config(o);
    const auto rows = bound_rows(rc.experiment);
    if (rc.output.empty()) {
        write_bound_csv(out, rows);
    } else {
        auto os = open_output(rc.output);
        write_bound_csv(os, rows);
        check_written(os, rc.output);
    }
    if (o.verbose) {
        for (const auto& r : rows) {
            if (r.bound && r.bound->ill_conditioned) {
                err << "bound: C is ill-conditioned at " << format_double(r.parameter) << '\n';
            }
        }
    }
    return exit_ok;
}

inline std::string default_plot_path(const std::string& csv_path)
{
    return std::filesystem::path(csv_path).replace_extension(".svg").string();
}

inline int cmd_simulate(const CliOptions& o, std::ostream& /*out*/, std::ostream& err)
{
    const RunConfig rc = effective_config(o);
    rc.experiment.validate();
    if (o.workers < 1) {
        throw ConfigError("--workers must be >= 1");
    }
    const std::string path = require_output(rc, "simulate");
    const std::string plot = rc.plot.empty() ? default_plot_path(path) : rc.plot;
    if (o.plot && plot == path) {
        throw ConfigError("simulate: plot path collides with the CSV path");
    }

    const std::string meta = sidecar_path(path);
    {
        auto ms = open_output(meta);
        ms << result_meta_text(rc);
        check_written(ms, meta);
    }
    auto os = open_output(path);
    os << result_header(o.verbose) << '\n';
    check_written(os, path);

    // Rows are flushed per sweep point so an aborted sweep leaves valid partial output.
    const ExperimentResult result = run_experiment(rc.experiment, o.workers, [&](const SweepPointResult& p) {
        write_result_rows(os, p, o.verbose);
        check_written(os, path);
        if (o.verbose) {
            err << "simulate: " << to_string(rc.experiment.family) << " " << format_double(p.parameter);
            for (const auto& e : p.estimators) {
                err << "  " << to_string(e.kind) << "=" << format_double(e.mse_index);
            }
            err << "  SSCRB=" << format_double(p.bound.index) << '\n';
        }
    });

    if (o.plot) {
        auto ps = open_output(plot);
        ps << render_experiment_svg(result, rc.experiment.family);
        check_written(ps, plot);
    }
    return exit_ok;
}

/// Runs `body`, translating the exception hierarchy into exit codes.
template <typename F>
int guarded(F&& body, std::ostream& err)
{
    try {
        return body();
    } catch (const ConfigError& e) {
        err << "error: " << e.what() << '\n';
        return exit_config;
    } catch (const DomainError& e) {
        err << "error: " << e.what() << '\n';
        return exit_config;
    } catch (const IoError& e) {
        err << "i/o error: " << e.what() << '\n';
        return exit_io;
    } catch (const NumericalError& e) {
        err << "numerical failure: " << e.what() << '\n';
        return exit_numerical;
    } catch (const std::exception& e) {
        err << "numerical failure: " << e.what() << '\n';
        return exit_numerical;
    }
}

inline int run_cli(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr)
{
    CLI::App app{"Robust semiparametric DOA estimation: CES snapshots, SCM / Tyler / R-estimator MUSIC, "
                 "semiparametric CRB and Monte Carlo sweeps",
                 "rsdoa"};
    app.set_version_flag("--version", version_string);
    app.require_subcommand(1, 1);

    CliOptions o;
    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", o.config, "INI config; omitted keys take the reference values "
                                              "(N=8, nu=0.1,0.2, SNR=5 dB, rho=0.5, sigma0sq=1, L=40, runs=2000, G=4096)");
        sub->add_option("--out", o.out, "output path (overrides [output] path)");
        sub->add_option("--seed", o.seed, "master seed (overrides [experiment] seed)")->capture_default_str();
        sub->add_option("--workers", o.workers, "worker threads for simulate")->capture_default_str();
        sub->add_flag("--plot", o.plot, "simulate: also write an SVG plot")->capture_default_str();
        sub->add_flag("--verbose", o.verbose, "diagnostic columns and progress on stderr")->capture_default_str();
    };

    auto* sample = app.add_subcommand("sample", "synthesize CES snapshots to CSV + .meta sidecar");
    auto* estimate = app.add_subcommand("estimate", "estimate DOAs from a snapshot CSV");
    auto* bound = app.add_subcommand("bound", "semiparametric CRB over the configured sweep");
    auto* simulate = app.add_subcommand("simulate", "Monte Carlo MSE sweep (result CSV, optional SVG)");
    for (auto* sub : {sample, estimate, bound, simulate}) {
        add_common(sub);
    }
    estimate->add_option("--input", o.input, "snapshot CSV (overrides [estimate] input)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? exit_ok : exit_config;
    }
    for (auto* sub : {sample, estimate, bound, simulate}) {
        if (sub->get_option("--seed")->count() > 0) {
            o.has_seed = true;
        }
    }

    return guarded(
        [&]() {
            if (*sample) {
                return cmd_sample(o, out, err);
            }
            if (*estimate) {
                return cmd_estimate(o, out, err);
            }
            if (*bound) {
                return cmd_bound(o, out, err);
            }
            return cmd_simulate(o, out, err);
        },
        err);
}

} // namespace rsdoa
