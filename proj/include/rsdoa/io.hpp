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

// Text formats: snapshot CSV + key=value sidecar, INI experiment configs,
// result / bound / estimate CSVs and a small SVG line-chart renderer.

#pragma once

#include <algorithm>
#include <cctype>
#include <cerrno>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "rsdoa/array_model.hpp"
#include "rsdoa/ces.hpp"
#include "rsdoa/error.hpp"
#include "rsdoa/experiment.hpp"
#include "rsdoa/sscrb.hpp"

namespace rsdoa {

inline constexpr const char* version_string = "0.1.0";

// ---------------------------------------------------------------------------
// Scalars and lists

/// Shortest text that reads back to the same double.
inline std::string format_double(double x)
{
    if (std::isnan(x)) {
        return "nan";
    }
    if (std::isinf(x)) {
        return x > 0 ? "inf" : "-inf";
    }
    char buf[40];
    for (int prec = 15; prec <= 17; ++prec) {
        std::snprintf(buf, sizeof buf, "%.*g", prec, x);
        if (std::strtod(buf, nullptr) == x) {
            break;
        }
    }
    return buf;
}

inline std::string trim(const std::string& s)
{
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string::npos) {
        return {};
    }
    const auto last = s.find_last_not_of(" \t\r\n");
    return s.substr(first, last - first + 1);
}

inline std::vector<std::string> split(const std::string& s, char sep)
{
    std::vector<std::string> out;
    std::string cell;
    std::istringstream is(s);
    while (std::getline(is, cell, sep)) {
        out.push_back(trim(cell));
    }
    if (!s.empty() && s.back() == sep) {
        out.emplace_back();
    }
    return out;
}

inline double parse_double(const std::string& text, const std::string& field)
{
    const std::string t = trim(text);
    if (t.empty()) {
        throw ConfigError(field + ": expected a number, got an empty value");
    }
    char* end = nullptr;
    errno = 0;
    const double v = std::strtod(t.c_str(), &end);
    if (end != t.c_str() + t.size() || errno == ERANGE) {
        throw ConfigError(field + ": '" + t + "' is not a valid number");
    }
    return v;
}

inline long long parse_integer(const std::string& text, const std::string& field)
{
    const std::string t = trim(text);
    char* end = nullptr;
    errno = 0;
    const long long v = std::strtoll(t.c_str(), &end, 10);
    if (t.empty() || end != t.c_str() + t.size() || errno == ERANGE) {
        throw ConfigError(field + ": '" + t + "' is not a valid integer");
    }
    return v;
}

inline std::uint64_t parse_u64(const std::string& text, const std::string& field)
{
    const std::string t = trim(text);
    char* end = nullptr;
    errno = 0;
    const unsigned long long v = std::strtoull(t.c_str(), &end, 10);
    if (t.empty() || t.front() == '-' || end != t.c_str() + t.size() || errno == ERANGE) {
        throw ConfigError(field + ": '" + t + "' is not a valid unsigned 64-bit integer");
    }
    return v;
}

inline bool parse_bool(const std::string& text, const std::string& field)
{
    std::string t = trim(text);
    std::transform(t.begin(), t.end(), t.begin(), [](unsigned char c) { return std::tolower(c); });
    if (t == "1" || t == "true" || t == "yes" || t == "on") {
        return true;
    }
    if (t == "0" || t == "false" || t == "no" || t == "off") {
        return false;
    }
    throw ConfigError(field + ": '" + text + "' is not a boolean");
}

inline std::vector<double> parse_double_list(const std::string& text, const std::string& field)
{
    std::vector<double> out;
    for (const auto& cell : split(text, ',')) {
        out.push_back(parse_double(cell, field));
    }
    return out;
}

inline std::string join_doubles(const std::vector<double>& v)
{
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) {
        s += (i ? ", " : "") + format_double(v[i]);
    }
    return s;
}

inline std::ofstream open_output(const std::string& path)
{
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) {
        throw IoError("cannot open '" + path + "' for writing");
    }
    return os;
}

inline std::ifstream open_input(const std::string& path)
{
    std::ifstream is(path, std::ios::binary);
    if (!is) {
        throw IoError("cannot open '" + path + "' for reading");
    }
    return is;
}

inline void check_written(std::ostream& os, const std::string& path)
{
    os.flush();
    if (!os) {
        throw IoError("write to '" + path + "' failed");
    }
}

// ---------------------------------------------------------------------------
// Snapshot CSV: header l,re_1,im_1,...,re_N,im_N; one row per snapshot, l = 1..L

inline void write_snapshots_csv(std::ostream& os, const CMatrix& z)
{
    os << "l";
    for (Eigen::Index i = 1; i <= z.rows(); ++i) {
        os << ",re_" << i << ",im_" << i;
    }
    os << '\n';
    for (Eigen::Index l = 0; l < z.cols(); ++l) {
        os << (l + 1);
        for (Eigen::Index i = 0; i < z.rows(); ++i) {
            os << ',' << format_double(z(i, l).real()) << ',' << format_double(z(i, l).imag());
        }
        os << '\n';
    }
}

/// Parses a snapshot CSV into an N x L matrix; whitespace around cells and
/// blank lines are tolerated, anything else malformed is a ConfigError.
inline CMatrix read_snapshots_csv(std::istream& is)
{
    std::string line;
    std::vector<std::string> header;
    while (std::getline(is, line)) {
        if (!trim(line).empty()) {
            header = split(trim(line), ',');
            break;
        }
    }
    if (header.empty()) {
        throw ConfigError("snapshot csv: missing header");
    }
    if (header.size() < 3 || header.size() % 2 == 0 || header[0] != "l") {
        throw ConfigError("snapshot csv: header must be l,re_1,im_1,...,re_N,im_N");
    }
    const auto n = static_cast<Eigen::Index>((header.size() - 1) / 2);
    for (Eigen::Index i = 0; i < n; ++i) {
        const std::string k = std::to_string(i + 1);
        if (header[static_cast<std::size_t>(2 * i + 1)] != "re_" + k ||
            header[static_cast<std::size_t>(2 * i + 2)] != "im_" + k) {
            throw ConfigError("snapshot csv: unexpected header column near re_" + k);
        }
    }
    std::vector<CVector> cols;
    int row = 1;
    while (std::getline(is, line)) {
        ++row;
        if (trim(line).empty()) {
            continue;
        }
        const auto cells = split(trim(line), ',');
        const std::string where = "snapshot csv line " + std::to_string(row);
        if (cells.size() != header.size()) {
            throw ConfigError(where + ": expected " + std::to_string(header.size()) + " columns, got " +
                              std::to_string(cells.size()));
        }
        const long long l = parse_integer(cells[0], where + " column l");
        if (l != static_cast<long long>(cols.size()) + 1) {
            throw ConfigError(where + ": snapshot index out of sequence");
        }
        CVector z(n);
        for (Eigen::Index i = 0; i < n; ++i) {
            const double re = parse_double(cells[static_cast<std::size_t>(2 * i + 1)], where);
            const double im = parse_double(cells[static_cast<std::size_t>(2 * i + 2)], where);
            if (!std::isfinite(re) || !std::isfinite(im)) {
                throw ConfigError(where + ": non-finite sample");
            }
            z(i) = {re, im};
        }
        cols.push_back(std::move(z));
    }
    if (cols.empty()) {
        throw ConfigError("snapshot csv: no data rows");
    }
    CMatrix out(n, static_cast<Eigen::Index>(cols.size()));
    for (std::size_t l = 0; l < cols.size(); ++l) {
        out.col(static_cast<Eigen::Index>(l)) = cols[l];
    }
    return out;
}

inline std::string snapshot_meta_text(const SnapshotSet& set)
{
    std::ostringstream os;
    os << "N=" << set.dim() << '\n' << "L=" << set.count() << '\n';
    os << "family=" << to_string(set.generator.family()) << '\n';
    if (set.generator.family() == Family::student_t) {
        os << "lambda=" << format_double(set.generator.parameter()) << '\n';
    } else if (set.generator.family() == Family::generalized_gaussian) {
        os << "s=" << format_double(set.generator.parameter()) << '\n';
    }
    os << "seed=" << set.seed << '\n';
    os << "version=" << version_string << '\n';
    return os.str();
}

inline std::map<std::string, std::string> parse_key_values(std::istream& is)
{
    std::map<std::string, std::string> kv;
    std::string line;
    while (std::getline(is, line)) {
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#' || t[0] == ';') {
            continue;
        }
        const auto eq = t.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("sidecar: expected key=value, got '" + t + "'");
        }
        kv[trim(t.substr(0, eq))] = trim(t.substr(eq + 1));
    }
    return kv;
}

inline std::string sidecar_path(const std::string& path) { return path + ".meta"; }

inline void save_snapshots(const std::string& path, const SnapshotSet& set)
{
    auto os = open_output(path);
    write_snapshots_csv(os, set.data);
    check_written(os, path);
    const std::string meta = sidecar_path(path);
    auto ms = open_output(meta);
    ms << snapshot_meta_text(set);
    check_written(ms, meta);
}

/// Reads the CSV and, when present, the sidecar (dimension cross-checked).
inline SnapshotSet load_snapshots(const std::string& path)
{
    auto is = open_input(path);
    SnapshotSet set;
    set.data = read_snapshots_csv(is);
    std::ifstream ms(sidecar_path(path));
    if (ms) {
        const auto kv = parse_key_values(ms);
        if (kv.count("N") && parse_integer(kv.at("N"), "sidecar N") != set.dim()) {
            throw ConfigError("sidecar: N does not match the CSV");
        }
        if (kv.count("L") && parse_integer(kv.at("L"), "sidecar L") != set.count()) {
            throw ConfigError("sidecar: L does not match the CSV");
        }
        if (kv.count("seed")) {
            set.seed = parse_u64(kv.at("seed"), "sidecar seed");
        }
        if (kv.count("family")) {
            const std::string fam = kv.at("family");
            const std::string key = fam == "t" ? "lambda" : "s";
            const double p = kv.count(key) ? parse_double(kv.at(key), "sidecar " + key) : 0.0;
            set.generator = DensityGenerator::from_name(fam, p);
        }
    }
    return set;
}

// ---------------------------------------------------------------------------
// Experiment configuration (INI)

struct RunConfig {
    ExperimentConfig experiment;
    std::string output;             ///< [output] path
    std::string plot;               ///< [output] plot
    std::string input;              ///< [estimate] input
    std::string estimator = "all";  ///< [estimate] estimator
};

inline std::vector<double> default_sweep(Family f)
{
    switch (f) {
    case Family::student_t: return {2, 3, 5, 10, 100};
    case Family::generalized_gaussian: return {0.1, 0.3, 0.5, 1, 2, 4};
    case Family::gaussian: return {0};
    }
    return {0};
}

inline Family family_from_name(const std::string& name)
{
    return DensityGenerator::from_name(name, 2.0).family();
}

namespace detail {

inline const std::map<std::string, std::set<std::string>>& config_schema()
{
    static const std::map<std::string, std::set<std::string>> schema{
        {"scene", {"N", "nu", "snr_db", "rho", "sigma0sq", "sigma1sq", "sigma2sq", "powers", "gamma_re", "gamma_im"}},
        {"model", {"family", "sweep", "parameter"}},
        {"experiment",
         {"L", "runs", "seed", "estimators", "grid", "refine", "outlier_threshold", "exclude_outliers"}},
        {"tyler", {"tol", "max_iter"}},
        {"estimate", {"input", "estimator"}},
        {"output", {"path", "plot"}},
        {"artifact", {"version"}},
    };
    return schema;
}

inline std::optional<std::string> get(const boost::property_tree::ptree& pt, const std::string& section,
                                      const std::string& key)
{
    const auto sec = pt.get_child_optional(section);
    if (!sec) {
        return std::nullopt;
    }
    const auto v = sec->get_optional<std::string>(key);
    if (!v) {
        return std::nullopt;
    }
    return *v;
}

inline SourceScene parse_scene(const boost::property_tree::ptree& pt)
{
    SourceScene scene = reference_scene();
    if (auto v = get(pt, "scene", "N")) {
        scene.n = static_cast<int>(parse_integer(*v, "scene.N"));
    }
    std::vector<double> nu{scene.nu(0), scene.nu(1)};
    if (auto v = get(pt, "scene", "nu")) {
        nu = parse_double_list(*v, "scene.nu");
    }
    const auto k = static_cast<Eigen::Index>(nu.size());
    scene.nu = Eigen::Map<const RVector>(nu.data(), k);
    if (auto v = get(pt, "scene", "sigma0sq")) {
        scene.noise_power = parse_double(*v, "scene.sigma0sq");
    }
    if (!(scene.noise_power > 0.0) || !std::isfinite(scene.noise_power)) {
        throw ConfigError("scene.sigma0sq: must be a positive number");
    }

    if (auto re = get(pt, "scene", "gamma_re")) {
        const auto g_re = parse_double_list(*re, "scene.gamma_re");
        std::vector<double> g_im(g_re.size(), 0.0);
        if (auto im = get(pt, "scene", "gamma_im")) {
            g_im = parse_double_list(*im, "scene.gamma_im");
        }
        if (static_cast<Eigen::Index>(g_re.size()) != k * k || g_im.size() != g_re.size()) {
            throw ConfigError("scene.gamma_re/gamma_im: need K*K row-major entries");
        }
        scene.gamma.resize(k, k);
        for (Eigen::Index i = 0; i < k; ++i) {
            for (Eigen::Index j = 0; j < k; ++j) {
                const auto idx = static_cast<std::size_t>(i * k + j);
                scene.gamma(i, j) = {g_re[idx], g_im[idx]};
            }
        }
        return scene;
    }

    // Powers from sigmaKsq / powers / snr_db, correlation rho between every pair.
    double snr_db = 5.0;
    if (auto v = get(pt, "scene", "snr_db")) {
        snr_db = parse_double(*v, "scene.snr_db");
    }
    std::vector<double> powers(static_cast<std::size_t>(k), scene.noise_power * std::pow(10.0, snr_db / 10.0));
    if (auto v = get(pt, "scene", "powers")) {
        powers = parse_double_list(*v, "scene.powers");
        if (static_cast<Eigen::Index>(powers.size()) != k) {
            throw ConfigError("scene.powers: need one entry per source");
        }
    }
    for (int i = 1; i <= 2 && i <= k; ++i) {
        const std::string key = "sigma" + std::to_string(i) + "sq";
        if (auto v = get(pt, "scene", key)) {
            powers[static_cast<std::size_t>(i - 1)] = parse_double(*v, "scene." + key);
        }
    }
    double rho = 0.5;
    if (auto v = get(pt, "scene", "rho")) {
        rho = parse_double(*v, "scene.rho");
    }
    if (!(std::abs(rho) <= 1.0)) {
        throw ConfigError("scene.rho: must lie in [-1, 1]");
    }
    scene.gamma.resize(k, k);
    for (Eigen::Index i = 0; i < k; ++i) {
        const double pi = powers[static_cast<std::size_t>(i)];
        if (!(pi > 0.0) || !std::isfinite(pi)) {
            throw ConfigError("scene: source powers must be positive");
        }
        for (Eigen::Index j = 0; j < k; ++j) {
            const double pj = powers[static_cast<std::size_t>(j)];
            scene.gamma(i, j) = i == j ? pi : rho * std::sqrt(pi * pj);
        }
    }
    return scene;
}

} // namespace detail

/// Parses an INI config. Unknown sections or keys are rejected so typos do
/// not silently fall back to defaults.
inline RunConfig parse_config(std::istream& is)
{
    boost::property_tree::ptree pt;
    try {
        boost::property_tree::ini_parser::read_ini(is, pt);
    } catch (const boost::property_tree::ini_parser_error& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    const auto& schema = detail::config_schema();
    for (const auto& [section, body] : pt) {
        if (body.empty() && !body.data().empty()) {
            throw ConfigError("config: key '" + section + "' outside a section");
        }
        const auto it = schema.find(section);
        if (it == schema.end()) {
            throw ConfigError("config: unknown section [" + section + "]");
        }
        for (const auto& kv : body) {
            if (!it->second.count(kv.first)) {
                throw ConfigError("config: unknown key " + section + "." + kv.first);
            }
        }
    }

    RunConfig rc;
    ExperimentConfig& cfg = rc.experiment;
    try {
        cfg.scene = detail::parse_scene(pt);
    } catch (const ConfigError&) {
        throw;
    } catch (const Error& e) {
        throw ConfigError(std::string("scene: ") + e.what());
    }

    if (auto v = detail::get(pt, "model", "family")) {
        try {
            cfg.family = family_from_name(trim(*v));
        } catch (const Error& e) {
            throw ConfigError(std::string("model.family: ") + e.what());
        }
    }
    cfg.sweep = default_sweep(cfg.family);
    if (auto v = detail::get(pt, "model", "sweep")) {
        cfg.sweep = parse_double_list(*v, "model.sweep");
    } else if (auto p = detail::get(pt, "model", "parameter")) {
        cfg.sweep = {parse_double(*p, "model.parameter")};
    }
    for (double p : cfg.sweep) {
        try {
            (void)cfg.generator(p);
        } catch (const Error& e) {
            throw ConfigError(std::string("model.sweep: ") + e.what());
        }
    }

    if (auto v = detail::get(pt, "experiment", "L")) {
        cfg.snapshots = static_cast<int>(parse_integer(*v, "experiment.L"));
    }
    if (cfg.snapshots < 1) {
        throw ConfigError("experiment.L: snapshot count must be >= 1 (got " + std::to_string(cfg.snapshots) + ")");
    }
    if (auto v = detail::get(pt, "experiment", "runs")) {
        cfg.runs = static_cast<int>(parse_integer(*v, "experiment.runs"));
    }
    if (cfg.runs < 1) {
        throw ConfigError("experiment.runs: must be >= 1");
    }
    if (auto v = detail::get(pt, "experiment", "seed")) {
        cfg.master_seed = parse_u64(*v, "experiment.seed");
    }
    if (auto v = detail::get(pt, "experiment", "estimators")) {
        cfg.estimators.clear();
        for (const auto& name : split(*v, ',')) {
            cfg.estimators.push_back(estimator_from_name(name));
        }
    }
    if (auto v = detail::get(pt, "experiment", "grid")) {
        cfg.grid = static_cast<int>(parse_integer(*v, "experiment.grid"));
    }
    if (cfg.grid < 64) {
        throw ConfigError("experiment.grid: must be >= 64");
    }
    if (auto v = detail::get(pt, "experiment", "refine")) {
        cfg.refine = parse_bool(*v, "experiment.refine");
    }
    if (auto v = detail::get(pt, "experiment", "outlier_threshold")) {
        cfg.outliers.threshold = parse_double(*v, "experiment.outlier_threshold");
    }
    if (auto v = detail::get(pt, "experiment", "exclude_outliers")) {
        cfg.outliers.exclude = parse_bool(*v, "experiment.exclude_outliers");
    }
    if (auto v = detail::get(pt, "tyler", "tol")) {
        cfg.tyler.tol = parse_double(*v, "tyler.tol");
    }
    if (auto v = detail::get(pt, "tyler", "max_iter")) {
        cfg.tyler.max_iter = static_cast<int>(parse_integer(*v, "tyler.max_iter"));
    }
    if (!(cfg.tyler.tol > 0.0) || cfg.tyler.max_iter < 1) {
        throw ConfigError("tyler: tol must be > 0 and max_iter >= 1");
    }
    if (auto v = detail::get(pt, "estimate", "input")) {
        rc.input = trim(*v);
    }
    if (auto v = detail::get(pt, "estimate", "estimator")) {
        rc.estimator = trim(*v);
    }
    if (auto v = detail::get(pt, "output", "path")) {
        rc.output = trim(*v);
    }
    if (auto v = detail::get(pt, "output", "plot")) {
        rc.plot = trim(*v);
    }
    try {
        cfg.scene.validate();
    } catch (const Error& e) {
        throw ConfigError(e.what());
    }
    return rc;
}

inline RunConfig load_config(const std::string& path)
{
    auto is = open_input(path);
    return parse_config(is);
}

/// Effective configuration as INI text; parse_config(config_text(c)) == c.
inline std::string config_text(const RunConfig& rc)
{
    const ExperimentConfig& cfg = rc.experiment;
    const auto k = cfg.scene.sources();
    std::vector<double> nu(cfg.scene.nu.data(), cfg.scene.nu.data() + k);
    std::vector<double> g_re;
    std::vector<double> g_im;
    for (Eigen::Index i = 0; i < k; ++i) {
        for (Eigen::Index j = 0; j < k; ++j) {
            g_re.push_back(cfg.scene.gamma(i, j).real());
            g_im.push_back(cfg.scene.gamma(i, j).imag());
        }
    }
    std::string est;
    for (std::size_t i = 0; i < cfg.estimators.size(); ++i) {
        est += (i ? ", " : "") + to_string(cfg.estimators[i]);
    }
    std::ostringstream os;
    os << "[scene]\n"
       << "N = " << cfg.scene.n << '\n'
       << "nu = " << join_doubles(nu) << '\n'
       << "sigma0sq = " << format_double(cfg.scene.noise_power) << '\n'
       << "gamma_re = " << join_doubles(g_re) << '\n'
       << "gamma_im = " << join_doubles(g_im) << '\n'
       << "\n[model]\n"
       << "family = " << to_string(cfg.family) << '\n'
       << "sweep = " << join_doubles(cfg.sweep) << '\n'
       << "\n[experiment]\n"
       << "L = " << cfg.snapshots << '\n'
       << "runs = " << cfg.runs << '\n'
       << "seed = " << cfg.master_seed << '\n'
       << "estimators = " << est << '\n'
       << "grid = " << cfg.grid << '\n'
       << "refine = " << (cfg.refine ? "true" : "false") << '\n'
       << "outlier_threshold = " << format_double(cfg.outliers.threshold) << '\n'
       << "exclude_outliers = " << (cfg.outliers.exclude ? "true" : "false") << '\n'
       << "\n[tyler]\n"
       << "tol = " << format_double(cfg.tyler.tol) << '\n'
       << "max_iter = " << cfg.tyler.max_iter << '\n';
    if (!rc.input.empty() || rc.estimator != "all") {
        os << "\n[estimate]\n";
        if (!rc.input.empty()) {
            os << "input = " << rc.input << '\n';
        }
        os << "estimator = " << rc.estimator << '\n';
    }
    if (!rc.output.empty() || !rc.plot.empty()) {
        os << "\n[output]\n";
        if (!rc.output.empty()) {
            os << "path = " << rc.output << '\n';
        }
        if (!rc.plot.empty()) {
            os << "plot = " << rc.plot << '\n';
        }
    }
    return os.str();
}

// ---------------------------------------------------------------------------
// Result CSV

inline std::string result_header(bool verbose)
{
    std::string h = "sweep_param,estimator,mse_index,runs,outliers,sscrb_index";
    if (verbose) {
        h += ",std_error,successes,failures,fallbacks,pd_repairs,mean_iterations,mean_residual,mean_alpha,cond_c";
    }
    return h;
}

/// Estimator rows followed by one SSCRB row for a sweep point.
inline void write_result_rows(std::ostream& os, const SweepPointResult& p, bool verbose)
{
    const std::string param = format_double(p.parameter);
    const std::string bound = format_double(p.bound.index);
    for (const auto& e : p.estimators) {
        os << param << ',' << to_string(e.kind) << ',' << format_double(e.mse_index) << ',' << e.runs << ','
           << e.outliers << ',' << bound;
        if (verbose) {
            os << ',' << format_double(e.std_error) << ',' << e.successes << ',' << e.failures << ','
               << e.fallbacks << ',' << e.pd_repairs << ',' << format_double(e.mean_iterations) << ','
               << format_double(e.mean_residual) << ',' << format_double(e.mean_alpha) << ','
               << format_double(p.bound.c_condition);
        }
        os << '\n';
    }
    os << param << ",SSCRB," << bound << ",0,0," << bound;
    if (verbose) {
        os << ",0,0,0,0,0,0,0,0," << format_double(p.bound.c_condition);
    }
    os << '\n';
}

inline void write_result_csv(std::ostream& os, const ExperimentResult& r, bool verbose)
{
    os << result_header(verbose) << '\n';
    for (const auto& p : r.points) {
        write_result_rows(os, p, verbose);
    }
}

inline std::string result_meta_text(const RunConfig& rc)
{
    return std::string("[artifact]\nversion = ") + version_string + "\n\n" + config_text(rc);
}

struct ResultRow {
    double sweep_param = 0.0;
    std::string estimator;
    double mse_index = 0.0;
    int runs = 0;
    int outliers = 0;
    double sscrb_index = 0.0;
};

/// Reads the six leading columns of a result CSV (extra columns ignored).
inline std::vector<ResultRow> read_result_csv(std::istream& is)
{
    std::string line;
    if (!std::getline(is, line) || split(trim(line), ',').size() < 6) {
        throw ConfigError("result csv: missing or short header");
    }
    std::vector<ResultRow> rows;
    while (std::getline(is, line)) {
        if (trim(line).empty()) {
            continue;
        }
        const auto c = split(trim(line), ',');
        if (c.size() < 6) {
            throw ConfigError("result csv: short row");
        }
        rows.push_back({parse_double(c[0], "sweep_param"), c[1], parse_double(c[2], "mse_index"),
                        static_cast<int>(parse_integer(c[3], "runs")),
                        static_cast<int>(parse_integer(c[4], "outliers")), parse_double(c[5], "sscrb_index")});
    }
    return rows;
}

// ---------------------------------------------------------------------------
// Bound CSV

struct BoundRow {
    double parameter = 0.0;
    std::optional<BoundResult> bound;
    std::string error;
};

inline void write_bound_csv(std::ostream& os, const std::vector<BoundRow>& rows)
{
    os << "sweep_param,scalar_factor,index,cond_c,status\n";
    for (const auto& r : rows) {
        os << format_double(r.parameter) << ',';
        if (r.bound) {
            os << format_double(r.bound->scalar_factor) << ',' << format_double(r.bound->index) << ','
               << format_double(r.bound->c_condition) << ',' << (r.bound->ill_conditioned ? "ill_conditioned" : "ok");
        } else {
            os << "nan,nan,nan,error: " << r.error;
        }
        os << '\n';
    }
}

// ---------------------------------------------------------------------------
// Estimate CSV

struct EstimateRow {
    std::string estimator;
    std::optional<RVector> nu;
    std::string diagnostics;
};

inline void write_estimate_csv(std::ostream& os, const std::vector<EstimateRow>& rows, int k)
{
    os << "estimator";
    for (int i = 1; i <= k; ++i) {
        os << ",nu_" << i;
    }
    os << ",diagnostics\n";
    for (const auto& r : rows) {
        os << r.estimator;
        for (int i = 0; i < k; ++i) {
            os << ',' << (r.nu ? format_double((*r.nu)(i)) : "nan");
        }
        os << ',' << r.diagnostics << '\n';
    }
}

// ---------------------------------------------------------------------------
// SVG line chart with logarithmic y axis

struct PlotSeries {
    std::string label;
    std::vector<double> x;
    std::vector<double> y;
    std::string color;
    bool dashed = false;
};

inline std::string xml_escape(const std::string& s)
{
    std::string out;
    for (char c : s) {
        switch (c) {
        case '&': out += "&amp;"; break;
        case '<': out += "&lt;"; break;
        case '>': out += "&gt;"; break;
        case '"': out += "&quot;"; break;
        default: out += c;
        }
    }
    return out;
}

inline std::vector<PlotSeries> plot_series(const ExperimentResult& r)
{
    static const std::map<EstimatorKind, std::string> colors{
        {EstimatorKind::scm, "#1f77b4"}, {EstimatorKind::tyler, "#d62728"}, {EstimatorKind::r, "#2ca02c"}};
    std::vector<PlotSeries> series;
    if (r.points.empty()) {
        return series;
    }
    for (std::size_t e = 0; e < r.points.front().estimators.size(); ++e) {
        const EstimatorKind kind = r.points.front().estimators[e].kind;
        PlotSeries s{to_string(kind) + "-MUSIC", {}, {}, colors.at(kind)};
        for (const auto& p : r.points) {
            s.x.push_back(p.parameter);
            s.y.push_back(p.estimators[e].mse_index);
        }
        series.push_back(std::move(s));
    }
    PlotSeries b{"SSCRB", {}, {}, "#000000", true};
    for (const auto& p : r.points) {
        b.x.push_back(p.parameter);
        b.y.push_back(p.bound.index);
    }
    series.push_back(std::move(b));
    return series;
}

/// One polyline per series; y on log10 scale, x on log10 scale when `log_x`.
inline std::string render_svg(const std::vector<PlotSeries>& series, const std::string& x_label,
                              const std::string& y_label, bool log_x)
{
    constexpr double width = 640;
    constexpr double height = 420;
    constexpr double left = 80;
    constexpr double right = 150;
    constexpr double top = 20;
    constexpr double bottom = 60;
    auto fx = [&](double x) { return log_x ? std::log10(x) : x; };
    auto usable = [&](double x, double y) {
        return std::isfinite(y) && y > 0.0 && std::isfinite(x) && (!log_x || x > 0.0);
    };

    double x0 = INFINITY, x1 = -INFINITY, y0 = INFINITY, y1 = -INFINITY;
    for (const auto& s : series) {
        for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i) {
            if (usable(s.x[i], s.y[i])) {
                x0 = std::min(x0, fx(s.x[i]));
                x1 = std::max(x1, fx(s.x[i]));
                y0 = std::min(y0, std::log10(s.y[i]));
                y1 = std::max(y1, std::log10(s.y[i]));
            }
        }
    }
    if (!(x0 <= x1)) {
        x0 = 0.0;
        x1 = 1.0;
    }
    if (x1 - x0 < 1e-12) {
        x0 -= 0.5;
        x1 += 0.5;
    }
    if (!(y0 <= y1)) {
        y0 = -1.0;
        y1 = 0.0;
    }
    y0 = std::floor(y0);
    y1 = std::max(std::ceil(y1), y0 + 1.0);

    const double pw = width - left - right;
    const double ph = height - top - bottom;
    auto px = [&](double x) { return left + (fx(x) - x0) / (x1 - x0) * pw; };
    auto py = [&](double y) { return top + (y1 - std::log10(y)) / (y1 - y0) * ph; };

    std::ostringstream os;
    os << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
       << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
       << "\" viewBox=\"0 0 " << width << ' ' << height << "\">\n"
       << "<rect x=\"0\" y=\"0\" width=\"" << width << "\" height=\"" << height << "\" fill=\"white\"/>\n"
       << "<g font-family=\"sans-serif\" font-size=\"12\">\n"
       << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << pw << "\" height=\"" << ph
       << "\" fill=\"none\" stroke=\"#444\"/>\n";
    for (int d = static_cast<int>(y0); d <= static_cast<int>(y1); ++d) {
        const double y = top + (y1 - d) / (y1 - y0) * ph;
        os << "<line x1=\"" << left << "\" y1=\"" << y << "\" x2=\"" << left + pw << "\" y2=\"" << y
           << "\" stroke=\"#ddd\"/>\n"
           << "<text x=\"" << left - 6 << "\" y=\"" << y + 4 << "\" text-anchor=\"end\">1e" << d << "</text>\n";
    }
    std::set<double> xticks;
    for (const auto& s : series) {
        for (double x : s.x) {
            if (std::isfinite(x) && (!log_x || x > 0.0)) {
                xticks.insert(x);
            }
        }
    }
    for (double x : xticks) {
        os << "<text x=\"" << px(x) << "\" y=\"" << top + ph + 16 << "\" text-anchor=\"middle\">"
           << format_double(x) << "</text>\n";
    }
    os << "<text x=\"" << left + pw / 2 << "\" y=\"" << height - 16 << "\" text-anchor=\"middle\">"
       << xml_escape(x_label) << "</text>\n"
       << "<text x=\"18\" y=\"" << top + ph / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 18 "
       << top + ph / 2 << ")\">" << xml_escape(y_label) << "</text>\n";

    for (std::size_t k = 0; k < series.size(); ++k) {
        const auto& s = series[k];
        os << "<polyline fill=\"none\" stroke=\"" << s.color << "\" stroke-width=\"2\""
           << (s.dashed ? " stroke-dasharray=\"6 4\"" : "") << " points=\"";
        bool first = true;
        for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i) {
            if (usable(s.x[i], s.y[i])) {
                os << (first ? "" : " ") << px(s.x[i]) << ',' << py(s.y[i]);
                first = false;
            }
        }
        os << "\"/>\n";
        const double ly = top + 14 + 18 * static_cast<double>(k);
        os << "<line x1=\"" << left + pw + 10 << "\" y1=\"" << ly << "\" x2=\"" << left + pw + 34 << "\" y2=\"" << ly
           << "\" stroke=\"" << s.color << "\" stroke-width=\"2\"" << (s.dashed ? " stroke-dasharray=\"6 4\"" : "")
           << "/>\n"
           << "<text x=\"" << left + pw + 40 << "\" y=\"" << ly + 4 << "\">" << xml_escape(s.label) << "</text>\n";
    }
    os << "</g>\n</svg>\n";
    return os.str();
}

inline std::string render_experiment_svg(const ExperimentResult& r, Family family)
{
    const std::string x_label = family == Family::student_t              ? "lambda"
                                : family == Family::generalized_gaussian ? "s"
                                                                         : "parameter";
    bool log_x = !r.points.empty();
    double lo = INFINITY, hi = -INFINITY;
    for (const auto& p : r.points) {
        log_x = log_x && p.parameter > 0.0;
        lo = std::min(lo, p.parameter);
        hi = std::max(hi, p.parameter);
    }
    log_x = log_x && hi / lo >= 10.0;
    return render_svg(plot_series(r), x_label, "MSE index", log_x);
}

} // namespace rsdoa
