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

// Complex elliptically symmetric (CES) distributions.
//
// A zero-mean CES vector is z = sqrt(Q) * Sigma^{1/2} * u with u uniform on
// the complex unit sphere and Q the second-order modular variate with density
//     p_Q(q) = pi^N / Gamma(N) * q^{N-1} * h(q).
// Every generator here is scaled so that E{Q} = N, which makes Sigma the
// covariance matrix of z.

#pragma once

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>
#include <string>

#include "rsdoa/error.hpp"
#include "rsdoa/hermitian.hpp"

namespace rsdoa {

// ---------------------------------------------------------------------------
// Pseudorandom streams

using Rng = std::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t x)
{
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Independent stream keyed by (master, a, b). The result depends only on the
/// key, so Monte Carlo work items can run in any order on any thread.
inline Rng make_stream(std::uint64_t master, std::uint64_t a = 0, std::uint64_t b = 0)
{
    const std::uint64_t k1 = splitmix64(master);
    const std::uint64_t k2 = splitmix64(k1 ^ splitmix64(a + 0x632be59bd9b4e019ULL));
    const std::uint64_t k3 = splitmix64(k2 ^ splitmix64(b + 0x8cb92ba72f3d8dd7ULL));
    std::seed_seq seq{static_cast<std::uint32_t>(k3), static_cast<std::uint32_t>(k3 >> 32),
                      static_cast<std::uint32_t>(k2), static_cast<std::uint32_t>(k2 >> 32)};
    return Rng(seq);
}

// ---------------------------------------------------------------------------
// Density generators

enum class Family { gaussian, student_t, generalized_gaussian };

inline std::string to_string(Family f)
{
    switch (f) {
    case Family::gaussian: return "gaussian";
    case Family::student_t: return "t";
    case Family::generalized_gaussian: return "gg";
    }
    return "unknown";
}

/// Density generator h of a CES family together with its score psi = d ln h / dt,
/// the modular-variate sampler and the score moment E{Q^2 psi(Q)^2}.
///
/// h is exposed with the family constants in front:
///   Gaussian            h(t) = exp(-t)
///   Student-t (lambda)  h(t) = Gamma(lambda+N)/(pi^N Gamma(lambda)) (lambda/eta)^lambda (lambda/eta + t)^{-(lambda+N)},
///                       eta = lambda/(lambda-1)
///   Gen. Gaussian (s)   h(t) = s Gamma(N) b^{-N/s} / (pi^N Gamma(N/s)) exp(-t^s / b),
///                       b = [N Gamma(N/s) / Gamma((N+1)/s)]^s
class DensityGenerator {
public:
    static DensityGenerator gaussian() { return DensityGenerator(Family::gaussian, 0.0); }

    static DensityGenerator student_t(double lambda)
    {
        if (!(lambda > 1.0) || !std::isfinite(lambda)) {
            throw ConfigError("student_t: degrees of freedom lambda must be finite and > 1");
        }
        return DensityGenerator(Family::student_t, lambda);
    }

    static DensityGenerator generalized_gaussian(double s)
    {
        if (!(s > 0.0) || !std::isfinite(s)) {
            throw ConfigError("generalized_gaussian: shape s must be finite and > 0");
        }
        return DensityGenerator(Family::generalized_gaussian, s);
    }

    /// Builds a generator from a family name ("gaussian", "t", "gg") and its parameter.
    static DensityGenerator from_name(const std::string& name, double parameter)
    {
        if (name == "gaussian" || name == "gauss") {
            return gaussian();
        }
        if (name == "t" || name == "student_t" || name == "student-t") {
            return student_t(parameter);
        }
        if (name == "gg" || name == "generalized_gaussian") {
            return generalized_gaussian(parameter);
        }
        throw ConfigError("unknown family '" + name + "' (expected gaussian, t or gg)");
    }

    Family family() const { return family_; }

    /// lambda for Student-t, s for GG, 0 for Gaussian.
    double parameter() const { return parameter_; }

    double eta() const { return parameter_ / (parameter_ - 1.0); }

    double log_b(int n) const
    {
        const double s = parameter_;
        return s * (std::log(static_cast<double>(n)) + std::lgamma(n / s) - std::lgamma((n + 1) / s));
    }

    double b(int n) const { return std::exp(log_b(n)); }

    double log_h(int n, double t) const
    {
        check_t(t);
        const double pi = std::numbers::pi;
        switch (family_) {
        case Family::gaussian:
            return -t;
        case Family::student_t: {
            const double lambda = parameter_;
            const double c = lambda - 1.0; // lambda / eta
            return std::lgamma(lambda + n) - n * std::log(pi) - std::lgamma(lambda) + lambda * std::log(c)
                   - (lambda + n) * std::log(c + t);
        }
        case Family::generalized_gaussian: {
            const double s = parameter_;
            const double lb = log_b(n);
            const double tp = t == 0.0 ? 0.0 : std::exp(s * std::log(t) - lb);
            return std::log(s) + std::lgamma(static_cast<double>(n)) - (n / s) * lb - n * std::log(pi)
                   - std::lgamma(n / s) - tp;
        }
        }
        return 0.0;
    }

    double h(int n, double t) const { return std::exp(log_h(n, t)); }

    double psi(int n, double t) const
    {
        check_t(t);
        switch (family_) {
        case Family::gaussian:
            return -1.0;
        case Family::student_t: {
            const double lambda = parameter_;
            return -(lambda + n) / (lambda - 1.0 + t);
        }
        case Family::generalized_gaussian: {
            const double s = parameter_;
            if (t == 0.0) {
                if (s < 1.0) {
                    throw DomainError("psi: generalized Gaussian score is singular at t = 0 for s < 1");
                }
                return s == 1.0 ? -1.0 / b(n) : 0.0;
            }
            return -s * std::exp((s - 1.0) * std::log(t) - log_b(n));
        }
        }
        return 0.0;
    }

    /// E{Q^2 psi(Q)^2} under the constrained generator (closed form).
    double score_moment(int n) const
    {
        const double nd = n;
        switch (family_) {
        case Family::gaussian:
            return nd * (nd + 1.0);
        case Family::student_t: {
            const double lambda = parameter_;
            return nd * (nd + 1.0) * (lambda + nd) / (lambda + nd + 1.0);
        }
        case Family::generalized_gaussian:
            return nd * (nd + parameter_);
        }
        return 0.0;
    }

    /// Draws Q with density p_Q. Gaussian: Gamma(N,1). Student-t: (lambda/eta) G1/G2 with
    /// G1 ~ Gamma(N,1), G2 ~ Gamma(lambda,1). GG: (b W)^{1/s} with W ~ Gamma(N/s,1).
    template <typename Urbg>
    double sample_q(int n, Urbg& rng) const
    {
        switch (family_) {
        case Family::gaussian:
            return std::gamma_distribution<double>(n, 1.0)(rng);
        case Family::student_t: {
            const double lambda = parameter_;
            const double g1 = std::gamma_distribution<double>(n, 1.0)(rng);
            const double g2 = std::gamma_distribution<double>(lambda, 1.0)(rng);
            return (lambda - 1.0) * g1 / g2;
        }
        case Family::generalized_gaussian: {
            const double s = parameter_;
            const double w = std::gamma_distribution<double>(n / s, 1.0)(rng);
            return std::exp((log_b(n) + std::log(w)) / s);
        }
        }
        return 0.0;
    }

    std::string describe() const
    {
        std::ostringstream os;
        os << to_string(family_);
        if (family_ == Family::student_t) {
            os << "(lambda=" << parameter_ << ")";
        } else if (family_ == Family::generalized_gaussian) {
            os << "(s=" << parameter_ << ")";
        }
        return os.str();
    }

    bool operator==(const DensityGenerator&) const = default;

private:
    DensityGenerator(Family f, double p) : family_(f), parameter_(p) {}

    static void check_t(double t)
    {
        if (!(t >= 0.0)) {
            throw DomainError("density generator evaluated at negative or NaN t");
        }
    }

    Family family_;
    double parameter_;
};

/// Quadrature route to E{Q^2 psi(Q)^2}: integrates q^2 psi(q)^2 against the
/// unnormalized q^{N-1} h(q) on (0, inf) after the substitution q = e^x, then
/// divides by the integral of the density itself. Only h and psi are used, never
/// the closed-form moments. The family constants in log h (hundreds for small s)
/// leave ~1e-14 relative noise after the shift, so tighter tolerances only
/// drive the bisection to its depth limit.
inline double score_moment_quadrature(const DensityGenerator& g, int n, double tol = 1e-11)
{
    using boost::math::quadrature::gauss_kronrod;
    // Locate the mode of log(q^N h(q)) on a coarse log grid to keep exp() in range.
    double shift = -std::numeric_limits<double>::infinity();
    for (double x = -60.0; x <= 120.0; x += 0.25) {
        shift = std::max(shift, n * x + g.log_h(n, std::exp(x)));
    }
    auto weight = [&](double x) {
        const double q = std::exp(x);
        const double lw = n * x + g.log_h(n, q) - shift;
        return lw < -745.0 ? 0.0 : std::exp(lw);
    };
    double err_num = 0.0;
    double err_den = 0.0;
    const double inf = std::numeric_limits<double>::infinity();
    const double num = gauss_kronrod<double, 61>::integrate(
        [&](double x) {
            const double w = weight(x);
            if (w == 0.0) {
                return 0.0;
            }
            const double q = std::exp(x);
            const double qp = q * g.psi(n, q);
            return qp * qp * w;
        },
        -inf, inf, 15, tol, &err_num);
    const double den = gauss_kronrod<double, 61>::integrate(weight, -inf, inf, 15, tol, &err_den);
    if (!std::isfinite(num) || !std::isfinite(den) || den <= 0.0 || err_num > 1e-9 * std::abs(num)
        || err_den > 1e-9 * den) {
        throw NumericalError("score_moment_quadrature: integration did not converge");
    }
    return num / den;
}

// ---------------------------------------------------------------------------
// Samplers

template <typename Urbg>
CVector sample_unit_sphere(int n, Urbg& rng)
{
    if (n < 1) {
        throw ConfigError("sample_unit_sphere: N must be >= 1");
    }
    std::normal_distribution<double> normal(0.0, 1.0);
    CVector u(n);
    for (int i = 0; i < n; ++i) {
        const double re = normal(rng);
        const double im = normal(rng);
        u(i) = cdouble(re, im);
    }
    const double norm = u.norm();
    if (norm == 0.0) {
        return sample_unit_sphere(n, rng);
    }
    return u / norm;
}

template <typename Urbg>
double sample_modular_variate(const DensityGenerator& g, int n, Urbg& rng)
{
    return g.sample_q(n, rng);
}

/// L snapshots z_l as the columns of an N x L matrix, plus provenance.
struct SnapshotSet {
    CMatrix data;
    std::uint64_t seed = 0;
    DensityGenerator generator = DensityGenerator::gaussian();

    int dim() const { return static_cast<int>(data.rows()); }
    int count() const { return static_cast<int>(data.cols()); }
};

/// Fills `out` (N x L) with z_l = sqrt(Q_l) Sigma^{1/2} u_l drawn from `rng`.
template <typename Urbg>
void synthesize_into(const CMatrix& sigma_sqrt, const DensityGenerator& g, Urbg& rng, CMatrix& out)
{
    const int n = static_cast<int>(sigma_sqrt.rows());
    for (Eigen::Index l = 0; l < out.cols(); ++l) {
        const double q = g.sample_q(n, rng);
        const CVector u = sample_unit_sphere(n, rng);
        out.col(l) = std::sqrt(q) * (sigma_sqrt * u);
    }
}

inline SnapshotSet synthesize_snapshots(const CMatrix& sigma, const DensityGenerator& g, int l, std::uint64_t seed)
{
    if (l < 1) {
        throw ConfigError("synthesize_snapshots: L must be >= 1");
    }
    const auto roots = hermitian_sqrt_inv(sigma);
    Rng rng = make_stream(seed);
    SnapshotSet set;
    set.data.resize(sigma.rows(), l);
    set.seed = seed;
    set.generator = g;
    synthesize_into(roots.sqrt, g, rng, set.data);
    return set;
}

} // namespace rsdoa
