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

// MUSIC pseudospectrum and DOA functional on a uniform circular grid of
// spatial frequencies in [-0.5, 0.5).

#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "rsdoa/array_model.hpp"
#include "rsdoa/hermitian.hpp"
#include "rsdoa/shape_estimators.hpp"

namespace rsdoa {

inline constexpr int default_grid_size = 4096;
inline constexpr double pseudospectrum_cap = 1e12;

/// Orthonormal basis of the eigenspace of the N - K smallest eigenvalues.
inline CMatrix noise_subspace(const CMatrix& v, int k)
{
    const auto n = static_cast<int>(v.rows());
    if (k < 1 || k >= n) {
        throw ConfigError("noise_subspace: need 1 <= K < N");
    }
    const auto eig = hermitian_eig(v);
    return eig.vectors.leftCols(n - k);
}

inline CMatrix noise_subspace(const ShapeMatrix& v, int k) { return noise_subspace(v.matrix(), k); }

/// Steering vectors on the uniform grid nu_g = -0.5 + g / G, stored as columns.
class SteeringGrid {
public:
    SteeringGrid(int n, int g) : n_(n), g_(g)
    {
        if (g < 2) {
            throw ConfigError("SteeringGrid: grid size must be >= 2");
        }
        const SteeringModel model(n);
        table_.resize(n, g);
        for (int i = 0; i < g; ++i) {
            table_.col(i) = model.vector(frequency(i));
        }
    }

    int array_size() const { return n_; }
    int size() const { return g_; }
    double frequency(int i) const { return -0.5 + static_cast<double>(i) / g_; }
    double spacing() const { return 1.0 / g_; }
    const CMatrix& table() const { return table_; }

private:
    int n_;
    int g_;
    CMatrix table_;
};

struct Pseudospectrum {
    std::vector<double> grid;
    std::vector<double> values;
};

/// ||E_n^H a(nu_g)||^2 on every grid point.
inline std::vector<double> pseudospectrum_denominators(const CMatrix& noise, const SteeringGrid& grid)
{
    const CMatrix proj = noise.adjoint() * grid.table();
    std::vector<double> d(static_cast<std::size_t>(grid.size()));
    for (int i = 0; i < grid.size(); ++i) {
        d[static_cast<std::size_t>(i)] = proj.col(i).squaredNorm();
    }
    return d;
}

/// 1/D clamped to pseudospectrum_cap.
inline double pseudospectrum_from_denominator(double denom)
{
    return denom * pseudospectrum_cap <= 1.0 ? pseudospectrum_cap : 1.0 / denom;
}

inline std::vector<double> pseudospectrum_values(const CMatrix& noise, const SteeringGrid& grid)
{
    std::vector<double> values = pseudospectrum_denominators(noise, grid);
    for (double& v : values) {
        v = pseudospectrum_from_denominator(v);
    }
    return values;
}

inline Pseudospectrum pseudospectrum(const CMatrix& v, int k, int g = default_grid_size)
{
    if (g < 64) {
        throw ConfigError("pseudospectrum: grid size must be >= 64");
    }
    const SteeringGrid grid(static_cast<int>(v.rows()), g);
    Pseudospectrum ps;
    ps.values = pseudospectrum_values(noise_subspace(v, k), grid);
    ps.grid.resize(static_cast<std::size_t>(g));
    for (int i = 0; i < g; ++i) {
        ps.grid[static_cast<std::size_t>(i)] = grid.frequency(i);
    }
    return ps;
}

struct DoaEstimate {
    RVector nu;          ///< ascending, in [-0.5, 0.5)
    RVector peak_values; ///< pseudospectrum value at each returned grid peak
    int peaks_found = 0; ///< local maxima detected on the grid
    bool fallback = false;
    bool refined = false;
};

/// Grid indices of strict-left / weak-right local maxima on the circular grid.
inline std::vector<int> circular_local_maxima(const std::vector<double>& p)
{
    const int g = static_cast<int>(p.size());
    std::vector<int> peaks;
    for (int i = 0; i < g; ++i) {
        const double left = p[static_cast<std::size_t>((i + g - 1) % g)];
        const double right = p[static_cast<std::size_t>((i + 1) % g)];
        const double mid = p[static_cast<std::size_t>(i)];
        if (mid > left && mid >= right) {
            peaks.push_back(i);
        }
    }
    return peaks;
}

/// Largest values first; equal heights resolved toward the lower frequency.
inline void sort_peaks(std::vector<int>& idx, const std::vector<double>& p)
{
    std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) {
        const double pa = p[static_cast<std::size_t>(a)];
        const double pb = p[static_cast<std::size_t>(b)];
        return pa != pb ? pa > pb : a < b;
    });
}

namespace detail {

inline int circular_distance(int a, int b, int g)
{
    const int d = std::abs(a - b) % g;
    return std::min(d, g - d);
}

/// Vertex offset, in grid cells, of the parabola through the denominator
/// ||E_n^H a||^2 at i-1, i, i+1. The denominator is a smooth trigonometric
/// polynomial, locally quadratic even at an exact null, where log P is not.
inline double parabolic_offset(const std::vector<double>& d, int i)
{
    const int g = static_cast<int>(d.size());
    const double ym = d[static_cast<std::size_t>((i + g - 1) % g)];
    const double y0 = d[static_cast<std::size_t>(i)];
    const double yp = d[static_cast<std::size_t>((i + 1) % g)];
    const double curvature = ym - 2.0 * y0 + yp;
    if (!(curvature > 0.0)) {
        return 0.0;
    }
    return std::clamp(0.5 * (ym - yp) / curvature, -1.0, 1.0);
}

} // namespace detail

/// MUSIC DOA functional: K highest circular local maxima of the pseudospectrum,
/// optionally refined by a 3-point parabola on the denominator 1/P_M.
inline DoaEstimate estimate_doa(const CMatrix& v, int k, const SteeringGrid& grid, bool refine = true)
{
    if (grid.array_size() != v.rows()) {
        throw ConfigError("estimate_doa: grid built for a different array size");
    }
    const auto n = static_cast<int>(v.rows());
    if (k < 1 || k >= n) {
        throw ConfigError("estimate_doa: need 1 <= K < N");
    }
    const auto eig = hermitian_eig(v);
    const CMatrix noise = eig.vectors.leftCols(n - k);
    const std::vector<double> d = pseudospectrum_denominators(noise, grid);
    std::vector<double> p(d.size());
    std::transform(d.begin(), d.end(), p.begin(), pseudospectrum_from_denominator);
    const int g = grid.size();

    // An isotropic shape has no signal subspace; any peaks would be rounding noise.
    const bool isotropic = eig.values.maxCoeff() - eig.values.minCoeff() <= 1e-12 * std::abs(eig.values.maxCoeff());
    std::vector<int> peaks = isotropic ? std::vector<int>{} : circular_local_maxima(p);
    DoaEstimate est;
    est.peaks_found = static_cast<int>(peaks.size());
    std::vector<int> chosen;
    if (static_cast<int>(peaks.size()) >= k) {
        sort_peaks(peaks, p);
        chosen.assign(peaks.begin(), peaks.begin() + k);
    } else {
        // Not enough maxima: take the largest grid values at least 2 cells apart.
        est.fallback = true;
        std::vector<int> all(static_cast<std::size_t>(g));
        for (int i = 0; i < g; ++i) {
            all[static_cast<std::size_t>(i)] = i;
        }
        sort_peaks(all, p);
        for (int idx : all) {
            const bool separated = std::all_of(chosen.begin(), chosen.end(),
                                               [&](int c) { return detail::circular_distance(idx, c, g) >= 2; });
            if (separated) {
                chosen.push_back(idx);
                if (static_cast<int>(chosen.size()) == k) {
                    break;
                }
            }
        }
    }

    std::vector<std::pair<double, double>> found;
    for (int idx : chosen) {
        double nu = grid.frequency(idx);
        if (refine && !est.fallback) {
            nu = wrap_frequency(nu + detail::parabolic_offset(d, idx) * grid.spacing());
        }
        found.emplace_back(nu, p[static_cast<std::size_t>(idx)]);
    }
    est.refined = refine && !est.fallback;
    std::sort(found.begin(), found.end());
    est.nu.resize(k);
    est.peak_values.resize(k);
    for (int i = 0; i < k; ++i) {
        est.nu(i) = found[static_cast<std::size_t>(i)].first;
        est.peak_values(i) = found[static_cast<std::size_t>(i)].second;
    }
    return est;
}

inline DoaEstimate estimate_doa(const CMatrix& v, int k, int g = default_grid_size, bool refine = true)
{
    if (g < 64) {
        throw ConfigError("estimate_doa: grid size must be >= 64");
    }
    return estimate_doa(v, k, SteeringGrid(static_cast<int>(v.rows()), g), refine);
}

inline DoaEstimate estimate_doa(const ShapeMatrix& v, int k, const SteeringGrid& grid, bool refine = true)
{
    return estimate_doa(v.matrix(), k, grid, refine);
}

} // namespace rsdoa
