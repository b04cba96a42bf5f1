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

#pragma once

#include <cmath>
#include <numbers>
#include <string>

#include "rsdoa/error.hpp"
#include "rsdoa/hermitian.hpp"

namespace rsdoa {

/// Maps a spatial frequency into [-0.5, 0.5).
inline double wrap_frequency(double nu)
{
    double w = nu - std::floor(nu + 0.5);
    if (w >= 0.5) {
        w -= 1.0;
    }
    return w;
}

enum class ArrayGeometry { ula };

/// Steering model of an N-element array. Only the uniform linear array ships:
/// a(nu) = (1, e^{j 2 pi nu}, ..., e^{j 2 pi (N-1) nu})^T.
class SteeringModel {
public:
    explicit SteeringModel(int n, ArrayGeometry geometry = ArrayGeometry::ula) : n_(n), geometry_(geometry)
    {
        if (n < 2) {
            throw ConfigError("SteeringModel: array size N must be >= 2");
        }
    }

    int size() const { return n_; }
    ArrayGeometry geometry() const { return geometry_; }

    CVector vector(double nu) const
    {
        CVector a(n_);
        // Reduce the phase per element so that a(nu + 1) == a(nu) bit for bit.
        const double w = wrap_frequency(nu);
        for (int k = 0; k < n_; ++k) {
            a(k) = unit_phasor(k, w);
        }
        return a;
    }

    /// d a(nu) / d nu, element k = j 2 pi k e^{j 2 pi k nu}.
    CVector derivative(double nu) const
    {
        CVector d(n_);
        const double w = wrap_frequency(nu);
        for (int k = 0; k < n_; ++k) {
            d(k) = cdouble(0.0, 2.0 * std::numbers::pi * k) * unit_phasor(k, w);
        }
        return d;
    }

    CMatrix matrix(const RVector& nus) const
    {
        CMatrix a(n_, nus.size());
        for (Eigen::Index k = 0; k < nus.size(); ++k) {
            a.col(k) = vector(nus(k));
        }
        return a;
    }

    CMatrix derivative_matrix(const RVector& nus) const
    {
        CMatrix d(n_, nus.size());
        for (Eigen::Index k = 0; k < nus.size(); ++k) {
            d.col(k) = derivative(nus(k));
        }
        return d;
    }

private:
    static cdouble unit_phasor(int k, double nu)
    {
        // k * nu reduced modulo 1 before scaling by 2 pi keeps the argument small.
        const double frac = k * nu - std::round(k * nu);
        const double phase = 2.0 * std::numbers::pi * frac;
        return {std::cos(phase), std::sin(phase)};
    }

    int n_;
    ArrayGeometry geometry_;
};

/// Spatial frequencies, source correlation matrix and noise power of a scenario.
struct SourceScene {
    int n = 8;
    RVector nu;
    CMatrix gamma;
    double noise_power = 1.0;

    int sources() const { return static_cast<int>(nu.size()); }

    /// Throws ConfigError when an invariant is violated.
    void validate() const
    {
        if (n < 2) {
            throw ConfigError("scene: N must be >= 2");
        }
        const auto k = nu.size();
        if (k >= n) {
            throw ConfigError("scene: number of sources K must be < N");
        }
        if (gamma.rows() != k || gamma.cols() != k) {
            throw ConfigError("scene: gamma must be K x K");
        }
        if (!(noise_power > 0.0) || !std::isfinite(noise_power)) {
            throw ConfigError("scene: noise power sigma0sq must be > 0");
        }
        for (Eigen::Index i = 0; i < k; ++i) {
            if (!std::isfinite(nu(i))) {
                throw ConfigError("scene: spatial frequencies must be finite");
            }
            for (Eigen::Index j = i + 1; j < k; ++j) {
                if (wrap_frequency(nu(i)) == wrap_frequency(nu(j))) {
                    throw ConfigError("scene: spatial frequencies must be pairwise distinct");
                }
            }
        }
        if (k > 0) {
            if (!is_hermitian(gamma, 1e-12)) {
                throw ConfigError("scene: gamma must be Hermitian");
            }
            const auto eig = hermitian_eig(hermitian_part(gamma));
            if (eig.values.minCoeff() < -1e-12 * std::max(1.0, eig.values.maxCoeff())) {
                throw ConfigError("scene: gamma must be positive semidefinite");
            }
        }
    }
};

/// Two-source scene with equal powers sigma0sq * 10^{snr/10} and real correlation rho.
inline SourceScene two_source_scene(int n, double nu1, double nu2, double snr_db, double rho, double sigma0sq)
{
    const double power = sigma0sq * std::pow(10.0, snr_db / 10.0);
    SourceScene scene;
    scene.n = n;
    scene.nu = RVector{{nu1, nu2}};
    scene.gamma = CMatrix{{power, rho * power}, {rho * power, power}};
    scene.noise_power = sigma0sq;
    return scene;
}

/// The reference scenario: ULA with N = 8, sources at 0.1 and 0.2, SNR 5 dB, rho 0.5, sigma0sq 1.
inline SourceScene reference_scene() { return two_source_scene(8, 0.1, 0.2, 5.0, 0.5, 1.0); }

/// Sigma(theta) = A Gamma A^H + sigma^2 I.
inline CMatrix build_covariance(const SourceScene& scene)
{
    scene.validate();
    CMatrix sigma = scene.noise_power * CMatrix::Identity(scene.n, scene.n);
    if (scene.sources() > 0) {
        const CMatrix a = SteeringModel(scene.n).matrix(scene.nu);
        sigma += a * scene.gamma * a.adjoint();
    }
    return hermitian_part(sigma);
}

/// Real parametrization of Gamma: K diagonal entries, then real parts of the
/// strictly upper-triangular entries (column-major), then their imaginary parts.
inline RVector gamma_to_zeta(const CMatrix& gamma)
{
    const Eigen::Index k = gamma.rows();
    if (gamma.cols() != k) {
        throw ConfigError("gamma_to_zeta: gamma must be square");
    }
    const Eigen::Index off = k * (k - 1) / 2;
    RVector zeta(k * k);
    for (Eigen::Index i = 0; i < k; ++i) {
        zeta(i) = gamma(i, i).real();
    }
    Eigen::Index idx = 0;
    for (Eigen::Index j = 0; j < k; ++j) {
        for (Eigen::Index i = 0; i < j; ++i, ++idx) {
            zeta(k + idx) = gamma(i, j).real();
            zeta(k + off + idx) = gamma(i, j).imag();
        }
    }
    return zeta;
}

inline CMatrix zeta_to_gamma(const RVector& zeta, Eigen::Index k)
{
    if (k < 0 || zeta.size() != k * k) {
        throw ConfigError("zeta_to_gamma: zeta must have length K^2");
    }
    const Eigen::Index off = k * (k - 1) / 2;
    CMatrix gamma(k, k);
    for (Eigen::Index i = 0; i < k; ++i) {
        gamma(i, i) = zeta(i);
    }
    Eigen::Index idx = 0;
    for (Eigen::Index j = 0; j < k; ++j) {
        for (Eigen::Index i = 0; i < j; ++i, ++idx) {
            gamma(i, j) = cdouble(zeta(k + idx), zeta(k + off + idx));
            gamma(j, i) = std::conj(gamma(i, j));
        }
    }
    return gamma;
}

} // namespace rsdoa
