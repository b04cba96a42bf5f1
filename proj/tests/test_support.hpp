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

// Random fixtures shared by the unit suites.

#pragma once

#include <cstdint>
#include <random>

#include "rsdoa/hermitian.hpp"

namespace rsdoa::testing {

inline CMatrix random_complex(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng)
{
    std::normal_distribution<double> g;
    CMatrix m(rows, cols);
    for (Eigen::Index j = 0; j < cols; ++j) {
        for (Eigen::Index i = 0; i < rows; ++i) {
            m(i, j) = {g(rng), g(rng)};
        }
    }
    return m;
}

inline CMatrix random_hermitian(Eigen::Index n, std::mt19937_64& rng)
{
    const CMatrix a = random_complex(n, n, rng);
    return hermitian_part(a + a.adjoint());
}

/// Well-conditioned Hermitian positive-definite matrix.
inline CMatrix random_pd(Eigen::Index n, std::mt19937_64& rng)
{
    const CMatrix a = random_complex(n, n, rng);
    return hermitian_part(a * a.adjoint() + static_cast<double>(n) * CMatrix::Identity(n, n));
}

} // namespace rsdoa::testing
