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

#include <stdexcept>
#include <string>

namespace rsdoa {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Argument outside the mathematical domain of a function (t < 0, u outside (0,1), ...).
class DomainError : public Error {
public:
    using Error::Error;
};

/// Invalid configuration or violated precondition on user-supplied data.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// File could not be read or written.
class IoError : public Error {
public:
    using Error::Error;
};

/// Numerical failure: singular solve, eigensolver breakdown, quadrature divergence.
class NumericalError : public Error {
public:
    using Error::Error;
};

class NotPositiveDefinite : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class NonConvergence : public NumericalError {
public:
    using NumericalError::NumericalError;
};

/// Input data that makes an estimator undefined (zero snapshot, L < N, ...).
class DegenerateInput : public NumericalError {
public:
    using NumericalError::NumericalError;
};

} // namespace rsdoa
