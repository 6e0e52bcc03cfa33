// Copyright 2026 The qembed Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef QEMBED_ERROR_HPP_
#define QEMBED_ERROR_HPP_

#include <cstddef>
#include <stdexcept>
#include <string>

namespace qembed {

/// Base of every error thrown by the library.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Qubit count or container size out of the supported range.
struct SizeError : Error {
    using Error::Error;
};

/// Qubit, token, or parameter index out of range.
struct IndexError : Error {
    using Error::Error;
};

/// Incompatible array or matrix dimensions.
struct ShapeError : Error {
    using Error::Error;
};

/// NaN or Inf produced where a finite value is required.
struct NumericalError : Error {
    using Error::Error;
};

/// Operation invoked on an object in the wrong state (e.g. backward before forward).
struct StateError : Error {
    using Error::Error;
};

/// File could not be opened, read, or written.
struct IoError : Error {
    using Error::Error;
};

/// Malformed input file or config. Carries the 1-based line number when known.
struct ParseError : Error {
    ParseError(const std::string &what, std::size_t line_number = 0)
        : Error(line_number == 0 ? what : "line " + std::to_string(line_number) + ": " + what),
          line(line_number) {
    }
    std::size_t line;
};

}  // namespace qembed

#endif  // QEMBED_ERROR_HPP_
