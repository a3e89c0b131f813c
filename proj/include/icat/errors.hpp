// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>

namespace icat {

// Shape mismatch between tensor operands.
struct DimensionError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Invalid user-supplied arguments or configuration.
struct ValidationError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Malformed input file: bad magic, truncated payload, unexpected dimensions.
struct FormatError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// A numeric operation produced NaN or Inf, or training diverged.
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace icat
