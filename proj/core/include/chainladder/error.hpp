#pragma once

#include <stdexcept>

namespace chainladder {

/// Malformed triangle or configuration input.
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A fit did not converge or its normal equations were singular.
class FitError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Too many bootstrap replicates failed to refit.
class BootstrapError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace chainladder
