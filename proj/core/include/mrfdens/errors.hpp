#pragma once

#include <stdexcept>
#include <string>

namespace mrfdens {

// A configured budget (cell count, clique ceiling, quadrature points,
// enumeration size) would be exceeded. Maps to CLI exit code 2.
struct ResourceError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A numeric invariant failed at runtime (non-positive oracle value,
// non-finite loss, degenerate normalization). Maps to CLI exit code 3.
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace mrfdens
