#pragma once

#include <stdexcept>
#include <string>

namespace nvspin {

/// Requested problem size exceeds a configured hard cap.
struct CapacityError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Malformed input file or an invariant violation found while loading.
struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// A numerical contract (hermiticity, reality, normalization, ...) failed.
struct ContractError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace nvspin
