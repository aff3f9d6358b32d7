#pragma once

#include <stdexcept>
#include <string>

namespace metacde {

// Shape/size disagreement between operands. Message names both shapes.
struct DimensionError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Input outside an op's mathematical domain (log of a non-positive value,
// non-symmetric matrix fed to an SPD solve, bandwidth <= 0, ...).
struct DomainError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Cholesky hit a non-positive pivot; `pivot` is the failing column.
struct DefinitenessError : std::runtime_error {
  int pivot;
  explicit DefinitenessError(int p)
      : std::runtime_error("matrix not positive definite at pivot " + std::to_string(p)),
        pivot(p) {}
};

// A numeric quantity that must stay finite became NaN/inf (e.g. training loss).
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Bad or inconsistent configuration (unknown key, invalid value, missing file).
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Malformed input data; message carries row/column where known.
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace metacde
