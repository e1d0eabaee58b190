#pragma once

#include <vector>

#include <nlohmann/json.hpp>

#include "ags/problem.hpp"

namespace ags {

/// Per-coordinate min-max scaling to [0, 1].
struct NormalizationSpec {
  Vector lo;
  Vector hi;

  int size() const { return static_cast<int>(lo.size()); }
  Vector apply(const Vector& x) const;
  Vector invert(const Vector& u) const;
  /// Row-wise versions for a batch (one sample per row).
  Matrix apply_rows(const Matrix& x) const;
  Matrix invert_rows(const Matrix& u) const;

  nlohmann::json to_json() const;
  static NormalizationSpec from_json(const nlohmann::json& j);
};

/// Range of each coordinate widened by `margin` times the range on both
/// sides. Constant coordinates are widened by a small epsilon with a warning.
NormalizationSpec fit_normalization(const std::vector<Vector>& rows, double margin = 0.01);

}  // namespace ags
