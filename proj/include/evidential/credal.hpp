#pragma once

#include <span>
#include <vector>

#include "evidential/evidence.hpp"

namespace evidential {

/// Per-class lower/upper probability of the credal set consistent with a
/// belief function, and their difference.
struct CredalInterval {
  ClassFrame frame;
  std::vector<double> lower;
  std::vector<double> upper;
  std::vector<double> width;
};

inline constexpr int kMaxVertexEnumerationClasses = 8;

/// Extremal distribution for one ordering of the classes: each focal set's
/// mass goes to its first member in `order`. `m` must be a valid mass.
std::vector<double> vertex_for_permutation(const MassFunction& m, std::span<const int> order);

/// Every permutation vertex (N! of them, N <= kMaxVertexEnumerationClasses),
/// in lexicographic order of the permutation.
std::vector<std::vector<double>> enumerate_vertices(const MassFunction& m);

/// Closed-form bounds: lower(c) = m({c}), upper(c) = Pl({c}).
CredalInterval credal_bounds(const MassFunction& m);

/// Bounds by exhaustive min/max over enumerate_vertices.
CredalInterval credal_bounds_by_enumeration(const MassFunction& m);

/// Mean of width(predicted[i]) over the batch.
double mean_credal_width(std::span<const CredalInterval> intervals, std::span<const int> predicted);

}  // namespace evidential
