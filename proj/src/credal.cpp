#include "evidential/credal.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>
#include <string>

namespace evidential {
namespace {

void require_valid(const MassFunction& m) {
  if (!m.is_valid()) {
    throw std::invalid_argument("credal computation needs a valid mass (non-negative, sum " +
                                std::to_string(m.sum()) + "); repair it first");
  }
}

}  // namespace

std::vector<double> vertex_for_permutation(const MassFunction& m, std::span<const int> order) {
  require_valid(m);
  const int n = m.family().num_classes();
  if (static_cast<int>(order.size()) != n) throw std::invalid_argument("permutation length must equal class count");
  std::vector<int> rank(static_cast<std::size_t>(n), -1);
  for (int pos = 0; pos < n; ++pos) {
    const int c = order[static_cast<std::size_t>(pos)];
    if (c < 0 || c >= n || rank[static_cast<std::size_t>(c)] != -1) {
      throw std::invalid_argument("order is not a permutation of the class indices");
    }
    rank[static_cast<std::size_t>(c)] = pos;
  }

  std::vector<double> p(static_cast<std::size_t>(n), 0.0);
  const auto& sets = m.family().sets();
  for (std::size_t i = 0; i < sets.size(); ++i) {
    int first = -1;
    for (int c : sets[i].indices()) {
      if (first < 0 || rank[static_cast<std::size_t>(c)] < rank[static_cast<std::size_t>(first)]) first = c;
    }
    p[static_cast<std::size_t>(first)] += m[i];
  }
  return p;
}

std::vector<std::vector<double>> enumerate_vertices(const MassFunction& m) {
  const int n = m.family().num_classes();
  if (n > kMaxVertexEnumerationClasses) {
    throw std::invalid_argument("vertex enumeration limited to " + std::to_string(kMaxVertexEnumerationClasses) +
                                " classes");
  }
  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::vector<std::vector<double>> vertices;
  do {
    vertices.push_back(vertex_for_permutation(m, order));
  } while (std::next_permutation(order.begin(), order.end()));
  return vertices;
}

CredalInterval credal_bounds(const MassFunction& m) {
  require_valid(m);
  const int n = m.family().num_classes();
  CredalInterval out{m.family().frame(), {}, {}, {}};
  for (int c = 0; c < n; ++c) {
    const double lo = m[m.family().singleton_index(c)];
    const double hi = plausibility(m, c);
    out.lower.push_back(lo);
    out.upper.push_back(hi);
    out.width.push_back(hi - lo);
  }
  return out;
}

CredalInterval credal_bounds_by_enumeration(const MassFunction& m) {
  const auto vertices = enumerate_vertices(m);
  const std::size_t n = static_cast<std::size_t>(m.family().num_classes());
  CredalInterval out{m.family().frame(), std::vector<double>(n, 1.0), std::vector<double>(n, 0.0), {}};
  for (const auto& v : vertices) {
    for (std::size_t c = 0; c < n; ++c) {
      out.lower[c] = std::min(out.lower[c], v[c]);
      out.upper[c] = std::max(out.upper[c], v[c]);
    }
  }
  for (std::size_t c = 0; c < n; ++c) out.width.push_back(out.upper[c] - out.lower[c]);
  return out;
}

double mean_credal_width(std::span<const CredalInterval> intervals, std::span<const int> predicted) {
  if (intervals.empty()) throw std::invalid_argument("mean credal width of an empty batch");
  if (intervals.size() != predicted.size()) throw std::invalid_argument("intervals and predictions differ in length");
  double total = 0.0;
  for (std::size_t i = 0; i < intervals.size(); ++i) {
    total += intervals[i].width.at(static_cast<std::size_t>(predicted[i]));
  }
  return total / static_cast<double>(intervals.size());
}

}  // namespace evidential
