#include "evidential/evidence.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace evidential {
namespace {

void require_aligned(const FocalFamily& family, std::size_t n, const char* what) {
  if (n != family.size()) {
    throw std::invalid_argument(std::string(what) + " has " + std::to_string(n) + " entries, family has " +
                                std::to_string(family.size()));
  }
}

// Dense 2^N scatter/gather for full-powerset families.
std::vector<double> scatter(const FocalFamily& family, std::span<const double> values) {
  std::vector<double> dense(std::size_t{1} << family.num_classes(), 0.0);
  for (std::size_t i = 0; i < values.size(); ++i) dense[family.mask_at(i).bits()] = values[i];
  return dense;
}

std::vector<double> gather(const FocalFamily& family, const std::vector<double>& dense) {
  std::vector<double> out(family.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = dense[family.mask_at(i).bits()];
  return out;
}

}  // namespace

MassFunction::MassFunction(FamilyPtr family, std::vector<double> values)
    : family_(std::move(family)), values_(std::move(values)) {
  if (!family_) throw std::invalid_argument("mass function needs a family");
  require_aligned(*family_, values_.size(), "mass vector");
}

double MassFunction::sum() const { return std::accumulate(values_.begin(), values_.end(), 0.0); }

std::size_t MassFunction::negative_count() const {
  return static_cast<std::size_t>(std::count_if(values_.begin(), values_.end(), [](double v) { return v < 0.0; }));
}

bool MassFunction::is_valid(double eps) const {
  for (double v : values_) {
    if (!(v >= 0.0)) return false;
  }
  return std::abs(sum() - 1.0) <= eps;
}

bool MassFunction::is_bayesian(double eps) const {
  for (std::size_t i = static_cast<std::size_t>(family_->num_classes()); i < values_.size(); ++i) {
    if (std::abs(values_[i]) > eps) return false;
  }
  return true;
}

BeliefVector::BeliefVector(FamilyPtr family, std::vector<double> values)
    : family_(std::move(family)), values_(std::move(values)) {
  if (!family_) throw std::invalid_argument("belief vector needs a family");
  require_aligned(*family_, values_.size(), "belief vector");
}

bool BeliefVector::in_unit_range(double eps) const {
  return std::all_of(values_.begin(), values_.end(), [eps](double v) { return v >= -eps && v <= 1.0 + eps; });
}

std::size_t BeliefVector::monotonicity_violations(double tol) const {
  std::size_t violations = 0;
  for (std::size_t a = 0; a < values_.size(); ++a) {
    for (auto b : family_->strict_subsets(a)) {
      if (values_[b] > values_[a] + tol) ++violations;
    }
  }
  return violations;
}

int PignisticDistribution::argmax() const {
  return static_cast<int>(std::max_element(probs.begin(), probs.end()) - probs.begin());
}

std::vector<double> zeta_transform(const FocalFamily& family, std::span<const double> mass) {
  require_aligned(family, mass.size(), "mass vector");
  if (family.is_full_powerset()) {
    auto dense = scatter(family, mass);
    const std::size_t n = static_cast<std::size_t>(family.num_classes());
    for (std::size_t d = 0; d < n; ++d) {
      const std::size_t bit = std::size_t{1} << d;
      for (std::size_t s = 0; s < dense.size(); ++s) {
        if (s & bit) dense[s] += dense[s ^ bit];
      }
    }
    return gather(family, dense);
  }
  std::vector<double> bel(mass.begin(), mass.end());
  for (std::size_t a = 0; a < bel.size(); ++a) {
    for (auto b : family.strict_subsets(a)) bel[a] += mass[b];
  }
  return bel;
}

std::vector<double> moebius_transform(const FocalFamily& family, std::span<const double> belief) {
  require_aligned(family, belief.size(), "belief vector");
  if (family.is_full_powerset()) {
    auto dense = scatter(family, belief);
    const std::size_t n = static_cast<std::size_t>(family.num_classes());
    for (std::size_t d = 0; d < n; ++d) {
      const std::size_t bit = std::size_t{1} << d;
      for (std::size_t s = 0; s < dense.size(); ++s) {
        if (s & bit) dense[s] -= dense[s ^ bit];
      }
    }
    return gather(family, dense);
  }
  // Forward substitution through the unitriangular zeta matrix.
  std::vector<double> mass(belief.begin(), belief.end());
  for (std::size_t a = 0; a < mass.size(); ++a) {
    for (auto b : family.strict_subsets(a)) mass[a] -= mass[b];
  }
  return mass;
}

std::vector<double> moebius_adjoint(const FocalFamily& family, std::span<const double> upstream) {
  require_aligned(family, upstream.size(), "gradient vector");
  if (family.is_full_powerset()) {
    auto dense = scatter(family, upstream);
    const std::size_t n = static_cast<std::size_t>(family.num_classes());
    for (std::size_t d = 0; d < n; ++d) {
      const std::size_t bit = std::size_t{1} << d;
      for (std::size_t s = 0; s < dense.size(); ++s) {
        if (!(s & bit)) dense[s] -= dense[s | bit];
      }
    }
    return gather(family, dense);
  }
  // Back substitution through the transposed zeta matrix.
  std::vector<double> out(upstream.begin(), upstream.end());
  for (std::size_t a = out.size(); a-- > 0;) {
    for (auto b : family.strict_subsets(a)) out[b] -= out[a];
  }
  return out;
}

BeliefVector belief_from_mass(const MassFunction& m) {
  return BeliefVector(m.family_ptr(), zeta_transform(m.family(), m.values()));
}

MassFunction mass_from_belief(const BeliefVector& bel) {
  return MassFunction(bel.family_ptr(), moebius_transform(bel.family(), bel.values()));
}

double plausibility(const MassFunction& m, int c) {
  const auto& sets = m.family().sets();
  double pl = 0.0;
  for (std::size_t i = 0; i < sets.size(); ++i) {
    if (sets[i].contains(c)) pl += m[i];
  }
  return pl;
}

RepairedMass repair_mass(const MassFunction& m) {
  std::vector<double> values(m.values().begin(), m.values().end());
  std::size_t clamped = 0;
  for (double& v : values) {
    if (v < 0.0) {
      v = 0.0;
      ++clamped;
    }
  }
  const double total = std::accumulate(values.begin(), values.end(), 0.0);
  const bool zero = !(total > 0.0);
  if (!zero) {
    for (double& v : values) v /= total;
  }
  return RepairedMass{MassFunction(m.family_ptr(), std::move(values)), clamped, m.sum(), zero};
}

PignisticDistribution pignistic(const MassFunction& m) {
  const auto repaired = repair_mass(m);
  if (repaired.zero_sum) throw DegenerateMassError("pignistic transform of an all-zero mass (degenerate prediction)");
  const auto& family = m.family();
  const int n = family.num_classes();
  std::vector<double> probs(static_cast<std::size_t>(n), 0.0);
  for (std::size_t i = 0; i < family.size(); ++i) {
    const auto mask = family.mask_at(i);
    const double share = repaired.mass[i] / mask.cardinality();
    for (int c : mask.indices()) probs[static_cast<std::size_t>(c)] += share;
  }
  const double total = std::accumulate(probs.begin(), probs.end(), 0.0);
  for (double& p : probs) p /= total;
  return PignisticDistribution{family.frame(), std::move(probs), m.sum()};
}

PignisticDistribution pignistic_or_uniform(const MassFunction& m, bool& degenerate) {
  try {
    degenerate = false;
    return pignistic(m);
  } catch (const DegenerateMassError&) {
    degenerate = true;
    const auto n = static_cast<std::size_t>(m.family().num_classes());
    return PignisticDistribution{m.family().frame(), std::vector<double>(n, 1.0 / static_cast<double>(n)), m.sum()};
  }
}

}  // namespace evidential
