#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

#include "evidential/frame.hpp"

namespace evidential {

inline constexpr double kValidityTolerance = 1e-9;
inline constexpr double kRoundtripTolerance = 1e-12;

/// Raised when an operation needs positive total mass and there is none.
class DegenerateMassError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Masses over the sets of a focal family. Network outputs may carry
/// negative entries or the wrong total; such vectors are representable and
/// reported through is_valid(), never rejected at construction.
class MassFunction {
 public:
  MassFunction(FamilyPtr family, std::vector<double> values);

  const FocalFamily& family() const { return *family_; }
  const FamilyPtr& family_ptr() const { return family_; }
  std::span<const double> values() const { return values_; }
  double operator[](std::size_t i) const { return values_[i]; }
  std::size_t size() const { return values_.size(); }

  double sum() const;
  std::size_t negative_count() const;
  /// Non-negative everywhere and total within eps of 1.
  bool is_valid(double eps = kValidityTolerance) const;
  /// All mass on singletons.
  bool is_bayesian(double eps = kValidityTolerance) const;

 private:
  FamilyPtr family_;
  std::vector<double> values_;
};

class BeliefVector {
 public:
  BeliefVector(FamilyPtr family, std::vector<double> values);

  const FocalFamily& family() const { return *family_; }
  const FamilyPtr& family_ptr() const { return family_; }
  std::span<const double> values() const { return values_; }
  double operator[](std::size_t i) const { return values_[i]; }
  std::size_t size() const { return values_.size(); }

  /// Every value within eps of [0, 1]; rounding can push Bel(Θ) a few ulps past 1.
  bool in_unit_range(double eps = kValidityTolerance) const;
  /// Number of comparable family pairs A strictly inside B with Bel(A) > Bel(B) + tol.
  std::size_t monotonicity_violations(double tol = 0.0) const;
  bool is_monotone(double tol = 0.0) const { return monotonicity_violations(tol) == 0; }

 private:
  FamilyPtr family_;
  std::vector<double> values_;
};

struct PignisticDistribution {
  ClassFrame frame;
  std::vector<double> probs;
  /// Mass total before repair and normalisation.
  double total_mass = 0.0;

  int argmax() const;
};

struct RepairedMass {
  MassFunction mass;
  std::size_t clamped_count = 0;
  double pre_sum = 0.0;
  bool zero_sum = false;
};

// Family-aligned linear transforms on raw vectors.
//
// zeta:    Bel(A) = sum of m(B) over family sets B contained in A.
// moebius: the exact inverse of zeta on the same family. On full powersets
//          (and on any family closed under the sets between its members) it is
//          m(A) = sum over B in A of (-1)^|A\B| Bel(B); on sparse budgets the
//          sign pattern follows the family's own containment order.
// moebius_adjoint: transpose of moebius, used to pull gradients back through it.
std::vector<double> zeta_transform(const FocalFamily& family, std::span<const double> mass);
std::vector<double> moebius_transform(const FocalFamily& family, std::span<const double> belief);
std::vector<double> moebius_adjoint(const FocalFamily& family, std::span<const double> upstream);

BeliefVector belief_from_mass(const MassFunction& m);
MassFunction mass_from_belief(const BeliefVector& bel);

/// Sum of m(A) over family sets containing class c.
double plausibility(const MassFunction& m, int c);

/// Clamps negatives to zero and rescales to unit total when the total is
/// positive. The input is left untouched.
RepairedMass repair_mass(const MassFunction& m);

/// Betting probability from the repaired mass, normalised to sum 1. Throws
/// DegenerateMassError when the repaired mass is all zero.
PignisticDistribution pignistic(const MassFunction& m);

/// pignistic(), except a degenerate mass yields the uniform distribution and
/// sets `degenerate`.
PignisticDistribution pignistic_or_uniform(const MassFunction& m, bool& degenerate);

}  // namespace evidential
