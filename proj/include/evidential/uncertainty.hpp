#pragma once

#include <span>

#include "evidential/credal.hpp"
#include "evidential/evidence.hpp"

namespace evidential {

inline constexpr double kKlFloor = 1e-12;

struct UncertaintyReport {
  double pignistic_entropy = 0.0;
  double nguyen_entropy = 0.0;
  double pal_specificity = 1.0;
  double credal_width_pred = 0.0;
};

/// -sum p log2 p with 0 log 0 = 0.
double shannon_entropy_bits(std::span<const double> probs);

/// Shannon entropy (bits) of the pignistic distribution.
double pignistic_entropy(const PignisticDistribution& p);

/// -sum over focal sets of m(A) log2 m(A). Rejects invalid masses.
double nguyen_entropy(const MassFunction& m);

/// sum over focal sets of m(A)/|A|, relative to the mass total. 1 for Bayesian
/// masses, 1/N for vacuous.
double pal_specificity(const MassFunction& m);

/// sum m_true(A) ln(m_true(A) / max(m_pred(A), floor)) over m_true(A) > 0.
/// Both masses must live on the same family.
double mass_kl(const MassFunction& m_true, const MassFunction& m_pred, double floor = kKlFloor);

/// All scalar measures for one raw prediction, computed on its repaired mass.
/// `predicted_class` selects which credal width is reported.
UncertaintyReport uncertainty_report(const MassFunction& repaired, const PignisticDistribution& betp,
                                     const CredalInterval& interval, int predicted_class);

}  // namespace evidential
