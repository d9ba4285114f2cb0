#include "evidential/uncertainty.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace evidential {
namespace {

void require_valid(const MassFunction& m, const char* what) {
  if (!m.is_valid()) throw std::invalid_argument(std::string(what) + " needs a valid mass; repair it first");
}

}  // namespace

double shannon_entropy_bits(std::span<const double> probs) {
  double h = 0.0;
  for (double p : probs) {
    if (p > 0.0) h -= p * std::log2(p);
  }
  return h;
}

double pignistic_entropy(const PignisticDistribution& p) { return shannon_entropy_bits(p.probs); }

double nguyen_entropy(const MassFunction& m) {
  require_valid(m, "Nguyen entropy");
  return shannon_entropy_bits(m.values());
}

double pal_specificity(const MassFunction& m) {
  require_valid(m, "Pal specificity");
  double s = 0.0;
  for (std::size_t i = 0; i < m.size(); ++i) s += m[i] / m.family().mask_at(i).cardinality();
  // Same summation order as sum(), so a Bayesian mass gives exactly 1.
  return s / m.sum();
}

double mass_kl(const MassFunction& m_true, const MassFunction& m_pred, double floor) {
  if (!(m_true.family() == m_pred.family())) {
    throw std::invalid_argument("KL divergence between masses on different focal families");
  }
  double kl = 0.0;
  for (std::size_t i = 0; i < m_true.size(); ++i) {
    const double t = m_true[i];
    if (t > 0.0) kl += t * std::log(t / std::max(m_pred[i], floor));
  }
  return kl;
}

UncertaintyReport uncertainty_report(const MassFunction& repaired, const PignisticDistribution& betp,
                                     const CredalInterval& interval, int predicted_class) {
  return UncertaintyReport{pignistic_entropy(betp), nguyen_entropy(repaired), pal_specificity(repaired),
                           interval.width.at(static_cast<std::size_t>(predicted_class))};
}

}  // namespace evidential
