#include "evidential/losses.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "evidential/evidence.hpp"

namespace evidential {
namespace {

double clamp_prob(double p) { return std::clamp(p, kPredictionClamp, 1.0 - kPredictionClamp); }
bool inside_clamp(double p) { return p > kPredictionClamp && p < 1.0 - kPredictionClamp; }

void require_shape(const FocalFamily& family, const Eigen::MatrixXd& pred, const Eigen::MatrixXd& targets) {
  if (pred.cols() != static_cast<Eigen::Index>(family.size())) {
    throw std::invalid_argument("prediction width " + std::to_string(pred.cols()) + " does not match family size " +
                                std::to_string(family.size()));
  }
  if (pred.rows() != targets.rows() || pred.cols() != targets.cols()) {
    throw std::invalid_argument("prediction and target shapes differ");
  }
  if (pred.rows() == 0) throw std::invalid_argument("empty batch");
}

std::vector<double> row_of(const Eigen::MatrixXd& m, Eigen::Index r) {
  std::vector<double> out(static_cast<std::size_t>(m.cols()));
  for (Eigen::Index c = 0; c < m.cols(); ++c) out[static_cast<std::size_t>(c)] = m(r, c);
  return out;
}

double row_bce(const Eigen::MatrixXd& pred, const Eigen::MatrixXd& targets, Eigen::Index r) {
  double total = 0.0;
  for (Eigen::Index c = 0; c < pred.cols(); ++c) {
    const double p = clamp_prob(pred(r, c));
    const double y = targets(r, c);
    total -= y * std::log(p) + (1.0 - y) * std::log(1.0 - p);
  }
  return total / static_cast<double>(pred.cols());
}

Eigen::MatrixXd as_row(std::span<const double> v) {
  Eigen::MatrixXd m(1, static_cast<Eigen::Index>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) m(0, static_cast<Eigen::Index>(i)) = v[i];
  return m;
}

}  // namespace

std::string to_string(TargetHead head) { return head == TargetHead::belief ? "belief" : "mass"; }
std::string to_string(MassLoss loss) { return loss == MassLoss::kl ? "kl" : "nguyen"; }

void LossConfig::validate() const {
  if (!std::isfinite(alpha) || alpha < 0.0) throw std::invalid_argument("alpha must be finite and non-negative");
  if (!std::isfinite(beta) || beta < 0.0) throw std::invalid_argument("beta must be finite and non-negative");
  if (!(kl_floor > 0.0)) throw std::invalid_argument("kl_floor must be positive");
}

EncodedTarget encode_target(FamilyPtr family, int true_class, TargetHead head) {
  if (!family) throw std::invalid_argument("target encoding needs a family");
  if (true_class < 0 || true_class >= family->num_classes()) {
    throw std::invalid_argument("true class " + std::to_string(true_class) + " outside the frame");
  }
  std::vector<double> values(family->size(), 0.0);
  if (head == TargetHead::belief) {
    for (std::size_t i = 0; i < family->size(); ++i) values[i] = family->mask_at(i).contains(true_class) ? 1.0 : 0.0;
  } else {
    values[family->singleton_index(true_class)] = 1.0;
  }
  return EncodedTarget{std::move(family), std::move(values), head};
}

Eigen::MatrixXd encode_targets(const FocalFamily& family, std::span<const int> labels, TargetHead head) {
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(labels.size()),
                                              static_cast<Eigen::Index>(family.size()));
  for (std::size_t r = 0; r < labels.size(); ++r) {
    const int c = labels[r];
    if (c < 0 || c >= family.num_classes()) throw std::invalid_argument("label outside the frame");
    if (head == TargetHead::belief) {
      for (std::size_t i = 0; i < family.size(); ++i) {
        if (family.mask_at(i).contains(c)) out(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(i)) = 1.0;
      }
    } else {
      out(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(family.singleton_index(c))) = 1.0;
    }
  }
  return out;
}

double bce_loss(std::span<const double> pred, const EncodedTarget& target) {
  if (pred.size() != target.values.size()) throw std::invalid_argument("prediction and target lengths differ");
  if (pred.empty()) throw std::invalid_argument("empty prediction");
  return row_bce(as_row(pred), as_row(target.values), 0);
}

MassPenalties mass_regularizers(const FocalFamily& family, const Eigen::MatrixXd& pred_belief) {
  if (pred_belief.cols() != static_cast<Eigen::Index>(family.size())) {
    throw std::invalid_argument("belief batch width does not match family size");
  }
  if (pred_belief.rows() == 0) throw std::invalid_argument("empty batch");
  const double b = static_cast<double>(pred_belief.rows());
  double negative = 0.0;
  double total = 0.0;
  for (Eigen::Index r = 0; r < pred_belief.rows(); ++r) {
    const auto mass = moebius_transform(family, row_of(pred_belief, r));
    for (double m : mass) {
      negative += std::max(0.0, -m);
      total += m;
    }
  }
  return MassPenalties{negative / b, std::max(0.0, total / b - 1.0)};
}

double combined_loss(const FocalFamily& family, const Eigen::MatrixXd& pred_belief, const Eigen::MatrixXd& targets,
                     const LossConfig& cfg) {
  require_shape(family, pred_belief, targets);
  double bce = 0.0;
  for (Eigen::Index r = 0; r < pred_belief.rows(); ++r) bce += row_bce(pred_belief, targets, r);
  bce /= static_cast<double>(pred_belief.rows());
  const auto pen = mass_regularizers(family, pred_belief);
  return bce + cfg.alpha * pen.negative + cfg.beta * pen.excess;
}

double combined_loss(std::span<const double> pred_belief, const EncodedTarget& target, const LossConfig& cfg) {
  return combined_loss(*target.family, as_row(pred_belief), as_row(target.values), cfg);
}

double kl_mass_loss(std::span<const double> pred_mass, std::span<const double> target, double floor) {
  if (pred_mass.size() != target.size()) throw std::invalid_argument("prediction and target lengths differ");
  double kl = 0.0;
  for (std::size_t i = 0; i < target.size(); ++i) {
    if (target[i] > 0.0) kl += target[i] * std::log(target[i] / std::max(pred_mass[i], floor));
  }
  return kl;
}

double kl_mass_loss(std::span<const double> pred_mass, const EncodedTarget& target, double floor) {
  return kl_mass_loss(pred_mass, std::span<const double>(target.values), floor);
}

double nguyen_mass_loss(std::span<const double> pred_mass, std::span<const double> target, double floor) {
  double h = 0.0;
  for (double m : pred_mass) {
    const double v = std::max(m, floor);
    h -= v * std::log2(v);
  }
  return h + kl_mass_loss(pred_mass, target, floor);
}

double batch_loss(const FocalFamily& family, const Eigen::MatrixXd& pred, const Eigen::MatrixXd& targets,
                  const LossConfig& cfg) {
  if (cfg.head == TargetHead::belief) return combined_loss(family, pred, targets, cfg);
  require_shape(family, pred, targets);
  double total = 0.0;
  for (Eigen::Index r = 0; r < pred.rows(); ++r) {
    const auto p = row_of(pred, r);
    const auto t = row_of(targets, r);
    total += cfg.mass_loss == MassLoss::kl ? kl_mass_loss(p, t, cfg.kl_floor) : nguyen_mass_loss(p, t, cfg.kl_floor);
  }
  return total / static_cast<double>(pred.rows());
}

Eigen::MatrixXd loss_gradient(const FocalFamily& family, const Eigen::MatrixXd& pred, const Eigen::MatrixXd& targets,
                              const LossConfig& cfg) {
  require_shape(family, pred, targets);
  const Eigen::Index rows = pred.rows();
  const Eigen::Index cols = pred.cols();
  const double b = static_cast<double>(rows);
  Eigen::MatrixXd grad = Eigen::MatrixXd::Zero(rows, cols);

  if (cfg.head == TargetHead::mass) {
    for (Eigen::Index r = 0; r < rows; ++r) {
      for (Eigen::Index c = 0; c < cols; ++c) {
        const double p = pred(r, c);
        const double t = targets(r, c);
        double g = 0.0;
        if (p > cfg.kl_floor) {
          if (t > 0.0) g -= t / p;
          if (cfg.mass_loss == MassLoss::nguyen) g -= std::log2(p) + 1.0 / std::numbers::ln2;
        }
        grad(r, c) = g / b;
      }
    }
    return grad;
  }

  const double per_entry = 1.0 / (static_cast<double>(cols) * b);
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) {
      const double p = pred(r, c);
      if (inside_clamp(p)) grad(r, c) = (p - targets(r, c)) / (p * (1.0 - p)) * per_entry;
    }
  }
  if (cfg.alpha == 0.0 && cfg.beta == 0.0) return grad;

  std::vector<std::vector<double>> masses;
  masses.reserve(static_cast<std::size_t>(rows));
  double total = 0.0;
  for (Eigen::Index r = 0; r < rows; ++r) {
    masses.push_back(moebius_transform(family, row_of(pred, r)));
    for (double m : masses.back()) total += m;
  }
  const bool excess_active = total / b - 1.0 > 0.0;
  std::vector<double> upstream(static_cast<std::size_t>(cols));
  for (Eigen::Index r = 0; r < rows; ++r) {
    const auto& mass = masses[static_cast<std::size_t>(r)];
    for (std::size_t i = 0; i < mass.size(); ++i) {
      double g = 0.0;
      if (mass[i] < 0.0) g -= cfg.alpha / b;
      if (excess_active) g += cfg.beta / b;
      upstream[i] = g;
    }
    const auto pulled = moebius_adjoint(family, upstream);
    for (Eigen::Index c = 0; c < cols; ++c) grad(r, c) += pulled[static_cast<std::size_t>(c)];
  }
  return grad;
}

std::vector<double> loss_gradient(std::span<const double> pred, const EncodedTarget& target, const LossConfig& cfg) {
  LossConfig effective = cfg;
  effective.head = target.head;
  const Eigen::MatrixXd g = loss_gradient(*target.family, as_row(pred), as_row(target.values), effective);
  return row_of(g, 0);
}

}  // namespace evidential
