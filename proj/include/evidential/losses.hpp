#pragma once

#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "evidential/frame.hpp"

namespace evidential {

enum class TargetHead { belief, mass };
enum class MassLoss { kl, nguyen };

std::string to_string(TargetHead head);
std::string to_string(MassLoss loss);

inline constexpr double kPredictionClamp = 1e-12;

struct LossConfig {
  double alpha = 1.0;  // weight of the negative-mass penalty
  double beta = 1.0;   // weight of the mass-sum penalty
  TargetHead head = TargetHead::belief;
  MassLoss mass_loss = MassLoss::kl;
  double kl_floor = 1e-12;

  /// Throws std::invalid_argument for negative or non-finite weights.
  void validate() const;
};

struct EncodedTarget {
  FamilyPtr family;
  std::vector<double> values;
  TargetHead head = TargetHead::belief;
};

/// Belief encoding: 1 on every family set containing the true class.
/// Mass encoding: one-hot on the true singleton.
EncodedTarget encode_target(FamilyPtr family, int true_class, TargetHead head);

/// Rows of encode_target for a batch of labels.
Eigen::MatrixXd encode_targets(const FocalFamily& family, std::span<const int> labels, TargetHead head);

/// Binary cross-entropy, natural log, averaged over family entries.
/// Predictions are clamped to [1e-12, 1 - 1e-12].
double bce_loss(std::span<const double> pred, const EncodedTarget& target);

struct MassPenalties {
  double negative = 0.0;  // mean over the batch of the summed negative parts of the masses
  double excess = 0.0;    // hinge on (batch-mean mass total - 1)
};

/// Penalties on the Moebius images of a batch of predicted belief rows.
MassPenalties mass_regularizers(const FocalFamily& family, const Eigen::MatrixXd& pred_belief);

/// Batch BCE (mean of per-row BCE) + alpha * negative + beta * excess.
double combined_loss(const FocalFamily& family, const Eigen::MatrixXd& pred_belief, const Eigen::MatrixXd& targets,
                     const LossConfig& cfg);
double combined_loss(std::span<const double> pred_belief, const EncodedTarget& target, const LossConfig& cfg);

/// sum t(A) ln(t(A) / max(pred(A), floor)) over t(A) > 0.
double kl_mass_loss(std::span<const double> pred_mass, std::span<const double> target, double floor = 1e-12);
double kl_mass_loss(std::span<const double> pred_mass, const EncodedTarget& target, double floor = 1e-12);

/// Nguyen entropy (bits) of the predicted masses plus the KL anchor to the target.
double nguyen_mass_loss(std::span<const double> pred_mass, std::span<const double> target, double floor = 1e-12);

/// Batch objective selected by cfg: combined_loss for the belief head, mean
/// per-row KL or Nguyen loss for the mass head.
double batch_loss(const FocalFamily& family, const Eigen::MatrixXd& pred, const Eigen::MatrixXd& targets,
                  const LossConfig& cfg);

/// Exact gradient of batch_loss with respect to `pred`. The subgradient of
/// every max(0, .) at 0 is taken as 0, as is the derivative at clamp limits.
Eigen::MatrixXd loss_gradient(const FocalFamily& family, const Eigen::MatrixXd& pred, const Eigen::MatrixXd& targets,
                              const LossConfig& cfg);
std::vector<double> loss_gradient(std::span<const double> pred, const EncodedTarget& target, const LossConfig& cfg);

}  // namespace evidential
