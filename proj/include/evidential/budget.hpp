#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "evidential/frame.hpp"

namespace evidential {

/// Mahalanobis-squared radius enclosing `coverage` of a d-dimensional Gaussian.
double chi_square_quantile(double coverage, int dims);

/// Region {x : (x - mean)^T covariance^-1 (x - mean) <= scale}.
class ClassEllipsoid {
 public:
  /// Throws std::invalid_argument if covariance is not symmetric positive definite.
  ClassEllipsoid(int class_id, Eigen::VectorXd mean, Eigen::MatrixXd covariance, double scale);

  int class_id() const { return class_id_; }
  int dims() const { return static_cast<int>(mean_.size()); }
  const Eigen::VectorXd& mean() const { return mean_; }
  const Eigen::MatrixXd& covariance() const { return covariance_; }
  double scale() const { return scale_; }
  const Eigen::MatrixXd& precision() const { return precision_; }

  double mahalanobis_squared(const Eigen::VectorXd& x) const;
  bool contains(const Eigen::VectorXd& x) const { return mahalanobis_squared(x) <= scale_; }

  /// Axis-aligned bounding box: mean +/- sqrt(scale * diag(covariance)).
  Eigen::VectorXd box_min() const;
  Eigen::VectorXd box_max() const;

 private:
  int class_id_;
  Eigen::VectorXd mean_;
  Eigen::MatrixXd covariance_;
  Eigen::MatrixXd precision_;
  double scale_;
};

struct Projection {
  Eigen::MatrixXd embedded;            // samples x target_dim
  Eigen::MatrixXd components;          // D x target_dim, unit columns
  Eigen::VectorXd center;              // D
  Eigen::VectorXd explained_variance;  // target_dim, descending
  std::vector<std::string> warnings;
};

/// Principal-component projection onto the top `target_dim` variance
/// directions. Each component's largest-magnitude loading is made positive.
/// Directions with no variance (or missing because D < target_dim) come out
/// as zero columns with a warning.
Projection reduce_features(const Eigen::MatrixXd& features, int target_dim = 3);

inline constexpr double kEllipsoidCoverage = 0.95;
inline constexpr double kCovarianceRidge = 1e-6;

/// One Gaussian per class: sample mean and unbiased sample covariance plus
/// kCovarianceRidge * I, scaled to the 95% Mahalanobis radius.
std::vector<ClassEllipsoid> fit_ellipsoids(const Eigen::MatrixXd& embedded, std::span<const int> labels,
                                           const ClassFrame& frame);

/// Monte-Carlo intersection-over-union of the given ellipsoids: points drawn
/// uniformly in the bounding box of their union, ratio = (#inside all) /
/// (#inside any), 0 when nothing lands inside any.
double overlap_ratio(std::span<const ClassEllipsoid> members, std::uint64_t seed, std::size_t n_samples = 100000);

struct OverlapEntry {
  SubsetMask subset;
  double ratio = 0.0;
};

struct OverlapTable {
  std::vector<OverlapEntry> entries;  // descending ratio, ties in canonical order
  int cardinality_reached = 0;
};

struct BudgetOptions {
  int k = 20;
  int max_card = 5;
  std::uint64_t seed = 0;
  std::size_t n_samples = 100000;
  int threads = 0;  // 0: worker_count()
};

struct BudgetResult {
  FocalFamily family;
  OverlapTable table;
  std::vector<std::string> warnings;
};

/// Top-K non-singleton focal sets by ellipsoid overlap. All pairs are scored;
/// each further cardinality scores one-class extensions of the current top-K
/// members, stopping once a sweep leaves the top-K set unchanged or
/// max_card is reached. Each subset samples from its own stream derived from
/// (seed, subset bits), so thread count never changes the result.
BudgetResult select_focal_sets(const ClassFrame& frame, std::span<const ClassEllipsoid> ellipsoids,
                               const BudgetOptions& options);

/// Stable ranking order used by the overlap table.
bool overlap_rank_less(const OverlapEntry& a, const OverlapEntry& b);

/// CSV "subset,ratio,cardinality", one row per table entry.
std::string overlap_table_csv(const OverlapTable& table);

/// Ellipse of the 95% region of the marginal over the first two embedded
/// dimensions, for 2-D plotting.
struct Ellipse2D {
  int class_id = 0;
  double center_x = 0.0;
  double center_y = 0.0;
  double semi_major = 0.0;
  double semi_minor = 0.0;
  double angle = 0.0;  // radians, major axis from the x axis
};

Ellipse2D project_ellipse_2d(const ClassEllipsoid& ellipsoid);

}  // namespace evidential
