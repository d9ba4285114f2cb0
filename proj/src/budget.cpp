#include "evidential/budget.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <set>
#include <sstream>
#include <stdexcept>

#include <boost/math/distributions/chi_squared.hpp>

#include "evidential/io_util.hpp"
#include "evidential/parallel.hpp"
#include "evidential/random.hpp"

namespace evidential {

double chi_square_quantile(double coverage, int dims) {
  return boost::math::quantile(boost::math::chi_squared_distribution<double>(dims), coverage);
}

ClassEllipsoid::ClassEllipsoid(int class_id, Eigen::VectorXd mean, Eigen::MatrixXd covariance, double scale)
    : class_id_(class_id), mean_(std::move(mean)), covariance_(std::move(covariance)), scale_(scale) {
  const auto d = mean_.size();
  if (d == 0 || covariance_.rows() != d || covariance_.cols() != d) {
    throw std::invalid_argument("ellipsoid covariance must be square and match the mean dimension");
  }
  if (!(scale_ > 0.0)) throw std::invalid_argument("ellipsoid scale must be positive");
  if (!covariance_.isApprox(covariance_.transpose(), 1e-12)) {
    throw std::invalid_argument("ellipsoid covariance for class " + std::to_string(class_id) + " is not symmetric");
  }
  Eigen::LLT<Eigen::MatrixXd> llt(covariance_);
  if (llt.info() != Eigen::Success) {
    throw std::invalid_argument("ellipsoid covariance for class " + std::to_string(class_id) +
                                " is not positive definite");
  }
  precision_ = llt.solve(Eigen::MatrixXd::Identity(d, d));
  precision_ = 0.5 * (precision_ + precision_.transpose());
}

double ClassEllipsoid::mahalanobis_squared(const Eigen::VectorXd& x) const {
  const Eigen::VectorXd diff = x - mean_;
  return diff.dot(precision_ * diff);
}

Eigen::VectorXd ClassEllipsoid::box_min() const {
  return mean_ - (scale_ * covariance_.diagonal().array()).sqrt().matrix();
}

Eigen::VectorXd ClassEllipsoid::box_max() const {
  return mean_ + (scale_ * covariance_.diagonal().array()).sqrt().matrix();
}

Projection reduce_features(const Eigen::MatrixXd& features, int target_dim) {
  if (target_dim < 1) throw std::invalid_argument("target dimension must be positive");
  const Eigen::Index n = features.rows();
  const Eigen::Index dims = features.cols();
  if (n < 2) throw std::invalid_argument("dimensionality reduction needs at least 2 samples");
  if (!features.allFinite()) throw std::invalid_argument("features contain NaN or Inf");

  Projection out;
  out.center = features.colwise().mean().transpose();
  const Eigen::MatrixXd centered = features.rowwise() - out.center.transpose();
  const Eigen::MatrixXd cov = (centered.transpose() * centered) / static_cast<double>(n - 1);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
  if (eig.info() != Eigen::Success) throw std::runtime_error("covariance eigendecomposition failed");

  const Eigen::VectorXd values = eig.eigenvalues();  // ascending
  const double top = dims > 0 ? std::max(values(dims - 1), 0.0) : 0.0;
  const double tol = std::max(1e-12, top * 1e-10);

  out.components = Eigen::MatrixXd::Zero(dims, target_dim);
  out.explained_variance = Eigen::VectorXd::Zero(target_dim);
  int kept = 0;
  for (int k = 0; k < target_dim && k < dims; ++k) {
    const Eigen::Index idx = dims - 1 - k;
    if (values(idx) <= tol) break;
    Eigen::VectorXd v = eig.eigenvectors().col(idx);
    Eigen::Index arg = 0;
    v.cwiseAbs().maxCoeff(&arg);
    if (v(arg) < 0) v = -v;
    out.components.col(k) = v;
    out.explained_variance(k) = values(idx);
    ++kept;
  }
  if (kept < target_dim) {
    std::ostringstream msg;
    msg << "features have only " << kept << " directions with nonzero variance; padded " << (target_dim - kept)
        << " zero dimension(s)";
    out.warnings.push_back(msg.str());
  }
  out.embedded = centered * out.components;
  return out;
}

std::vector<ClassEllipsoid> fit_ellipsoids(const Eigen::MatrixXd& embedded, std::span<const int> labels,
                                           const ClassFrame& frame) {
  if (static_cast<std::size_t>(embedded.rows()) != labels.size()) {
    throw std::invalid_argument("embedding rows and labels differ in count");
  }
  const int d = static_cast<int>(embedded.cols());
  const int n_classes = frame.size();
  const double scale = chi_square_quantile(kEllipsoidCoverage, d);

  std::vector<std::vector<Eigen::Index>> rows(static_cast<std::size_t>(n_classes));
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || labels[i] >= n_classes) throw std::invalid_argument("label outside the class frame");
    rows[static_cast<std::size_t>(labels[i])].push_back(static_cast<Eigen::Index>(i));
  }

  std::vector<ClassEllipsoid> out;
  out.reserve(static_cast<std::size_t>(n_classes));
  for (int c = 0; c < n_classes; ++c) {
    const auto& idx = rows[static_cast<std::size_t>(c)];
    if (static_cast<int>(idx.size()) < d + 1) {
      throw std::invalid_argument("class '" + frame.label(c) + "' has " + std::to_string(idx.size()) +
                                  " samples; fitting a " + std::to_string(d) + "-D ellipsoid needs at least " +
                                  std::to_string(d + 1));
    }
    Eigen::MatrixXd block(static_cast<Eigen::Index>(idx.size()), d);
    for (std::size_t r = 0; r < idx.size(); ++r) block.row(static_cast<Eigen::Index>(r)) = embedded.row(idx[r]);
    Eigen::VectorXd mean = block.colwise().mean().transpose();
    const Eigen::MatrixXd centered = block.rowwise() - mean.transpose();
    Eigen::MatrixXd cov = (centered.transpose() * centered) / static_cast<double>(idx.size() - 1);
    cov = 0.5 * (cov + cov.transpose());
    cov += kCovarianceRidge * Eigen::MatrixXd::Identity(d, d);
    out.emplace_back(c, std::move(mean), std::move(cov), scale);
  }
  return out;
}

double overlap_ratio(std::span<const ClassEllipsoid> members, std::uint64_t seed, std::size_t n_samples) {
  if (members.empty()) throw std::invalid_argument("overlap of an empty set of ellipsoids");
  const auto d = members.front().mean().size();
  Eigen::VectorXd lo = members.front().box_min();
  Eigen::VectorXd hi = members.front().box_max();
  for (const auto& e : members) {
    if (e.mean().size() != d) throw std::invalid_argument("ellipsoids differ in dimension");
    lo = lo.cwiseMin(e.box_min());
    hi = hi.cwiseMax(e.box_max());
  }

  // Hot loop: plain arrays, no per-sample allocation.
  const auto dim = static_cast<std::size_t>(d);
  std::vector<double> point(dim);
  std::vector<double> diff(dim);
  auto inside_member = [&](const ClassEllipsoid& e) {
    const auto& mean = e.mean();
    const auto& prec = e.precision();
    for (std::size_t k = 0; k < dim; ++k) diff[k] = point[k] - mean(static_cast<Eigen::Index>(k));
    double q = 0.0;
    for (std::size_t r = 0; r < dim; ++r) {
      double row = 0.0;
      for (std::size_t k = 0; k < dim; ++k) row += prec(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(k)) * diff[k];
      q += diff[r] * row;
    }
    return q <= e.scale();
  };

  Rng rng(seed);
  std::size_t in_all = 0;
  std::size_t in_any = 0;
  for (std::size_t s = 0; s < n_samples; ++s) {
    for (std::size_t k = 0; k < dim; ++k) {
      point[k] = rng.uniform(lo(static_cast<Eigen::Index>(k)), hi(static_cast<Eigen::Index>(k)));
    }
    std::size_t inside = 0;
    for (const auto& e : members) inside += inside_member(e) ? 1 : 0;
    if (inside > 0) ++in_any;
    if (inside == members.size()) ++in_all;
  }
  return in_any == 0 ? 0.0 : static_cast<double>(in_all) / static_cast<double>(in_any);
}

bool overlap_rank_less(const OverlapEntry& a, const OverlapEntry& b) {
  if (a.ratio != b.ratio) return a.ratio > b.ratio;
  return canonical_less(a.subset, b.subset);
}

namespace {

std::vector<SubsetMask> top_k(const std::map<std::uint32_t, double>& scored, int k) {
  std::vector<OverlapEntry> entries;
  entries.reserve(scored.size());
  for (const auto& [bits, ratio] : scored) entries.push_back({SubsetMask(bits), ratio});
  std::sort(entries.begin(), entries.end(), overlap_rank_less);
  std::vector<SubsetMask> out;
  for (std::size_t i = 0; i < entries.size() && i < static_cast<std::size_t>(k); ++i) out.push_back(entries[i].subset);
  return out;
}

}  // namespace

BudgetResult select_focal_sets(const ClassFrame& frame, std::span<const ClassEllipsoid> ellipsoids,
                               const BudgetOptions& options) {
  const int n = frame.size();
  if (options.k < 1) throw std::invalid_argument("budget size K must be at least 1");
  if (options.max_card < 2) throw std::invalid_argument("maximum cardinality must be at least 2");
  if (static_cast<int>(ellipsoids.size()) != n) throw std::invalid_argument("need exactly one ellipsoid per class");
  for (int c = 0; c < n; ++c) {
    if (ellipsoids[static_cast<std::size_t>(c)].class_id() != c) {
      throw std::invalid_argument("ellipsoids must be ordered by class index");
    }
  }
  const int threads = options.threads > 0 ? options.threads : worker_count();
  const int max_card = std::min(options.max_card, n);

  std::map<std::uint32_t, double> scored;
  auto score = [&](const std::vector<SubsetMask>& candidates) {
    std::vector<double> ratios(candidates.size());
    parallel_for(candidates.size(), threads, [&](std::size_t i) {
      std::vector<ClassEllipsoid> members;
      for (int c : candidates[i].indices()) members.push_back(ellipsoids[static_cast<std::size_t>(c)]);
      ratios[i] = overlap_ratio(members, derive_seed(options.seed, candidates[i].bits()), options.n_samples);
    });
    for (std::size_t i = 0; i < candidates.size(); ++i) scored.emplace(candidates[i].bits(), ratios[i]);
  };

  std::vector<SubsetMask> pairs;
  for (int a = 0; a < n; ++a) {
    for (int b = a + 1; b < n; ++b) pairs.push_back(SubsetMask::from_indices({a, b}));
  }
  score(pairs);
  int reached = 2;
  auto top = top_k(scored, options.k);

  for (int card = 3; card <= max_card; ++card) {
    std::set<std::uint32_t> fresh;
    for (auto mask : top) {
      if (mask.cardinality() != card - 1) continue;
      for (int c = 0; c < n; ++c) {
        if (mask.contains(c)) continue;
        const std::uint32_t grown = mask.bits() | (std::uint32_t{1} << c);
        if (!scored.contains(grown)) fresh.insert(grown);
      }
    }
    if (fresh.empty()) break;
    std::vector<SubsetMask> candidates;
    for (auto bits : fresh) candidates.emplace_back(bits);
    std::sort(candidates.begin(), candidates.end(), canonical_less);
    score(candidates);
    reached = card;

    auto next = top_k(scored, options.k);
    auto as_set = [](const std::vector<SubsetMask>& v) {
      std::set<std::uint32_t> s;
      for (auto m : v) s.insert(m.bits());
      return s;
    };
    const bool unchanged = as_set(next) == as_set(top);
    top = std::move(next);
    if (unchanged) break;
  }

  BudgetResult result{make_family(frame, top), {}, {}};
  for (const auto& [bits, ratio] : scored) result.table.entries.push_back({SubsetMask(bits), ratio});
  std::sort(result.table.entries.begin(), result.table.entries.end(), overlap_rank_less);
  result.table.cardinality_reached = reached;
  if (scored.size() < static_cast<std::size_t>(options.k)) {
    result.warnings.push_back("requested K=" + std::to_string(options.k) + " but only " +
                              std::to_string(scored.size()) + " candidate subsets exist up to cardinality " +
                              std::to_string(max_card) + "; returning all of them");
  }
  return result;
}

std::string overlap_table_csv(const OverlapTable& table) {
  std::string out = "subset,ratio,cardinality\n";
  for (const auto& e : table.entries) {
    out += e.subset.key() + "," + format_double(e.ratio) + "," + std::to_string(e.subset.cardinality()) + "\n";
  }
  return out;
}

Ellipse2D project_ellipse_2d(const ClassEllipsoid& ellipsoid) {
  if (ellipsoid.dims() < 2) throw std::invalid_argument("2-D projection needs at least two dimensions");
  const Eigen::Matrix2d cov = ellipsoid.covariance().topLeftCorner(2, 2);
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> eig(cov);
  const double scale = chi_square_quantile(kEllipsoidCoverage, 2);
  Ellipse2D out;
  out.class_id = ellipsoid.class_id();
  out.center_x = ellipsoid.mean()(0);
  out.center_y = ellipsoid.mean()(1);
  out.semi_major = std::sqrt(scale * std::max(eig.eigenvalues()(1), 0.0));
  out.semi_minor = std::sqrt(scale * std::max(eig.eigenvalues()(0), 0.0));
  const Eigen::Vector2d major = eig.eigenvectors().col(1);
  out.angle = std::atan2(major(1), major(0));
  if (out.angle < 0) out.angle += std::numbers::pi;
  return out;
}

}  // namespace evidential
