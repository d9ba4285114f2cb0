#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "evidential/frame.hpp"
#include "json.hpp"

namespace evidential {

enum class Split { train, test };

std::string to_string(Split s);
Split split_from_string(const std::string& s);

/// Rows of `features` are samples; labels are class indices into `frame`.
struct Dataset {
  Eigen::MatrixXd features;
  std::vector<int> labels;
  ClassFrame frame;
  Split split = Split::train;

  std::size_t size() const { return labels.size(); }
  int dim() const { return static_cast<int>(features.cols()); }
  /// Throws on non-finite features, out-of-frame labels or row-count mismatch.
  void validate() const;
  bool operator==(const Dataset& other) const;
};

/// Classes whose means are pulled toward their common centroid.
struct OverlapGroup {
  std::vector<int> classes;
  /// Overrides BlobSpec::pull for this group.
  std::optional<double> pull;

  bool operator==(const OverlapGroup&) const = default;
};

struct BlobSpec {
  int num_classes = 3;
  int dim = 2;
  int samples_per_class = 500;
  /// Distance between neighbouring class means before any pull.
  double separation = 6.0;
  /// Per-coordinate standard deviation of every blob.
  double spread = 1.0;
  /// Applied in order.
  std::vector<OverlapGroup> overlap_groups;
  /// Default fraction of the distance to the group centroid each member
  /// moves, in [0, 1).
  double pull = 0.5;
  double train_fraction = 0.8;
  std::uint64_t seed = 0;

  void validate() const;
};

struct BlobData {
  Dataset train;
  Dataset test;
  Eigen::MatrixXd means;  // num_classes x dim, after pulls
};

/// Class means for `spec`. With dim >= num_classes the means sit on scaled
/// basis vectors; otherwise on a regular polygon in the first two coordinates.
/// Either way neighbouring means are `separation` apart before pulls.
Eigen::MatrixXd blob_means(const BlobSpec& spec);

/// Isotropic Gaussian per class, each drawn from its own derived stream.
/// Each class is split into round(train_fraction * n) train rows and the rest
/// test rows; rows are grouped by class.
BlobData gen_blobs(const BlobSpec& spec);

/// Adds N(0, scale^2) to every feature. Labels, frame and split are kept.
Dataset perturb_noise(const Dataset& ds, double scale, std::uint64_t seed);

/// Header f0,...,fD-1,label; values at 17 significant digits.
std::string dataset_to_csv(const Dataset& ds);
void save_csv(const Dataset& ds, const std::filesystem::path& path);

/// Without a frame, a numbered frame of size max(2, max label + 1) is used.
Dataset dataset_from_csv(const std::string& text, Split split, const std::optional<ClassFrame>& frame = std::nullopt,
                         const std::string& source = "<csv>");
Dataset load_csv(const std::filesystem::path& path, Split split,
                 const std::optional<ClassFrame>& frame = std::nullopt);

nlohmann::ordered_json blob_spec_to_json(const BlobSpec& spec);
BlobSpec blob_spec_from_json(const nlohmann::json& doc);

}  // namespace evidential
