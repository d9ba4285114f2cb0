#include "evidential/dataio.hpp"

#include <cmath>
#include <numbers>
#include <numeric>
#include <stdexcept>

#include "evidential/io_util.hpp"
#include "evidential/random.hpp"

namespace evidential {
namespace {

std::string trim_cr(std::string s) {
  if (!s.empty() && s.back() == '\r') s.pop_back();
  return s;
}

std::invalid_argument csv_error(const std::string& source, std::size_t line, const std::string& what) {
  return std::invalid_argument(source + ":" + std::to_string(line) + ": " + what);
}

}  // namespace

std::string to_string(Split s) { return s == Split::train ? "train" : "test"; }

Split split_from_string(const std::string& s) {
  if (s == "train") return Split::train;
  if (s == "test") return Split::test;
  throw std::invalid_argument("unknown split '" + s + "'");
}

void Dataset::validate() const {
  if (static_cast<std::size_t>(features.rows()) != labels.size()) {
    throw std::invalid_argument("dataset has " + std::to_string(features.rows()) + " rows but " +
                                std::to_string(labels.size()) + " labels");
  }
  if (!features.allFinite()) throw std::invalid_argument("dataset contains NaN or infinite features");
  for (int y : labels) {
    if (y < 0 || y >= frame.size()) throw std::invalid_argument("label " + std::to_string(y) + " outside the frame");
  }
}

bool Dataset::operator==(const Dataset& other) const {
  return split == other.split && frame == other.frame && labels == other.labels &&
         features.rows() == other.features.rows() && features.cols() == other.features.cols() &&
         features == other.features;
}

void BlobSpec::validate() const {
  if (num_classes < 2 || num_classes > kMaxClasses) {
    throw std::invalid_argument("num_classes must be in [2, " + std::to_string(kMaxClasses) + "]");
  }
  if (dim < 2) throw std::invalid_argument("dim must be at least 2");
  if (samples_per_class < 2) throw std::invalid_argument("samples_per_class must be at least 2");
  if (!(separation >= 0.0) || !std::isfinite(separation)) throw std::invalid_argument("separation must be finite and >= 0");
  if (!(spread > 0.0) || !std::isfinite(spread)) throw std::invalid_argument("spread must be finite and > 0");
  if (!(pull >= 0.0 && pull < 1.0)) throw std::invalid_argument("pull must be in [0, 1)");
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) throw std::invalid_argument("train_fraction must be in (0, 1)");
  for (const auto& group : overlap_groups) {
    if (group.classes.size() < 2) throw std::invalid_argument("overlap groups need at least two classes");
    if (group.pull && !(*group.pull >= 0.0 && *group.pull < 1.0)) {
      throw std::invalid_argument("group pull must be in [0, 1)");
    }
    for (int c : group.classes) {
      if (c < 0 || c >= num_classes) throw std::invalid_argument("overlap group class " + std::to_string(c) + " outside the frame");
    }
  }
}

Eigen::MatrixXd blob_means(const BlobSpec& spec) {
  spec.validate();
  const int n = spec.num_classes;
  Eigen::MatrixXd means = Eigen::MatrixXd::Zero(n, spec.dim);
  if (spec.dim >= n) {
    for (int c = 0; c < n; ++c) means(c, c) = spec.separation / std::numbers::sqrt2;
  } else {
    const double radius = spec.separation / (2.0 * std::sin(std::numbers::pi / n));
    for (int c = 0; c < n; ++c) {
      const double angle = 2.0 * std::numbers::pi * c / n;
      means(c, 0) = radius * std::cos(angle);
      means(c, 1) = radius * std::sin(angle);
    }
  }
  for (const auto& group : spec.overlap_groups) {
    Eigen::RowVectorXd centroid = Eigen::RowVectorXd::Zero(spec.dim);
    for (int c : group.classes) centroid += means.row(c);
    centroid /= static_cast<double>(group.classes.size());
    const double pull = group.pull.value_or(spec.pull);
    for (int c : group.classes) means.row(c) += pull * (centroid - means.row(c));
  }
  return means;
}

BlobData gen_blobs(const BlobSpec& spec) {
  const Eigen::MatrixXd means = blob_means(spec);
  const int n = spec.num_classes;
  const int per_class = spec.samples_per_class;
  const int n_train = static_cast<int>(std::lround(spec.train_fraction * per_class));
  const int n_test = per_class - n_train;
  if (n_train < 1 || n_test < 1) throw std::invalid_argument("split leaves a class without train or test samples");

  const auto frame = ClassFrame::numbered(n);
  BlobData out{Dataset{Eigen::MatrixXd(n * n_train, spec.dim), {}, frame, Split::train},
               Dataset{Eigen::MatrixXd(n * n_test, spec.dim), {}, frame, Split::test}, means};
  for (int c = 0; c < n; ++c) {
    Rng rng(derive_seed(spec.seed, static_cast<std::uint64_t>(c)));
    Eigen::MatrixXd samples(per_class, spec.dim);
    for (int r = 0; r < per_class; ++r) {
      for (int d = 0; d < spec.dim; ++d) samples(r, d) = means(c, d) + spec.spread * rng.normal();
    }
    std::vector<int> order(static_cast<std::size_t>(per_class));
    std::iota(order.begin(), order.end(), 0);
    rng.shuffle(order.begin(), order.end());
    for (int i = 0; i < per_class; ++i) {
      const int src = order[static_cast<std::size_t>(i)];
      if (i < n_train) {
        out.train.features.row(c * n_train + i) = samples.row(src);
        out.train.labels.push_back(c);
      } else {
        out.test.features.row(c * n_test + (i - n_train)) = samples.row(src);
        out.test.labels.push_back(c);
      }
    }
  }
  return out;
}

Dataset perturb_noise(const Dataset& ds, double scale, std::uint64_t seed) {
  if (!(scale >= 0.0) || !std::isfinite(scale)) throw std::invalid_argument("noise scale must be finite and >= 0");
  Dataset out = ds;
  if (scale == 0.0) return out;
  Rng rng(seed);
  for (Eigen::Index r = 0; r < out.features.rows(); ++r) {
    for (Eigen::Index c = 0; c < out.features.cols(); ++c) out.features(r, c) += scale * rng.normal();
  }
  return out;
}

std::string dataset_to_csv(const Dataset& ds) {
  ds.validate();
  std::string text;
  for (int d = 0; d < ds.dim(); ++d) text += "f" + std::to_string(d) + ",";
  text += "label\n";
  for (Eigen::Index r = 0; r < ds.features.rows(); ++r) {
    for (Eigen::Index c = 0; c < ds.features.cols(); ++c) text += format_double(ds.features(r, c)) + ",";
    text += std::to_string(ds.labels[static_cast<std::size_t>(r)]) + "\n";
  }
  return text;
}

void save_csv(const Dataset& ds, const std::filesystem::path& path) { write_text_file(path, dataset_to_csv(ds)); }

Dataset dataset_from_csv(const std::string& text, Split split, const std::optional<ClassFrame>& frame,
                         const std::string& source) {
  auto lines = evidential::split(text, '\n');
  while (!lines.empty() && trim_cr(lines.back()).empty()) lines.pop_back();
  if (lines.empty()) throw csv_error(source, 1, "empty file, expected header f0,...,fD-1,label");

  const auto header = evidential::split(trim_cr(lines[0]), ',');
  if (header.back() != "label") throw csv_error(source, 1, "missing 'label' column as the last header field");
  const int dim = static_cast<int>(header.size()) - 1;
  if (dim < 1) throw csv_error(source, 1, "header has no feature columns");
  for (int d = 0; d < dim; ++d) {
    if (header[static_cast<std::size_t>(d)] != "f" + std::to_string(d)) {
      throw csv_error(source, 1, "expected column 'f" + std::to_string(d) + "', found '" +
                                     header[static_cast<std::size_t>(d)] + "'");
    }
  }
  if (lines.size() == 1) throw csv_error(source, 2, "no data rows");

  const auto rows = static_cast<Eigen::Index>(lines.size() - 1);
  Dataset ds{Eigen::MatrixXd(rows, dim), {}, frame.value_or(ClassFrame::numbered(2)), split};
  ds.labels.reserve(static_cast<std::size_t>(rows));
  int max_label = 0;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto cells = evidential::split(trim_cr(lines[i]), ',');
    if (cells.size() != header.size()) {
      throw csv_error(source, i + 1, "expected " + std::to_string(header.size()) + " fields, found " +
                                         std::to_string(cells.size()));
    }
    for (int d = 0; d < dim; ++d) {
      double v = 0.0;
      if (!parse_double(cells[static_cast<std::size_t>(d)], v) || !std::isfinite(v)) {
        throw csv_error(source, i + 1, "non-numeric value '" + cells[static_cast<std::size_t>(d)] + "' in column f" +
                                           std::to_string(d));
      }
      ds.features(static_cast<Eigen::Index>(i - 1), d) = v;
    }
    const auto& cell = cells.back();
    double label = 0.0;
    if (!parse_double(cell, label) || label != std::floor(label) || label < 0 || label >= kMaxClasses) {
      throw csv_error(source, i + 1, "label '" + cell + "' is not a class index");
    }
    const int y = static_cast<int>(label);
    if (frame && y >= frame->size()) {
      throw csv_error(source, i + 1, "label " + cell + " outside the " + std::to_string(frame->size()) + "-class frame");
    }
    max_label = std::max(max_label, y);
    ds.labels.push_back(y);
  }
  if (!frame) ds.frame = ClassFrame::numbered(std::max(2, max_label + 1));
  return ds;
}

Dataset load_csv(const std::filesystem::path& path, Split split, const std::optional<ClassFrame>& frame) {
  return dataset_from_csv(read_text_file(path), split, frame, path.string());
}

nlohmann::ordered_json blob_spec_to_json(const BlobSpec& spec) {
  nlohmann::ordered_json doc;
  doc["num_classes"] = spec.num_classes;
  doc["dim"] = spec.dim;
  doc["samples_per_class"] = spec.samples_per_class;
  doc["separation"] = spec.separation;
  doc["spread"] = spec.spread;
  auto groups = nlohmann::ordered_json::array();
  for (const auto& g : spec.overlap_groups) {
    nlohmann::ordered_json j{{"classes", g.classes}};
    if (g.pull) j["pull"] = *g.pull;
    groups.push_back(std::move(j));
  }
  doc["overlap_groups"] = std::move(groups);
  doc["pull"] = spec.pull;
  doc["train_fraction"] = spec.train_fraction;
  doc["seed"] = spec.seed;
  return doc;
}

BlobSpec blob_spec_from_json(const nlohmann::json& doc) {
  BlobSpec spec;
  try {
    spec.num_classes = doc.value("num_classes", spec.num_classes);
    spec.dim = doc.value("dim", spec.dim);
    spec.samples_per_class = doc.value("samples_per_class", spec.samples_per_class);
    spec.separation = doc.value("separation", spec.separation);
    spec.spread = doc.value("spread", spec.spread);
    if (doc.contains("overlap_groups")) {
      spec.overlap_groups.clear();
      // Each group is either a list of classes or {"classes": [...], "pull": x}.
      for (const auto& g : doc.at("overlap_groups")) {
        OverlapGroup group;
        if (g.is_array()) {
          group.classes = g.get<std::vector<int>>();
        } else {
          group.classes = g.at("classes").get<std::vector<int>>();
          if (g.contains("pull")) group.pull = g.at("pull").get<double>();
        }
        spec.overlap_groups.push_back(std::move(group));
      }
    }
    spec.pull = doc.value("pull", spec.pull);
    spec.train_fraction = doc.value("train_fraction", spec.train_fraction);
    spec.seed = doc.value("seed", spec.seed);
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("malformed dataset parameters: ") + e.what());
  }
  spec.validate();
  return spec;
}

}  // namespace evidential
