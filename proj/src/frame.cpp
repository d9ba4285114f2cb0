#include "evidential/frame.hpp"

#include <algorithm>
#include <set>
#include <stdexcept>

#include "json.hpp"

#include "evidential/io_util.hpp"

namespace evidential {

ClassFrame::ClassFrame(std::vector<std::string> labels) : labels_(std::move(labels)) {
  if (labels_.size() < 2) throw std::invalid_argument("class frame needs at least 2 classes");
  if (labels_.size() > static_cast<std::size_t>(kMaxClasses)) {
    throw std::invalid_argument("class frame supports at most " + std::to_string(kMaxClasses) + " classes, got " +
                                std::to_string(labels_.size()));
  }
  std::set<std::string> seen;
  for (const auto& l : labels_) {
    if (l.empty()) throw std::invalid_argument("class labels must be non-empty");
    if (!seen.insert(l).second) throw std::invalid_argument("duplicate class label '" + l + "'");
  }
}

ClassFrame ClassFrame::numbered(int num_classes) {
  std::vector<std::string> labels;
  for (int i = 0; i < num_classes; ++i) labels.push_back(std::to_string(i));
  return ClassFrame(std::move(labels));
}

std::optional<int> ClassFrame::index_of(const std::string& label) const {
  auto it = std::find(labels_.begin(), labels_.end(), label);
  if (it == labels_.end()) return std::nullopt;
  return static_cast<int>(it - labels_.begin());
}

SubsetMask SubsetMask::from_indices(const std::vector<int>& indices) {
  std::uint32_t bits = 0;
  for (int i : indices) {
    if (i < 0 || i >= kMaxClasses) throw std::invalid_argument("class index out of range: " + std::to_string(i));
    bits |= std::uint32_t{1} << i;
  }
  return SubsetMask(bits);
}

SubsetMask SubsetMask::from_key(const std::string& key) {
  std::vector<int> indices;
  for (const auto& part : split(key, '|')) {
    std::size_t used = 0;
    int value = -1;
    try {
      value = std::stoi(part, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != part.size() || part.empty()) throw std::invalid_argument("malformed subset key '" + key + "'");
    indices.push_back(value);
  }
  return from_indices(indices);
}

std::vector<int> SubsetMask::indices() const {
  std::vector<int> out;
  for (std::uint32_t rest = bits_; rest != 0; rest &= rest - 1) out.push_back(std::countr_zero(rest));
  return out;
}

std::string SubsetMask::key() const {
  std::string out;
  for (int i : indices()) {
    if (!out.empty()) out += '|';
    out += std::to_string(i);
  }
  return out;
}

std::string SubsetMask::describe(const ClassFrame& frame) const {
  std::string out;
  for (int i : indices()) {
    if (!out.empty()) out += '|';
    out += frame.label(i);
  }
  return out;
}

FocalFamily::FocalFamily(ClassFrame frame, std::vector<SubsetMask> sets)
    : frame_(std::move(frame)), sets_(std::move(sets)) {
  for (std::size_t i = 0; i < sets_.size(); ++i) index_.emplace(sets_[i].bits(), i);
  const int n = frame_.size();
  full_powerset_ = n <= kMaxPowersetClasses && sets_.size() == (std::size_t{1} << n) - 1;

  // Canonical order places every strict subset before its supersets.
  strict_subsets_.resize(sets_.size());
  for (std::size_t a = 0; a < sets_.size(); ++a) {
    for (std::size_t b = 0; b < a; ++b) {
      if (sets_[b].is_subset_of(sets_[a])) strict_subsets_[a].push_back(static_cast<std::uint32_t>(b));
    }
  }
}

std::optional<std::size_t> FocalFamily::index_of(SubsetMask mask) const {
  auto it = index_.find(mask.bits());
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

FocalFamily make_family(const ClassFrame& frame, const std::vector<SubsetMask>& nonsingletons) {
  const int n = frame.size();
  const std::uint32_t valid_bits = n == 32 ? ~std::uint32_t{0} : (std::uint32_t{1} << n) - 1;
  std::vector<SubsetMask> extra;
  extra.reserve(nonsingletons.size());
  for (auto mask : nonsingletons) {
    if (mask.empty()) throw std::invalid_argument("focal family cannot contain the empty set");
    if ((mask.bits() & ~valid_bits) != 0) {
      throw std::invalid_argument("subset " + mask.key() + " has a bit outside the " + std::to_string(n) +
                                  "-class frame");
    }
    if (mask.cardinality() == 1) {
      throw std::invalid_argument("singleton {" + mask.key() + "} passed as a non-singleton; singletons are implicit");
    }
    extra.push_back(mask);
  }
  std::sort(extra.begin(), extra.end(), canonical_less);
  extra.erase(std::unique(extra.begin(), extra.end()), extra.end());

  std::vector<SubsetMask> sets;
  sets.reserve(static_cast<std::size_t>(n) + extra.size());
  for (int c = 0; c < n; ++c) sets.push_back(SubsetMask::singleton(c));
  sets.insert(sets.end(), extra.begin(), extra.end());
  return FocalFamily(frame, std::move(sets));
}

FocalFamily full_powerset_family(const ClassFrame& frame) {
  const int n = frame.size();
  if (n > kMaxPowersetClasses) {
    throw std::invalid_argument("full powerset family limited to " + std::to_string(kMaxPowersetClasses) +
                                " classes, got " + std::to_string(n));
  }
  std::vector<SubsetMask> nonsingletons;
  for (std::uint32_t bits = 1; bits < (std::uint32_t{1} << n); ++bits) {
    if (std::popcount(bits) >= 2) nonsingletons.emplace_back(bits);
  }
  return make_family(frame, nonsingletons);
}

FamilyPtr share(FocalFamily family) { return std::make_shared<const FocalFamily>(std::move(family)); }

std::string budget_to_json(const FocalFamily& family) {
  nlohmann::ordered_json doc;
  doc["labels"] = family.frame().labels();
  auto sets = nlohmann::ordered_json::array();
  for (auto mask : family.sets()) sets.push_back(mask.indices());
  doc["focal_sets"] = std::move(sets);
  return doc.dump(2) + "\n";
}

FocalFamily budget_from_json(const std::string& text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("budget is not valid JSON: ") + e.what());
  }
  if (!doc.is_object() || !doc.contains("labels") || !doc.contains("focal_sets")) {
    throw std::invalid_argument("budget JSON needs \"labels\" and \"focal_sets\"");
  }
  try {
    ClassFrame frame(doc.at("labels").get<std::vector<std::string>>());
    std::vector<SubsetMask> nonsingletons;
    for (const auto& entry : doc.at("focal_sets")) {
      auto indices = entry.get<std::vector<int>>();
      for (int i : indices) {
        if (i < 0 || i >= frame.size()) {
          throw std::invalid_argument("focal set index " + std::to_string(i) + " outside the frame");
        }
      }
      auto mask = SubsetMask::from_indices(indices);
      if (mask.cardinality() >= 2 || mask.empty()) nonsingletons.push_back(mask);
    }
    return make_family(frame, nonsingletons);
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("malformed budget JSON: ") + e.what());
  }
}

void save_budget(const FocalFamily& family, const std::filesystem::path& path) {
  write_text_file(path, budget_to_json(family));
}

FocalFamily load_budget(const std::filesystem::path& path) {
  try {
    return budget_from_json(read_text_file(path));
  } catch (const std::exception& e) {
    throw std::invalid_argument("budget file " + path.string() + ": " + e.what());
  }
}

}  // namespace evidential
