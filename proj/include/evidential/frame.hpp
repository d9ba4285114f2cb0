#pragma once

#include <bit>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

namespace evidential {

inline constexpr int kMaxClasses = 30;
inline constexpr int kMaxPowersetClasses = 12;

/// Ordered set of mutually exclusive class hypotheses. Label order defines
/// class indices 0..N-1.
class ClassFrame {
 public:
  explicit ClassFrame(std::vector<std::string> labels);

  /// Frame with labels "0", "1", ..., "n-1".
  static ClassFrame numbered(int num_classes);

  int size() const { return static_cast<int>(labels_.size()); }
  const std::string& label(int index) const { return labels_.at(static_cast<std::size_t>(index)); }
  const std::vector<std::string>& labels() const { return labels_; }
  std::optional<int> index_of(const std::string& label) const;

  bool operator==(const ClassFrame& other) const { return labels_ == other.labels_; }

 private:
  std::vector<std::string> labels_;
};

/// A subset of the class frame as a bitset: bit i set iff class i is in the set.
class SubsetMask {
 public:
  constexpr SubsetMask() = default;
  constexpr explicit SubsetMask(std::uint32_t bits) : bits_(bits) {}

  static constexpr SubsetMask singleton(int c) { return SubsetMask(std::uint32_t{1} << c); }
  static SubsetMask from_indices(const std::vector<int>& indices);
  /// Parses "2|5" style keys.
  static SubsetMask from_key(const std::string& key);

  constexpr std::uint32_t bits() const { return bits_; }
  constexpr int cardinality() const { return std::popcount(bits_); }
  constexpr bool empty() const { return bits_ == 0; }
  constexpr bool contains(int c) const { return (bits_ >> c) & 1U; }
  constexpr bool is_subset_of(SubsetMask other) const { return (bits_ & ~other.bits_) == 0; }
  constexpr bool intersects(SubsetMask other) const { return (bits_ & other.bits_) != 0; }

  std::vector<int> indices() const;
  /// Sorted class indices joined by '|', e.g. "2|5".
  std::string key() const;
  /// Labels joined by '|', e.g. "cat|dog".
  std::string describe(const ClassFrame& frame) const;

  friend constexpr bool operator==(SubsetMask a, SubsetMask b) { return a.bits_ == b.bits_; }
  friend constexpr bool operator!=(SubsetMask a, SubsetMask b) { return a.bits_ != b.bits_; }

 private:
  std::uint32_t bits_ = 0;
};

/// Strict weak ordering used everywhere sets are listed: cardinality first,
/// then numeric bitset value.
constexpr bool canonical_less(SubsetMask a, SubsetMask b) {
  if (a.cardinality() != b.cardinality()) return a.cardinality() < b.cardinality();
  return a.bits() < b.bits();
}

/// The ordered budget of focal sets: N singletons first (by class index),
/// then non-singletons by (cardinality, bits). Every evidence vector is
/// positionally aligned with this order.
class FocalFamily {
 public:
  const ClassFrame& frame() const { return frame_; }
  int num_classes() const { return frame_.size(); }
  std::size_t size() const { return sets_.size(); }
  const std::vector<SubsetMask>& sets() const { return sets_; }
  SubsetMask mask_at(std::size_t index) const { return sets_.at(index); }
  std::optional<std::size_t> index_of(SubsetMask mask) const;
  std::size_t singleton_index(int c) const { return static_cast<std::size_t>(c); }
  std::size_t num_nonsingletons() const { return sets_.size() - static_cast<std::size_t>(num_classes()); }

  /// True when the family holds all 2^N - 1 non-empty subsets.
  bool is_full_powerset() const { return full_powerset_; }

  /// Indices of family members that are strict subsets of member `index`,
  /// in canonical order.
  const std::vector<std::uint32_t>& strict_subsets(std::size_t index) const { return strict_subsets_[index]; }

  bool operator==(const FocalFamily& other) const {
    return frame_ == other.frame_ && sets_ == other.sets_;
  }

 private:
  friend FocalFamily make_family(const ClassFrame&, const std::vector<SubsetMask>&);
  FocalFamily(ClassFrame frame, std::vector<SubsetMask> sets);

  ClassFrame frame_;
  std::vector<SubsetMask> sets_;
  std::unordered_map<std::uint32_t, std::size_t> index_;
  std::vector<std::vector<std::uint32_t>> strict_subsets_;
  bool full_powerset_ = false;
};

using FamilyPtr = std::shared_ptr<const FocalFamily>;

/// Builds the canonical family from the frame's singletons plus the given
/// non-singletons (duplicates dropped). Throws std::invalid_argument on empty
/// masks, out-of-range bits, or singleton masks.
FocalFamily make_family(const ClassFrame& frame, const std::vector<SubsetMask>& nonsingletons);

/// All 2^N - 1 non-empty subsets. N must not exceed kMaxPowersetClasses.
FocalFamily full_powerset_family(const ClassFrame& frame);

FamilyPtr share(FocalFamily family);

// Budget file: {"labels": [...], "focal_sets": [[sorted class indices], ...]}.
// Singletons may be omitted on disk and are re-injected on load.
std::string budget_to_json(const FocalFamily& family);
FocalFamily budget_from_json(const std::string& text);
void save_budget(const FocalFamily& family, const std::filesystem::path& path);
FocalFamily load_budget(const std::filesystem::path& path);

}  // namespace evidential
