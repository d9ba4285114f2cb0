#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "evidential/budget.hpp"
#include "evidential/dataio.hpp"
#include "evidential/net.hpp"
#include "evidential/uncertainty.hpp"
#include "json.hpp"

namespace evidential {

/// Every stage seed is derived from `seed`; the per-stage seed fields of the
/// embedded option structs are ignored.
struct PipelineConfig {
  std::filesystem::path out_dir = "run";
  std::uint64_t seed = 7;
  BlobSpec data;
  std::vector<int> hidden{64, 32};
  TrainConfig base_train;
  TrainConfig rs_train;
  int pca_dims = 3;
  BudgetOptions budget;
  std::vector<HeadKind> rs_heads{HeadKind::sigmoid_belief};
  bool warm_start = false;
  std::vector<double> ood_scales{0.0, 0.2, 0.4, 0.6, 0.8};
  std::vector<double> alpha_beta_grid{0.5, 1.0, 1.5, 2.0, 2.5, 3.0, 3.5, 4.0, 4.5, 5.0};
  int histogram_bins = 20;
  int credal_plot_samples = 100;

  PipelineConfig();
  void validate() const;
};

nlohmann::ordered_json config_to_json(const PipelineConfig& cfg);
/// Missing keys keep their defaults; unknown keys are rejected.
PipelineConfig config_from_json(const nlohmann::json& doc);

// Stream ids for derive_seed(cfg.seed, id).
inline constexpr std::uint64_t kDataStream = 1;
inline constexpr std::uint64_t kBaseStream = 2;
inline constexpr std::uint64_t kBudgetStream = 3;
inline constexpr std::uint64_t kRsStream = 4;
inline constexpr std::uint64_t kNoiseStream = 5;

/// Short name used in file names and flags: "belief" or "mass".
std::string head_tag(HeadKind head);
HeadKind head_from_tag(const std::string& tag);

// In-memory building blocks.

TrainedModel train_base_model(const PipelineConfig& cfg, const Dataset& train);
BudgetResult build_budget(const PipelineConfig& cfg, const DenseNet& base, const Dataset& train,
                          Projection* projection = nullptr, std::vector<ClassEllipsoid>* ellipsoids = nullptr);
TrainedModel train_rs_model(const PipelineConfig& cfg, HeadKind head, const FamilyPtr& family, const Dataset& train,
                            const DenseNet* base = nullptr);

struct SampleEvaluation {
  int label = 0;
  int predicted = 0;
  bool degenerate = false;
  double mass_sum = 0.0;
  std::size_t clamped = 0;
  PignisticDistribution betp;
  CredalInterval interval;
  UncertaintyReport uncertainty;
};

struct Evaluation {
  std::vector<SampleEvaluation> samples;
  double accuracy = 0.0;
  double mean_entropy = 0.0;
  double mean_width = 0.0;
  std::optional<double> mean_entropy_correct;
  std::optional<double> mean_entropy_incorrect;
  std::optional<double> mean_width_correct;
  std::optional<double> mean_width_incorrect;
};

/// Pignistic decisions and uncertainty for every row of `ds`. A degenerate
/// (all-zero) repaired mass yields the uniform distribution and a [0, 1]
/// interval for every class.
Evaluation evaluate_model(const DenseNet& net, const Dataset& ds);

double class_accuracy(const DenseNet& net, const Dataset& ds);

struct OodRow {
  double scale = 0.0;
  double rs_accuracy = 0.0;
  double base_accuracy = 0.0;
  double mean_entropy = 0.0;
  double mean_credal_width = 0.0;
  double base_mean_entropy = 0.0;
};

/// Both models see the same noisy copy at each scale.
std::vector<OodRow> ood_sweep(const DenseNet& rs, const DenseNet& base, const Dataset& test,
                              const std::vector<double>& scales, std::uint64_t seed);
std::string ood_sweep_csv(const std::vector<OodRow>& rows);

enum class SweepMode { joint, alpha, beta };
SweepMode sweep_mode_from_string(const std::string& s);

struct SweepRow {
  double alpha = 0.0;
  double beta = 0.0;
  std::uint64_t seed = 0;
  double accuracy = 0.0;
  double mean_entropy = 0.0;
  double final_loss = 0.0;
};

/// One belief-head training per grid value with an identical seed. `joint`
/// sets alpha = beta = v; `alpha` and `beta` vary one and keep the other at
/// its configured value.
std::vector<SweepRow> alpha_beta_sweep(const PipelineConfig& cfg, const FamilyPtr& family, const Dataset& train,
                                       const Dataset& test, const std::vector<double>& grid, SweepMode mode,
                                       const DenseNet* base = nullptr);
std::string alpha_beta_csv(const std::vector<SweepRow>& rows);

// Report serialisation.

std::string predictions_jsonl(const DenseNet& net, const Dataset& ds, const Evaluation& eval);
nlohmann::ordered_json evaluation_summary(const DenseNet& net, const Evaluation& eval, int bins);
std::string credal_bounds_csv(const Evaluation& eval, int max_samples);
std::string uncertainty_csv(const Evaluation& eval);
std::string entropy_histogram_csv(const Evaluation& eval, int num_classes, int bins);
std::string specificity_cardinality_csv(const DenseNet& net, const Dataset& ds);
std::string ellipses_csv(const std::vector<ClassEllipsoid>& ellipsoids);

// File-backed stages. Each writes its artifacts under cfg.out_dir and a
// manifest in manifests/<stage>.json holding SHA-256 digests of its config,
// inputs and outputs; a stage whose manifest still matches is skipped.

std::string sha256_hex(std::string_view bytes);
std::string sha256_file(const std::filesystem::path& path);

class StageError : public std::runtime_error {
 public:
  StageError(std::string stage, const std::string& cause)
      : std::runtime_error("stage '" + stage + "' failed: " + cause), stage_(std::move(stage)) {}
  const std::string& stage() const { return stage_; }

 private:
  std::string stage_;
};

struct StageResult {
  std::string stage;
  bool up_to_date = false;
  std::vector<std::string> outputs;
};

using StageLog = std::function<void(const StageResult&)>;

namespace paths {
inline const std::filesystem::path train_csv = "data/train.csv";
inline const std::filesystem::path test_csv = "data/test.csv";
inline const std::filesystem::path dataset_json = "data/dataset.json";
inline const std::filesystem::path base_model = "models/base.json";
inline const std::filesystem::path budget_json = "budget/budget.json";
inline const std::filesystem::path overlap_csv = "budget/overlap_table.csv";
inline const std::filesystem::path ellipses_csv = "budget/ellipses.csv";
inline const std::filesystem::path projection_json = "budget/projection.json";
inline const std::filesystem::path alpha_beta_csv = "reports/alpha_beta_sweep.csv";
std::filesystem::path rs_model(HeadKind head);
std::filesystem::path report_dir(HeadKind head);
}  // namespace paths

StageResult stage_generate(const PipelineConfig& cfg);
StageResult stage_train_base(const PipelineConfig& cfg);
StageResult stage_budget(const PipelineConfig& cfg);
StageResult stage_train_rs(const PipelineConfig& cfg, HeadKind head);
StageResult stage_predict(const PipelineConfig& cfg, HeadKind head);
StageResult stage_evaluate(const PipelineConfig& cfg, HeadKind head);
StageResult stage_ood_sweep(const PipelineConfig& cfg, HeadKind head);
StageResult stage_alpha_beta_sweep(const PipelineConfig& cfg, SweepMode mode);

/// generate, train-base, budget, then train-rs, predict, evaluate and
/// ood-sweep for every configured head. Stops at the first failing stage.
std::vector<StageResult> run_all(const PipelineConfig& cfg, const StageLog& log = {});

}  // namespace evidential
