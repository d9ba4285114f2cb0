#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "evidential/io_util.hpp"
#include "evidential/pipeline.hpp"

namespace {

using evidential::PipelineConfig;
using evidential::StageResult;

struct Overrides {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<int> k;
  std::optional<int> max_card;
  std::optional<std::size_t> mc_samples;
  std::optional<double> alpha;
  std::optional<double> beta;
  std::optional<std::vector<double>> scales;
  std::optional<std::string> head;
  std::optional<std::string> loss;
  std::optional<std::string> out_dir;
  std::optional<int> epochs;
  std::optional<double> dropout;
  bool warm_start = false;
};

PipelineConfig resolve(const Overrides& o) {
  PipelineConfig cfg;
  if (!o.config_path.empty()) {
    cfg = evidential::config_from_json(nlohmann::json::parse(evidential::read_text_file(o.config_path)));
  }
  if (o.seed) cfg.seed = *o.seed;
  if (o.k) cfg.budget.k = *o.k;
  if (o.max_card) cfg.budget.max_card = *o.max_card;
  if (o.mc_samples) cfg.budget.n_samples = *o.mc_samples;
  if (o.alpha) cfg.rs_train.loss.alpha = *o.alpha;
  if (o.beta) cfg.rs_train.loss.beta = *o.beta;
  if (o.scales) cfg.ood_scales = *o.scales;
  if (o.out_dir) cfg.out_dir = *o.out_dir;
  if (o.epochs) cfg.rs_train.epochs = *o.epochs;
  if (o.dropout) cfg.rs_train.dropout = *o.dropout;
  if (o.warm_start) cfg.warm_start = true;

  std::optional<evidential::HeadKind> loss_head;
  if (o.loss) {
    if (*o.loss == "bce-m") {
      loss_head = evidential::HeadKind::sigmoid_belief;
    } else if (*o.loss == "kl" || *o.loss == "nguyen") {
      loss_head = evidential::HeadKind::softmax_mass;
      cfg.rs_train.loss.mass_loss = *o.loss == "kl" ? evidential::MassLoss::kl : evidential::MassLoss::nguyen;
    }
  }
  if (o.head) {
    if (*o.head == "both") {
      cfg.rs_heads = {evidential::HeadKind::sigmoid_belief, evidential::HeadKind::softmax_mass};
    } else {
      const auto h = evidential::head_from_tag(*o.head);
      if (loss_head && *loss_head != h) {
        throw std::invalid_argument("--loss " + *o.loss + " does not apply to the " + *o.head + " head");
      }
      cfg.rs_heads = {h};
    }
  } else if (loss_head) {
    cfg.rs_heads = {*loss_head};
  }
  cfg.validate();
  return cfg;
}

void report(const StageResult& r) {
  std::cout << r.stage << ": " << (r.up_to_date ? "up to date" : "done") << "\n";
  if (!r.up_to_date) {
    for (const auto& out : r.outputs) std::cout << "  " << out << "\n";
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Evidential classification pipeline: budgeted belief-function heads, credal uncertainty and noise sweeps"};
  app.require_subcommand(1);
  app.fallthrough();

  Overrides o;
  app.add_option("--config", o.config_path, "JSON config file; flags override its values")->check(CLI::ExistingFile);
  app.add_option("--seed", o.seed, "Master seed; every stage seed derives from it");
  app.add_option("--k", o.k, "Number of non-singleton focal sets in the budget");
  app.add_option("--max-card", o.max_card, "Largest focal set cardinality considered");
  app.add_option("--mc-samples", o.mc_samples, "Monte-Carlo points per overlap estimate");
  app.add_option("--alpha", o.alpha, "Weight of the negative-mass penalty");
  app.add_option("--beta", o.beta, "Weight of the mass-excess penalty");
  app.add_option("--scales", o.scales, "Noise standard deviations for the sweep")->delimiter(',');
  app.add_option("--head", o.head, "Evidence head to train")->check(CLI::IsMember({"belief", "mass", "both"}));
  app.add_option("--loss", o.loss, "bce-m trains the belief head; kl and nguyen train the mass head")
      ->check(CLI::IsMember({"bce-m", "kl", "nguyen"}));
  app.add_option("--out-dir", o.out_dir, "Directory for all artifacts");
  app.add_option("--epochs", o.epochs, "Epochs for the evidence head");
  app.add_option("--dropout", o.dropout, "Dropout rate on the evidence head input");
  app.add_flag("--warm-start", o.warm_start, "Start the evidence net from the base net's hidden layers");

  auto* generate = app.add_subcommand("generate", "Write train/test CSVs and the generation manifest");
  auto* train_base = app.add_subcommand("train-base", "Train the softmax classifier used for features");
  auto* budget = app.add_subcommand("budget", "Select focal sets from class-ellipsoid overlaps");
  auto* train_rs = app.add_subcommand("train-rs", "Train the belief or mass head on the budget");
  auto* predict = app.add_subcommand("predict", "Write per-sample predictions as JSON lines");
  auto* evaluate = app.add_subcommand("evaluate", "Write the summary and plot CSVs");
  auto* ood = app.add_subcommand("ood-sweep", "Compare evidence and softmax nets under input noise");
  auto* sweep = app.add_subcommand("alpha-beta-sweep", "Retrain the belief head over a penalty-weight grid");
  auto* run_all = app.add_subcommand("run-all", "Run every stage, skipping those already up to date");
  auto* show = app.add_subcommand("show-config", "Print the effective configuration as JSON");

  std::optional<std::vector<double>> grid;
  std::string mode = "joint";
  sweep->add_option("--grid", grid, "Grid values")->delimiter(',');
  sweep->add_option("--mode", mode, "joint sets alpha = beta; alpha or beta varies one weight")
      ->check(CLI::IsMember({"joint", "alpha", "beta"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    // --help and --version come through here with code 0.
    return app.exit(e) == 0 ? 0 : 2;
  }

  try {
    auto cfg = resolve(o);
    if (grid) cfg.alpha_beta_grid = *grid;
    auto per_head = [&](auto stage) {
      for (auto h : cfg.rs_heads) report(stage(cfg, h));
    };
    if (*show) {
      std::cout << evidential::config_to_json(cfg).dump(2) << "\n";
    } else if (*generate) {
      report(evidential::stage_generate(cfg));
    } else if (*train_base) {
      report(evidential::stage_train_base(cfg));
    } else if (*budget) {
      report(evidential::stage_budget(cfg));
    } else if (*train_rs) {
      per_head(evidential::stage_train_rs);
    } else if (*predict) {
      per_head(evidential::stage_predict);
    } else if (*evaluate) {
      per_head(evidential::stage_evaluate);
    } else if (*ood) {
      per_head(evidential::stage_ood_sweep);
    } else if (*sweep) {
      report(evidential::stage_alpha_beta_sweep(cfg, evidential::sweep_mode_from_string(mode)));
    } else if (*run_all) {
      auto saved = evidential::config_to_json(cfg);
      saved.erase("out_dir");
      evidential::write_text_file(cfg.out_dir / "config.json", saved.dump(2) + "\n");
      evidential::run_all(cfg, report);
    }
  } catch (const evidential::StageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
