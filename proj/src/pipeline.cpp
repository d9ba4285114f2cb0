#include "evidential/pipeline.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "evidential/credal.hpp"
#include "evidential/io_util.hpp"
#include "evidential/random.hpp"
#include "evidential/uncertainty.hpp"

namespace evidential {
namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

namespace {

ojson train_config_json(const TrainConfig& t) {
  ojson j;
  j["epochs"] = t.epochs;
  j["batch_size"] = t.batch_size;
  j["learning_rate"] = t.learning_rate;
  j["optimizer"] = to_string(t.optimizer);
  j["dropout"] = t.dropout;
  j["alpha"] = t.loss.alpha;
  j["beta"] = t.loss.beta;
  j["mass_loss"] = to_string(t.loss.mass_loss);
  j["kl_floor"] = t.loss.kl_floor;
  return j;
}

void reject_unknown(const nlohmann::json& doc, const std::set<std::string>& known, const std::string& where) {
  if (!doc.is_object()) throw std::invalid_argument(where + " must be a JSON object");
  for (const auto& [key, value] : doc.items()) {
    if (!known.contains(key)) throw std::invalid_argument("unknown key '" + key + "' in " + where);
  }
}

TrainConfig train_config_from_json(const nlohmann::json& j, TrainConfig t, const std::string& where) {
  reject_unknown(j, {"epochs", "batch_size", "learning_rate", "optimizer", "dropout", "alpha", "beta", "mass_loss",
                     "kl_floor"},
                 where);
  t.epochs = j.value("epochs", t.epochs);
  t.batch_size = j.value("batch_size", t.batch_size);
  t.learning_rate = j.value("learning_rate", t.learning_rate);
  if (j.contains("optimizer")) t.optimizer = optimizer_from_string(j["optimizer"].get<std::string>());
  t.dropout = j.value("dropout", t.dropout);
  t.loss.alpha = j.value("alpha", t.loss.alpha);
  t.loss.beta = j.value("beta", t.loss.beta);
  if (j.contains("mass_loss")) {
    const auto s = j["mass_loss"].get<std::string>();
    if (s == "kl") {
      t.loss.mass_loss = MassLoss::kl;
    } else if (s == "nguyen") {
      t.loss.mass_loss = MassLoss::nguyen;
    } else {
      throw std::invalid_argument("unknown mass_loss '" + s + "'");
    }
  }
  t.loss.kl_floor = j.value("kl_floor", t.loss.kl_floor);
  return t;
}

std::optional<double> mean_of(const std::vector<double>& v) {
  if (v.empty()) return std::nullopt;
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

ojson optional_json(const std::optional<double>& v) { return v ? ojson(*v) : ojson(nullptr); }

std::string csv_num(double v) { return format_double(v); }

MassFunction uniform_bayesian(const FamilyPtr& family) {
  std::vector<double> values(family->size(), 0.0);
  const int n = family->num_classes();
  for (int c = 0; c < n; ++c) values[family->singleton_index(c)] = 1.0 / n;
  return MassFunction(family, std::move(values));
}

ojson keyed(const FocalFamily& family, std::span<const double> values) {
  ojson j = ojson::object();
  for (std::size_t i = 0; i < family.size(); ++i) j[family.mask_at(i).key()] = values[i];
  return j;
}

ojson per_class(const ClassFrame& frame, const std::vector<double>& values) {
  ojson j = ojson::object();
  for (int c = 0; c < frame.size(); ++c) j[frame.label(c)] = values[static_cast<std::size_t>(c)];
  return j;
}

Dataset load_split(const PipelineConfig& cfg, const fs::path& rel, Split split) {
  return load_csv(cfg.out_dir / rel, split, ClassFrame::numbered(cfg.data.num_classes));
}

std::vector<int> rs_layer_dims(const PipelineConfig& cfg, int input, int output) {
  std::vector<int> dims{input};
  dims.insert(dims.end(), cfg.hidden.begin(), cfg.hidden.end());
  dims.push_back(output);
  return dims;
}

ojson metadata_json(const PipelineConfig& cfg, const TrainConfig& t, std::uint64_t seed, const ojson& stage_cfg,
                    const TrainedModel& trained) {
  ojson m;
  m["seed"] = seed;
  m["config_sha256"] = sha256_hex(stage_cfg.dump());
  m["train"] = train_config_json(t);
  m["hidden"] = cfg.hidden;
  m["initial_loss"] = trained.initial_loss;
  m["loss_trace"] = trained.loss_trace;
  return m;
}

ojson file_digests(const fs::path& root, const std::vector<fs::path>& rels) {
  ojson arr = ojson::array();
  for (const auto& rel : rels) arr.push_back({{"path", rel.generic_string()}, {"sha256", sha256_file(root / rel)}});
  return arr;
}

bool manifest_current(const fs::path& manifest_path, const fs::path& root, const std::string& config_hash,
                      const ojson& inputs, const std::vector<fs::path>& outputs) {
  if (!fs::exists(manifest_path)) return false;
  try {
    const auto doc = nlohmann::json::parse(read_text_file(manifest_path));
    if (doc.at("config_sha256").get<std::string>() != config_hash) return false;
    if (nlohmann::json::parse(inputs.dump()) != doc.at("inputs")) return false;
    const auto& recorded = doc.at("outputs");
    if (recorded.size() != outputs.size()) return false;
    for (std::size_t i = 0; i < outputs.size(); ++i) {
      const auto path = root / outputs[i];
      if (recorded[i].at("path").get<std::string>() != outputs[i].generic_string()) return false;
      if (!fs::exists(path) || sha256_file(path) != recorded[i].at("sha256").get<std::string>()) return false;
    }
    return true;
  } catch (const std::exception&) {
    return false;
  }
}

StageResult run_stage(const PipelineConfig& cfg, const std::string& name, const ojson& stage_cfg,
                      const std::vector<fs::path>& inputs, const std::vector<fs::path>& outputs,
                      const std::function<void()>& body) {
  const fs::path& root = cfg.out_dir;
  StageResult result{name, false, {}};
  for (const auto& o : outputs) result.outputs.push_back(o.generic_string());
  try {
    for (const auto& in : inputs) {
      if (!fs::exists(root / in)) {
        throw std::runtime_error("missing input " + (root / in).string() + "; run the earlier stages first");
      }
    }
    const auto manifest_path = root / "manifests" / (name + ".json");
    const auto config_hash = sha256_hex(stage_cfg.dump());
    const auto input_digests = file_digests(root, inputs);
    if (manifest_current(manifest_path, root, config_hash, input_digests, outputs)) {
      result.up_to_date = true;
      return result;
    }
    body();
    ojson manifest;
    manifest["stage"] = name;
    manifest["config"] = stage_cfg;
    manifest["config_sha256"] = config_hash;
    manifest["inputs"] = input_digests;
    manifest["outputs"] = file_digests(root, outputs);
    write_text_file(manifest_path, manifest.dump(2) + "\n");
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError(name, e.what());
  }
  return result;
}

ojson data_stage_config(const PipelineConfig& cfg) {
  BlobSpec spec = cfg.data;
  spec.seed = derive_seed(cfg.seed, kDataStream);
  return blob_spec_to_json(spec);
}

ojson base_stage_config(const PipelineConfig& cfg) {
  return ojson{{"seed", derive_seed(cfg.seed, kBaseStream)}, {"hidden", cfg.hidden},
               {"train", train_config_json(cfg.base_train)}};
}

ojson rs_stage_config(const PipelineConfig& cfg, HeadKind head) {
  return ojson{{"seed", derive_seed(cfg.seed, kRsStream)},
               {"head", to_string(head)},
               {"hidden", cfg.hidden},
               {"warm_start", cfg.warm_start},
               {"train", train_config_json(cfg.rs_train)}};
}

}  // namespace

PipelineConfig::PipelineConfig() {
  data.num_classes = 3;
  data.dim = 2;
  data.samples_per_class = 1000;
  data.separation = 3.92;
  base_train.epochs = 15;
  rs_train.epochs = 50;
}

void PipelineConfig::validate() const {
  data.validate();
  if (hidden.empty()) throw std::invalid_argument("at least one hidden layer is required");
  for (int h : hidden) {
    if (h < 1) throw std::invalid_argument("hidden widths must be positive");
  }
  for (const auto* t : {&base_train, &rs_train}) {
    if (t->epochs < 0 || t->batch_size < 1 || !(t->learning_rate >= 0.0)) {
      throw std::invalid_argument("epochs >= 0, batch_size >= 1 and learning_rate >= 0 required");
    }
    t->loss.validate();
  }
  if (pca_dims < 1) throw std::invalid_argument("pca_dims must be positive");
  if (budget.k < 1 || budget.max_card < 2 || budget.n_samples < 1) {
    throw std::invalid_argument("budget needs k >= 1, max_card >= 2 and n_samples >= 1");
  }
  if (rs_heads.empty()) throw std::invalid_argument("at least one evidence head is required");
  for (auto h : rs_heads) {
    if (h == HeadKind::softmax_class) throw std::invalid_argument("evidence heads are belief or mass");
  }
  for (double s : ood_scales) {
    if (!(s >= 0.0) || !std::isfinite(s)) throw std::invalid_argument("noise scales must be finite and >= 0");
  }
  for (double v : alpha_beta_grid) {
    if (!(v >= 0.0) || !std::isfinite(v)) throw std::invalid_argument("alpha/beta grid values must be finite and >= 0");
  }
  if (histogram_bins < 1 || credal_plot_samples < 0) throw std::invalid_argument("invalid report sizes");
}

ojson config_to_json(const PipelineConfig& cfg) {
  ojson j;
  j["out_dir"] = cfg.out_dir.generic_string();
  j["seed"] = cfg.seed;
  ojson data = blob_spec_to_json(cfg.data);
  data.erase("seed");
  j["data"] = data;
  j["hidden"] = cfg.hidden;
  j["base_train"] = train_config_json(cfg.base_train);
  j["rs_train"] = train_config_json(cfg.rs_train);
  j["pca_dims"] = cfg.pca_dims;
  j["budget"] = {{"k", cfg.budget.k}, {"max_card", cfg.budget.max_card}, {"n_samples", cfg.budget.n_samples}};
  auto heads = ojson::array();
  for (auto h : cfg.rs_heads) heads.push_back(head_tag(h));
  j["heads"] = heads;
  j["warm_start"] = cfg.warm_start;
  j["ood_scales"] = cfg.ood_scales;
  j["alpha_beta_grid"] = cfg.alpha_beta_grid;
  j["histogram_bins"] = cfg.histogram_bins;
  j["credal_plot_samples"] = cfg.credal_plot_samples;
  return j;
}

PipelineConfig config_from_json(const nlohmann::json& doc) {
  PipelineConfig cfg;
  try {
    reject_unknown(doc, {"out_dir", "seed", "data", "hidden", "base_train", "rs_train", "pca_dims", "budget", "heads",
                         "warm_start", "ood_scales", "alpha_beta_grid", "histogram_bins", "credal_plot_samples"},
                   "config");
    if (doc.contains("out_dir")) cfg.out_dir = doc["out_dir"].get<std::string>();
    cfg.seed = doc.value("seed", cfg.seed);
    if (doc.contains("data")) {
      reject_unknown(doc["data"], {"num_classes", "dim", "samples_per_class", "separation", "spread", "overlap_groups",
                                   "pull", "train_fraction"},
                     "data");
      nlohmann::json merged = nlohmann::json::parse(blob_spec_to_json(cfg.data).dump());
      merged.update(doc["data"]);
      cfg.data = blob_spec_from_json(merged);
    }
    cfg.hidden = doc.value("hidden", cfg.hidden);
    if (doc.contains("base_train")) cfg.base_train = train_config_from_json(doc["base_train"], cfg.base_train, "base_train");
    if (doc.contains("rs_train")) cfg.rs_train = train_config_from_json(doc["rs_train"], cfg.rs_train, "rs_train");
    cfg.pca_dims = doc.value("pca_dims", cfg.pca_dims);
    if (doc.contains("budget")) {
      const auto& b = doc["budget"];
      reject_unknown(b, {"k", "max_card", "n_samples"}, "budget");
      cfg.budget.k = b.value("k", cfg.budget.k);
      cfg.budget.max_card = b.value("max_card", cfg.budget.max_card);
      cfg.budget.n_samples = b.value("n_samples", cfg.budget.n_samples);
    }
    if (doc.contains("heads")) {
      cfg.rs_heads.clear();
      for (const auto& h : doc["heads"]) cfg.rs_heads.push_back(head_from_tag(h.get<std::string>()));
    }
    cfg.warm_start = doc.value("warm_start", cfg.warm_start);
    cfg.ood_scales = doc.value("ood_scales", cfg.ood_scales);
    cfg.alpha_beta_grid = doc.value("alpha_beta_grid", cfg.alpha_beta_grid);
    cfg.histogram_bins = doc.value("histogram_bins", cfg.histogram_bins);
    cfg.credal_plot_samples = doc.value("credal_plot_samples", cfg.credal_plot_samples);
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("malformed config: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

std::string head_tag(HeadKind head) {
  switch (head) {
    case HeadKind::sigmoid_belief:
      return "belief";
    case HeadKind::softmax_mass:
      return "mass";
    case HeadKind::softmax_class:
      return "class";
  }
  return "?";
}

HeadKind head_from_tag(const std::string& tag) {
  if (tag == "belief") return HeadKind::sigmoid_belief;
  if (tag == "mass") return HeadKind::softmax_mass;
  throw std::invalid_argument("unknown head '" + tag + "' (expected belief or mass)");
}

TrainedModel train_base_model(const PipelineConfig& cfg, const Dataset& train) {
  const auto seed = derive_seed(cfg.seed, kBaseStream);
  auto net = DenseNet::create(rs_layer_dims(cfg, train.dim(), train.frame.size()), HeadKind::softmax_class, nullptr,
                              derive_seed(seed, 0));
  TrainConfig t = cfg.base_train;
  t.seed = derive_seed(seed, 1);
  return evidential::train(std::move(net), train.features, train.labels, t);
}

BudgetResult build_budget(const PipelineConfig& cfg, const DenseNet& base, const Dataset& train,
                          Projection* projection, std::vector<ClassEllipsoid>* ellipsoids) {
  auto proj = reduce_features(extract_features(base, train.features), cfg.pca_dims);
  auto ells = fit_ellipsoids(proj.embedded, train.labels, train.frame);
  BudgetOptions opts = cfg.budget;
  opts.seed = derive_seed(cfg.seed, kBudgetStream);
  auto result = select_focal_sets(train.frame, ells, opts);
  result.warnings.insert(result.warnings.begin(), proj.warnings.begin(), proj.warnings.end());
  if (projection) *projection = std::move(proj);
  if (ellipsoids) *ellipsoids = std::move(ells);
  return result;
}

TrainedModel train_rs_model(const PipelineConfig& cfg, HeadKind head, const FamilyPtr& family, const Dataset& train,
                            const DenseNet* base) {
  const auto seed = derive_seed(cfg.seed, kRsStream);
  TrainConfig t = cfg.rs_train;
  t.seed = derive_seed(seed, 1);
  t.loss.head = head == HeadKind::sigmoid_belief ? TargetHead::belief : TargetHead::mass;
  if (cfg.warm_start && !base) throw std::invalid_argument("warm start needs the base model");
  DenseNet net = cfg.warm_start ? base->with_new_head(head, family, derive_seed(seed, 0))
                                : DenseNet::create(rs_layer_dims(cfg, train.dim(), static_cast<int>(family->size())),
                                                   head, family, derive_seed(seed, 0));
  return evidential::train(std::move(net), train.features, train.labels, t);
}

Evaluation evaluate_model(const DenseNet& net, const Dataset& ds) {
  if (net.num_classes() != ds.frame.size()) throw std::invalid_argument("model and dataset frames differ in size");
  const auto preds = predict(net, ds.features);
  const int n = net.num_classes();
  Evaluation ev;
  std::vector<double> ent_ok, ent_bad, width_ok, width_bad;
  std::size_t correct = 0;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const auto& p = preds[i];
    bool degenerate = false;
    auto betp = pignistic_or_uniform(p.mass_raw, degenerate);
    const int predicted = betp.argmax();
    CredalInterval interval = degenerate ? CredalInterval{ds.frame, std::vector<double>(static_cast<std::size_t>(n), 0.0),
                                                          std::vector<double>(static_cast<std::size_t>(n), 1.0),
                                                          std::vector<double>(static_cast<std::size_t>(n), 1.0)}
                                         : credal_bounds(p.repaired.mass);
    const auto report = uncertainty_report(degenerate ? uniform_bayesian(net.family()) : p.repaired.mass, betp,
                                           interval, predicted);
    SampleEvaluation s{ds.labels[i], predicted, degenerate, p.mass_raw.sum(), p.repaired.clamped_count,
                       std::move(betp), std::move(interval), report};
    const bool ok = s.predicted == s.label;
    correct += ok ? 1 : 0;
    (ok ? ent_ok : ent_bad).push_back(s.uncertainty.pignistic_entropy);
    (ok ? width_ok : width_bad).push_back(s.uncertainty.credal_width_pred);
    ev.samples.push_back(std::move(s));
  }
  const double count = static_cast<double>(preds.size());
  ev.accuracy = count > 0 ? static_cast<double>(correct) / count : 0.0;
  std::vector<double> all_ent(ent_ok), all_width(width_ok);
  all_ent.insert(all_ent.end(), ent_bad.begin(), ent_bad.end());
  all_width.insert(all_width.end(), width_bad.begin(), width_bad.end());
  ev.mean_entropy = mean_of(all_ent).value_or(0.0);
  ev.mean_width = mean_of(all_width).value_or(0.0);
  ev.mean_entropy_correct = mean_of(ent_ok);
  ev.mean_entropy_incorrect = mean_of(ent_bad);
  ev.mean_width_correct = mean_of(width_ok);
  ev.mean_width_incorrect = mean_of(width_bad);
  return ev;
}

double class_accuracy(const DenseNet& net, const Dataset& ds) {
  const auto pred = predict_classes(net, ds.features);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) correct += pred[i] == ds.labels[i] ? 1 : 0;
  return pred.empty() ? 0.0 : static_cast<double>(correct) / static_cast<double>(pred.size());
}

std::vector<OodRow> ood_sweep(const DenseNet& rs, const DenseNet& base, const Dataset& test,
                              const std::vector<double>& scales, std::uint64_t seed) {
  if (rs.num_classes() != base.num_classes()) throw std::invalid_argument("models are trained on different frames");
  std::vector<OodRow> rows;
  for (double scale : scales) {
    // Same seed at every scale: the copies differ only in noise magnitude.
    const auto noisy = perturb_noise(test, scale, seed);
    const auto ev = evaluate_model(rs, noisy);
    const Eigen::MatrixXd probs = forward(base, noisy.features).output();
    double base_entropy = 0.0;
    std::size_t correct = 0;
    for (Eigen::Index r = 0; r < probs.rows(); ++r) {
      std::vector<double> row(static_cast<std::size_t>(probs.cols()));
      for (Eigen::Index c = 0; c < probs.cols(); ++c) row[static_cast<std::size_t>(c)] = probs(r, c);
      base_entropy += shannon_entropy_bits(row);
      Eigen::Index arg = 0;
      probs.row(r).maxCoeff(&arg);
      correct += static_cast<int>(arg) == noisy.labels[static_cast<std::size_t>(r)] ? 1 : 0;
    }
    const double n = static_cast<double>(probs.rows());
    rows.push_back(OodRow{scale, ev.accuracy, static_cast<double>(correct) / n, ev.mean_entropy, ev.mean_width,
                          base_entropy / n});
  }
  return rows;
}

std::string ood_sweep_csv(const std::vector<OodRow>& rows) {
  std::string out = "scale,rs_accuracy,base_accuracy,mean_entropy,mean_credal_width,base_mean_entropy\n";
  for (const auto& r : rows) {
    out += csv_num(r.scale) + "," + csv_num(r.rs_accuracy) + "," + csv_num(r.base_accuracy) + "," +
           csv_num(r.mean_entropy) + "," + csv_num(r.mean_credal_width) + "," + csv_num(r.base_mean_entropy) + "\n";
  }
  return out;
}

SweepMode sweep_mode_from_string(const std::string& s) {
  if (s == "joint") return SweepMode::joint;
  if (s == "alpha") return SweepMode::alpha;
  if (s == "beta") return SweepMode::beta;
  throw std::invalid_argument("unknown sweep mode '" + s + "' (expected joint, alpha or beta)");
}

std::vector<SweepRow> alpha_beta_sweep(const PipelineConfig& cfg, const FamilyPtr& family, const Dataset& train,
                                       const Dataset& test, const std::vector<double>& grid, SweepMode mode,
                                       const DenseNet* base) {
  std::vector<SweepRow> rows;
  for (double v : grid) {
    PipelineConfig local = cfg;
    if (mode != SweepMode::beta) local.rs_train.loss.alpha = v;
    if (mode != SweepMode::alpha) local.rs_train.loss.beta = v;
    const auto trained = train_rs_model(local, HeadKind::sigmoid_belief, family, train, base);
    const auto ev = evaluate_model(trained.net, test);
    rows.push_back(SweepRow{local.rs_train.loss.alpha, local.rs_train.loss.beta, derive_seed(cfg.seed, kRsStream),
                            ev.accuracy, ev.mean_entropy,
                            trained.loss_trace.empty() ? trained.initial_loss : trained.loss_trace.back()});
  }
  return rows;
}

std::string alpha_beta_csv(const std::vector<SweepRow>& rows) {
  std::string out = "alpha,beta,seed,accuracy,mean_entropy,final_loss\n";
  for (const auto& r : rows) {
    out += csv_num(r.alpha) + "," + csv_num(r.beta) + "," + std::to_string(r.seed) + "," + csv_num(r.accuracy) + "," +
           csv_num(r.mean_entropy) + "," + csv_num(r.final_loss) + "\n";
  }
  return out;
}

std::string predictions_jsonl(const DenseNet& net, const Dataset& ds, const Evaluation& eval) {
  const auto preds = predict(net, ds.features);
  const auto& family = *net.family();
  std::string out;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const auto& p = preds[i];
    const auto& s = eval.samples.at(i);
    ojson j;
    j["index"] = i;
    j["label"] = s.label;
    j["predicted"] = s.predicted;
    j["correct"] = s.label == s.predicted;
    j["belief"] = keyed(family, p.belief.values());
    j["mass_raw"] = keyed(family, p.mass_raw.values());
    j["mass_repaired"] = keyed(family, p.repaired.mass.values());
    j["pignistic"] = s.betp.probs;
    j["flags"] = {{"valid", p.mass_raw.is_valid()},
                  {"degenerate", s.degenerate},
                  {"clamped", s.clamped},
                  {"mass_sum", s.mass_sum},
                  {"monotonicity_violations", p.belief.monotonicity_violations()}};
    j["uncertainty"] = {{"pignistic_entropy", s.uncertainty.pignistic_entropy},
                        {"nguyen_entropy", s.uncertainty.nguyen_entropy},
                        {"pal_specificity", s.uncertainty.pal_specificity},
                        {"credal_width_pred", s.uncertainty.credal_width_pred}};
    j["credal"] = {{"lower", per_class(ds.frame, s.interval.lower)},
                   {"upper", per_class(ds.frame, s.interval.upper)},
                   {"width", per_class(ds.frame, s.interval.width)}};
    out += j.dump() + "\n";
  }
  return out;
}

ojson evaluation_summary(const DenseNet& net, const Evaluation& eval, int bins) {
  ojson j;
  j["head"] = head_tag(net.head());
  j["samples"] = eval.samples.size();
  j["accuracy"] = eval.accuracy;
  std::size_t degenerate = 0, repaired = 0;
  std::vector<double> nguyen, pal;
  constexpr double lo = 0.0, hi = 2.0;
  std::vector<std::size_t> counts(static_cast<std::size_t>(bins), 0);
  std::size_t below = 0, above = 0;
  const int n = net.num_classes();
  std::vector<std::size_t> support(static_cast<std::size_t>(n), 0), hits(static_cast<std::size_t>(n), 0);
  std::vector<double> width_sum(static_cast<std::size_t>(n), 0.0);
  for (const auto& s : eval.samples) {
    degenerate += s.degenerate ? 1 : 0;
    repaired += s.clamped > 0 ? 1 : 0;
    nguyen.push_back(s.uncertainty.nguyen_entropy);
    pal.push_back(s.uncertainty.pal_specificity);
    if (s.mass_sum < lo) {
      ++below;
    } else if (s.mass_sum >= hi) {
      ++above;
    } else {
      const auto b = std::min(static_cast<std::size_t>((s.mass_sum - lo) / (hi - lo) * bins), counts.size() - 1);
      ++counts[b];
    }
    const auto y = static_cast<std::size_t>(s.label);
    ++support[y];
    hits[y] += s.predicted == s.label ? 1 : 0;
    width_sum[y] += s.interval.width[y];
  }
  j["degenerate_count"] = degenerate;
  j["negative_mass_samples"] = repaired;
  j["mean_pignistic_entropy"] = {{"all", eval.mean_entropy},
                                 {"correct", optional_json(eval.mean_entropy_correct)},
                                 {"incorrect", optional_json(eval.mean_entropy_incorrect)}};
  j["mean_credal_width"] = {{"all", eval.mean_width},
                            {"correct", optional_json(eval.mean_width_correct)},
                            {"incorrect", optional_json(eval.mean_width_incorrect)}};
  j["mean_nguyen_entropy"] = optional_json(mean_of(nguyen));
  j["mean_pal_specificity"] = optional_json(mean_of(pal));
  std::vector<double> edges;
  for (int b = 0; b <= bins; ++b) edges.push_back(lo + (hi - lo) * b / bins);
  j["mass_sum_histogram"] = {{"edges", edges}, {"counts", counts}, {"below", below}, {"above", above}};
  auto classes = ojson::array();
  for (int c = 0; c < n; ++c) {
    const auto i = static_cast<std::size_t>(c);
    const double sup = static_cast<double>(support[i]);
    classes.push_back({{"label", c},
                       {"support", support[i]},
                       {"accuracy", support[i] ? ojson(static_cast<double>(hits[i]) / sup) : ojson(nullptr)},
                       {"mean_true_class_width", support[i] ? ojson(width_sum[i] / sup) : ojson(nullptr)}});
  }
  j["per_class"] = classes;
  return j;
}

std::string credal_bounds_csv(const Evaluation& eval, int max_samples) {
  std::string out = "sample_id,true_class,pred_class,class,lower,upper,width,betp\n";
  const auto limit = std::min(eval.samples.size(), static_cast<std::size_t>(max_samples));
  for (std::size_t i = 0; i < limit; ++i) {
    const auto& s = eval.samples[i];
    for (std::size_t c = 0; c < s.interval.lower.size(); ++c) {
      out += std::to_string(i) + "," + std::to_string(s.label) + "," + std::to_string(s.predicted) + "," +
             std::to_string(c) + "," + csv_num(s.interval.lower[c]) + "," + csv_num(s.interval.upper[c]) + "," +
             csv_num(s.interval.width[c]) + "," + csv_num(s.betp.probs[c]) + "\n";
    }
  }
  return out;
}

std::string uncertainty_csv(const Evaluation& eval) {
  std::string out = "sample_id,correct,entropy,nguyen,specificity,credal_width,true_class,pred_class,mass_sum\n";
  for (std::size_t i = 0; i < eval.samples.size(); ++i) {
    const auto& s = eval.samples[i];
    out += std::to_string(i) + "," + (s.label == s.predicted ? "1" : "0") + "," +
           csv_num(s.uncertainty.pignistic_entropy) + "," + csv_num(s.uncertainty.nguyen_entropy) + "," +
           csv_num(s.uncertainty.pal_specificity) + "," + csv_num(s.uncertainty.credal_width_pred) + "," +
           std::to_string(s.label) + "," + std::to_string(s.predicted) + "," + csv_num(s.mass_sum) + "\n";
  }
  return out;
}

std::string entropy_histogram_csv(const Evaluation& eval, int num_classes, int bins) {
  const double hi = std::log2(static_cast<double>(num_classes));
  std::vector<std::size_t> ok(static_cast<std::size_t>(bins), 0), bad(static_cast<std::size_t>(bins), 0);
  for (const auto& s : eval.samples) {
    const double h = std::clamp(s.uncertainty.pignistic_entropy, 0.0, hi);
    const auto b = std::min(static_cast<std::size_t>(h / hi * bins), ok.size() - 1);
    ++(s.label == s.predicted ? ok : bad)[b];
  }
  std::string out = "bin_lo,bin_hi,correct,incorrect\n";
  for (int b = 0; b < bins; ++b) {
    const auto i = static_cast<std::size_t>(b);
    out += csv_num(hi * b / bins) + "," + csv_num(hi * (b + 1) / bins) + "," + std::to_string(ok[i]) + "," +
           std::to_string(bad[i]) + "\n";
  }
  return out;
}

std::string specificity_cardinality_csv(const DenseNet& net, const Dataset& ds) {
  const auto preds = predict(net, ds.features);
  const auto& family = *net.family();
  std::vector<std::size_t> sets(static_cast<std::size_t>(family.num_classes() + 1), 0);
  std::vector<double> mass(sets.size(), 0.0);
  for (std::size_t i = 0; i < family.size(); ++i) ++sets[static_cast<std::size_t>(family.mask_at(i).cardinality())];
  for (const auto& p : preds) {
    for (std::size_t i = 0; i < family.size(); ++i) {
      mass[static_cast<std::size_t>(family.mask_at(i).cardinality())] += p.repaired.mass[i];
    }
  }
  std::string out = "cardinality,sets,mean_total_mass\n";
  for (std::size_t k = 1; k < sets.size(); ++k) {
    if (sets[k] == 0) continue;
    out += std::to_string(k) + "," + std::to_string(sets[k]) + "," +
           csv_num(preds.empty() ? 0.0 : mass[k] / static_cast<double>(preds.size())) + "\n";
  }
  return out;
}

std::string ellipses_csv(const std::vector<ClassEllipsoid>& ellipsoids) {
  std::string out = "class,center_x,center_y,semi_major,semi_minor,angle\n";
  for (const auto& e : ellipsoids) {
    if (e.dims() < 2) break;
    const auto p = project_ellipse_2d(e);
    out += std::to_string(p.class_id) + "," + csv_num(p.center_x) + "," + csv_num(p.center_y) + "," +
           csv_num(p.semi_major) + "," + csv_num(p.semi_minor) + "," + csv_num(p.angle) + "\n";
  }
  return out;
}

std::string sha256_hex(std::string_view bytes) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr) != 1) {
    throw std::runtime_error("SHA-256 digest failed");
  }
  static constexpr char hex[] = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[md[i] >> 4];
    out += hex[md[i] & 0xF];
  }
  return out;
}

std::string sha256_file(const fs::path& path) { return sha256_hex(read_text_file(path)); }

namespace paths {
fs::path rs_model(HeadKind head) { return fs::path("models") / ("rs_" + head_tag(head) + ".json"); }
fs::path report_dir(HeadKind head) { return fs::path("reports") / head_tag(head); }
}  // namespace paths

StageResult stage_generate(const PipelineConfig& cfg) {
  const auto stage_cfg = data_stage_config(cfg);
  return run_stage(cfg, "generate", stage_cfg, {}, {paths::train_csv, paths::test_csv, paths::dataset_json}, [&] {
    BlobSpec spec = cfg.data;
    spec.seed = derive_seed(cfg.seed, kDataStream);
    const auto data = gen_blobs(spec);
    save_csv(data.train, cfg.out_dir / paths::train_csv);
    save_csv(data.test, cfg.out_dir / paths::test_csv);
    ojson manifest;
    manifest["generator"] = "gaussian_blobs";
    manifest["parameters"] = stage_cfg;
    std::vector<std::vector<double>> means;
    for (Eigen::Index r = 0; r < data.means.rows(); ++r) {
      means.emplace_back();
      for (Eigen::Index c = 0; c < data.means.cols(); ++c) means.back().push_back(data.means(r, c));
    }
    manifest["class_means"] = means;
    manifest["train_rows"] = data.train.size();
    manifest["test_rows"] = data.test.size();
    write_text_file(cfg.out_dir / paths::dataset_json, manifest.dump(2) + "\n");
  });
}

StageResult stage_train_base(const PipelineConfig& cfg) {
  const auto stage_cfg = base_stage_config(cfg);
  return run_stage(cfg, "train-base", stage_cfg, {paths::train_csv}, {paths::base_model}, [&] {
    const auto train = load_split(cfg, paths::train_csv, Split::train);
    const auto trained = train_base_model(cfg, train);
    save_model(trained.net, metadata_json(cfg, cfg.base_train, derive_seed(cfg.seed, kBaseStream), stage_cfg, trained),
               cfg.out_dir / paths::base_model);
  });
}

StageResult stage_budget(const PipelineConfig& cfg) {
  const ojson stage_cfg{{"seed", derive_seed(cfg.seed, kBudgetStream)},
                        {"pca_dims", cfg.pca_dims},
                        {"k", cfg.budget.k},
                        {"max_card", cfg.budget.max_card},
                        {"n_samples", cfg.budget.n_samples}};
  return run_stage(cfg, "budget", stage_cfg, {paths::train_csv, paths::base_model},
                   {paths::budget_json, paths::overlap_csv, paths::ellipses_csv, paths::projection_json}, [&] {
                     const auto train = load_split(cfg, paths::train_csv, Split::train);
                     const auto base = load_model(cfg.out_dir / paths::base_model);
                     Projection proj;
                     std::vector<ClassEllipsoid> ells;
                     const auto result = build_budget(cfg, base, train, &proj, &ells);
                     save_budget(result.family, cfg.out_dir / paths::budget_json);
                     write_text_file(cfg.out_dir / paths::overlap_csv, overlap_table_csv(result.table));
                     write_text_file(cfg.out_dir / paths::ellipses_csv, ellipses_csv(ells));
                     ojson info;
                     info["explained_variance"] =
                         std::vector<double>(proj.explained_variance.data(),
                                             proj.explained_variance.data() + proj.explained_variance.size());
                     info["cardinality_reached"] = result.table.cardinality_reached;
                     info["warnings"] = result.warnings;
                     write_text_file(cfg.out_dir / paths::projection_json, info.dump(2) + "\n");
                   });
}

StageResult stage_train_rs(const PipelineConfig& cfg, HeadKind head) {
  const auto stage_cfg = rs_stage_config(cfg, head);
  std::vector<fs::path> inputs{paths::train_csv, paths::budget_json};
  if (cfg.warm_start) inputs.push_back(paths::base_model);
  return run_stage(cfg, "train-rs-" + head_tag(head), stage_cfg, inputs, {paths::rs_model(head)}, [&] {
    const auto train = load_split(cfg, paths::train_csv, Split::train);
    const auto family = share(load_budget(cfg.out_dir / paths::budget_json));
    if (!(family->frame() == train.frame)) throw std::invalid_argument("budget frame does not match the dataset");
    std::optional<DenseNet> base;
    if (cfg.warm_start) base = load_model(cfg.out_dir / paths::base_model);
    const auto trained = train_rs_model(cfg, head, family, train, base ? &*base : nullptr);
    TrainConfig t = cfg.rs_train;
    t.loss.head = head == HeadKind::sigmoid_belief ? TargetHead::belief : TargetHead::mass;
    save_model(trained.net, metadata_json(cfg, t, derive_seed(cfg.seed, kRsStream), stage_cfg, trained),
               cfg.out_dir / paths::rs_model(head));
  });
}

namespace {

DenseNet load_checked_rs(const PipelineConfig& cfg, HeadKind head) {
  auto net = load_model(cfg.out_dir / paths::rs_model(head));
  const auto budget = load_budget(cfg.out_dir / paths::budget_json);
  if (!net.family() || !(*net.family() == budget)) {
    throw std::invalid_argument("model " + (cfg.out_dir / paths::rs_model(head)).string() +
                                " was trained on a different focal family than " +
                                (cfg.out_dir / paths::budget_json).string());
  }
  return net;
}

}  // namespace

StageResult stage_predict(const PipelineConfig& cfg, HeadKind head) {
  const auto dir = paths::report_dir(head);
  return run_stage(cfg, "predict-" + head_tag(head), ojson{{"head", head_tag(head)}},
                   {paths::rs_model(head), paths::budget_json, paths::test_csv}, {dir / "predictions.jsonl"}, [&] {
                     const auto net = load_checked_rs(cfg, head);
                     const auto test = load_split(cfg, paths::test_csv, Split::test);
                     const auto ev = evaluate_model(net, test);
                     write_text_file(cfg.out_dir / dir / "predictions.jsonl", predictions_jsonl(net, test, ev));
                   });
}

StageResult stage_evaluate(const PipelineConfig& cfg, HeadKind head) {
  const auto dir = paths::report_dir(head);
  const ojson stage_cfg{{"head", head_tag(head)},
                        {"histogram_bins", cfg.histogram_bins},
                        {"credal_plot_samples", cfg.credal_plot_samples}};
  return run_stage(cfg, "evaluate-" + head_tag(head), stage_cfg,
                   {paths::rs_model(head), paths::budget_json, paths::test_csv},
                   {dir / "summary.json", dir / "credal_bounds.csv", dir / "uncertainty.csv",
                    dir / "entropy_histogram.csv", dir / "specificity_cardinality.csv"},
                   [&] {
                     const auto net = load_checked_rs(cfg, head);
                     const auto test = load_split(cfg, paths::test_csv, Split::test);
                     const auto ev = evaluate_model(net, test);
                     const auto root = cfg.out_dir / dir;
                     write_text_file(root / "summary.json",
                                     evaluation_summary(net, ev, cfg.histogram_bins).dump(2) + "\n");
                     write_text_file(root / "credal_bounds.csv", credal_bounds_csv(ev, cfg.credal_plot_samples));
                     write_text_file(root / "uncertainty.csv", uncertainty_csv(ev));
                     write_text_file(root / "entropy_histogram.csv",
                                     entropy_histogram_csv(ev, net.num_classes(), cfg.histogram_bins));
                     write_text_file(root / "specificity_cardinality.csv", specificity_cardinality_csv(net, test));
                   });
}

StageResult stage_ood_sweep(const PipelineConfig& cfg, HeadKind head) {
  const auto dir = paths::report_dir(head);
  const ojson stage_cfg{{"head", head_tag(head)}, {"scales", cfg.ood_scales},
                        {"seed", derive_seed(cfg.seed, kNoiseStream)}};
  return run_stage(cfg, "ood-sweep-" + head_tag(head), stage_cfg,
                   {paths::rs_model(head), paths::base_model, paths::budget_json, paths::test_csv},
                   {dir / "ood_sweep.csv"}, [&] {
                     const auto rs = load_checked_rs(cfg, head);
                     const auto base = load_model(cfg.out_dir / paths::base_model);
                     const auto test = load_split(cfg, paths::test_csv, Split::test);
                     const auto rows = ood_sweep(rs, base, test, cfg.ood_scales, derive_seed(cfg.seed, kNoiseStream));
                     write_text_file(cfg.out_dir / dir / "ood_sweep.csv", ood_sweep_csv(rows));
                   });
}

StageResult stage_alpha_beta_sweep(const PipelineConfig& cfg, SweepMode mode) {
  static constexpr const char* mode_names[] = {"joint", "alpha", "beta"};
  ojson stage_cfg = rs_stage_config(cfg, HeadKind::sigmoid_belief);
  stage_cfg["grid"] = cfg.alpha_beta_grid;
  stage_cfg["mode"] = mode_names[static_cast<int>(mode)];
  std::vector<fs::path> inputs{paths::train_csv, paths::test_csv, paths::budget_json};
  if (cfg.warm_start) inputs.push_back(paths::base_model);
  return run_stage(cfg, "alpha-beta-sweep", stage_cfg, inputs, {paths::alpha_beta_csv}, [&] {
    const auto train = load_split(cfg, paths::train_csv, Split::train);
    const auto test = load_split(cfg, paths::test_csv, Split::test);
    const auto family = share(load_budget(cfg.out_dir / paths::budget_json));
    std::optional<DenseNet> base;
    if (cfg.warm_start) base = load_model(cfg.out_dir / paths::base_model);
    const auto rows = alpha_beta_sweep(cfg, family, train, test, cfg.alpha_beta_grid, mode, base ? &*base : nullptr);
    write_text_file(cfg.out_dir / paths::alpha_beta_csv, alpha_beta_csv(rows));
  });
}

std::vector<StageResult> run_all(const PipelineConfig& cfg, const StageLog& log) {
  cfg.validate();
  std::vector<StageResult> results;
  auto record = [&](StageResult r) {
    if (log) log(r);
    results.push_back(std::move(r));
  };
  record(stage_generate(cfg));
  record(stage_train_base(cfg));
  record(stage_budget(cfg));
  for (auto head : cfg.rs_heads) {
    record(stage_train_rs(cfg, head));
    record(stage_predict(cfg, head));
    record(stage_evaluate(cfg, head));
    record(stage_ood_sweep(cfg, head));
  }
  return results;
}

}  // namespace evidential
