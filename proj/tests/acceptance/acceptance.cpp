// Acceptance suite: one PASS/FAIL line per criterion, exit status 0 iff all pass.
// Usage: acceptance <path-to-evidential-cli>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <numbers>
#include <numeric>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "evidential/budget.hpp"
#include "evidential/credal.hpp"
#include "evidential/dataio.hpp"
#include "evidential/evidence.hpp"
#include "evidential/io_util.hpp"
#include "evidential/losses.hpp"
#include "evidential/pipeline.hpp"
#include "evidential/random.hpp"
#include "evidential/uncertainty.hpp"

namespace fs = std::filesystem;
using namespace evidential;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

ClassFrame frame_of(int n) { return ClassFrame::numbered(n); }

FamilyPtr random_family(Rng& rng, int n, int max_extra) {
  const std::uint32_t full = (std::uint32_t{1} << n) - 1;
  const int available = static_cast<int>(full) - n;
  const int extra = static_cast<int>(rng.below(static_cast<std::uint64_t>(std::min(max_extra, available) + 1)));
  std::set<std::uint32_t> picked;
  while (static_cast<int>(picked.size()) < extra) {
    const auto bits = static_cast<std::uint32_t>(1 + rng.below(full));
    if (std::popcount(bits) >= 2) picked.insert(bits);
  }
  std::vector<SubsetMask> masks;
  for (auto b : picked) masks.emplace_back(b);
  return share(make_family(frame_of(n), masks));
}

std::vector<double> random_simplex(Rng& rng, std::size_t k, double zero_prob) {
  std::vector<double> v(k);
  double total = 0.0;
  for (auto& x : v) {
    x = rng.uniform() < zero_prob ? 0.0 : -std::log(1.0 - rng.uniform());
    total += x;
  }
  if (total == 0.0) {
    v[rng.below(k)] = 1.0;
    return v;
  }
  for (auto& x : v) x /= total;
  return v;
}

// Criterion 1
Outcome moebius_roundtrip() {
  Rng rng(101);
  double worst = 0.0;
  auto check = [&](const FamilyPtr& fam) {
    MassFunction m(fam, random_simplex(rng, fam->size(), 0.2));
    const auto back = mass_from_belief(belief_from_mass(m));
    for (std::size_t i = 0; i < m.size(); ++i) worst = std::max(worst, std::abs(back[i] - m[i]));
  };
  for (int t = 0; t < 1000; ++t) check(random_family(rng, 2 + static_cast<int>(rng.below(9)), 20));
  for (int t = 0; t < 1000; ++t) {
    check(share(full_powerset_family(frame_of(2 + static_cast<int>(rng.below(7))))));
  }
  return {worst <= 1e-12, "max abs error " + fmt("%.3g", worst) + " over 2000 masses"};
}

// Criterion 2
Outcome credal_oracle() {
  Rng rng(202);
  double worst_bound = 0.0;
  double worst_violation = 0.0;
  std::size_t vertices = 0;
  for (int t = 0; t < 200; ++t) {
    const int n = 2 + static_cast<int>(rng.below(4));
    const auto fam = share(full_powerset_family(frame_of(n)));
    MassFunction m(fam, random_simplex(rng, fam->size(), 0.3));

    // Brute-force Bel over every non-empty subset of the frame.
    const std::uint32_t full = (std::uint32_t{1} << n) - 1;
    std::vector<double> bel(full + 1, 0.0);
    for (std::uint32_t a = 1; a <= full; ++a) {
      for (std::size_t i = 0; i < fam->size(); ++i) {
        if ((fam->mask_at(i).bits() & ~a) == 0) bel[a] += m[i];
      }
    }

    std::vector<double> lo(static_cast<std::size_t>(n), 1.0), hi(static_cast<std::size_t>(n), 0.0);
    std::vector<int> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    do {
      std::vector<double> p(static_cast<std::size_t>(n), 0.0);
      for (std::size_t i = 0; i < fam->size(); ++i) {
        const auto bits = fam->mask_at(i).bits();
        for (int c : order) {
          if ((bits >> c) & 1U) {
            p[static_cast<std::size_t>(c)] += m[i];
            break;
          }
        }
      }
      ++vertices;
      for (int c = 0; c < n; ++c) {
        lo[static_cast<std::size_t>(c)] = std::min(lo[static_cast<std::size_t>(c)], p[static_cast<std::size_t>(c)]);
        hi[static_cast<std::size_t>(c)] = std::max(hi[static_cast<std::size_t>(c)], p[static_cast<std::size_t>(c)]);
      }
      for (std::uint32_t a = 1; a <= full; ++a) {
        double pa = 0.0;
        for (int c = 0; c < n; ++c) {
          if ((a >> c) & 1U) pa += p[static_cast<std::size_t>(c)];
        }
        worst_violation = std::max(worst_violation, bel[a] - pa);
      }
    } while (std::next_permutation(order.begin(), order.end()));

    const auto bounds = credal_bounds(m);
    for (int c = 0; c < n; ++c) {
      const auto i = static_cast<std::size_t>(c);
      worst_bound = std::max({worst_bound, std::abs(bounds.lower[i] - lo[i]), std::abs(bounds.upper[i] - hi[i])});
    }
    if (enumerate_vertices(m).size() != static_cast<std::size_t>(std::tgamma(n + 1) + 0.5)) {
      return {false, "vertex count differs from N!"};
    }
  }
  return {worst_bound <= 1e-12 && worst_violation <= 1e-12,
          "max bound error " + fmt("%.3g", worst_bound) + ", worst Bel(A) - P(A) " + fmt("%.3g", worst_violation) +
              " over " + std::to_string(vertices) + " vertices"};
}

double relative_gap(const std::vector<double>& g, const std::vector<double>& fd) {
  double diff = 0.0, scale = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    diff = std::max(diff, std::abs(g[i] - fd[i]));
    scale = std::max(scale, std::abs(fd[i]));
  }
  return diff / std::max(scale, 1e-8);
}

std::vector<double> central_difference(const std::function<double(const std::vector<double>&)>& f,
                                       std::vector<double> x, double h) {
  std::vector<double> g(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double keep = x[i];
    x[i] = keep + h;
    const double up = f(x);
    x[i] = keep - h;
    const double down = f(x);
    x[i] = keep;
    g[i] = (up - down) / (2.0 * h);
  }
  return g;
}

// Criterion 3
Outcome gradient_check() {
  Rng rng(303);
  constexpr double h = 1e-6;
  double worst_bce = 0.0, worst_kl = 0.0;
  int hinge_r = 0, hinge_s = 0;
  for (int t = 0; t < 100; ++t) {
    const auto fam = random_family(rng, 3 + static_cast<int>(rng.below(4)), 8);
    const int y = static_cast<int>(rng.below(static_cast<std::uint64_t>(fam->num_classes())));
    LossConfig cfg;
    cfg.alpha = rng.uniform(0.5, 2.0);
    cfg.beta = rng.uniform(0.5, 2.0);
    cfg.head = TargetHead::belief;
    const auto target = encode_target(fam, y, TargetHead::belief);
    std::vector<double> bel(fam->size());
    for (auto& b : bel) b = rng.uniform(0.02, 0.98);
    const auto masses = moebius_transform(*fam, bel);
    hinge_r += std::any_of(masses.begin(), masses.end(), [](double m) { return m < 0.0; }) ? 1 : 0;
    hinge_s += std::accumulate(masses.begin(), masses.end(), 0.0) > 1.0 ? 1 : 0;
    const auto analytic = loss_gradient(bel, target, cfg);
    const auto numeric =
        central_difference([&](const std::vector<double>& x) { return combined_loss(x, target, cfg); }, bel, h);
    worst_bce = std::max(worst_bce, relative_gap(analytic, numeric));

    const auto mass_target = encode_target(fam, y, TargetHead::mass);
    const auto pred = random_simplex(rng, fam->size(), 0.0);
    LossConfig mcfg;
    mcfg.head = TargetHead::mass;
    const auto g_kl = loss_gradient(pred, mass_target, mcfg);
    const auto n_kl =
        central_difference([&](const std::vector<double>& x) { return kl_mass_loss(x, mass_target); }, pred, h);
    worst_kl = std::max(worst_kl, relative_gap(g_kl, n_kl));
  }
  return {worst_bce < 1e-4 && worst_kl < 1e-4 && hinge_r > 0,
          "max relative error " + fmt("%.3g", worst_bce) + " (combined), " + fmt("%.3g", worst_kl) + " (KL); " +
              std::to_string(hinge_r) + " cases with negative masses, " + std::to_string(hinge_s) +
              " with mass total above 1"};
}

// Criterion 4
Outcome entropy_identities() {
  Rng rng(404);
  double worst = 0.0;
  bool pal_exact = true;
  for (int t = 0; t < 500; ++t) {
    const auto fam = random_family(rng, 2 + static_cast<int>(rng.below(9)), 10);
    const auto p = random_simplex(rng, static_cast<std::size_t>(fam->num_classes()), 0.2);
    std::vector<double> values(fam->size(), 0.0);
    for (int c = 0; c < fam->num_classes(); ++c) values[fam->singleton_index(c)] = p[static_cast<std::size_t>(c)];
    MassFunction m(fam, values);
    worst = std::max(worst, std::abs(nguyen_entropy(m) - pignistic_entropy(pignistic(m))));
    pal_exact = pal_exact && pal_specificity(m) == 1.0;
  }
  bool vacuous_exact = true;
  for (int n = 2; n <= 10; ++n) {
    const auto full = SubsetMask((std::uint32_t{1} << n) - 1);
    const auto fam = share(make_family(frame_of(n), {full}));
    std::vector<double> values(fam->size(), 0.0);
    values[*fam->index_of(full)] = 1.0;
    vacuous_exact = vacuous_exact && pal_specificity(MassFunction(fam, values)) == 1.0 / n;
  }
  const auto fam10 = share(make_family(frame_of(10), {}));
  const double h_uniform = pignistic_entropy(pignistic(MassFunction(fam10, std::vector<double>(10, 0.1))));
  const double uniform_err = std::abs(h_uniform - std::log2(10.0));
  return {worst <= 1e-12 && pal_exact && vacuous_exact && uniform_err <= 1e-12,
          "max |H_n - H_betp| " + fmt("%.3g", worst) + ", Pal exact on Bayesian: " + (pal_exact ? "yes" : "no") +
              ", Pal = 1/N on vacuous: " + (vacuous_exact ? "yes" : "no") + ", |H(uniform10) - log2 10| " +
              fmt("%.3g", uniform_err)};
}

// Criterion 5
Outcome log_base_reconstruction() {
  std::vector<double> p{0.3332, 0.2231, 0.1153, 0.1086, 0.1040};
  const double residual = 1.0 - std::accumulate(p.begin(), p.end(), 0.0);
  for (int i = 0; i < 5; ++i) p.push_back(residual / 5.0);
  const double bits = shannon_entropy_bits(p);
  double nats = 0.0;
  for (double v : p) nats -= v * std::log(v);
  return {bits >= 2.64 && bits <= 2.75 && nats < std::log(10.0),
          "base 2: " + fmt("%.4f", bits) + " bits, natural log: " + fmt("%.4f", nats) + " < ln 10 = " +
              fmt("%.4f", std::log(10.0))};
}

// Closed-form IoU of two radius-r balls in 3-D with centres d apart.
double ball_iou(double r, double d) {
  const double lens = std::numbers::pi * (4.0 * r + d) * (2.0 * r - d) * (2.0 * r - d) / 12.0;
  const double ball = 4.0 / 3.0 * std::numbers::pi * r * r * r;
  return lens / (2.0 * ball - lens);
}

// Criterion 6
Outcome budget_correctness() {
  PipelineConfig cfg;
  cfg.seed = 606;
  cfg.data.num_classes = 6;
  cfg.data.dim = 6;
  cfg.data.samples_per_class = 400;
  cfg.data.separation = 7.0;
  cfg.data.overlap_groups = {{{0, 1}, 0.8}, {{2, 3, 4}, 0.7}};
  cfg.budget.k = 5;
  BlobSpec spec = cfg.data;
  spec.seed = derive_seed(cfg.seed, kDataStream);
  const auto data = gen_blobs(spec);
  const auto base = train_base_model(cfg, data.train).net;
  const auto result = build_budget(cfg, base, data.train);
  const auto pair = SubsetMask::from_indices({0, 1});
  const auto triple = SubsetMask::from_indices({2, 3, 4});
  const bool pair_first = !result.table.entries.empty() && result.table.entries.front().subset == pair;
  const bool has_triple = result.family.index_of(triple).has_value();

  Eigen::Matrix3d cov;
  cov << 2.0, 0.3, 0.1, 0.3, 1.0, -0.2, 0.1, -0.2, 0.5;
  const double scale = chi_square_quantile(kEllipsoidCoverage, 3);
  const std::vector<ClassEllipsoid> same{ClassEllipsoid(0, Eigen::Vector3d(1, -1, 2), cov, scale),
                                         ClassEllipsoid(1, Eigen::Vector3d(1, -1, 2), cov, scale)};
  const double iou_same = overlap_ratio(same, 17);
  const std::vector<ClassEllipsoid> balls{ClassEllipsoid(0, Eigen::Vector3d(0, 0, 0), Eigen::Matrix3d::Identity(), 1.0),
                                          ClassEllipsoid(1, Eigen::Vector3d(1, 0, 0), Eigen::Matrix3d::Identity(), 1.0)};
  const double iou_balls = overlap_ratio(balls, 18);
  const double oracle = ball_iou(1.0, 1.0);

  std::string ranking;
  for (const auto& e : result.table.entries) ranking += " " + e.subset.key() + "=" + fmt("%.3f", e.ratio);
  return {pair_first && has_triple && std::abs(iou_same - 1.0) <= 0.01 && std::abs(iou_balls - oracle) <= 0.01,
          std::string("pair first: ") + (pair_first ? "yes" : "no") + ", triple in budget: " +
              (has_triple ? "yes" : "no") + ", identical IoU " + fmt("%.4f", iou_same) + ", unit-ball IoU " +
              fmt("%.4f", iou_balls) + " vs closed form " + fmt("%.4f", oracle) + "; ranking:" + ranking};
}

// Criterion 7
Outcome desk_experiment() {
  PipelineConfig cfg;
  cfg.seed = 707;
  cfg.data.samples_per_class = 1500;
  BlobSpec spec = cfg.data;
  spec.seed = derive_seed(cfg.seed, kDataStream);
  const auto data = gen_blobs(spec);

  // Equal priors and equal isotropic covariance: the Bayes rule is the
  // maximum class likelihood under the known means.
  std::size_t bayes_hits = 0;
  for (std::size_t i = 0; i < data.test.size(); ++i) {
    int best = 0;
    double best_ll = -INFINITY;
    for (int c = 0; c < spec.num_classes; ++c) {
      const double d2 = (data.test.features.row(static_cast<Eigen::Index>(i)) - data.means.row(c)).squaredNorm();
      const double ll = -0.5 * d2 / (spec.spread * spec.spread);
      if (ll > best_ll) {
        best_ll = ll;
        best = c;
      }
    }
    bayes_hits += best == data.test.labels[i] ? 1 : 0;
  }
  const double bayes = static_cast<double>(bayes_hits) / static_cast<double>(data.test.size());

  const auto base = train_base_model(cfg, data.train).net;
  const auto budget = build_budget(cfg, base, data.train);
  const auto family = share(budget.family);
  const auto belief = train_rs_model(cfg, HeadKind::sigmoid_belief, family, data.train);
  cfg.rs_train.loss.mass_loss = MassLoss::kl;
  const auto mass = train_rs_model(cfg, HeadKind::softmax_mass, family, data.train);
  const double acc_belief = evaluate_model(belief.net, data.test).accuracy;
  const double acc_mass = evaluate_model(mass.net, data.test).accuracy;
  const bool ok = std::abs(bayes - 0.95) <= 0.02 && acc_belief >= 0.90 && std::abs(acc_mass - acc_belief) <= 0.02;
  return {ok, "Bayes " + fmt("%.4f", bayes) + ", belief head " + fmt("%.4f", acc_belief) + ", mass head (KL) " +
                  fmt("%.4f", acc_mass) + ", |family| = " + std::to_string(family->size())};
}

double spearman(const std::vector<double>& x, const std::vector<double>& y) {
  auto ranks = [](const std::vector<double>& v) {
    std::vector<std::size_t> idx(v.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    std::vector<double> r(v.size());
    for (std::size_t i = 0; i < idx.size();) {
      std::size_t j = i;
      while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
      const double avg = (static_cast<double>(i) + static_cast<double>(j)) / 2.0;
      for (std::size_t k = i; k <= j; ++k) r[idx[k]] = avg;
      i = j + 1;
    }
    return r;
  };
  const auto rx = ranks(x), ry = ranks(y);
  const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / static_cast<double>(rx.size());
  const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / static_cast<double>(ry.size());
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  return sxy / std::sqrt(sxx * syy);
}

// Criterion 8
Outcome ood_trends() {
  const std::vector<double> scales{0.0, 0.2, 0.4, 0.6, 0.8};
  constexpr int seeds = 5;
  std::vector<double> entropy(scales.size(), 0.0), rs_acc(scales.size(), 0.0), base_acc(scales.size(), 0.0);
  double ent_ok = 0.0, ent_bad = 0.0, width_ok = 0.0, width_bad = 0.0;
  double min_rho = 1.0;
  bool per_seed_margin = true;
  std::string gaps;
  for (int s = 0; s < seeds; ++s) {
    PipelineConfig cfg;
    cfg.seed = 800 + static_cast<std::uint64_t>(s);
    BlobSpec spec = cfg.data;
    spec.seed = derive_seed(cfg.seed, kDataStream);
    const auto data = gen_blobs(spec);
    const auto base = train_base_model(cfg, data.train).net;
    const auto family = share(build_budget(cfg, base, data.train).family);
    const auto rs = train_rs_model(cfg, HeadKind::sigmoid_belief, family, data.train).net;
    const auto rows = ood_sweep(rs, base, data.test, scales, derive_seed(cfg.seed, kNoiseStream));
    std::vector<double> seed_entropy;
    for (std::size_t i = 0; i < rows.size(); ++i) {
      entropy[i] += rows[i].mean_entropy / seeds;
      rs_acc[i] += rows[i].rs_accuracy / seeds;
      base_acc[i] += rows[i].base_accuracy / seeds;
      seed_entropy.push_back(rows[i].mean_entropy);
    }
    min_rho = std::min(min_rho, spearman(scales, seed_entropy));
    for (std::size_t i = scales.size() - 2; i < scales.size(); ++i) {
      per_seed_margin = per_seed_margin && rows[i].rs_accuracy >= rows[i].base_accuracy - 0.01;
      gaps += " " + fmt("%+.4f", rows[i].rs_accuracy - rows[i].base_accuracy);
    }
    const auto clean = evaluate_model(rs, data.test);
    ent_ok += clean.mean_entropy_correct.value_or(0.0) / seeds;
    ent_bad += clean.mean_entropy_incorrect.value_or(0.0) / seeds;
    width_ok += clean.mean_width_correct.value_or(0.0) / seeds;
    width_bad += clean.mean_width_incorrect.value_or(0.0) / seeds;
  }
  bool strictly_increasing = true;
  for (std::size_t i = 1; i < entropy.size(); ++i) strictly_increasing = strictly_increasing && entropy[i] > entropy[i - 1];
  const double rho = spearman(scales, entropy);
  const std::size_t last = scales.size() - 1;
  const bool mean_ok = rs_acc[last] >= base_acc[last] && rs_acc[last - 1] >= base_acc[last - 1];
  const bool a = strictly_increasing && rho >= 0.9;
  const bool b = per_seed_margin && mean_ok;
  const bool c = width_bad > width_ok && ent_bad > ent_ok;

  std::string ent_trace;
  for (double e : entropy) ent_trace += " " + fmt("%.4f", e);
  return {a && b && c,
          std::string("(a) ") + (a ? "ok" : "FAIL") + " entropy" + ent_trace + ", rho " + fmt("%.3f", rho) +
              ", min per-seed rho " + fmt("%.3f", min_rho) + "; (b) " + (b ? "ok" : "FAIL") + " rs-base at 0.6/0.8 " +
              fmt("%+.4f", rs_acc[last - 1] - base_acc[last - 1]) + "/" + fmt("%+.4f", rs_acc[last] - base_acc[last]) +
              " (per seed" + gaps + "); (c) " + (c ? "ok" : "FAIL") + " width " + fmt("%.4f", width_bad) + " > " +
              fmt("%.4f", width_ok) + ", entropy " + fmt("%.4f", ent_bad) + " > " + fmt("%.4f", ent_ok)};
}

std::vector<fs::path> files_under(const fs::path& root) {
  std::vector<fs::path> out;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (e.is_regular_file()) out.push_back(fs::relative(e.path(), root));
  }
  std::sort(out.begin(), out.end());
  return out;
}

// Criterion 9
Outcome determinism(const std::string& cli) {
  if (cli.empty()) return {false, "no CLI path given"};
  const auto root = fs::temp_directory_path() / ("evidential_acceptance_" + std::to_string(::getpid()));
  fs::remove_all(root);
  fs::create_directories(root);
  for (const char* run : {"a", "b"}) {
    const std::string cmd = "\"" + cli + "\" run-all --head both --out-dir \"" + (root / run).string() + "\" > \"" +
                            (root / (std::string(run) + ".log")).string() + "\" 2>&1";
    if (std::system(cmd.c_str()) != 0) return {false, "run-all failed; see " + (root / run).string() + ".log"};
  }
  const auto fa = files_under(root / "a");
  const auto fb = files_under(root / "b");
  if (fa != fb) return {false, "runs produced different file sets"};
  std::size_t differing = 0;
  std::string first;
  for (const auto& rel : fa) {
    if (read_text_file(root / "a" / rel) != read_text_file(root / "b" / rel)) {
      if (differing++ == 0) first = rel.string();
    }
  }
  if (differing == 0) fs::remove_all(root);
  return {differing == 0 && !fa.empty(), std::to_string(fa.size()) + " files compared, " + std::to_string(differing) +
                                             " differ" + (first.empty() ? "" : " (first: " + first + ")")};
}

}  // namespace

int main(int argc, char** argv) {
  const std::string cli = argc > 1 ? argv[1] : "";
  struct Criterion {
    int id;
    const char* name;
    double limit_seconds;  // 0: none
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria{
      {1, "Moebius roundtrip", 5.0, moebius_roundtrip},
      {2, "Credal bounds vs permutation vertices", 30.0, credal_oracle},
      {3, "Loss gradients vs finite differences", 10.0, gradient_check},
      {4, "Entropy identities", 0.0, entropy_identities},
      {5, "Log-base reconstruction of the uncertain sample", 0.0, log_base_reconstruction},
      {6, "Budget correctness", 60.0, budget_correctness},
      {7, "End-to-end desk experiment", 60.0, desk_experiment},
      {8, "Noise-sweep trends", 0.0, ood_trends},
      {9, "Determinism of run-all", 0.0, [&] { return determinism(cli); }},
  };
  int failures = 0;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome out;
    try {
      out = c.run();
    } catch (const std::exception& e) {
      out = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool in_time = c.limit_seconds == 0.0 || secs < c.limit_seconds;
    const bool pass = out.pass && in_time;
    failures += pass ? 0 : 1;
    std::printf("%s  criterion %d  %s: %s; %.2f s%s\n", pass ? "PASS" : "FAIL", c.id, c.name, out.detail.c_str(), secs,
                in_time ? "" : " (over time limit)");
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
