#include "evidential/net.hpp"

#include <cmath>
#include <numeric>
#include <sstream>

#include "evidential/io_util.hpp"
#include "evidential/random.hpp"

namespace evidential {
namespace {

Activation head_activation(HeadKind head) {
  return head == HeadKind::sigmoid_belief ? Activation::sigmoid : Activation::softmax;
}

Eigen::MatrixXd apply_activation(Activation a, const Eigen::MatrixXd& z) {
  switch (a) {
    case Activation::identity:
      return z;
    case Activation::relu:
      return z.cwiseMax(0.0);
    case Activation::sigmoid:
      return z.unaryExpr([](double v) {
        if (v >= 0) return 1.0 / (1.0 + std::exp(-v));
        const double e = std::exp(v);
        return e / (1.0 + e);
      });
    case Activation::softmax: {
      Eigen::MatrixXd out(z.rows(), z.cols());
      for (Eigen::Index r = 0; r < z.rows(); ++r) {
        const double peak = z.row(r).maxCoeff();
        out.row(r) = (z.row(r).array() - peak).exp().matrix();
        out.row(r) /= out.row(r).sum();
      }
      return out;
    }
  }
  throw std::logic_error("unknown activation");
}

// dLoss/dz from dLoss/da for a = act(z).
Eigen::MatrixXd activation_backward(Activation a, const Eigen::MatrixXd& z, const Eigen::MatrixXd& out,
                                    const Eigen::MatrixXd& upstream) {
  switch (a) {
    case Activation::identity:
      return upstream;
    case Activation::relu:
      return upstream.cwiseProduct((z.array() > 0.0).cast<double>().matrix());
    case Activation::sigmoid:
      return upstream.cwiseProduct(out.cwiseProduct((1.0 - out.array()).matrix()));
    case Activation::softmax: {
      Eigen::MatrixXd dz(z.rows(), z.cols());
      for (Eigen::Index r = 0; r < z.rows(); ++r) {
        const double dot = upstream.row(r).dot(out.row(r));
        dz.row(r) = out.row(r).cwiseProduct((upstream.row(r).array() - dot).matrix());
      }
      return dz;
    }
  }
  throw std::logic_error("unknown activation");
}

DenseLayer init_layer(int in, int out, Activation activation, bool he, Rng& rng) {
  const double limit = he ? std::sqrt(6.0 / in) : std::sqrt(6.0 / (in + out));
  DenseLayer layer{Eigen::MatrixXd(out, in), Eigen::VectorXd::Zero(out), activation};
  for (Eigen::Index r = 0; r < out; ++r) {
    for (Eigen::Index c = 0; c < in; ++c) layer.weights(r, c) = rng.uniform(-limit, limit);
  }
  return layer;
}

int expected_output(HeadKind head, const FamilyPtr& family, int declared) {
  if (head == HeadKind::softmax_class) return family ? family->num_classes() : declared;
  return static_cast<int>(family->size());
}

}  // namespace

std::string to_string(Activation a) {
  switch (a) {
    case Activation::identity:
      return "identity";
    case Activation::relu:
      return "relu";
    case Activation::sigmoid:
      return "sigmoid";
    case Activation::softmax:
      return "softmax";
  }
  return "?";
}

std::string to_string(HeadKind h) {
  switch (h) {
    case HeadKind::softmax_class:
      return "softmax_class";
    case HeadKind::sigmoid_belief:
      return "sigmoid_belief";
    case HeadKind::softmax_mass:
      return "softmax_mass";
  }
  return "?";
}

std::string to_string(Optimizer o) { return o == Optimizer::adam ? "adam" : "sgd"; }

Activation activation_from_string(const std::string& s) {
  for (auto a : {Activation::identity, Activation::relu, Activation::sigmoid, Activation::softmax}) {
    if (to_string(a) == s) return a;
  }
  throw std::invalid_argument("unknown activation '" + s + "'");
}

HeadKind head_from_string(const std::string& s) {
  for (auto h : {HeadKind::softmax_class, HeadKind::sigmoid_belief, HeadKind::softmax_mass}) {
    if (to_string(h) == s) return h;
  }
  throw std::invalid_argument("unknown head '" + s + "'");
}

Optimizer optimizer_from_string(const std::string& s) {
  if (s == "adam") return Optimizer::adam;
  if (s == "sgd") return Optimizer::sgd;
  throw std::invalid_argument("unknown optimizer '" + s + "'");
}

DenseNet::DenseNet(std::vector<DenseLayer> layers, HeadKind head, FamilyPtr family)
    : layers_(std::move(layers)), head_(head), family_(std::move(family)) {
  if (layers_.empty()) throw std::invalid_argument("network needs at least one layer");
  if (head_ != HeadKind::softmax_class && !family_) {
    throw std::invalid_argument("belief and mass heads need a focal family; build the budget first");
  }
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const auto& l = layers_[i];
    if (l.bias.size() != l.weights.rows()) throw std::invalid_argument("layer bias does not match its weights");
    if (i > 0 && l.weights.cols() != layers_[i - 1].weights.rows()) {
      throw std::invalid_argument("layer " + std::to_string(i) + " input width does not match previous output");
    }
  }
  const int out = output_dim();
  if (out != expected_output(head_, family_, out)) {
    throw std::invalid_argument("output width " + std::to_string(out) + " does not fit a " + to_string(head_) +
                                " head");
  }
  num_classes_ = family_ ? family_->num_classes() : out;
}

DenseNet DenseNet::create(const std::vector<int>& layer_dims, HeadKind head, FamilyPtr family, std::uint64_t seed) {
  if (layer_dims.size() < 2) throw std::invalid_argument("layer_dims needs an input and an output width");
  for (int d : layer_dims) {
    if (d < 1) throw std::invalid_argument("layer widths must be positive");
  }
  Rng rng(seed);
  std::vector<DenseLayer> layers;
  for (std::size_t i = 0; i + 1 < layer_dims.size(); ++i) {
    const bool is_head = i + 2 == layer_dims.size();
    layers.push_back(init_layer(layer_dims[i], layer_dims[i + 1], is_head ? head_activation(head) : Activation::relu,
                                !is_head, rng));
  }
  return DenseNet(std::move(layers), head, std::move(family));
}

DenseNet DenseNet::with_new_head(HeadKind head, FamilyPtr family, std::uint64_t seed) const {
  if (!family) throw std::invalid_argument("new head needs a family");
  std::vector<DenseLayer> layers(layers_.begin(), layers_.end() - 1);
  const int in = static_cast<int>(layers_.back().weights.cols());
  const int out = head == HeadKind::softmax_class ? family->num_classes() : static_cast<int>(family->size());
  Rng rng(seed);
  layers.push_back(init_layer(in, out, head_activation(head), false, rng));
  return DenseNet(std::move(layers), head, std::move(family));
}

std::vector<int> DenseNet::layer_dims() const {
  std::vector<int> dims{input_dim()};
  for (const auto& l : layers_) dims.push_back(static_cast<int>(l.weights.rows()));
  return dims;
}

ForwardCache forward(const DenseNet& net, const Eigen::MatrixXd& batch, const Eigen::MatrixXd& dropout_mask) {
  if (batch.cols() != net.input_dim()) {
    throw std::invalid_argument("input width " + std::to_string(batch.cols()) + " does not match network input " +
                                std::to_string(net.input_dim()));
  }
  const auto& layers = net.layers();
  ForwardCache cache;
  cache.activations.reserve(layers.size() + 1);
  cache.activations.push_back(batch);
  cache.dropout_mask = dropout_mask;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const auto& l = layers[i];
    if (i + 1 == layers.size() && dropout_mask.size() > 0) {
      cache.activations.back() = cache.activations.back().cwiseProduct(dropout_mask);
    }
    Eigen::MatrixXd z = cache.activations.back() * l.weights.transpose();
    z.rowwise() += l.bias.transpose();
    cache.activations.push_back(apply_activation(l.activation, z));
    cache.pre.push_back(std::move(z));
  }
  return cache;
}

Gradients backward(const DenseNet& net, const ForwardCache& cache, const Eigen::MatrixXd& d_output) {
  const auto& layers = net.layers();
  Gradients g;
  g.weights.resize(layers.size());
  g.biases.resize(layers.size());
  Eigen::MatrixXd upstream = d_output;
  for (std::size_t i = layers.size(); i-- > 0;) {
    const Eigen::MatrixXd dz = activation_backward(layers[i].activation, cache.pre[i], cache.activations[i + 1], upstream);
    g.weights[i] = dz.transpose() * cache.activations[i];
    g.biases[i] = dz.colwise().sum().transpose();
    if (i > 0) {
      upstream = dz * layers[i].weights;
      if (i + 1 == layers.size() && cache.dropout_mask.size() > 0) upstream = upstream.cwiseProduct(cache.dropout_mask);
    }
  }
  return g;
}

double head_loss(const DenseNet& net, const Eigen::MatrixXd& outputs, std::span<const int> labels,
                 const LossConfig& cfg) {
  if (static_cast<std::size_t>(outputs.rows()) != labels.size()) throw std::invalid_argument("labels/batch mismatch");
  if (net.head() == HeadKind::softmax_class) {
    double total = 0.0;
    for (std::size_t r = 0; r < labels.size(); ++r) {
      total -= std::log(std::max(outputs(static_cast<Eigen::Index>(r), labels[r]), kPredictionClamp));
    }
    return total / static_cast<double>(labels.size());
  }
  LossConfig effective = cfg;
  effective.head = net.head() == HeadKind::sigmoid_belief ? TargetHead::belief : TargetHead::mass;
  const auto targets = encode_targets(*net.family(), labels, effective.head);
  return batch_loss(*net.family(), outputs, targets, effective);
}

Eigen::MatrixXd head_loss_gradient(const DenseNet& net, const Eigen::MatrixXd& outputs, std::span<const int> labels,
                                   const LossConfig& cfg) {
  if (static_cast<std::size_t>(outputs.rows()) != labels.size()) throw std::invalid_argument("labels/batch mismatch");
  if (net.head() == HeadKind::softmax_class) {
    Eigen::MatrixXd g = Eigen::MatrixXd::Zero(outputs.rows(), outputs.cols());
    const double b = static_cast<double>(labels.size());
    for (std::size_t r = 0; r < labels.size(); ++r) {
      const double p = outputs(static_cast<Eigen::Index>(r), labels[r]);
      if (p > kPredictionClamp) g(static_cast<Eigen::Index>(r), labels[r]) = -1.0 / (p * b);
    }
    return g;
  }
  LossConfig effective = cfg;
  effective.head = net.head() == HeadKind::sigmoid_belief ? TargetHead::belief : TargetHead::mass;
  const auto targets = encode_targets(*net.family(), labels, effective.head);
  return loss_gradient(*net.family(), outputs, targets, effective);
}

TrainedModel train(DenseNet net, const Eigen::MatrixXd& features, std::span<const int> labels,
                   const TrainConfig& cfg) {
  if (features.rows() == 0) throw std::invalid_argument("training set is empty");
  if (static_cast<std::size_t>(features.rows()) != labels.size()) {
    throw std::invalid_argument("features and labels differ in count");
  }
  for (int y : labels) {
    if (y < 0 || y >= net.num_classes()) throw std::invalid_argument("label " + std::to_string(y) + " outside the frame");
  }
  if (cfg.epochs < 0 || cfg.batch_size < 1) throw std::invalid_argument("epochs >= 0 and batch_size >= 1 required");
  if (!(cfg.dropout >= 0.0 && cfg.dropout < 1.0)) throw std::invalid_argument("dropout rate must be in [0, 1)");
  cfg.loss.validate();

  constexpr double beta1 = 0.9;
  constexpr double beta2 = 0.999;
  constexpr double adam_eps = 1e-8;

  auto& layers = net.layers();
  std::vector<Eigen::MatrixXd> mw, vw;
  std::vector<Eigen::VectorXd> mb, vb;
  for (const auto& l : layers) {
    mw.push_back(Eigen::MatrixXd::Zero(l.weights.rows(), l.weights.cols()));
    vw.push_back(mw.back());
    mb.push_back(Eigen::VectorXd::Zero(l.bias.size()));
    vb.push_back(mb.back());
  }

  const auto n = static_cast<std::size_t>(features.rows());
  auto full_loss = [&] { return head_loss(net, forward(net, features).output(), labels, cfg.loss); };

  TrainedModel result{net, full_loss(), {}};
  Rng shuffle_rng(derive_seed(cfg.seed, 1));
  Rng dropout_rng(derive_seed(cfg.seed, 2));
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  long step = 0;
  const int head_in = static_cast<int>(layers.back().weights.cols());

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    shuffle_rng.shuffle(order.begin(), order.end());
    for (std::size_t start = 0; start < n; start += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t end = std::min(n, start + static_cast<std::size_t>(cfg.batch_size));
      const auto rows = static_cast<Eigen::Index>(end - start);
      Eigen::MatrixXd xb(rows, features.cols());
      std::vector<int> yb(end - start);
      for (std::size_t i = start; i < end; ++i) {
        xb.row(static_cast<Eigen::Index>(i - start)) = features.row(static_cast<Eigen::Index>(order[i]));
        yb[i - start] = labels[order[i]];
      }

      Eigen::MatrixXd mask;
      if (cfg.dropout > 0.0 && layers.size() > 1) {
        mask.resize(rows, head_in);
        const double keep = 1.0 - cfg.dropout;
        for (Eigen::Index r = 0; r < rows; ++r) {
          for (Eigen::Index c = 0; c < head_in; ++c) mask(r, c) = dropout_rng.uniform() < keep ? 1.0 / keep : 0.0;
        }
      }

      const auto cache = forward(net, xb, mask);
      const double loss = head_loss(net, cache.output(), yb, cfg.loss);
      if (!std::isfinite(loss)) {
        std::ostringstream msg;
        msg << "training loss became non-finite at epoch " << epoch + 1 << " (batch starting at " << start
            << "); learning rate " << cfg.learning_rate << " is probably too high, try a smaller value";
        throw TrainingError(msg.str());
      }
      const auto grads = backward(net, cache, head_loss_gradient(net, cache.output(), yb, cfg.loss));

      ++step;
      const double lr = cfg.learning_rate;
      for (std::size_t i = 0; i < layers.size(); ++i) {
        if (cfg.optimizer == Optimizer::sgd) {
          layers[i].weights -= lr * grads.weights[i];
          layers[i].bias -= lr * grads.biases[i];
          continue;
        }
        const double c1 = 1.0 - std::pow(beta1, static_cast<double>(step));
        const double c2 = 1.0 - std::pow(beta2, static_cast<double>(step));
        mw[i] = beta1 * mw[i] + (1.0 - beta1) * grads.weights[i];
        vw[i] = beta2 * vw[i] + (1.0 - beta2) * grads.weights[i].cwiseAbs2();
        mb[i] = beta1 * mb[i] + (1.0 - beta1) * grads.biases[i];
        vb[i] = beta2 * vb[i] + (1.0 - beta2) * grads.biases[i].cwiseAbs2();
        layers[i].weights -= (lr * (mw[i] / c1).array() / ((vw[i] / c2).array().sqrt() + adam_eps)).matrix();
        layers[i].bias -= (lr * (mb[i] / c1).array() / ((vb[i] / c2).array().sqrt() + adam_eps)).matrix();
      }
    }
    const double epoch_loss = full_loss();
    if (!std::isfinite(epoch_loss)) {
      throw TrainingError("training loss became non-finite after epoch " + std::to_string(epoch + 1) +
                          "; lower the learning rate");
    }
    result.loss_trace.push_back(epoch_loss);
  }
  result.net = std::move(net);
  return result;
}

Eigen::MatrixXd extract_features(const DenseNet& net, const Eigen::MatrixXd& batch) {
  if (net.layers().size() < 2) throw std::invalid_argument("feature extraction needs at least one hidden layer");
  const auto cache = forward(net, batch);
  return cache.activations[cache.activations.size() - 2];
}

std::vector<Prediction> predict(const DenseNet& net, const Eigen::MatrixXd& batch) {
  if (net.head() == HeadKind::softmax_class) {
    throw std::invalid_argument("evidence predictions need a belief or mass head");
  }
  const Eigen::MatrixXd out = forward(net, batch).output();
  std::vector<Prediction> preds;
  preds.reserve(static_cast<std::size_t>(out.rows()));
  for (Eigen::Index r = 0; r < out.rows(); ++r) {
    std::vector<double> row(static_cast<std::size_t>(out.cols()));
    for (Eigen::Index c = 0; c < out.cols(); ++c) row[static_cast<std::size_t>(c)] = out(r, c);
    if (net.head() == HeadKind::sigmoid_belief) {
      BeliefVector bel(net.family(), std::move(row));
      auto mass = mass_from_belief(bel);
      auto repaired = repair_mass(mass);
      preds.push_back(Prediction{std::move(bel), std::move(mass), std::move(repaired)});
    } else {
      MassFunction mass(net.family(), std::move(row));
      auto bel = belief_from_mass(mass);
      auto repaired = repair_mass(mass);
      preds.push_back(Prediction{std::move(bel), std::move(mass), std::move(repaired)});
    }
  }
  return preds;
}

std::vector<int> predict_classes(const DenseNet& net, const Eigen::MatrixXd& batch) {
  std::vector<int> out;
  if (net.head() == HeadKind::softmax_class) {
    const Eigen::MatrixXd probs = forward(net, batch).output();
    for (Eigen::Index r = 0; r < probs.rows(); ++r) {
      Eigen::Index arg = 0;
      probs.row(r).maxCoeff(&arg);
      out.push_back(static_cast<int>(arg));
    }
    return out;
  }
  for (const auto& p : predict(net, batch)) {
    bool degenerate = false;
    out.push_back(pignistic_or_uniform(p.mass_raw, degenerate).argmax());
  }
  return out;
}

nlohmann::ordered_json model_to_json(const DenseNet& net, const nlohmann::ordered_json& metadata) {
  nlohmann::ordered_json doc;
  doc["format"] = "evidential-densenet/1";
  doc["head"] = to_string(net.head());
  doc["layer_dims"] = net.layer_dims();
  auto acts = nlohmann::ordered_json::array();
  for (const auto& l : net.layers()) acts.push_back(to_string(l.activation));
  doc["activations"] = std::move(acts);
  if (net.family()) {
    doc["family"] = nlohmann::ordered_json::parse(budget_to_json(*net.family()));
  } else {
    doc["family"] = nullptr;
  }
  auto layers = nlohmann::ordered_json::array();
  for (const auto& l : net.layers()) {
    std::vector<double> w;
    w.reserve(static_cast<std::size_t>(l.weights.size()));
    for (Eigen::Index r = 0; r < l.weights.rows(); ++r) {
      for (Eigen::Index c = 0; c < l.weights.cols(); ++c) w.push_back(l.weights(r, c));
    }
    std::vector<double> b(l.bias.data(), l.bias.data() + l.bias.size());
    layers.push_back({{"weights", w}, {"bias", b}});
  }
  doc["layers"] = std::move(layers);
  doc["metadata"] = metadata;
  return doc;
}

DenseNet model_from_json(const nlohmann::json& doc) {
  try {
    if (doc.at("format").get<std::string>() != "evidential-densenet/1") {
      throw std::invalid_argument("unsupported checkpoint format");
    }
    const auto head = head_from_string(doc.at("head").get<std::string>());
    const auto dims = doc.at("layer_dims").get<std::vector<int>>();
    const auto acts = doc.at("activations").get<std::vector<std::string>>();
    const auto& layers_json = doc.at("layers");
    if (dims.size() != acts.size() + 1 || layers_json.size() != acts.size()) {
      throw std::invalid_argument("checkpoint layer counts are inconsistent");
    }
    FamilyPtr family;
    if (!doc.at("family").is_null()) family = share(budget_from_json(doc.at("family").dump()));
    std::vector<DenseLayer> layers;
    for (std::size_t i = 0; i < acts.size(); ++i) {
      const auto w = layers_json[i].at("weights").get<std::vector<double>>();
      const auto b = layers_json[i].at("bias").get<std::vector<double>>();
      const int in = dims[i];
      const int out = dims[i + 1];
      if (w.size() != static_cast<std::size_t>(in) * static_cast<std::size_t>(out) ||
          b.size() != static_cast<std::size_t>(out)) {
        throw std::invalid_argument("checkpoint layer " + std::to_string(i) + " has the wrong number of weights");
      }
      DenseLayer layer{Eigen::MatrixXd(out, in), Eigen::VectorXd(out), activation_from_string(acts[i])};
      for (int r = 0; r < out; ++r) {
        for (int c = 0; c < in; ++c) layer.weights(r, c) = w[static_cast<std::size_t>(r * in + c)];
        layer.bias(r) = b[static_cast<std::size_t>(r)];
      }
      layers.push_back(std::move(layer));
    }
    return DenseNet(std::move(layers), head, std::move(family));
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("malformed checkpoint: ") + e.what());
  }
}

void save_model(const DenseNet& net, const nlohmann::ordered_json& metadata, const std::filesystem::path& path) {
  write_text_file(path, model_to_json(net, metadata).dump(1) + "\n");
}

DenseNet load_model(const std::filesystem::path& path) {
  try {
    return model_from_json(nlohmann::json::parse(read_text_file(path)));
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument("model file " + path.string() + ": " + e.what());
  } catch (const std::invalid_argument& e) {
    throw std::invalid_argument("model file " + path.string() + ": " + e.what());
  }
}

}  // namespace evidential
