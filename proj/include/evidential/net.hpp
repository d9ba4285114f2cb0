#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "evidential/evidence.hpp"
#include "evidential/losses.hpp"
#include "json.hpp"

namespace evidential {

enum class Activation { identity, relu, sigmoid, softmax };
enum class HeadKind { softmax_class, sigmoid_belief, softmax_mass };
enum class Optimizer { adam, sgd };

std::string to_string(Activation a);
std::string to_string(HeadKind h);
std::string to_string(Optimizer o);
Activation activation_from_string(const std::string& s);
HeadKind head_from_string(const std::string& s);
Optimizer optimizer_from_string(const std::string& s);

struct DenseLayer {
  Eigen::MatrixXd weights;  // out x in
  Eigen::VectorXd bias;     // out
  Activation activation = Activation::identity;
};

/// Feed-forward stack of affine + activation layers. Belief and mass heads
/// carry the focal family their outputs are aligned with, so a budget must
/// exist before such a net can be built.
class DenseNet {
 public:
  DenseNet(std::vector<DenseLayer> layers, HeadKind head, FamilyPtr family);

  /// Hidden layers use relu (He-uniform init), the head uses the activation
  /// implied by `head` (Glorot-uniform init). Biases start at zero.
  /// layer_dims = {input, hidden..., output}; output must be N for
  /// softmax_class and the family size otherwise.
  static DenseNet create(const std::vector<int>& layer_dims, HeadKind head, FamilyPtr family, std::uint64_t seed);

  /// Copy of this net's hidden layers topped with a freshly initialised head
  /// sized for `family`.
  DenseNet with_new_head(HeadKind head, FamilyPtr family, std::uint64_t seed) const;

  const std::vector<DenseLayer>& layers() const { return layers_; }
  std::vector<DenseLayer>& layers() { return layers_; }
  HeadKind head() const { return head_; }
  const FamilyPtr& family() const { return family_; }
  int num_classes() const { return num_classes_; }
  std::vector<int> layer_dims() const;
  int input_dim() const { return static_cast<int>(layers_.front().weights.cols()); }
  int output_dim() const { return static_cast<int>(layers_.back().weights.rows()); }

 private:
  std::vector<DenseLayer> layers_;
  HeadKind head_;
  FamilyPtr family_;
  int num_classes_ = 0;
};

struct ForwardCache {
  std::vector<Eigen::MatrixXd> activations;  // [0] = input, [i+1] = output of layer i
  std::vector<Eigen::MatrixXd> pre;          // pre-activation of layer i
  Eigen::MatrixXd dropout_mask;              // applied to the head's input when non-empty

  const Eigen::MatrixXd& output() const { return activations.back(); }
};

struct Gradients {
  std::vector<Eigen::MatrixXd> weights;
  std::vector<Eigen::VectorXd> biases;
};

/// Rows of `batch` are samples. Throws on input width mismatch.
ForwardCache forward(const DenseNet& net, const Eigen::MatrixXd& batch, const Eigen::MatrixXd& dropout_mask = {});

/// Parameter gradients given dLoss/dOutput.
Gradients backward(const DenseNet& net, const ForwardCache& cache, const Eigen::MatrixXd& d_output);

/// Loss for the net's head: categorical cross-entropy for softmax_class,
/// otherwise batch_loss with the head-appropriate target encoding.
/// Labels are class indices.
double head_loss(const DenseNet& net, const Eigen::MatrixXd& outputs, std::span<const int> labels,
                 const LossConfig& cfg);
Eigen::MatrixXd head_loss_gradient(const DenseNet& net, const Eigen::MatrixXd& outputs, std::span<const int> labels,
                                   const LossConfig& cfg);

struct TrainConfig {
  int epochs = 50;
  int batch_size = 64;
  double learning_rate = 0.001;
  Optimizer optimizer = Optimizer::adam;
  std::uint64_t seed = 0;
  LossConfig loss;
  double dropout = 0.0;  // rate on the head's input; 0 disables
};

class TrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct TrainedModel {
  DenseNet net;
  double initial_loss = 0.0;
  std::vector<double> loss_trace;  // full-data loss after each epoch
};

/// Seeded mini-batch training. Shuffling, dropout masks and update order all
/// derive from cfg.seed. Throws TrainingError when the loss stops being finite.
TrainedModel train(DenseNet net, const Eigen::MatrixXd& features, std::span<const int> labels,
                   const TrainConfig& cfg);

/// Post-activation output of the last hidden layer.
Eigen::MatrixXd extract_features(const DenseNet& net, const Eigen::MatrixXd& batch);

struct Prediction {
  BeliefVector belief;
  MassFunction mass_raw;
  RepairedMass repaired;
};

/// Belief head: belief = outputs, masses by Moebius inversion.
/// Mass head: masses = outputs, belief by the zeta transform.
std::vector<Prediction> predict(const DenseNet& net, const Eigen::MatrixXd& batch);

/// Row-wise class prediction: argmax for softmax_class, pignistic argmax
/// otherwise.
std::vector<int> predict_classes(const DenseNet& net, const Eigen::MatrixXd& batch);

// Checkpoint: layer dims, activations, head, family, row-major weights and a
// free-form metadata object.
nlohmann::ordered_json model_to_json(const DenseNet& net, const nlohmann::ordered_json& metadata);
DenseNet model_from_json(const nlohmann::json& doc);
void save_model(const DenseNet& net, const nlohmann::ordered_json& metadata, const std::filesystem::path& path);
DenseNet load_model(const std::filesystem::path& path);

}  // namespace evidential
