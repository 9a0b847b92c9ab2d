// Reference per-nucleotide regressor: linear embedding, message passing over
// the structure adjacency and the BPP matrix, bidirectional GRU, linear head
// to the five data types. Gradients are computed by hand and checked against
// finite differences in the tests.
#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "degkit/types.hpp"

namespace degkit {

/// Per-nucleotide inputs: base one-hot (4), loop one-hot (7), paired flag,
/// distance to nearest paired / unpaired position over n, BPP row sum and
/// BPP zero fraction.
inline constexpr int kInputFeatures = 16;
inline constexpr int kOutputs = 5;  // one per DataType, in kAllDataTypes order

struct FeatureTensor {
  Eigen::MatrixXd x;    // n x kInputFeatures
  Eigen::MatrixXd adj;  // row-normalized backbone + pair adjacency
  Eigen::MatrixXd bpp;  // base-pair probabilities
  Eigen::Index length() const { return x.rows(); }
};

/// Requires an attached BPP matrix.
FeatureTensor build_features(const Construct& c);

struct NeuralHyperparams {
  int hidden = 32;
  int depth = 2;             // message-passing layers
  int recurrent_layers = 1;  // bidirectional GRU layers
  std::uint64_t seed = 0;
};

struct MessageLayer {
  Eigen::MatrixXd w_self, w_adj, w_bpp;  // h x h
  Eigen::MatrixXd bias;                  // 1 x h
};

/// One direction of a GRU: update (z), reset (r) and candidate (c) gates.
struct GruCell {
  Eigen::MatrixXd wz, wr, wc;  // in x h
  Eigen::MatrixXd uz, ur, uc;  // h x h
  Eigen::MatrixXd bz, br, bc;  // 1 x h
};

struct GruLayer {
  GruCell forward, backward;
};

/// All trainable tensors. Also used for gradients and Adam moments.
struct NeuralParams {
  Eigen::MatrixXd embed_w;  // kInputFeatures x h
  Eigen::MatrixXd embed_b;  // 1 x h
  std::vector<MessageLayer> message;
  std::vector<GruLayer> recurrent;
  Eigen::MatrixXd head_w;  // 2h x kOutputs
  Eigen::MatrixXd head_b;  // 1 x kOutputs

  /// Visits (name, tensor) in a fixed order.
  template <typename Fn>
  void visit(Fn&& fn);
  template <typename Fn>
  void visit(Fn&& fn) const;

  NeuralParams zeros_like() const;
  Eigen::Index parameter_count() const;
  bool all_finite() const;
  double squared_norm() const;
  NeuralParams& operator+=(const NeuralParams& other);
  NeuralParams& operator*=(double s);
};

struct NeuralModel {
  NeuralHyperparams hyper;
  NeuralParams params;
  // Adam state
  long step = 0;
  NeuralParams adam_m;
  NeuralParams adam_v;
};

NeuralModel init_model(const NeuralHyperparams& hyper);

/// n x kOutputs predictions.
Eigen::MatrixXd forward(const NeuralModel& m, const FeatureTensor& f);

/// Mean over `columns` of the mean squared error over the scored window.
double loss_masked(const Eigen::MatrixXd& pred, const Construct& c, const std::vector<DataType>& columns);

struct GradientResult {
  double loss = 0.0;
  NeuralParams grad;
};

/// Exact reverse-mode gradient of loss_masked.
GradientResult gradients(const NeuralModel& m, const FeatureTensor& f, const Construct& c,
                         const std::vector<DataType>& columns);

struct TrainConfig {
  int epochs = 50;
  double learning_rate = 1e-3;
  int batch_size = 8;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  double clip_norm = 1.0;
  bool reverse_augment = false;
  /// When > 0, each construct is weighted by min(signal_to_noise, cap) / cap.
  double sn_weight_cap = 0.0;
  std::uint64_t shuffle_seed = 0;
  /// Trained columns; constructs contribute the subset they carry.
  std::vector<DataType> columns{kAllDataTypes.begin(), kAllDataTypes.end()};
};

struct TrainHistory {
  std::vector<double> train_loss;       // end-of-epoch mean loss on the training set
  std::vector<double> validation_loss;  // empty when no validation set
};

class TrainingDivergedError : public Error {
 public:
  using Error::Error;
};

/// Adam with global-norm gradient clipping. Every construct needs a BPP.
TrainHistory train(NeuralModel& m, const Dataset& train_set, const Dataset& validation_set,
                   const TrainConfig& config);

/// Mean loss_masked over a dataset (unweighted).
double mean_loss(const NeuralModel& m, const Dataset& data, const std::vector<DataType>& columns);

/// Full-length predictions for every construct.
PredictionSet predict_neural(const NeuralModel& m, const Dataset& data, const std::string& model_name = "neural");

/// Attaches the model's full-length predictions as synthetic profiles.
Dataset pseudo_label_augment(const NeuralModel& m, const Dataset& unlabeled);

/// i.i.d. uniform sequences over ACGU.
std::vector<std::string> random_sequences(std::size_t count, std::size_t length, std::uint64_t seed);
std::string to_fasta(const std::vector<std::string>& sequences, const std::string& prefix = "random");

void save_neural_model(const NeuralModel& m, const std::filesystem::path& path);
NeuralModel load_neural_model(const std::filesystem::path& path);
std::string neural_model_to_json(const NeuralModel& m);
NeuralModel neural_model_from_json(const std::string& text);

// ---------------------------------------------------------------------------

template <typename Fn>
void NeuralParams::visit(Fn&& fn) {
  fn("embed_w", embed_w);
  fn("embed_b", embed_b);
  for (std::size_t l = 0; l < message.size(); ++l) {
    const std::string p = "message" + std::to_string(l) + ".";
    fn(p + "w_self", message[l].w_self);
    fn(p + "w_adj", message[l].w_adj);
    fn(p + "w_bpp", message[l].w_bpp);
    fn(p + "bias", message[l].bias);
  }
  for (std::size_t r = 0; r < recurrent.size(); ++r) {
    for (int dir = 0; dir < 2; ++dir) {
      GruCell& g = dir == 0 ? recurrent[r].forward : recurrent[r].backward;
      const std::string p = "gru" + std::to_string(r) + (dir == 0 ? ".fwd." : ".bwd.");
      fn(p + "wz", g.wz);
      fn(p + "wr", g.wr);
      fn(p + "wc", g.wc);
      fn(p + "uz", g.uz);
      fn(p + "ur", g.ur);
      fn(p + "uc", g.uc);
      fn(p + "bz", g.bz);
      fn(p + "br", g.br);
      fn(p + "bc", g.bc);
    }
  }
  fn("head_w", head_w);
  fn("head_b", head_b);
}

template <typename Fn>
void NeuralParams::visit(Fn&& fn) const {
  const_cast<NeuralParams*>(this)->visit(
      [&](const std::string& name, Eigen::MatrixXd& t) { fn(name, static_cast<const Eigen::MatrixXd&>(t)); });
}

}  // namespace degkit
