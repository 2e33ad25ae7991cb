// SPDX-License-Identifier: Apache-2.0
//
// Stacked autoencoder with one affine reconstruction head per non-final
// encoder layer.
//
// Layout for encoder widths (w1, ..., wL) on input dimension d:
//   encoder k   : w_{k-1} -> w_k, ReLU            (w_0 = d), k = 1..L
//   head k      : w_k -> d, linear                k = 1..L-1
//   decoder j   : w_{L-j+1} -> w_{L-j}            j = 1..L, ReLU except the last (linear, -> d)
// Exit k < L reconstructs through encoder 1..k then head k; exit L is the
// full encoder-decoder path. Decoder hidden output j mirrors encoder layer
// L-j, so a neuron gate on encoder layer k also gates its decoder mirror.
#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "mosae/data.hpp"
#include "mosae/linalg.hpp"

namespace mosae::sae {

enum class Activation : std::uint8_t { relu = 0 };

struct SaeConfig {
  std::size_t input_dim = 0;
  std::vector<std::size_t> encoder_widths;
  Activation activation = Activation::relu;
  std::size_t epochs = 20;
  std::size_t batch_size = 64;
  double learning_rate = 0.01;
  double momentum = 0.9;
  std::uint64_t seed = 1;

  /// Throws ContractError when a field is out of range.
  void validate() const;
  std::size_t depth() const noexcept { return encoder_widths.size(); }
  bool operator==(const SaeConfig&) const = default;
};

/// out = weight * in + bias; weight is out x in.
struct Dense {
  Matrix weight;
  Vector bias;

  std::size_t in_dim() const noexcept { return weight.cols(); }
  std::size_t out_dim() const noexcept { return weight.rows(); }
  bool operator==(const Dense&) const = default;
};

struct SaeModel {
  SaeConfig config;
  std::vector<Dense> encoder;  // L layers
  std::vector<Dense> decoder;  // L layers
  std::vector<Dense> heads;    // L-1 heads

  std::size_t depth() const noexcept { return encoder.size(); }
  std::size_t input_dim() const noexcept { return config.input_dim; }
  std::size_t parameter_count() const noexcept;

  /// Throws ContractError if shapes disagree with the config or a parameter is non-finite.
  void check_invariants() const;

  bool operator==(const SaeModel&) const = default;
};

/// Visits every layer in declaration order: encoder, decoder, heads.
template <class Model, class F>
void for_each_dense(Model& m, F&& f) {
  for (auto& l : m.encoder) f(l);
  for (auto& l : m.decoder) f(l);
  for (auto& l : m.heads) f(l);
}

struct TrainReport {
  std::vector<double> epoch_loss;
  double final_loss = 0.0;
  double wall_seconds = 0.0;
};

/// Glorot-uniform weights, zero biases; deterministic per cfg.seed.
SaeModel init_model(const SaeConfig& cfg);

/// A model with the same shapes and every parameter zero.
SaeModel zeros_like(const SaeModel& m);

/// Joint loss over a batch: mean over samples of the sum over exits of the
/// per-sample mean squared reconstruction error. `grad` must come from
/// zeros_like(model); gradients are accumulated into it. Returns the loss and
/// writes each sample's contribution into `per_sample` when non-empty.
double loss_and_gradient(const SaeModel& model, const Matrix& x,
                         std::span<const std::size_t> rows, SaeModel& grad,
                         std::span<double> per_sample = {});

/// Mini-batch SGD with momentum over all rows of `normals`; mutates `model`.
TrainReport train(SaeModel& model, const data::Dataset& normals);

/// Read-only forward evaluator over a frozen model, with optional per-neuron
/// gates (1 keep, 0 prune) for each encoder layer. Holds a reference: the
/// model must outlive the view.
class InferenceView {
 public:
  explicit InferenceView(const SaeModel& model);
  InferenceView(const SaeModel& model, std::vector<std::vector<double>> gates);

  const SaeModel& model() const noexcept { return *model_; }
  std::size_t depth() const noexcept { return model_->depth(); }
  std::size_t input_dim() const noexcept { return model_->input_dim(); }
  bool gated() const noexcept { return !gates_.empty(); }
  const std::vector<std::vector<double>>& gates() const noexcept { return gates_; }

  /// Per-sample scratch buffers; one per concurrent caller.
  struct Workspace {
    std::vector<std::vector<double>> enc;
    std::vector<double> ping, pong, recon;
  };
  Workspace make_workspace() const;

  /// Encoder layer k (0-based) from layer k-1 already in `ws` (or from x when k = 0).
  void encode_layer(Workspace& ws, std::span<const double> x, std::size_t k) const;
  /// Head error for exit k+1 (k 0-based, k < L-1); needs encoder layer k in `ws`.
  double head_error(Workspace& ws, std::span<const double> x, std::size_t k) const;
  /// Final-exit error; needs all encoder layers in `ws`.
  double final_error(Workspace& ws, std::span<const double> x) const;

  /// Reconstruction at 1-based exit (L = full path) into `out`.
  void reconstruct(std::span<const double> x, std::size_t exit, std::span<double> out) const;

  /// Per-sample errors at a 1-based exit.
  Vector errors(const data::Dataset& d, std::size_t exit) const;

  /// errors for every exit 1..L at once, sharing the encoder pass.
  std::vector<Vector> all_exit_errors(const data::Dataset& d) const;

 private:
  void gate(std::size_t layer, std::span<double> a) const;

  const SaeModel* model_;
  std::vector<std::vector<double>> gates_;
};

/// Per-sample mean squared error at a 1-based exit (L = final).
Vector reconstruction_errors(const SaeModel& model, const data::Dataset& d, std::size_t exit);

/// Value at 1-based rank ceil(q * n) of the sorted values (rank clamped to [1, n]).
double nearest_rank_quantile(std::span<const double> values, double q);

/// Nearest-rank quantile q of final-exit errors over `normals`.
double calibrate_final_threshold(const InferenceView& view, const data::Dataset& normals, double q);
double calibrate_final_threshold(const SaeModel& model, const data::Dataset& normals, double q);

/// 1 iff the final-exit error exceeds `threshold`.
std::vector<std::uint8_t> classify(const InferenceView& view, const data::Dataset& d,
                                   double threshold);
std::vector<std::uint8_t> classify(const SaeModel& model, const data::Dataset& d, double threshold);

// Checkpoint file: "MOSM", version 1, config, then every matrix (biases as
// len x 1) in declaration order, each as u32 rows, u32 cols, f64 values, all
// little-endian.
std::vector<std::uint8_t> serialize_model(const SaeModel& m);
SaeModel deserialize_model(std::span<const std::uint8_t> bytes);
void save_model(const SaeModel& m, const std::filesystem::path& path);
SaeModel load_model(const std::filesystem::path& path);

/// All weight and bias blocks as matrices, in checkpoint order.
std::vector<Matrix> parameter_matrices(const SaeModel& m);
/// Rebuilds a model from checkpoint-ordered matrices, inferring the architecture
/// from their shapes; training fields are copied from `training`.
SaeModel model_from_matrices(const std::vector<Matrix>& mats, const SaeConfig& training);

}  // namespace mosae::sae
