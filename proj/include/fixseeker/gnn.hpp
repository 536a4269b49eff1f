#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "fixseeker/embed.hpp"
#include "fixseeker/tensor.hpp"
#include "fixseeker/util/rng.hpp"

namespace fixseeker {

inline constexpr std::size_t kEdgeTypes = 4;

struct LayerParams {
  Matrix w_self;                               // d_in x d_out
  std::array<Matrix, kEdgeTypes> w;            // per type, d_in x d_out
  std::array<Matrix, kEdgeTypes> a;            // per type, 1 x 2*d_out (source half, target half)

  std::size_t d_in() const { return w_self.rows; }
  std::size_t d_out() const { return w_self.cols; }
};

struct ModelParams {
  LayerParams layer1;
  LayerParams layer2;
  Matrix fc;       // d_graph x 2
  Matrix fc_bias;  // 1 x 2
  double dropout_p = 0.5;
  std::uint64_t seed = 0;

  /// Every parameter tensor with a stable name, in checkpoint order.
  std::vector<std::pair<std::string, Matrix*>> tensors();
  std::vector<std::pair<std::string, const Matrix*>> tensors() const;
};

struct LossConfig {
  double w0 = 1.0;
  double w1 = 1.0;
};

inline constexpr double kProbEpsilon = 1e-7;

enum class Mode { TRAIN, EVAL };

struct TrainConfig {
  std::size_t hidden = 128;
  std::size_t graph_width = 128;
  int layers = 2;
  double dropout = 0.5;
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  std::size_t batch_size = 32;
  int epochs = 100;
  int patience = 10;
  double threshold = 0.5;
  std::uint64_t seed = 42;
  int threads = 0;  // 0: hardware concurrency
};

struct EpochRecord {
  int epoch = 0;
  double train_loss = 0;
  double val_loss = 0;
  double train_acc = 0;
  double val_f1 = 0;
};

struct TrainResult {
  ModelParams params;
  std::vector<EpochRecord> history;
  int best_epoch = 0;
  std::size_t train_size = 0;  // after up-sampling
  std::size_t val_size = 0;
  LossConfig weights;
};

namespace gnn {

/// D^-1/2 (A + I) D^-1/2 over `n` nodes, indexed [target][source]; D holds
/// the row sums of A + I (one plus the in-degree).
Matrix normalize_adjacency(std::size_t n, const std::vector<std::pair<int, int>>& edges);

/// Softmax of LeakyReLU(a . [W h_src ; W h_dst]) over each target's in-edges,
/// one coefficient per edge in input order.
std::vector<double> attention_coefficients(const Matrix& h, const std::vector<std::pair<int, int>>& edges,
                                           const Matrix& w, const Matrix& a);

/// One edge-attentive layer; `relu` selects the activation.
Matrix layer_forward(const Matrix& h, const GraphTensors& g, const LayerParams& p, bool relu);

std::vector<double> mean_pool(const Matrix& h);

/// Softmax over two logits.
std::pair<double, double> softmax2(double l0, double l1);

/// w1/w0 = n_neg/n_pos with w0 + w1 = 2. Throws ZeroClass.
LossConfig class_weights(std::size_t n_neg, std::size_t n_pos);

/// Mean weighted binary cross-entropy on p_vfc values, clamped to
/// [eps, 1 - eps].
double weighted_ce_loss(const std::vector<double>& p_vfc, const std::vector<int>& labels,
                        const LossConfig& cfg);

/// Xavier-uniform weights, zero biases. Throws InvalidArgument unless
/// cfg.layers == 2.
ModelParams init_params(std::size_t d_in, const TrainConfig& cfg);

/// (p_nonvfc, p_vfc). TRAIN mode draws an inverted-dropout mask from `rng`.
std::pair<double, double> forward(const GraphTensors& g, const ModelParams& p, Mode mode = Mode::EVAL,
                                  util::Rng* rng = nullptr);

/// Loss contribution of one graph (already divided by `batch_n`) and its
/// gradients accumulated into `grad` (same shapes as `p`). `dropout_mask`
/// empty means no dropout.
double backward(const GraphTensors& g, int label, const ModelParams& p, const LossConfig& loss,
                double batch_n, const std::vector<double>& dropout_mask, ModelParams& grad);

/// Zero-valued tensors shaped like `p`.
ModelParams zeros_like(const ModelParams& p);

/// Throws NonFiniteValue naming the first tensor holding NaN or Inf.
void check_finite(const ModelParams& p);

/// Minority graphs repeated cyclically until both classes have equal counts.
std::vector<std::size_t> upsample(const std::vector<int>& labels);

TrainResult train(const std::vector<GraphTensors>& train_set, const std::vector<GraphTensors>& val_set,
                  const TrainConfig& cfg,
                  const std::function<void(const EpochRecord&)>& on_epoch = {});

std::vector<double> predict(const std::vector<GraphTensors>& graphs, const ModelParams& p, int threads = 0);

std::string save_checkpoint(const ModelParams& p, const TrainConfig& cfg);
/// Throws CheckpointMismatch on a wrong header, version or shape.
ModelParams load_checkpoint(std::string_view text, TrainConfig* cfg = nullptr);

/// key=value lines; unknown keys and layers != 2 raise InvalidArgument.
TrainConfig parse_config(std::string_view text);
std::string format_config(const TrainConfig& cfg);

}  // namespace gnn
}  // namespace fixseeker
