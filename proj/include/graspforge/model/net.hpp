#pragma once

#include "graspforge/depthproc/image.hpp"
#include "graspforge/rng.hpp"

#include <array>
#include <filesystem>
#include <span>
#include <vector>

namespace graspforge {

enum class LayerKind { conv, depthwise, relu, maxpool, global_avg_pool, dense };

/// conv: k x k, zero "same" padding, stride 1, in -> out channels.
/// depthwise: k x k per channel (in == out). maxpool: 2 x 2, stride 2.
/// dense: flattens its input (in values) to out values.
struct Layer {
  LayerKind kind = LayerKind::relu;
  int in = 0;
  int out = 0;
  int k = 0;

  bool operator==(const Layer&) const = default;
};

struct Tensor {
  std::vector<int> dims;
  std::vector<float> data;
};

/// Sequential network on an S x S single-channel input producing one logit.
/// Trainable layers own two tensors each (weight, bias), stored in f32;
/// all arithmetic is done in f64.
struct QualityNet {
  int input_size = 0;
  std::vector<Layer> layers;
  std::vector<Tensor> params;

  /// Zero-initialized net with the given layers. Throws ShapeMismatch when
  /// the layers do not chain or do not end in a single value.
  static QualityNet from_layers(int input_size, std::vector<Layer> layers);

  std::size_t param_count() const;
  std::vector<double> flat_params() const;
  /// Throws ShapeMismatch when the size differs from param_count().
  void set_flat_params(std::span<const double> values);
};

/// Standard layout for an S x S patch (S a positive multiple of 8):
/// [conv 3x3 32ch, ReLU, maxpool] x 3, depthwise 3x3, pointwise 64ch, ReLU,
/// global average pool, dense 64 -> 1 (21,313 parameters).
std::vector<Layer> standard_layers();

/// Standard net with He-uniform weights and zero biases. Throws InvalidArgument.
QualityNet make_quality_net(int input_size, Rng& rng);

/// Network input for a patch: height relative to the median of the central
/// block (4 x 4, or 3 x 3 for odd S, capped at S), in units of
/// kInputScale mm and clamped to +-kInputClamp.
inline constexpr double kInputScale = 10.0;
inline constexpr double kInputClamp = 4.0;
std::vector<double> net_input(const Patch& patch);

/// Logit for an already prepared input. Throws ShapeMismatch.
double forward_logit(const QualityNet& net, std::span<const double> input);

/// Grasp quality q in (0, 1). Throws ShapeMismatch.
double forward(const QualityNet& net, const Patch& patch);

inline constexpr double kLossClamp = 1e-7;

/// Weighted binary cross-entropy with y_hat clamped to [1e-7, 1 - 1e-7].
double loss(double y_hat, int y, const std::array<double, 2>& phi);

struct LabeledPatch {
  const Patch* patch = nullptr;
  int label = 0;
};

struct Gradients {
  double loss = 0.0;  // mean over the batch
  std::vector<double> grad;  // flat, same order as flat_params()
};

/// Mean batch loss evaluated with the given flat parameters (f64, not
/// rounded to the stored precision).
double batch_loss(const QualityNet& net, std::span<const double> params, std::span<const LabeledPatch> batch,
                  const std::array<double, 2>& phi);

/// Reverse-mode gradient of the mean batch loss. Per-sample work may run on
/// `jobs` threads; sums are taken in sample order. Throws InvalidArgument for
/// an empty batch.
Gradients gradients(const QualityNet& net, std::span<const LabeledPatch> batch, const std::array<double, 2>& phi,
                    int jobs = 1);

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  std::vector<double> m;
  std::vector<double> v;
  long step = 0;
};

/// Bias-corrected Adam on a flat parameter vector; empty moments are
/// initialized to zero. Throws ShapeMismatch.
void adam_step(std::vector<double>& params, AdamState& state, std::span<const double> grad, const AdamConfig& cfg);

/// Same update applied to a net's stored parameters.
void adam_step(QualityNet& net, AdamState& state, std::span<const double> grad, const AdamConfig& cfg);

/// Original, horizontal flip, vertical flip and both flips, in that order.
std::array<Patch, 4> flip_variants(const Patch& patch);

/// "GFQN", u32 version, u32 S, u32 tensor count, then per tensor u32 rank,
/// u32 dims, f32 data (little endian). Only standard nets are stored.
void save_checkpoint(const QualityNet& net, const std::filesystem::path& path);
std::string encode_checkpoint(const QualityNet& net);

/// Throws CheckpointNotFound / InvalidCheckpoint.
QualityNet load_checkpoint(const std::filesystem::path& path);
QualityNet decode_checkpoint(const std::string& bytes);

}  // namespace graspforge
