#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "floodal/data.hpp"
#include "floodal/nn.hpp"
#include "floodal/tensor.hpp"

namespace floodal {

struct UNetConfig {
  int in_channels = 3;
  int depth = 2;           // number of down-samplings
  int base_channels = 16;  // channels at the first level
  double dropout_rate = 0.5;

  void validate() const;
};

/// Activations of one forward pass, kept for the backward pass. One workspace
/// per concurrent caller; the network itself stays read-only during forward.
struct UNetWorkspace {
  TensorD input;
  std::vector<TensorD> enc_a1, enc_a2, pooled;
  std::vector<std::vector<int>> pool_argmax;
  TensorD bott_a1, bott_a2;
  std::vector<TensorD> up, cat, dec_a1, dec_a2;
  std::vector<std::uint8_t> dropout_mask;
  TensorD dropped;
  TensorD prob;  // sigmoid output, [1,H,W]
  bool dropout_applied = false;
};

/// Encoder-decoder segmenter with skip connections and one spatial-dropout
/// layer after the last decoder block; final 1x1 convolution plus sigmoid.
/// Channels double at each encoder level starting from base_channels.
class UNet {
 public:
  UNet(UNetConfig config, std::uint64_t seed);

  const UNetConfig& config() const { return config_; }
  std::span<Parameter> params() { return params_; }
  std::span<const Parameter> params() const { return params_; }
  std::size_t parameter_count() const;

  /// Forward pass; dropout_rng non-null applies spatial dropout (training and
  /// MC passes), null runs deterministic inference.
  const TensorD& forward(const TensorD& input, Rng* dropout_rng,
                         UNetWorkspace& ws) const;

  /// Accumulates parameter gradients (param_grads[i] += d loss / d param i)
  /// given the gradient of the loss w.r.t. the sigmoid output.
  void backward(const UNetWorkspace& ws, const TensorD& grad_prob,
                std::span<TensorD> param_grads) const;

  /// Forward pass that reuses the activation pattern (relu supports, pooling
  /// argmaxes, dropout mask) recorded in `pattern` by an earlier forward.
  /// Evaluates the linear piece that backward() differentiates, which makes
  /// finite differences on it valid even across relu/pooling kinks.
  TensorD forward_frozen(const TensorD& input,
                         const UNetWorkspace& pattern) const;

  void save(const std::filesystem::path& path) const;
  static UNet load(const std::filesystem::path& path);

 private:
  struct LayerRef {  // indices into params_ (weight, bias)
    int w = 0;
    int b = 0;
  };
  UNetConfig config_;
  std::vector<Parameter> params_;
  std::vector<LayerRef> enc_c1_, enc_c2_;
  LayerRef bott_c1_, bott_c2_;
  std::vector<LayerRef> dec_t_, dec_c1_, dec_c2_;
  LayerRef final_;

  UNet() = default;
  void build_layout();
};

struct TrainConfig {
  int max_epochs = 300;
  int batch_size = 8;
  double learning_rate = 5e-4;
  double weight_decay = 1e-2;
  double early_stop_delta = 5e-4;
  int early_stop_patience = 5;
  bool flip_augment = true;
  std::uint64_t seed = 0;
  int jobs = 1;

  void validate() const;
};

struct EpochStats {
  int epoch = 0;  // 1-based
  double train_loss = 0.0;
  double val_loss = 0.0;
  bool stopped = false;  // early stopping triggered on this epoch
};

struct TrainResult {
  std::vector<EpochStats> history;
  int best_epoch = 0;
  double best_val_loss = 0.0;
};

/// Supervised training with seeded shuffling, optional random flips, dropout
/// active on training batches and inactive for the per-epoch validation loss.
/// The network is left at the best-validation-epoch parameters.
TrainResult train(UNet& net, std::span<const CorpusEntry* const> labeled,
                  std::span<const CorpusEntry* const> validation,
                  const TrainConfig& config);

/// T stochastic forward passes plus their per-pixel mean.
struct StochasticPrediction {
  int T = 0;
  int height = 0;
  int width = 0;
  std::vector<std::vector<float>> passes;  // T maps of height*width
  std::vector<float> calibrated;           // per-pixel mean of the passes
};

StochasticPrediction mc_predict(const UNet& net, const Tile& tile, int T,
                                std::uint64_t seed, int jobs = 1);

/// Per-pixel threshold on the calibrated map: flood iff calibrated >= t.
LabelMask predict_binary(const StochasticPrediction& prediction,
                         double threshold);

void write_history_csv(const std::filesystem::path& path,
                       const TrainResult& result);

}  // namespace floodal
