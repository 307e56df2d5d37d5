#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "floodal/rng.hpp"
#include "floodal/tensor.hpp"

namespace floodal {

// Shape-preserving cross-correlation, odd square kernels, stride 1, zero
// padding (k-1)/2. weights [Cout,Cin,k,k], bias [Cout]. All reductions
// accumulate in double and are fixed-order, so results are bit-deterministic.
TensorD conv2d_forward(const TensorD& input, const TensorD& weights,
                       const TensorD& bias);
void conv2d_backward(const TensorD& input, const TensorD& weights,
                     const TensorD& grad_output, TensorD& grad_input,
                     TensorD& grad_weights, TensorD& grad_bias);

// 2x2 max pooling, stride 2. Ties route to the lowest row-major index so the
// backward pass is deterministic.
TensorD maxpool2_forward(const TensorD& input, std::vector<int>& argmax);
TensorD maxpool2_backward(const TensorD& grad_output,
                          const std::vector<int>& argmax,
                          const std::vector<int>& input_shape);

// 2x2 transposed convolution, stride 2 (doubles H and W).
// weights [Cin,Cout,2,2], bias [Cout].
TensorD transposed_conv2_forward(const TensorD& input, const TensorD& weights,
                                 const TensorD& bias);
void transposed_conv2_backward(const TensorD& input, const TensorD& weights,
                               const TensorD& grad_output, TensorD& grad_input,
                               TensorD& grad_weights, TensorD& grad_bias);

// Channel concatenation [Ca+Cb,H,W] and its gradient split.
TensorD concat_channels(const TensorD& a, const TensorD& b);
void concat_channels_backward(const TensorD& grad_output, TensorD& grad_a,
                              TensorD& grad_b);

TensorD relu_forward(const TensorD& input);
// output is the forward result; relu gradient masks on output > 0.
TensorD relu_backward(const TensorD& grad_output, const TensorD& output);

TensorD sigmoid_forward(const TensorD& input);
TensorD sigmoid_backward(const TensorD& grad_output, const TensorD& output);

// Inverted spatial dropout: each channel is zeroed with probability `rate`,
// survivors are scaled by 1/(1-rate). The returned mask (one byte per
// channel) drives both the backward pass and repeated MC passes.
TensorD spatial_dropout_forward(const TensorD& input, double rate, Rng& rng,
                                std::vector<std::uint8_t>& mask);
TensorD spatial_dropout_backward(const TensorD& grad_output,
                                 const std::vector<std::uint8_t>& mask,
                                 double rate);

// Mean binary cross-entropy over the valid pixels (valid[i] != 0).
// Probabilities are clamped to [1e-7, 1-1e-7] before the logs.
double bce_loss(const TensorD& prob, std::span<const std::uint8_t> target,
                std::span<const std::uint8_t> valid);
TensorD bce_backward(const TensorD& prob, std::span<const std::uint8_t> target,
                     std::span<const std::uint8_t> valid);

struct OptimConfig {
  double learning_rate = 5e-4;
  double weight_decay = 1e-2;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Decoupled-weight-decay Adam with bias correction.
class AdamW {
 public:
  AdamW(std::span<Parameter> params, OptimConfig config);

  /// One update step; throws RuntimeFailure on non-finite gradients without
  /// touching the parameters.
  void step(std::span<Parameter> params);

  long step_count() const { return step_count_; }
  const OptimConfig& config() const { return config_; }

 private:
  OptimConfig config_;
  std::vector<std::vector<double>> m_;
  std::vector<std::vector<double>> v_;
  long step_count_ = 0;
};

/// Central finite-difference check of every parameter gradient against the
/// analytic backward pass of `loss` (which must populate param grads).
/// Relative error uses max(|analytic|, |numeric|, 1) as the denominator so
/// the float32 finite-difference noise floor does not dominate near-zero
/// gradients.
struct GradCheckReport {
  double max_rel_error = 0.0;
  std::string worst_param;
  std::size_t checked = 0;
  bool passed(double tolerance) const { return max_rel_error < tolerance; }
};

GradCheckReport grad_check(std::span<Parameter> params,
                           const std::function<double()>& loss_forward,
                           const std::function<void()>& loss_backward,
                           double step = 1e-3, std::size_t max_per_param = 0);

}  // namespace floodal
