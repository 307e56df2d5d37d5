#include "floodal/nn.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "floodal/errors.hpp"

namespace floodal {

namespace {

void check_3d(const TensorD& t, const char* what) {
  if (t.shape.size() != 3)
    throw RuntimeFailure(std::string(what) + ": expected a [C,H,W] tensor");
}

// Fixed-order four-lane reductions: deterministic for a given length, and
// the independent lanes vectorize where a strict serial sum cannot.
double dot_lanes(const float* a, const float* b, int n) {
  double l0 = 0.0, l1 = 0.0, l2 = 0.0, l3 = 0.0;
  int i = 0;
  for (; i + 4 <= n; i += 4) {
    l0 += static_cast<double>(a[i]) * b[i];
    l1 += static_cast<double>(a[i + 1]) * b[i + 1];
    l2 += static_cast<double>(a[i + 2]) * b[i + 2];
    l3 += static_cast<double>(a[i + 3]) * b[i + 3];
  }
  double tail = 0.0;
  for (; i < n; ++i) tail += static_cast<double>(a[i]) * b[i];
  return ((l0 + l1) + (l2 + l3)) + tail;
}

double sum_lanes(const float* a, int n) {
  double l0 = 0.0, l1 = 0.0, l2 = 0.0, l3 = 0.0;
  int i = 0;
  for (; i + 4 <= n; i += 4) {
    l0 += a[i];
    l1 += a[i + 1];
    l2 += a[i + 2];
    l3 += a[i + 3];
  }
  double tail = 0.0;
  for (; i < n; ++i) tail += a[i];
  return ((l0 + l1) + (l2 + l3)) + tail;
}

}  // namespace

TensorD conv2d_forward(const TensorD& input, const TensorD& weights,
                       const TensorD& bias) {
  check_3d(input, "conv2d");
  const int cin = input.dim(0), h = input.dim(1), w = input.dim(2);
  const int cout = weights.dim(0), k = weights.dim(2);
  if (weights.dim(1) != cin)
    throw RuntimeFailure("conv2d: weight channels do not match input");
  if (k % 2 == 0 || weights.dim(3) != k)
    throw RuntimeFailure("conv2d: kernel must be odd and square");
  const int pad = (k - 1) / 2;

  TensorD out({cout, h, w});
  std::vector<double> acc(static_cast<std::size_t>(h) * w);
  for (int co = 0; co < cout; ++co) {
    std::fill(acc.begin(), acc.end(), static_cast<double>(bias.data[co]));
    for (int ci = 0; ci < cin; ++ci) {
      const float* in = input.channel(ci);
      const float* ker =
          weights.data.data() + ((static_cast<std::size_t>(co) * cin + ci) * k * k);
      for (int kh = 0; kh < k; ++kh) {
        const int dy = kh - pad;
        const int h0 = std::max(0, -dy), h1 = std::min(h, h - dy);
        for (int kw = 0; kw < k; ++kw) {
          const int dx = kw - pad;
          const int w0 = std::max(0, -dx), w1 = std::min(w, w - dx);
          const double kv = ker[kh * k + kw];
          for (int y = h0; y < h1; ++y) {
            const float* row = in + static_cast<std::size_t>(y + dy) * w + dx;
            double* arow = acc.data() + static_cast<std::size_t>(y) * w;
            for (int x = w0; x < w1; ++x) arow[x] += kv * row[x];
          }
        }
      }
    }
    float* orow = out.channel(co);
    for (std::size_t i = 0; i < acc.size(); ++i)
      orow[i] = static_cast<float>(acc[i]);
  }
  return out;
}

void conv2d_backward(const TensorD& input, const TensorD& weights,
                     const TensorD& grad_output, TensorD& grad_input,
                     TensorD& grad_weights, TensorD& grad_bias) {
  const int cin = input.dim(0), h = input.dim(1), w = input.dim(2);
  const int cout = weights.dim(0), k = weights.dim(2);
  const int pad = (k - 1) / 2;
  grad_input = TensorD(input.shape);
  grad_weights = TensorD(weights.shape);
  grad_bias = TensorD({cout});

  std::vector<double> acc(static_cast<std::size_t>(h) * w);
  // grad wrt input: correlation of grad_output with the flipped kernel.
  for (int ci = 0; ci < cin; ++ci) {
    std::fill(acc.begin(), acc.end(), 0.0);
    for (int co = 0; co < cout; ++co) {
      const float* go = grad_output.channel(co);
      const float* ker =
          weights.data.data() + ((static_cast<std::size_t>(co) * cin + ci) * k * k);
      for (int kh = 0; kh < k; ++kh) {
        const int dy = kh - pad;
        // input pixel y receives from output pixel y - dy
        const int h0 = std::max(0, dy), h1 = std::min(h, h + dy);
        for (int kw = 0; kw < k; ++kw) {
          const int dx = kw - pad;
          const int w0 = std::max(0, dx), w1 = std::min(w, w + dx);
          const double kv = ker[kh * k + kw];
          for (int y = h0; y < h1; ++y) {
            const float* row = go + static_cast<std::size_t>(y - dy) * w - dx;
            double* arow = acc.data() + static_cast<std::size_t>(y) * w;
            for (int x = w0; x < w1; ++x) arow[x] += kv * row[x];
          }
        }
      }
    }
    float* grow = grad_input.channel(ci);
    for (std::size_t i = 0; i < acc.size(); ++i)
      grow[i] = static_cast<float>(acc[i]);
  }

  // grad wrt weights and bias.
  for (int co = 0; co < cout; ++co) {
    const float* go = grad_output.channel(co);
    grad_bias.data[co] = static_cast<float>(sum_lanes(go, h * w));
    for (int ci = 0; ci < cin; ++ci) {
      const float* in = input.channel(ci);
      float* gker = grad_weights.data.data() +
                    ((static_cast<std::size_t>(co) * cin + ci) * k * k);
      for (int kh = 0; kh < k; ++kh) {
        const int dy = kh - pad;
        const int h0 = std::max(0, -dy), h1 = std::min(h, h - dy);
        for (int kw = 0; kw < k; ++kw) {
          const int dx = kw - pad;
          const int w0 = std::max(0, -dx), w1 = std::min(w, w - dx);
          double sum = 0.0;
          for (int y = h0; y < h1; ++y) {
            const float* irow =
                in + static_cast<std::size_t>(y + dy) * w + dx + w0;
            const float* grow = go + static_cast<std::size_t>(y) * w + w0;
            sum += dot_lanes(irow, grow, w1 - w0);
          }
          gker[kh * k + kw] = static_cast<float>(sum);
        }
      }
    }
  }
}

TensorD maxpool2_forward(const TensorD& input, std::vector<int>& argmax) {
  check_3d(input, "maxpool2");
  const int c = input.dim(0), h = input.dim(1), w = input.dim(2);
  if (h % 2 != 0 || w % 2 != 0)
    throw RuntimeFailure("maxpool2: spatial dimensions must be even");
  const int oh = h / 2, ow = w / 2;
  TensorD out({c, oh, ow});
  argmax.assign(static_cast<std::size_t>(c) * oh * ow, 0);
  for (int ci = 0; ci < c; ++ci) {
    const float* in = input.channel(ci);
    float* op = out.channel(ci);
    int* am = argmax.data() + static_cast<std::size_t>(ci) * oh * ow;
    for (int y = 0; y < oh; ++y)
      for (int x = 0; x < ow; ++x) {
        const int base = (2 * y) * w + 2 * x;
        const int candidates[4] = {base, base + 1, base + w, base + w + 1};
        int best = candidates[0];
        float bv = in[best];
        for (int i = 1; i < 4; ++i)
          if (in[candidates[i]] > bv) {  // strict: ties keep lowest index
            bv = in[candidates[i]];
            best = candidates[i];
          }
        op[y * ow + x] = bv;
        am[y * ow + x] = best;
      }
  }
  return out;
}

TensorD maxpool2_backward(const TensorD& grad_output,
                          const std::vector<int>& argmax,
                          const std::vector<int>& input_shape) {
  TensorD grad_input(input_shape);
  const int c = grad_output.dim(0);
  const std::size_t per = grad_output.numel() / c;
  const std::size_t in_per =
      static_cast<std::size_t>(input_shape[1]) * input_shape[2];
  for (int ci = 0; ci < c; ++ci) {
    const float* go = grad_output.channel(ci);
    float* gi = grad_input.data.data() + ci * in_per;
    const int* am = argmax.data() + ci * per;
    for (std::size_t i = 0; i < per; ++i) gi[am[i]] += go[i];
  }
  return grad_input;
}

TensorD transposed_conv2_forward(const TensorD& input, const TensorD& weights,
                                 const TensorD& bias) {
  check_3d(input, "transposed_conv2");
  const int cin = input.dim(0), h = input.dim(1), w = input.dim(2);
  if (weights.dim(0) != cin)
    throw RuntimeFailure("transposed_conv2: weight channels do not match input");
  const int cout = weights.dim(1);
  const int oh = 2 * h, ow = 2 * w;
  TensorD out({cout, oh, ow});
  std::vector<double> acc(static_cast<std::size_t>(oh) * ow);
  for (int co = 0; co < cout; ++co) {
    std::fill(acc.begin(), acc.end(), static_cast<double>(bias.data[co]));
    for (int ci = 0; ci < cin; ++ci) {
      const float* in = input.channel(ci);
      const float* ker = weights.data.data() +
                         ((static_cast<std::size_t>(ci) * cout + co) * 4);
      for (int kh = 0; kh < 2; ++kh)
        for (int kw = 0; kw < 2; ++kw) {
          const double kv = ker[kh * 2 + kw];
          for (int y = 0; y < h; ++y) {
            const float* row = in + static_cast<std::size_t>(y) * w;
            double* arow =
                acc.data() + static_cast<std::size_t>(2 * y + kh) * ow + kw;
            for (int x = 0; x < w; ++x) arow[2 * x] += kv * row[x];
          }
        }
    }
    float* orow = out.channel(co);
    for (std::size_t i = 0; i < acc.size(); ++i)
      orow[i] = static_cast<float>(acc[i]);
  }
  return out;
}

void transposed_conv2_backward(const TensorD& input, const TensorD& weights,
                               const TensorD& grad_output, TensorD& grad_input,
                               TensorD& grad_weights, TensorD& grad_bias) {
  const int cin = input.dim(0), h = input.dim(1), w = input.dim(2);
  const int cout = weights.dim(1);
  const int ow = 2 * w;
  grad_input = TensorD(input.shape);
  grad_weights = TensorD(weights.shape);
  grad_bias = TensorD({cout});

  for (int co = 0; co < cout; ++co) {
    const float* go = grad_output.channel(co);
    grad_bias.data[co] = static_cast<float>(
        sum_lanes(go, static_cast<int>(grad_output.numel()) / cout));
  }

  std::vector<double> acc(static_cast<std::size_t>(h) * w);
  for (int ci = 0; ci < cin; ++ci) {
    std::fill(acc.begin(), acc.end(), 0.0);
    const float* in = input.channel(ci);
    for (int co = 0; co < cout; ++co) {
      const float* go = grad_output.channel(co);
      float* gker = grad_weights.data.data() +
                    ((static_cast<std::size_t>(ci) * cout + co) * 4);
      const float* ker = weights.data.data() +
                         ((static_cast<std::size_t>(ci) * cout + co) * 4);
      for (int kh = 0; kh < 2; ++kh)
        for (int kw = 0; kw < 2; ++kw) {
          const double kv = ker[kh * 2 + kw];
          double wsum = 0.0;
          for (int y = 0; y < h; ++y) {
            const float* grow =
                go + static_cast<std::size_t>(2 * y + kh) * ow + kw;
            const float* irow = in + static_cast<std::size_t>(y) * w;
            double* arow = acc.data() + static_cast<std::size_t>(y) * w;
            for (int x = 0; x < w; ++x) {
              const double g = grow[2 * x];
              arow[x] += kv * g;
              wsum += static_cast<double>(irow[x]) * g;
            }
          }
          gker[kh * 2 + kw] = static_cast<float>(wsum);
        }
    }
    float* grow = grad_input.channel(ci);
    for (std::size_t i = 0; i < acc.size(); ++i)
      grow[i] = static_cast<float>(acc[i]);
  }
}

TensorD concat_channels(const TensorD& a, const TensorD& b) {
  check_3d(a, "concat_channels");
  check_3d(b, "concat_channels");
  if (a.dim(1) != b.dim(1) || a.dim(2) != b.dim(2))
    throw RuntimeFailure("concat_channels: spatial dimensions differ");
  TensorD out({a.dim(0) + b.dim(0), a.dim(1), a.dim(2)});
  std::copy(a.data.begin(), a.data.end(), out.data.begin());
  std::copy(b.data.begin(), b.data.end(), out.data.begin() + a.numel());
  return out;
}

void concat_channels_backward(const TensorD& grad_output, TensorD& grad_a,
                              TensorD& grad_b) {
  std::copy(grad_output.data.begin(),
            grad_output.data.begin() + grad_a.numel(), grad_a.data.begin());
  std::copy(grad_output.data.begin() + grad_a.numel(), grad_output.data.end(),
            grad_b.data.begin());
}

TensorD relu_forward(const TensorD& input) {
  TensorD out(input.shape);
  for (std::size_t i = 0; i < input.numel(); ++i)
    out.data[i] = input.data[i] > 0.0f ? input.data[i] : 0.0f;
  return out;
}

TensorD relu_backward(const TensorD& grad_output, const TensorD& output) {
  TensorD out(grad_output.shape);
  for (std::size_t i = 0; i < out.numel(); ++i)
    out.data[i] = output.data[i] > 0.0f ? grad_output.data[i] : 0.0f;
  return out;
}

TensorD sigmoid_forward(const TensorD& input) {
  TensorD out(input.shape);
  for (std::size_t i = 0; i < input.numel(); ++i)
    out.data[i] = 1.0f / (1.0f + std::exp(-input.data[i]));
  return out;
}

TensorD sigmoid_backward(const TensorD& grad_output, const TensorD& output) {
  TensorD out(grad_output.shape);
  for (std::size_t i = 0; i < out.numel(); ++i) {
    const float p = output.data[i];
    out.data[i] = grad_output.data[i] * p * (1.0f - p);
  }
  return out;
}

TensorD spatial_dropout_forward(const TensorD& input, double rate, Rng& rng,
                                std::vector<std::uint8_t>& mask) {
  check_3d(input, "spatial_dropout");
  if (rate < 0.0 || rate >= 1.0)
    throw RuntimeFailure("spatial_dropout: rate must be in [0,1)");
  const int c = input.dim(0);
  mask.resize(c);
  TensorD out(input.shape);
  const std::size_t per = input.numel() / c;
  const float scale = static_cast<float>(1.0 / (1.0 - rate));
  for (int ci = 0; ci < c; ++ci) {
    const bool keep = rate == 0.0 ? true : !rng.bernoulli(rate);
    mask[ci] = keep ? 1 : 0;
    const float* in = input.channel(ci);
    float* op = out.data.data() + ci * per;
    if (keep) {
      const float s = rate == 0.0 ? 1.0f : scale;
      for (std::size_t i = 0; i < per; ++i) op[i] = in[i] * s;
    }
    // dropped channels stay zero
  }
  return out;
}

TensorD spatial_dropout_backward(const TensorD& grad_output,
                                 const std::vector<std::uint8_t>& mask,
                                 double rate) {
  const int c = grad_output.dim(0);
  const std::size_t per = grad_output.numel() / c;
  TensorD out(grad_output.shape);
  const float scale =
      rate == 0.0 ? 1.0f : static_cast<float>(1.0 / (1.0 - rate));
  for (int ci = 0; ci < c; ++ci) {
    if (!mask[ci]) continue;
    const float* go = grad_output.channel(ci);
    float* gi = out.data.data() + ci * per;
    for (std::size_t i = 0; i < per; ++i) gi[i] = go[i] * scale;
  }
  return out;
}

namespace {
constexpr float kProbClampLo = 1e-7f;
constexpr float kProbClampHi = 1.0f - 1e-7f;
}  // namespace

double bce_loss(const TensorD& prob, std::span<const std::uint8_t> target,
                std::span<const std::uint8_t> valid) {
  const std::size_t n = prob.numel();
  if (target.size() != n || valid.size() != n)
    throw RuntimeFailure("bce_loss: size mismatch");
  double sum = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!valid[i]) continue;
    const float p = std::clamp(prob.data[i], kProbClampLo, kProbClampHi);
    const double y = target[i] ? 1.0 : 0.0;
    sum -= y * std::log(static_cast<double>(p)) +
           (1.0 - y) * std::log(1.0 - static_cast<double>(p));
    ++count;
  }
  if (count == 0) throw RuntimeFailure("bce_loss: no valid pixels");
  return sum / static_cast<double>(count);
}

TensorD bce_backward(const TensorD& prob, std::span<const std::uint8_t> target,
                     std::span<const std::uint8_t> valid) {
  const std::size_t n = prob.numel();
  TensorD grad(prob.shape);
  std::size_t count = 0;
  for (std::size_t i = 0; i < n; ++i)
    if (valid[i]) ++count;
  if (count == 0) throw RuntimeFailure("bce_loss: no valid pixels");
  const double inv = 1.0 / static_cast<double>(count);
  for (std::size_t i = 0; i < n; ++i) {
    if (!valid[i]) continue;
    const float p = prob.data[i];
    if (p <= kProbClampLo || p >= kProbClampHi) continue;  // clamp is flat
    const double y = target[i] ? 1.0 : 0.0;
    grad.data[i] = static_cast<float>(
        (-y / p + (1.0 - y) / (1.0 - static_cast<double>(p))) * inv);
  }
  return grad;
}

AdamW::AdamW(std::span<Parameter> params, OptimConfig config)
    : config_(config) {
  m_.reserve(params.size());
  v_.reserve(params.size());
  for (const auto& p : params) {
    m_.emplace_back(p.value.numel(), 0.0);
    v_.emplace_back(p.value.numel(), 0.0);
  }
}

void AdamW::step(std::span<Parameter> params) {
  if (params.size() != m_.size())
    throw RuntimeFailure("adamw: parameter set changed between steps");
  for (const auto& p : params)
    for (float g : p.grad.data)
      if (!std::isfinite(g))
        throw RuntimeFailure("adamw: non-finite gradient in " + p.name +
                             "; step aborted");
  ++step_count_;
  const double bc1 = 1.0 - std::pow(config_.beta1, step_count_);
  const double bc2 = 1.0 - std::pow(config_.beta2, step_count_);
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& p = params[i];
    auto& m = m_[i];
    auto& v = v_[i];
    for (std::size_t j = 0; j < p.value.numel(); ++j) {
      const double g = p.grad.data[j];
      double x = p.value.data[j];
      x -= config_.learning_rate * config_.weight_decay * x;  // decoupled decay
      m[j] = config_.beta1 * m[j] + (1.0 - config_.beta1) * g;
      v[j] = config_.beta2 * v[j] + (1.0 - config_.beta2) * g * g;
      const double mhat = m[j] / bc1;
      const double vhat = v[j] / bc2;
      x -= config_.learning_rate * mhat / (std::sqrt(vhat) + config_.epsilon);
      p.value.data[j] = static_cast<float>(x);
    }
  }
}

GradCheckReport grad_check(std::span<Parameter> params,
                           const std::function<double()>& loss_forward,
                           const std::function<void()>& loss_backward,
                           double step, std::size_t max_per_param) {
  for (auto& p : params) p.zero_grad();
  loss_forward();
  loss_backward();

  GradCheckReport report;
  for (auto& p : params) {
    std::vector<float> analytic(p.grad.data);
    const std::size_t n = p.value.numel();
    const std::size_t stride =
        max_per_param > 0 && n > max_per_param ? n / max_per_param : 1;
    for (std::size_t j = 0; j < n; j += stride) {
      const float saved = p.value.data[j];
      p.value.data[j] = static_cast<float>(saved + step);
      const double up = loss_forward();
      p.value.data[j] = static_cast<float>(saved - step);
      const double down = loss_forward();
      p.value.data[j] = saved;
      const double numeric = (up - down) / (2.0 * step);
      const double a = analytic[j];
      const double denom = std::max({std::fabs(a), std::fabs(numeric), 1.0});
      const double rel = std::fabs(a - numeric) / denom;
      ++report.checked;
      if (rel > report.max_rel_error) {
        report.max_rel_error = rel;
        report.worst_param = p.name + "[" + std::to_string(j) + "]";
      }
    }
  }
  // restore a consistent forward state
  loss_forward();
  return report;
}

}  // namespace floodal
