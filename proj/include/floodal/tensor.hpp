#pragma once

#include <cassert>
#include <cstddef>
#include <numeric>
#include <string>
#include <vector>

namespace floodal {

/// Dense row-major float32 tensor. The only shapes used by the network are
/// [C,H,W] activations and [Cout,Cin,Kh,Kw] / [C] parameters.
struct TensorD {
  std::vector<int> shape;
  std::vector<float> data;

  TensorD() = default;
  explicit TensorD(std::vector<int> s) : shape(std::move(s)) {
    data.assign(numel_of(shape), 0.0f);
  }

  static std::size_t numel_of(const std::vector<int>& s) {
    std::size_t n = 1;
    for (int d : s) n *= static_cast<std::size_t>(d);
    return n;
  }

  std::size_t numel() const { return data.size(); }

  int dim(int i) const { return shape[static_cast<std::size_t>(i)]; }

  // [C,H,W] accessors
  float& at(int c, int h, int w) {
    return data[(static_cast<std::size_t>(c) * shape[1] + h) * shape[2] + w];
  }
  float at(int c, int h, int w) const {
    return data[(static_cast<std::size_t>(c) * shape[1] + h) * shape[2] + w];
  }

  float* channel(int c) {
    return data.data() + static_cast<std::size_t>(c) * shape[1] * shape[2];
  }
  const float* channel(int c) const {
    return data.data() + static_cast<std::size_t>(c) * shape[1] * shape[2];
  }

  void fill(float v) { std::fill(data.begin(), data.end(), v); }

  bool same_shape(const TensorD& o) const { return shape == o.shape; }
};

/// Trainable tensor with its gradient buffer.
struct Parameter {
  TensorD value;
  TensorD grad;
  std::string name;

  Parameter() = default;
  Parameter(std::vector<int> shape, std::string n)
      : value(shape), grad(std::move(shape)), name(std::move(n)) {}

  void zero_grad() { grad.fill(0.0f); }
};

}  // namespace floodal
