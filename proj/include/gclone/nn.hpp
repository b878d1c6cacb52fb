// Copyright 2026 The gclone Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//    http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <string>
#include <vector>

#include "gclone/core.hpp"

// Minimal reverse-mode building blocks for the toy GAN. Every layer caches
// what its backward pass needs in a caller-owned cache object, so several
// forward passes through the same weights can be alive at once.
namespace gclone::nn {

using Mat = Eigen::MatrixXf;  // column-major; one column per sample
using RowMat = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
// Eigen's vectorized reductions peel unaligned heads, so their summation
// order follows the buffer address. Aligned storage keeps results bitwise
// reproducible across runs.
using FloatBuffer = std::vector<float, Eigen::aligned_allocator<float>>;

/// Activation tensor in [channel][batch][y][x] layout so that convolutions
/// map onto a single GEMM over the whole batch.
struct Tensor {
  int n = 0, c = 0, h = 0, w = 0;
  FloatBuffer data;

  Tensor() = default;
  Tensor(int n_, int c_, int h_, int w_, float fill = 0.0f)
      : n(n_), c(c_), h(h_), w(w_), data(static_cast<std::size_t>(n_) * c_ * h_ * w_, fill) {}

  std::size_t plane() const { return static_cast<std::size_t>(h) * w; }
  std::size_t size() const { return data.size(); }
  // Offset of sample `s` inside channel `ch`.
  std::size_t offset(int ch, int s) const { return (static_cast<std::size_t>(ch) * n + s) * plane(); }
  float& at(int ch, int s, int y, int x) { return data[offset(ch, s) + static_cast<std::size_t>(y) * w + x]; }
  float at(int ch, int s, int y, int x) const { return data[offset(ch, s) + static_cast<std::size_t>(y) * w + x]; }

  Eigen::Map<RowMat> as_matrix() { return {data.data(), c, static_cast<Eigen::Index>(n * plane())}; }
  Eigen::Map<const RowMat> as_matrix() const { return {data.data(), c, static_cast<Eigen::Index>(n * plane())}; }

  static Tensor from_images(const std::vector<const Image*>& images);
  Image image(int sample) const;
  /// Copies one sample out as a batch of one.
  Tensor sample(int s) const;
};

struct Param {
  std::string name;
  std::vector<int> shape;
  FloatBuffer value;
  FloatBuffer grad;

  Param() = default;
  Param(std::string name_, std::vector<int> shape_, float fill = 0.0f);
  std::size_t size() const { return value.size(); }
  void zero_grad() { std::fill(grad.begin(), grad.end(), 0.0f); }
};

using ParamRefs = std::vector<Param*>;

void zero_grads(const ParamRefs& params);
double grad_norm(const ParamRefs& params);
bool grads_finite(const ParamRefs& params);

struct AdamOptions {
  float lr = 2e-3f;
  float beta1 = 0.0f;
  float beta2 = 0.99f;
  float eps = 1e-8f;
};

class Adam {
 public:
  Adam(ParamRefs params, AdamOptions opts);
  void step();
  void set_lr(float lr) { opts_.lr = lr; }
  float lr() const { return opts_.lr; }
  std::int64_t steps() const { return t_; }

 private:
  ParamRefs params_;
  AdamOptions opts_;
  std::vector<FloatBuffer> m_, v_;
  std::int64_t t_ = 0;
};

/// Fully connected layer with equalized learning rate: weights are stored
/// unit-variance and scaled by lr_mul / sqrt(fan_in) at use time.
class Dense {
 public:
  Dense() = default;
  Dense(std::string name, int in, int out, float bias_init = 0.0f, float lr_mul = 1.0f);

  void init(Rng& rng);
  Mat forward(const Mat& x) const;
  /// Returns d/dx; accumulates parameter gradients when requested.
  Mat backward(const Mat& x, const Mat& grad_out, bool param_grads);

  ParamRefs params() { return {&weight_, &bias_}; }
  int in() const { return in_; }
  int out() const { return out_; }
  Eigen::Map<const Mat> raw_weight() const { return {weight_.value.data(), out_, in_}; }
  float weight_gain() const { return gain_; }

 private:
  int in_ = 0, out_ = 0;
  float gain_ = 1.0f;
  float lr_mul_ = 1.0f;
  Param weight_, bias_;
};

/// Square-kernel convolution, stride 1, zero "same" padding.
class Conv2d {
 public:
  struct Cache {
    RowMat columns;
    int n = 0, h = 0, w = 0;
  };

  Conv2d() = default;
  Conv2d(std::string name, int in, int out, int kernel, bool bias = true);

  void init(Rng& rng);
  Tensor forward(const Tensor& x, Cache* cache) const;
  /// Returns d/dx (empty tensor when input_grad is false).
  Tensor backward(const Cache& cache, const Tensor& grad_out, bool param_grads, bool input_grad);

  ParamRefs params();
  int in() const { return in_; }
  int out() const { return out_; }
  int kernel() const { return k_; }
  /// Effective (gain-scaled) weight matrix, out x (in * k * k).
  Mat effective_weight() const;
  float gain() const { return gain_; }
  Param& weight() { return weight_; }
  Param& bias() { return bias_; }

 private:
  int in_ = 0, out_ = 0, k_ = 1;
  bool has_bias_ = true;
  float gain_ = 1.0f;
  Param weight_, bias_;
};

/// im2col for a k x k "same" convolution over a [c][n][h][w] tensor; rows are
/// (channel, ky, kx), columns are (sample, y, x).
RowMat im2col(const Tensor& x, int k);
/// Adjoint of im2col.
Tensor col2im(const RowMat& cols, int n, int c, int h, int w, int k);

constexpr float kLeakySlope = 0.2f;
constexpr float kActGain = 1.41421356f;

/// Gain-scaled leaky ReLU in place; returns the pre-activation sign mask.
std::vector<std::uint8_t> leaky_relu_inplace(FloatBuffer& values);
void leaky_relu_backward_inplace(FloatBuffer& grad, const std::vector<std::uint8_t>& positive);

Tensor upsample2x(const Tensor& x);
Tensor upsample2x_backward(const Tensor& grad_out);
Tensor avgpool2x(const Tensor& x);
Tensor avgpool2x_backward(const Tensor& grad_out);

/// Stable log(1 + exp(x)) and its derivative.
double softplus(double x);
double sigmoid(double x);

}  // namespace gclone::nn
