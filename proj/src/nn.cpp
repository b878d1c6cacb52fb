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


#include "gclone/nn.hpp"

#include <algorithm>
#include <cmath>

namespace gclone::nn {

Tensor Tensor::from_images(const std::vector<const Image*>& images) {
  if (images.empty()) throw UsageError("empty image batch");
  const Image& first = *images.front();
  Tensor t(static_cast<int>(images.size()), first.channels, first.height, first.width);
  for (int s = 0; s < t.n; ++s) {
    const Image& img = *images[s];
    if (!img.same_shape(first)) throw UsageError("image batch has mixed dims");
    for (int ch = 0; ch < t.c; ++ch) {
      std::copy(img.plane(ch).begin(), img.plane(ch).end(), t.data.begin() + static_cast<std::ptrdiff_t>(t.offset(ch, s)));
    }
  }
  return t;
}

Image Tensor::image(int s) const {
  Image img(h, w, c);
  for (int ch = 0; ch < c; ++ch) {
    std::copy_n(data.begin() + static_cast<std::ptrdiff_t>(offset(ch, s)), plane(), img.plane(ch).begin());
  }
  return img;
}

Tensor Tensor::sample(int s) const {
  Tensor t(1, c, h, w);
  for (int ch = 0; ch < c; ++ch) {
    std::copy_n(data.begin() + static_cast<std::ptrdiff_t>(offset(ch, s)), plane(),
                t.data.begin() + static_cast<std::ptrdiff_t>(t.offset(ch, 0)));
  }
  return t;
}

Param::Param(std::string name_, std::vector<int> shape_, float fill) : name(std::move(name_)), shape(std::move(shape_)) {
  std::size_t n = 1;
  for (int d : shape) n *= static_cast<std::size_t>(d);
  value.assign(n, fill);
  grad.assign(n, 0.0f);
}

void zero_grads(const ParamRefs& params) {
  for (Param* p : params) p->zero_grad();
}

double grad_norm(const ParamRefs& params) {
  double acc = 0.0;
  for (const Param* p : params) {
    for (float g : p->grad) acc += static_cast<double>(g) * g;
  }
  return std::sqrt(acc);
}

bool grads_finite(const ParamRefs& params) {
  for (const Param* p : params) {
    for (float g : p->grad) {
      if (!std::isfinite(g)) return false;
    }
  }
  return true;
}

Adam::Adam(ParamRefs params, AdamOptions opts) : params_(std::move(params)), opts_(opts) {
  for (const Param* p : params_) {
    m_.emplace_back(p->size(), 0.0f);
    v_.emplace_back(p->size(), 0.0f);
  }
}

void Adam::step() {
  ++t_;
  const double bc1 = 1.0 - std::pow(static_cast<double>(opts_.beta1), static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(static_cast<double>(opts_.beta2), static_cast<double>(t_));
  const float step = static_cast<float>(opts_.lr * std::sqrt(bc2) / bc1);
  for (std::size_t i = 0; i < params_.size(); ++i) {
    Param& p = *params_[i];
    auto& m = m_[i];
    auto& v = v_[i];
    for (std::size_t j = 0; j < p.size(); ++j) {
      const float g = p.grad[j];
      m[j] = opts_.beta1 * m[j] + (1.0f - opts_.beta1) * g;
      v[j] = opts_.beta2 * v[j] + (1.0f - opts_.beta2) * g * g;
      p.value[j] -= step * m[j] / (std::sqrt(v[j]) + opts_.eps);
    }
  }
}

// --- Dense --------------------------------------------------------------------

Dense::Dense(std::string name, int in, int out, float bias_init, float lr_mul)
    : in_(in), out_(out), gain_(lr_mul / std::sqrt(static_cast<float>(in))), lr_mul_(lr_mul),
      weight_(name + ".weight", {out, in}), bias_(name + ".bias", {out}, bias_init / lr_mul) {}

void Dense::init(Rng& rng) { rng.fill_normal(weight_.value, 1.0f / lr_mul_); }

Mat Dense::forward(const Mat& x) const {
  if (x.rows() != in_) throw UsageError("Dense: input width mismatch");
  const Eigen::Map<const Mat> w(weight_.value.data(), out_, in_);
  const Eigen::Map<const Eigen::VectorXf> b(bias_.value.data(), out_);
  Mat y = gain_ * (w * x);
  y.colwise() += b * lr_mul_;
  return y;
}

Mat Dense::backward(const Mat& x, const Mat& grad_out, bool param_grads) {
  const Eigen::Map<const Mat> w(weight_.value.data(), out_, in_);
  if (param_grads) {
    Eigen::Map<Mat> gw(weight_.grad.data(), out_, in_);
    Eigen::Map<Eigen::VectorXf> gb(bias_.grad.data(), out_);
    gw.noalias() += gain_ * (grad_out * x.transpose());
    gb += grad_out.rowwise().sum() * lr_mul_;
  }
  return gain_ * (w.transpose() * grad_out);
}

// --- Conv2d -------------------------------------------------------------------

Conv2d::Conv2d(std::string name, int in, int out, int kernel, bool bias)
    : in_(in), out_(out), k_(kernel), has_bias_(bias),
      gain_(1.0f / std::sqrt(static_cast<float>(in * kernel * kernel))),
      weight_(name + ".weight", {in, kernel, kernel, out}), bias_(name + ".bias", {bias ? out : 0}) {}

void Conv2d::init(Rng& rng) { rng.fill_normal(weight_.value); }

ParamRefs Conv2d::params() {
  if (has_bias_) return {&weight_, &bias_};
  return {&weight_};
}

Mat Conv2d::effective_weight() const {
  return Eigen::Map<const Mat>(weight_.value.data(), out_, in_ * k_ * k_) * gain_;
}

RowMat im2col(const Tensor& x, int k) {
  const int pad = k / 2;
  const Eigen::Index cols = static_cast<Eigen::Index>(x.n) * x.h * x.w;
  RowMat out(static_cast<Eigen::Index>(x.c) * k * k, cols);
  if (k == 1) {
    std::copy(x.data.begin(), x.data.end(), out.data());
    return out;
  }
  // Weights are a column-major (out x in*k*k) matrix whose column index is
  // (in * k + ky) * k + kx; rows of the column matrix follow the same order.
  for (int ch = 0; ch < x.c; ++ch) {
    for (int ky = 0; ky < k; ++ky) {
      for (int kx = 0; kx < k; ++kx) {
        const Eigen::Index row = (static_cast<Eigen::Index>(ch) * k + ky) * k + kx;
        float* dst_row = out.data() + row * cols;
        const int x0 = std::max(0, pad - kx);
        const int x1 = std::min(x.w, x.w + pad - kx);
        for (int s = 0; s < x.n; ++s) {
          const float* src = x.data.data() + x.offset(ch, s);
          float* dst = dst_row + static_cast<std::ptrdiff_t>(s) * x.h * x.w;
          for (int y = 0; y < x.h; ++y) {
            float* d = dst + static_cast<std::ptrdiff_t>(y) * x.w;
            const int sy = y + ky - pad;
            if (sy < 0 || sy >= x.h) {
              std::fill(d, d + x.w, 0.0f);
              continue;
            }
            const float* srow = src + static_cast<std::ptrdiff_t>(sy) * x.w + (kx - pad);
            for (int xx = 0; xx < x0; ++xx) d[xx] = 0.0f;
            for (int xx = x0; xx < x1; ++xx) d[xx] = srow[xx];
            for (int xx = x1; xx < x.w; ++xx) d[xx] = 0.0f;
          }
        }
      }
    }
  }
  return out;
}

Tensor col2im(const RowMat& cols, int n, int c, int h, int w, int k) {
  Tensor out(n, c, h, w);
  if (k == 1) {
    std::copy(cols.data(), cols.data() + cols.size(), out.data.begin());
    return out;
  }
  const int pad = k / 2;
  const Eigen::Index ncols = cols.cols();
  for (int ch = 0; ch < c; ++ch) {
    for (int ky = 0; ky < k; ++ky) {
      for (int kx = 0; kx < k; ++kx) {
        const Eigen::Index row = (static_cast<Eigen::Index>(ch) * k + ky) * k + kx;
        const float* src_row = cols.data() + row * ncols;
        const int x0 = std::max(0, pad - kx);
        const int x1 = std::min(w, w + pad - kx);
        for (int s = 0; s < n; ++s) {
          float* dst = out.data.data() + out.offset(ch, s);
          const float* src = src_row + static_cast<std::ptrdiff_t>(s) * h * w;
          for (int y = 0; y < h; ++y) {
            const int sy = y + ky - pad;
            if (sy < 0 || sy >= h) continue;
            float* drow = dst + static_cast<std::ptrdiff_t>(sy) * w + (kx - pad);
            const float* srow = src + static_cast<std::ptrdiff_t>(y) * w;
            for (int xx = x0; xx < x1; ++xx) drow[xx] += srow[xx];
          }
        }
      }
    }
  }
  return out;
}

Tensor Conv2d::forward(const Tensor& x, Cache* cache) const {
  if (x.c != in_) throw UsageError("Conv2d: channel mismatch");
  RowMat cols = im2col(x, k_);
  Tensor y(x.n, out_, x.h, x.w);
  auto ym = y.as_matrix();
  const Eigen::Map<const Mat> w(weight_.value.data(), out_, in_ * k_ * k_);
  ym.noalias() = gain_ * (w * cols);
  if (has_bias_) {
    for (int o = 0; o < out_; ++o) ym.row(o).array() += bias_.value[o];
  }
  if (cache != nullptr) {
    cache->columns = std::move(cols);
    cache->n = x.n;
    cache->h = x.h;
    cache->w = x.w;
  }
  return y;
}

Tensor Conv2d::backward(const Cache& cache, const Tensor& grad_out, bool param_grads, bool input_grad) {
  const auto g = grad_out.as_matrix();
  if (param_grads) {
    Eigen::Map<Mat> gw(weight_.grad.data(), out_, in_ * k_ * k_);
    gw.noalias() += gain_ * (g * cache.columns.transpose());
    if (has_bias_) {
      Eigen::Map<Eigen::VectorXf> gb(bias_.grad.data(), out_);
      gb += g.rowwise().sum();
    }
  }
  if (!input_grad) return {};
  const Eigen::Map<const Mat> w(weight_.value.data(), out_, in_ * k_ * k_);
  RowMat gcols(w.cols(), g.cols());
  gcols.noalias() = gain_ * (w.transpose() * g);
  return col2im(gcols, cache.n, in_, cache.h, cache.w, k_);
}

// --- elementwise / resampling ------------------------------------------------

std::vector<std::uint8_t> leaky_relu_inplace(FloatBuffer& values) {
  std::vector<std::uint8_t> positive(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    const bool pos = values[i] > 0.0f;
    positive[i] = pos;
    values[i] *= pos ? kActGain : kActGain * kLeakySlope;
  }
  return positive;
}

void leaky_relu_backward_inplace(FloatBuffer& grad, const std::vector<std::uint8_t>& positive) {
  for (std::size_t i = 0; i < grad.size(); ++i) grad[i] *= positive[i] ? kActGain : kActGain * kLeakySlope;
}

Tensor upsample2x(const Tensor& x) {
  Tensor y(x.n, x.c, x.h * 2, x.w * 2);
  for (int ch = 0; ch < x.c; ++ch) {
    for (int s = 0; s < x.n; ++s) {
      const float* src = x.data.data() + x.offset(ch, s);
      float* dst = y.data.data() + y.offset(ch, s);
      for (int yy = 0; yy < y.h; ++yy) {
        for (int xx = 0; xx < y.w; ++xx) dst[yy * y.w + xx] = src[(yy / 2) * x.w + xx / 2];
      }
    }
  }
  return y;
}

Tensor upsample2x_backward(const Tensor& g) {
  Tensor out(g.n, g.c, g.h / 2, g.w / 2);
  for (int ch = 0; ch < g.c; ++ch) {
    for (int s = 0; s < g.n; ++s) {
      const float* src = g.data.data() + g.offset(ch, s);
      float* dst = out.data.data() + out.offset(ch, s);
      for (int yy = 0; yy < g.h; ++yy) {
        for (int xx = 0; xx < g.w; ++xx) dst[(yy / 2) * out.w + xx / 2] += src[yy * g.w + xx];
      }
    }
  }
  return out;
}

Tensor avgpool2x(const Tensor& x) {
  Tensor y(x.n, x.c, x.h / 2, x.w / 2);
  for (int ch = 0; ch < x.c; ++ch) {
    for (int s = 0; s < x.n; ++s) {
      const float* src = x.data.data() + x.offset(ch, s);
      float* dst = y.data.data() + y.offset(ch, s);
      for (int yy = 0; yy < y.h; ++yy) {
        for (int xx = 0; xx < y.w; ++xx) {
          const float* p = src + (2 * yy) * x.w + 2 * xx;
          dst[yy * y.w + xx] = 0.25f * (p[0] + p[1] + p[x.w] + p[x.w + 1]);
        }
      }
    }
  }
  return y;
}

Tensor avgpool2x_backward(const Tensor& g) {
  Tensor out(g.n, g.c, g.h * 2, g.w * 2);
  for (int ch = 0; ch < g.c; ++ch) {
    for (int s = 0; s < g.n; ++s) {
      const float* src = g.data.data() + g.offset(ch, s);
      float* dst = out.data.data() + out.offset(ch, s);
      for (int yy = 0; yy < out.h; ++yy) {
        for (int xx = 0; xx < out.w; ++xx) dst[yy * out.w + xx] = 0.25f * src[(yy / 2) * g.w + xx / 2];
      }
    }
  }
  return out;
}

double softplus(double x) { return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace gclone::nn
