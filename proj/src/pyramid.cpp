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


#include "gclone/pyramid.hpp"

#include <array>
#include <bit>
#include <cmath>

namespace gclone {

namespace {

constexpr std::array<double, 5> kBinomial = {1.0 / 16, 4.0 / 16, 6.0 / 16, 4.0 / 16, 1.0 / 16};

int reflect101(int i, int n) {
  if (n == 1) return 0;
  const int period = 2 * (n - 1);
  i %= period;
  if (i < 0) i += period;
  return i < n ? i : period - i;
}

struct Tap {
  int out;
  int in;
  double weight;
};

// Sparse 1-D operator; 2-D operators apply it along rows then columns.
struct LineOp {
  int n_in = 0;
  int n_out = 0;
  std::vector<Tap> taps;
};

LineOp down_line(int n) {
  LineOp op{n, (n + 1) / 2, {}};
  for (int o = 0; o < op.n_out; ++o) {
    for (int k = 0; k < 5; ++k) op.taps.push_back({o, reflect101(2 * o + k - 2, n), kBinomial[k]});
  }
  return op;
}

// Zero insertion (coarse sample i lands on fine index 2i) then blur x2.
LineOp up_line(int n_coarse, int n_fine) {
  LineOp op{n_coarse, n_fine, {}};
  for (int o = 0; o < n_fine; ++o) {
    for (int k = 0; k < 5; ++k) {
      const int src = reflect101(o + k - 2, n_fine);
      if (src % 2 != 0) continue;
      const int coarse = src / 2;
      if (coarse >= n_coarse) continue;
      op.taps.push_back({o, coarse, 2.0 * kBinomial[k]});
    }
  }
  return op;
}

// out = Ry * in * Rx^T (or the transposed operators when adjoint is set).
Field apply_separable(const Field& in, const LineOp& rows, const LineOp& cols, bool adjoint) {
  const int in_h = adjoint ? rows.n_out : rows.n_in;
  const int in_w = adjoint ? cols.n_out : cols.n_in;
  const int out_h = adjoint ? rows.n_in : rows.n_out;
  const int out_w = adjoint ? cols.n_in : cols.n_out;
  if (in.height != in_h || in.width != in_w) throw UsageError("pyramid operator dims mismatch");

  Field tmp(in_h, out_w, in.channels);
  for (int c = 0; c < in.channels; ++c) {
    for (int y = 0; y < in_h; ++y) {
      for (const Tap& t : cols.taps) {
        if (adjoint) {
          tmp.at(c, y, t.in) += t.weight * in.at(c, y, t.out);
        } else {
          tmp.at(c, y, t.out) += t.weight * in.at(c, y, t.in);
        }
      }
    }
  }
  Field out(out_h, out_w, in.channels);
  for (int c = 0; c < in.channels; ++c) {
    for (const Tap& t : rows.taps) {
      const int dst = adjoint ? t.in : t.out;
      const int src = adjoint ? t.out : t.in;
      for (int x = 0; x < out_w; ++x) out.at(c, dst, x) += t.weight * tmp.at(c, src, x);
    }
  }
  return out;
}

void axpy(Field& y, double a, const Field& x) {
  for (std::size_t i = 0; i < y.values.size(); ++i) y.values[i] += a * x.values[i];
}

}  // namespace

Field Field::from_image(const Image& img) {
  Field f(img.height, img.width, img.channels);
  for (std::size_t i = 0; i < img.pixels.size(); ++i) f.values[i] = img.pixels[i];
  return f;
}

Field Field::from_mask(const RegionMask& mask) {
  Field f(mask.height, mask.width, 1);
  for (std::size_t i = 0; i < mask.weights.size(); ++i) f.values[i] = mask.weights[i];
  return f;
}

Image Field::to_image() const {
  Image img(height, width, channels);
  for (std::size_t i = 0; i < values.size(); ++i) img.pixels[i] = static_cast<float>(values[i]);
  return img;
}

Field blur_downsample(const Field& in) {
  if (in.height < 2 || in.width < 2) throw UsageError("blur_downsample needs both sides >= 2");
  return apply_separable(in, down_line(in.height), down_line(in.width), false);
}

Field expand(const Field& coarse, int height, int width) {
  if ((height + 1) / 2 != coarse.height || (width + 1) / 2 != coarse.width) {
    throw UsageError("expand target dims inconsistent with coarse level");
  }
  return apply_separable(coarse, up_line(coarse.height, height), up_line(coarse.width, width), false);
}

Field blur_downsample_adjoint(const Field& grad_out, int in_height, int in_width) {
  return apply_separable(grad_out, down_line(in_height), down_line(in_width), true);
}

Field expand_adjoint(const Field& grad_out, int coarse_height, int coarse_width) {
  return apply_separable(grad_out, up_line(coarse_height, grad_out.height), up_line(coarse_width, grad_out.width),
                         true);
}

int max_pyramid_levels(int height, int width) {
  const int side = std::min(height, width);
  if (side < 1) return 0;
  return std::bit_width(static_cast<unsigned>(side)) - 1 - 2;
}

int default_pyramid_levels(int height, int width) {
  const int side = std::min(height, width);
  const int k = side < 1 ? 1 : static_cast<int>(std::bit_width(static_cast<unsigned>(side))) - 1 - 3;
  return std::max(k, 1);
}

Pyramid build_pyramid(const Field& x, int levels) {
  if (levels < 1) throw UsageError("pyramid needs at least one band-pass level");
  if (levels > max_pyramid_levels(x.height, x.width)) {
    throw UsageError("pyramid depth " + std::to_string(levels) + " too large for " + std::to_string(x.height) + "x" +
                     std::to_string(x.width) + " input");
  }
  Pyramid p;
  p.source_height = x.height;
  p.source_width = x.width;
  Field current = x;
  for (int i = 0; i < levels; ++i) {
    Field next = blur_downsample(current);
    Field band = current;
    axpy(band, -1.0, expand(next, current.height, current.width));
    p.levels.push_back(std::move(band));
    current = std::move(next);
  }
  p.levels.push_back(std::move(current));
  return p;
}

Pyramid build_pyramid(const Image& x, int levels) {
  x.validate();
  return build_pyramid(Field::from_image(x), levels);
}

Field collapse_field(const Pyramid& p) {
  if (p.levels.empty()) throw UsageError("empty pyramid");
  Field out = p.levels.back();
  for (int i = p.band_count() - 1; i >= 0; --i) {
    const Field& band = p.levels[i];
    if ((band.height + 1) / 2 != out.height || (band.width + 1) / 2 != out.width || band.channels != out.channels) {
      throw UsageError("inconsistent pyramid level dims at level " + std::to_string(i));
    }
    Field up = expand(out, band.height, band.width);
    axpy(up, 1.0, band);
    out = std::move(up);
  }
  if (out.height != p.source_height || out.width != p.source_width) {
    throw UsageError("pyramid does not collapse to its source dims");
  }
  return out;
}

Image collapse(const Pyramid& p) { return collapse_field(p).to_image(); }

namespace {

struct LossPieces {
  Pyramid diff;                // pyramid of x1 - x2 (the pyramid is linear)
  std::vector<Field> weights;  // per-level masks (single channel)
};

LossPieces prepare(const Image& x1, const Image& x2, int levels, const RegionMask* mask) {
  x1.validate();
  x2.validate();
  if (!x1.same_shape(x2)) throw UsageError("lap_loss: image dims mismatch");
  if (x1.height < 8 || x1.width < 8) throw UsageError("lap_loss: images must be at least 8x8");
  Field d = Field::from_image(x1);
  const Field f2 = Field::from_image(x2);
  axpy(d, -1.0, f2);
  LossPieces pieces;
  pieces.diff = build_pyramid(d, levels);
  if (mask != nullptr) {
    mask->validate();
    if (!mask->matches(x1)) throw UsageError("lap_loss: mask dims mismatch");
    Field m = Field::from_mask(*mask);
    for (int i = 0; i <= levels; ++i) {
      pieces.weights.push_back(m);
      if (i < levels) m = blur_downsample(m);
    }
  }
  return pieces;
}

}  // namespace

double lap_loss(const Image& x1, const Image& x2, int levels, const RegionMask* mask) {
  return lap_loss_with_grad(x1, x2, levels, mask).value;
}

LapLossGrad lap_loss_with_grad(const Image& x1, const Image& x2, int levels, const RegionMask* mask) {
  const LossPieces pieces = prepare(x1, x2, levels, mask);
  const Pyramid& diff = pieces.diff;
  const bool masked = !pieces.weights.empty();

  // Gradient of the loss w.r.t. each level of the difference pyramid.
  std::vector<Field> level_grads;
  double total = 0.0;
  for (int i = 0; i <= diff.band_count(); ++i) {
    const Field& level = diff.levels[i];
    Field g(level.height, level.width, level.channels);
    double weight_sum = 0.0;
    double acc = 0.0;
    for (int y = 0; y < level.height; ++y) {
      for (int x = 0; x < level.width; ++x) {
        const double w = masked ? pieces.weights[i].at(0, y, x) : 1.0;
        weight_sum += w * level.channels;
        for (int c = 0; c < level.channels; ++c) {
          const double v = level.at(c, y, x);
          acc += w * std::abs(v);
          g.at(c, y, x) = w * (v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0));
        }
      }
    }
    if (weight_sum <= 0.0) throw NumericError("lap_loss: mask vanished at level " + std::to_string(i));
    total += acc / weight_sum;
    for (double& v : g.values) v /= weight_sum;
    level_grads.push_back(std::move(g));
  }

  // Backpropagate through band_i = g_i - expand(g_{i+1}), g_{i+1} = down(g_i).
  Field grad_gauss = level_grads.back();
  for (int i = diff.band_count() - 1; i >= 0; --i) {
    const Field& band_grad = level_grads[i];
    Field up_grad = band_grad;
    for (double& v : up_grad.values) v = -v;
    axpy(grad_gauss, 1.0, expand_adjoint(up_grad, grad_gauss.height, grad_gauss.width));
    Field g = blur_downsample_adjoint(grad_gauss, band_grad.height, band_grad.width);
    axpy(g, 1.0, band_grad);
    grad_gauss = std::move(g);
  }
  return {total, std::move(grad_gauss)};
}

}  // namespace gclone
