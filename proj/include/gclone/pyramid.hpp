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

#include <vector>

#include "gclone/core.hpp"

namespace gclone {

/// Multi-channel double-precision array used for pyramid levels.
struct Field {
  int height = 0;
  int width = 0;
  int channels = 0;
  std::vector<double> values;  // [c][y][x]

  Field() = default;
  Field(int h, int w, int c, double fill = 0.0)
      : height(h), width(w), channels(c), values(static_cast<std::size_t>(h) * w * c, fill) {}

  static Field from_image(const Image& img);
  static Field from_mask(const RegionMask& mask);
  Image to_image() const;

  double& at(int c, int y, int x) { return values[(static_cast<std::size_t>(c) * height + y) * width + x]; }
  double at(int c, int y, int x) const { return values[(static_cast<std::size_t>(c) * height + y) * width + x]; }
  bool same_shape(const Field& o) const {
    return height == o.height && width == o.width && channels == o.channels;
  }
};

/// Band-pass levels at halving resolutions followed by one low-pass residual.
struct Pyramid {
  std::vector<Field> levels;  // size() == band_count() + 1
  int source_height = 0;
  int source_width = 0;

  int band_count() const { return static_cast<int>(levels.size()) - 1; }
  const Field& residual() const { return levels.back(); }
};

// 5-tap binomial [1 4 6 4 1] / 16, reflect-101 boundaries.
Field blur_downsample(const Field& in);
/// Zero insertion to (height, width) followed by the blur scaled by 4.
Field expand(const Field& coarse, int height, int width);

// Adjoints of the two linear operators above, used for exact gradients.
Field blur_downsample_adjoint(const Field& grad_out, int in_height, int in_width);
Field expand_adjoint(const Field& grad_out, int coarse_height, int coarse_width);

/// Largest band count that keeps the coarsest band-pass level at >= 8 pixels.
int max_pyramid_levels(int height, int width);
/// floor(log2(min side)) - 3, clamped to >= 1.
int default_pyramid_levels(int height, int width);

Pyramid build_pyramid(const Field& x, int levels);
Pyramid build_pyramid(const Image& x, int levels);
Field collapse_field(const Pyramid& p);
Image collapse(const Pyramid& p);

struct LapLossGrad {
  double value = 0.0;
  Field grad_x1;  // d loss / d x1; the gradient w.r.t. x2 is its negation
};

/// Sum over all pyramid levels (residual included) of the mask-weighted mean
/// absolute difference. Pass mask = nullptr for an unweighted mean.
double lap_loss(const Image& x1, const Image& x2, int levels, const RegionMask* mask = nullptr);
LapLossGrad lap_loss_with_grad(const Image& x1, const Image& x2, int levels, const RegionMask* mask = nullptr);

}  // namespace gclone
