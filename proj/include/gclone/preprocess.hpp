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

#include <array>
#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "gclone/core.hpp"

namespace gclone {

using Point2 = Eigen::Vector2d;

/// Similarity transform taking source-image coordinates to aligned-crop
/// coordinates: dst = m.leftCols<2>() * src + m.col(2). Pixel centers sit at
/// integer coordinates.
struct AlignTransform {
  Eigen::Matrix<double, 2, 3> m = Eigen::Matrix<double, 2, 3>::Identity();
  int src_height = 0, src_width = 0;
  int dst_height = 0, dst_width = 0;

  Point2 apply(const Point2& p) const { return m.leftCols<2>() * p + m.col(2); }
  Point2 apply_inverse(const Point2& p) const;
  AlignTransform inverse() const;
  double scale() const;
  /// Radians, counter-clockwise in (x, y) coordinates.
  double rotation() const;
};

/// Least-squares similarity (scale, rotation, translation) mapping src onto dst.
Eigen::Matrix<double, 2, 3> estimate_similarity(const std::vector<Point2>& src, const std::vector<Point2>& dst);

/// Bilinear sample with edge replication.
float sample_bilinear(const Image& img, int channel, double x, double y);

struct Aligned {
  Image image;
  AlignTransform transform;
};

Aligned align(const Image& img, const std::vector<Point2>& landmarks, const std::vector<Point2>& canonical,
              int out_size);

/// Gaussian blur cross-faded in over a `band`-pixel ramp at the border.
Image boundary_blur(const Image& img, int band, double sigma);
/// Band of 8% of the shorter side, sigma = band / 3.
Image boundary_blur(const Image& img);

/// Warps `edited_crop` back through t^-1 and blends it into `original`.
/// Pixels that do not map inside the crop are left untouched.
Image paste_back(const Image& original, const Image& edited_crop, const AlignTransform& t, int feather);

struct FaceLandmarks {
  std::string face_id;
  std::vector<Point2> points;
};

std::vector<FaceLandmarks> load_landmarks(const std::filesystem::path& path);
std::vector<Point2> load_template(const std::filesystem::path& path);

void save_transform(const AlignTransform& t, const std::filesystem::path& path);
AlignTransform load_transform(const std::filesystem::path& path);

}  // namespace gclone
