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

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "gclone/backbone.hpp"

namespace gclone {

double mse(const Image& x1, const Image& x2);

/// Maps an image to one or more [c][1][h][w] feature maps.
using FeatureExtractor = std::function<std::vector<nn::Tensor>(const Image&)>;

/// Raw pixels as a single feature layer.
FeatureExtractor identity_extractor();
/// Post-activation outputs of the discriminator's convolution blocks.
FeatureExtractor discriminator_extractor(const Discriminator& d);

/// Sum over layers of the spatial mean of |f1 - f2|^2, where the feature
/// vectors at each location are first normalized to unit length.
double perceptual_distance(const Image& x1, const Image& x2, const FeatureExtractor& extractor);

struct DiffMap {
  Image map;           // single channel; -1 is zero difference, +1 is `scale`
  double scale = 0.0;  // largest per-pixel distance
};

/// Per-pixel L2 norm of the difference across channels.
DiffMap pixel_diff_map(const Image& x1, const Image& x2);

/// Rows are samples.
struct FrechetResult {
  double distance = 0.0;
  double regularization = 0.0;  // ridge added to both covariances
};

FrechetResult frechet_distance(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, double ridge = 1e-6);
/// Closed form between two Gaussians.
double frechet_gaussian(const Eigen::VectorXd& mu1, const Eigen::MatrixXd& s1, const Eigen::VectorXd& mu2,
                        const Eigen::MatrixXd& s2);

/// Spatially pooled features, one row per image.
Eigen::MatrixXd pooled_features(const std::vector<Image>& images, const FeatureExtractor& extractor);

FrechetResult fid_proxy(const Generator& g, const std::vector<Image>& real, int n_fake,
                        const FeatureExtractor& extractor, std::uint64_t seed);

struct MetricRow {
  std::string name;
  double mse = 0.0;
  double perceptual = 0.0;
};

struct MeanStd {
  double mean = 0.0;
  double stddev = 0.0;  // sample standard deviation
};

MeanStd mean_std(const std::vector<double>& values);

void write_metrics_csv(const std::filesystem::path& path, const std::vector<MetricRow>& rows);
void write_metrics_json(const std::filesystem::path& path, const std::vector<MetricRow>& rows);

}  // namespace gclone
