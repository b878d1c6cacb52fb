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
#include <optional>
#include <vector>

#include "gclone/backbone.hpp"
#include "gclone/pyramid.hpp"

namespace gclone {

/// Mean of mapping(z_i) over n prior draws from a stream forked off `seed`.
LatentCode mean_latent(const Generator& g, int n, std::uint64_t seed);

struct ProjectOptions {
  int steps = 500;
  LatentSpace space = LatentSpace::WPlus;
  double lr = 0.05;
  double lr_final = 0.005;  // cosine decay target
  int levels = 0;           // 0 selects the default for the image size
  int mean_samples = 10000;
  std::uint64_t seed = 0;
  std::optional<LatentCode> init;  // defaults to mean_latent broadcast to the space
};

struct ProjectTraceRow {
  int step = 0;
  double loss = 0.0;
  double best = 0.0;
};

struct ProjectResult {
  LatentCode code;
  Image image;
  double loss = 0.0;  // loss of `code`, the best seen
  std::vector<ProjectTraceRow> trace;
};

/// Optimizes a W or W+ code against the frozen generator under lap_loss.
/// The generator's parameters are never written.
ProjectResult project(const Image& target, const Generator& g, const ProjectOptions& opts,
                      const RegionMask* mask = nullptr);

void write_project_trace(const std::filesystem::path& path, const std::vector<ProjectTraceRow>& trace);

/// Copies a single-sample double field into a batch-of-one tensor.
nn::Tensor tensor_from_field(const Field& f);

/// Gradient of lap_loss(G(styles), target) w.r.t. each style matrix.
/// Returns the loss; accumulates generator parameter gradients when
/// param_grads is set.
double lap_loss_backprop(Generator& g, const std::vector<nn::Mat>& styles, const Image& target, int levels,
                         const RegionMask* mask, bool param_grads, std::vector<nn::Mat>* style_grads,
                         double scale = 1.0);

}  // namespace gclone
