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
#include <functional>
#include <optional>
#include <vector>

#include "gclone/backbone.hpp"
#include "gclone/losses.hpp"

namespace gclone {

struct CloneConfig {
  double p = 0.25;
  double lambda = 10.0;
  double gamma = 10.0;
  double epsilon = 1e-3;
  std::int64_t max_iters = 20000;
  double lr_g = 5e-4;
  double lr_d = 5e-4;
  double beta1 = 0.0;  // Adam first-moment decay for both networks
  int batch_size = 4;
  int levels = 0;  // 0 selects the default for the image size
  int r1_interval = 16;
  std::optional<RegionMask> mask;
  std::uint64_t seed = 0;
  AdversarialConvention convention = AdversarialConvention::NonSaturating;

  void validate() const;
  /// Reads the shared key/value keys; `crop` is "HxW" (a centered crop mask
  /// over an image of dims image_h x image_w).
  static CloneConfig from_kv(const KeyValueConfig& kv, int image_h, int image_w);
  KeyValueConfig to_kv() const;
};

struct CloneResult {
  Image x_star;
  LatentCode code;
  std::int64_t stopped_at = 0;
  bool converged = false;
  // The stop check uses the recon of G before the iteration's update, so a
  // converged run's final_recon, lap_loss(x, x_star) after that update, may
  // sit slightly above epsilon.
  double final_recon = 0.0;
  std::vector<LossReport> trace;
  ParamSnapshot g_pre;
  ParamSnapshot d_pre;
  std::uint64_t g_post_hash = 0;
  std::uint64_t d_post_hash = 0;
};

using Projection = std::function<LatentCode(const Image&)>;
using CloneProgress = std::function<void(const LossReport&)>;

/// Fixes z = h(x) and tweaks G (and D) in place until lap_loss(x, G(z)) < eps
/// or max_iters is reached. On a numeric failure G and D are restored to
/// their pre-clone state and the NumericError is rethrown.
CloneResult clone(const Image& x, Generator& g, Discriminator& d, TrainSampler& sampler, const Projection& h,
                  const CloneConfig& cfg, const CloneProgress& progress = {});

/// Mean over codes of the per-pixel L2 (across channels) image change.
double drift(const Generator& pre, const Generator& post, const std::vector<LatentCode>& codes);
double drift(const ParamSnapshot& pre, const Generator& post, const std::vector<LatentCode>& codes);

}  // namespace gclone
