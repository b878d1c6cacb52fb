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
#include <optional>
#include <utility>
#include <vector>

#include "gclone/backbone.hpp"

namespace gclone {

/// A unit q-vector applied in W, or in W+ on an optional half-open layer
/// range (all layers when absent).
struct EditDirection {
  LatentSpace space = LatentSpace::W;
  std::vector<float> direction;
  std::optional<std::pair<int, int>> layers;

  void validate() const;
};

LatentCode apply_direction(const LatentCode& code, const EditDirection& d, double alpha);
LatentCode style_channel_edit(const LatentCode& code, int layer, int channel, double delta);

using ImageProbe = std::function<double(const Image&)>;

double mean_brightness(const Image& img);

/// Ridge regression of probe(G(w)) on w over n prior-mapped samples; the
/// coefficient vector is normalized to unit length.
EditDirection discover_direction(const Generator& g, const ImageProbe& probe, int n, std::uint64_t seed);

void save_direction(const EditDirection& d, const std::filesystem::path& path);
EditDirection load_direction(const std::filesystem::path& path);

void save_code(const LatentCode& code, const std::filesystem::path& path);
LatentCode load_code(const std::filesystem::path& path);

}  // namespace gclone
