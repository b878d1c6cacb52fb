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


#include "gclone/selfcheck.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "gclone/losses.hpp"
#include "gclone/pyramid.hpp"

namespace gclone {

namespace {

Image random_image(int h, int w, Rng& rng) {
  Image img(h, w, 3);
  for (float& v : img.pixels) v = static_cast<float>(rng.uniform(-1.0, 1.0));
  return img;
}

}  // namespace

CheckOutcome check_pyramid_identity(int count, std::uint64_t seed) {
  if (count < 1) throw UsageError("check_pyramid_identity: count must be positive");
  Rng rng = Rng(seed).fork("selfcheck.pyramid");
  double worst = 0.0;
  for (int i = 0; i < count; ++i) {
    const Image x = random_image(32, 32, rng);
    for (int k : {1, 2}) {
      const Image back = collapse(build_pyramid(x, k));
      for (std::size_t j = 0; j < x.pixels.size(); ++j) {
        worst = std::max(worst, static_cast<double>(std::abs(back.pixels[j] - x.pixels[j])));
      }
    }
  }
  CheckOutcome out{"pyramid identity", worst < 1e-5, worst, 1e-5, {}};
  out.detail = std::to_string(count) + " images, K in {1,2}";
  return out;
}

CheckOutcome check_lap_loss_gradient(int coords, std::uint64_t seed) {
  if (coords < 1) throw UsageError("check_lap_loss_gradient: coords must be positive");
  Rng rng = Rng(seed).fork("selfcheck.gradient");
  const Image a = random_image(8, 8, rng), b = random_image(8, 8, rng);
  const int k = default_pyramid_levels(8, 8);
  const LapLossGrad g = lap_loss_with_grad(a, b, k);
  double worst = 0.0;
  for (int n = 0; n < coords; ++n) {
    const auto i = static_cast<std::size_t>(rng.below(a.pixels.size()));
    Image up = a, down = a;
    up.pixels[i] += 1e-3f;
    down.pixels[i] -= 1e-3f;
    const double h = static_cast<double>(up.pixels[i]) - down.pixels[i];
    const double fd = (lap_loss(up, b, k) - lap_loss(down, b, k)) / h;
    const double an = g.grad_x1.values[i];
    const double scale = std::max({std::abs(an), std::abs(fd), 1e-12});
    worst = std::max(worst, std::abs(an - fd) / scale);
  }
  CheckOutcome out{"lap_loss gradient", worst < 1e-3, worst, 1e-3, {}};
  out.detail = std::to_string(coords) + " coordinates, 8x8, K=" + std::to_string(k);
  return out;
}

CheckOutcome check_gate_frequency(double p, int iterations, std::uint64_t seed) {
  if (iterations < 1) throw UsageError("check_gate_frequency: iterations must be positive");
  Rng rng = Rng(seed).fork("clone.gate");
  int local_runs = 0;
  const auto local = [&] {
    ++local_runs;
    return AdvTerms{};
  };
  const auto global = [] { return GlobalComponents{}; };
  for (int t = 0; t < iterations; ++t) gated_step_losses(rng, p, 10.0, 10.0, t, 0.0, local, global);
  const double freq = static_cast<double>(local_runs) / iterations;
  const double band = 3.0 * std::sqrt(p * (1.0 - p) / iterations);
  std::ostringstream detail;
  detail << local_runs << "/" << iterations << " gated, p=" << p;
  return {"gate frequency", std::abs(freq - p) <= band, std::abs(freq - p), band, detail.str()};
}

CheckOutcome check_masked_recon(std::uint64_t seed) {
  const int k = 2;
  const RegionMask crop = center_crop_mask(64, 64, 40, 40);
  const RegionMask mask = erode_mask(crop, 2 << (k + 1));
  Rng rng = Rng(seed).fork("selfcheck.mask");
  const Image a = random_image(64, 64, rng), b = random_image(64, 64, rng);
  Image moved = a;
  for (int c = 0; c < 3; ++c) {
    for (int y = 0; y < 64; ++y) {
      for (int x = 0; x < 64; ++x) {
        if (crop.at(y, x) == 0.0f) moved.at(c, y, x) = static_cast<float>(rng.uniform(-1.0, 1.0));
      }
    }
  }
  const double delta = std::abs(lap_loss(moved, b, k, &mask) - lap_loss(a, b, k, &mask));
  return {"masked recon", delta < 1e-6, delta, 1e-6, "64x64, crop 40x40, guard 16, K=2"};
}

std::vector<CheckOutcome> run_selftest(std::uint64_t seed) {
  return {check_pyramid_identity(50, seed), check_lap_loss_gradient(64, seed), check_gate_frequency(0.125, 2000, seed)};
}

}  // namespace gclone
