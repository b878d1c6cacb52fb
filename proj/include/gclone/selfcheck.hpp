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
#include <string>
#include <vector>

namespace gclone {

/// One numeric self-check: `value` is compared against `tolerance`.
struct CheckOutcome {
  std::string name;
  bool pass = false;
  double value = 0.0;
  double tolerance = 0.0;
  std::string detail;
};

/// Worst |collapse(build_pyramid(x, K)) - x| over `count` random 32x32
/// images and K in {1, 2}.
CheckOutcome check_pyramid_identity(int count, std::uint64_t seed);

/// Worst relative error between the analytic lap_loss gradient and central
/// differences at `coords` sampled coordinates of an 8x8 image.
CheckOutcome check_lap_loss_gradient(int coords, std::uint64_t seed);

/// Fraction of `iterations` gated steps that ran the local loss, against
/// p +- 3 sigma.
CheckOutcome check_gate_frequency(double p, int iterations, std::uint64_t seed);

/// Change in the masked lap_loss when pixels outside a guard-banded center
/// crop are perturbed.
CheckOutcome check_masked_recon(std::uint64_t seed);

/// The three suites `selftest` runs.
std::vector<CheckOutcome> run_selftest(std::uint64_t seed);

}  // namespace gclone
