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

#include <filesystem>
#include <string>

namespace gclone {

enum class Level { Low, High };
enum class Feedback { None, FidWorsened, ReconWorsened, Improved };
enum class TunerAction { None, ChangeGamma, IncreaseLambda, DecreaseP };

std::string to_string(Level v);
std::string to_string(Feedback v);
std::string to_string(TunerAction v);
Level parse_level(const std::string& s);
Feedback parse_feedback(const std::string& s);
TunerAction parse_action(const std::string& s);

struct TunerState {
  double p = 1.0 / 8.0;
  double lambda = 10.0;
  double gamma = 0.0;
  Level fid = Level::Low;
  Level recon = Level::Low;
  TunerAction last_action = TunerAction::None;
  Feedback feedback = Feedback::None;

  void validate() const;
  bool operator==(const TunerState&) const = default;
};

struct TunerOptions {
  double lambda_factor = 2.0;
  double p_divisor = 2.0;
  double gamma_factor = 1.5;
  bool gamma_increase = true;
  double p_floor = 1.0 / 256.0;
};

TunerState init_state(double gamma_pretrained);

struct Advice {
  TunerState state;
  TunerAction action = TunerAction::None;
  std::string description;
};

/// One application of the selection heuristic. Feedback about the previous
/// action takes precedence over the level classification.
Advice advise(const TunerState& s, const TunerOptions& opts = {});

void save_tuner_state(const TunerState& s, const std::filesystem::path& path);
TunerState load_tuner_state(const std::filesystem::path& path);

}  // namespace gclone
