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


#include "gclone/tuner.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>

#include "gclone/core.hpp"

namespace gclone {

using json = nlohmann::json;

std::string to_string(Level v) { return v == Level::Low ? "LOW" : "HIGH"; }

std::string to_string(Feedback v) {
  switch (v) {
    case Feedback::None:
      return "NONE";
    case Feedback::FidWorsened:
      return "FID_WORSENED";
    case Feedback::ReconWorsened:
      return "RECON_WORSENED";
    case Feedback::Improved:
      return "IMPROVED";
  }
  return "?";
}

std::string to_string(TunerAction v) {
  switch (v) {
    case TunerAction::None:
      return "NONE";
    case TunerAction::ChangeGamma:
      return "CHANGE_GAMMA";
    case TunerAction::IncreaseLambda:
      return "INCREASE_LAMBDA";
    case TunerAction::DecreaseP:
      return "DECREASE_P";
  }
  return "?";
}

Level parse_level(const std::string& s) {
  if (s == "LOW" || s == "low") return Level::Low;
  if (s == "HIGH" || s == "high") return Level::High;
  throw UsageError("unknown level '" + s + "'");
}

Feedback parse_feedback(const std::string& s) {
  for (Feedback f : {Feedback::None, Feedback::FidWorsened, Feedback::ReconWorsened, Feedback::Improved}) {
    if (to_string(f) == s) return f;
  }
  throw UsageError("unknown feedback '" + s + "'");
}

TunerAction parse_action(const std::string& s) {
  for (TunerAction a : {TunerAction::None, TunerAction::ChangeGamma, TunerAction::IncreaseLambda, TunerAction::DecreaseP}) {
    if (to_string(a) == s) return a;
  }
  throw UsageError("unknown tuner action '" + s + "'");
}

void TunerState::validate() const {
  if (!(p > 0.0 && p <= 1.0)) throw UsageError("tuner: p must lie in (0, 1]");
  if (!(lambda >= 0.0) || !(gamma >= 0.0)) throw UsageError("tuner: lambda and gamma must be nonnegative");
}

TunerState init_state(double gamma_pretrained) {
  if (!(gamma_pretrained >= 0.0)) throw UsageError("tuner: gamma must be nonnegative");
  TunerState s;
  s.p = 1.0 / 8.0;
  s.lambda = 10.0;
  s.gamma = gamma_pretrained;
  return s;
}

namespace {

std::string num(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

}  // namespace

Advice advise(const TunerState& s, const TunerOptions& opts) {
  s.validate();
  Advice a;
  a.state = s;
  TunerState& n = a.state;

  auto decrease_p = [&] {
    n.p = std::max(s.p / opts.p_divisor, opts.p_floor);
    a.action = TunerAction::DecreaseP;
    a.description = "decrease p: " + num(s.p) + " -> " + num(n.p);
  };
  auto increase_lambda = [&] {
    n.lambda = s.lambda * opts.lambda_factor;
    a.action = TunerAction::IncreaseLambda;
    a.description = "increase lambda: " + num(s.lambda) + " -> " + num(n.lambda);
  };

  if (s.feedback == Feedback::FidWorsened && s.last_action == TunerAction::IncreaseLambda) {
    decrease_p();
    a.description += " (FID rose after increasing lambda)";
  } else if (s.feedback == Feedback::ReconWorsened && s.last_action == TunerAction::DecreaseP) {
    increase_lambda();
    a.description += " (reconstruction error rose after decreasing p)";
  } else if (s.fid == Level::High && s.recon == Level::High) {
    n.gamma = opts.gamma_increase ? s.gamma * opts.gamma_factor : s.gamma / opts.gamma_factor;
    a.action = TunerAction::ChangeGamma;
    a.description = "change gamma: " + num(s.gamma) + " -> " + num(n.gamma);
  } else if (s.fid == Level::Low && s.recon == Level::High) {
    increase_lambda();
  } else if (s.fid == Level::High && s.recon == Level::Low) {
    decrease_p();
  } else {
    a.action = TunerAction::None;
    a.description = "no change: FID and reconstruction error are both low";
  }
  n.last_action = a.action;
  n.feedback = Feedback::None;
  return a;
}

void save_tuner_state(const TunerState& s, const std::filesystem::path& path) {
  json j = {{"p", s.p},
            {"lambda", s.lambda},
            {"gamma", s.gamma},
            {"fid", to_string(s.fid)},
            {"recon", to_string(s.recon)},
            {"last_action", to_string(s.last_action)},
            {"feedback", to_string(s.feedback)}};
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

TunerState load_tuner_state(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path.string());
  TunerState s;
  try {
    const json j = json::parse(in);
    s.p = j.at("p").get<double>();
    s.lambda = j.at("lambda").get<double>();
    s.gamma = j.at("gamma").get<double>();
    s.fid = parse_level(j.at("fid").get<std::string>());
    s.recon = parse_level(j.at("recon").get<std::string>());
    if (j.contains("last_action")) s.last_action = parse_action(j.at("last_action").get<std::string>());
    if (j.contains("feedback")) s.feedback = parse_feedback(j.at("feedback").get<std::string>());
  } catch (const json::exception& e) {
    throw UsageError("bad tuner state " + path.string() + ": " + e.what());
  }
  s.validate();
  return s;
}

}  // namespace gclone
