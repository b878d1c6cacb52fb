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
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "gclone/backbone.hpp"

namespace gclone {

/// NonSaturating: g = softplus(-D(G(z))). Minimax: g = -softplus(D(G(z))),
/// the literal log(1 - D(G(z))) term. The discriminator term is identical.
enum class AdversarialConvention { NonSaturating, Minimax };

struct AdvTerms {
  double g_term = 0.0;
  double d_term = 0.0;
};

/// Scalar forms on logits, with their derivatives.
double generator_adv_loss(double fake_logit, AdversarialConvention conv, double* dlogit = nullptr);
double discriminator_adv_loss(double real_logit, double fake_logit, double* dreal = nullptr, double* dfake = nullptr);

AdvTerms adv_local_from_logits(double query_logit, double synth_logit,
                               AdversarialConvention conv = AdversarialConvention::NonSaturating);
/// Local adversarial term on one query (used as the real sample) and one
/// synthesized image.
AdvTerms adv_local(const LogitModel& d, const Image& query, const Image& synth,
                   AdversarialConvention conv = AdversarialConvention::NonSaturating);

/// Batch-mean logistic GAN losses on precomputed logits.
AdvTerms global_terms_from_logits(const nn::Mat& real_logits, const nn::Mat& fake_logits,
                                  AdversarialConvention conv = AdversarialConvention::NonSaturating);
/// Batch-mean logistic GAN losses; z_batch is q x N in Z.
AdvTerms global_loss(const LogitModel& d, const Generator& g, const nn::Tensor& real_batch, const nn::Mat& z_batch,
                     AdversarialConvention conv = AdversarialConvention::NonSaturating);

/// (gamma / 2) * mean_i |d logit_i / d x_i|^2.
double r1_penalty(LogitModel& d, const nn::Tensor& real_batch, double gamma);

/// Adds weight * d(r1_penalty)/d(params) to the model's parameter gradients
/// and returns the penalty. The mixed second derivative is a central
/// difference of parameter gradients along the input gradient, taken with the
/// activation pattern frozen at the real batch; for piecewise-linear models
/// that is the exact derivative of the penalty.
double r1_accumulate(LogitModel& d, const nn::Tensor& real_batch, double gamma, double weight = 1.0);

/// One iteration's losses; local terms are present only when gated.
struct LossReport {
  std::int64_t iteration = 0;
  double recon = 0.0;
  bool gated = false;
  std::optional<double> adv_local_g;
  std::optional<double> adv_local_d;
  std::optional<double> local;  // recon + lambda * adv_local_g
  double global_g = 0.0;
  double global_d = 0.0;
  std::optional<double> r1;
  double lambda = 0.0;
  double p = 0.0;
  double gamma = 0.0;

  /// Generator objective: 1_p[L_local] + L_global.
  double total_g() const { return (gated && local ? *local : 0.0) + global_g; }
  void validate() const;
};

std::string loss_report_csv_header();
std::string loss_report_csv_row(const LossReport& r);
void write_loss_trace(std::ostream& out, const std::vector<LossReport>& rows);

/// u ~ Uniform[0, 1); gated iff u < p.
bool draw_gate(Rng& rng, double p);

struct LocalComponents {
  double recon = 0.0;
  AdvTerms adv;
};

struct GlobalComponents {
  AdvTerms adv;
  std::optional<double> r1;
};

/// Draws the gate and composes L = 1_p[recon + lambda * adv_local] + L_global.
/// `local` runs only on gated iterations; `global` always runs. Callers may
/// perform gradient accumulation inside the callbacks.
LossReport gated_step_losses(Rng& rng, double p, double lambda, double gamma, std::int64_t iteration, double recon,
                             const std::function<AdvTerms()>& local, const std::function<GlobalComponents()>& global);

}  // namespace gclone
