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


#include "gclone/losses.hpp"

#include <cmath>
#include <iomanip>
#include <ostream>
#include <sstream>

namespace gclone {

using nn::Mat;
using nn::Tensor;

double generator_adv_loss(double fake_logit, AdversarialConvention conv, double* dlogit) {
  if (!std::isfinite(fake_logit)) throw NumericError("non-finite discriminator logit");
  if (conv == AdversarialConvention::NonSaturating) {
    if (dlogit != nullptr) *dlogit = -nn::sigmoid(-fake_logit);
    return nn::softplus(-fake_logit);
  }
  if (dlogit != nullptr) *dlogit = -nn::sigmoid(fake_logit);
  return -nn::softplus(fake_logit);
}

double discriminator_adv_loss(double real_logit, double fake_logit, double* dreal, double* dfake) {
  if (!std::isfinite(real_logit) || !std::isfinite(fake_logit)) throw NumericError("non-finite discriminator logit");
  if (dreal != nullptr) *dreal = -nn::sigmoid(-real_logit);
  if (dfake != nullptr) *dfake = nn::sigmoid(fake_logit);
  return nn::softplus(-real_logit) + nn::softplus(fake_logit);
}

AdvTerms adv_local_from_logits(double query_logit, double synth_logit, AdversarialConvention conv) {
  return {generator_adv_loss(synth_logit, conv), discriminator_adv_loss(query_logit, synth_logit)};
}

AdvTerms adv_local(const LogitModel& d, const Image& query, const Image& synth, AdversarialConvention conv) {
  if (!query.same_shape(synth)) throw UsageError("adv_local: image dims mismatch");
  const Mat logits = d.logits(Tensor::from_images({&query, &synth}));
  return adv_local_from_logits(logits(0, 0), logits(0, 1), conv);
}

AdvTerms global_terms_from_logits(const Mat& real_logits, const Mat& fake_logits, AdversarialConvention conv) {
  if (real_logits.cols() == 0 || fake_logits.cols() == 0) throw UsageError("global loss: empty batch");
  if (real_logits.cols() != fake_logits.cols()) throw UsageError("global loss: batch sizes differ");
  AdvTerms out;
  const auto n = static_cast<double>(real_logits.cols());
  for (Eigen::Index i = 0; i < real_logits.cols(); ++i) {
    out.g_term += generator_adv_loss(fake_logits(0, i), conv) / n;
    out.d_term += discriminator_adv_loss(real_logits(0, i), fake_logits(0, i)) / n;
  }
  return out;
}

AdvTerms global_loss(const LogitModel& d, const Generator& g, const Tensor& real_batch, const Mat& z_batch,
                     AdversarialConvention conv) {
  if (real_batch.n < 1 || z_batch.cols() < 1) throw UsageError("global loss: empty batch");
  if (real_batch.n != z_batch.cols()) throw UsageError("global loss: batch sizes differ");
  const Mat w = g.map(z_batch);
  const Tensor fake = g.synthesize(std::vector<Mat>(g.layer_count(), w));
  return global_terms_from_logits(d.logits(real_batch), d.logits(fake), conv);
}

namespace {

double penalty_from_grad(const Tensor& grad, int n, double gamma) {
  double sq = 0.0;
  for (float v : grad.data) sq += static_cast<double>(v) * v;
  return 0.5 * gamma * sq / n;
}

}  // namespace

double r1_penalty(LogitModel& d, const Tensor& real_batch, double gamma) {
  if (gamma < 0.0) throw UsageError("r1: gamma must be nonnegative");
  if (real_batch.n < 1) throw UsageError("r1: empty batch");
  if (gamma == 0.0) return 0.0;
  const Tensor grad = d.backprop(real_batch, Mat::Ones(1, real_batch.n), false);
  return penalty_from_grad(grad, real_batch.n, gamma);
}

double r1_accumulate(LogitModel& d, const Tensor& real_batch, double gamma, double weight) {
  if (gamma < 0.0) throw UsageError("r1: gamma must be nonnegative");
  if (real_batch.n < 1) throw UsageError("r1: empty batch");
  if (gamma == 0.0) return 0.0;
  const Tensor grad = d.backprop(real_batch, Mat::Ones(1, real_batch.n), false);
  const double penalty = penalty_from_grad(grad, real_batch.n, gamma);
  if (!std::isfinite(penalty)) throw NumericError("r1: non-finite input gradient");
  if (weight == 0.0 || penalty == 0.0) return penalty;

  double sq = 0.0;
  for (float v : grad.data) sq += static_cast<double>(v) * v;
  const double rms = std::sqrt(sq / static_cast<double>(grad.data.size()));
  // With the kink pattern frozen at real_batch the parameter gradient is
  // affine in the input, so the central difference is exact for any step.
  const double h = 1e-1 / rms;

  Tensor plus = real_batch;
  Tensor minus = real_batch;
  for (std::size_t i = 0; i < grad.data.size(); ++i) {
    plus.data[i] += static_cast<float>(h * grad.data[i]);
    minus.data[i] -= static_cast<float>(h * grad.data[i]);
  }
  const float coeff = static_cast<float>(gamma * weight / (real_batch.n * 2.0 * h));
  d.backprop_linearized(plus, real_batch, Mat::Constant(1, real_batch.n, coeff));
  d.backprop_linearized(minus, real_batch, Mat::Constant(1, real_batch.n, -coeff));
  return penalty;
}

// --- reports -------------------------------------------------------------------

void LossReport::validate() const {
  auto finite = [](double v) { return std::isfinite(v); };
  if (!gated && (adv_local_g || adv_local_d || local)) throw UsageError("ungated report carries local terms");
  if (!finite(recon) || recon < 0.0) throw NumericError("non-finite or negative recon");
  if (!finite(global_g) || !finite(global_d)) throw NumericError("non-finite global loss");
  for (const auto& v : {adv_local_g, adv_local_d, local, r1}) {
    if (v && !finite(*v)) throw NumericError("non-finite loss term");
  }
}

std::string loss_report_csv_header() {
  return "iteration,recon,gated,adv_local_g,adv_local_d,local,global_g,global_d,r1,lambda,p,gamma";
}

std::string loss_report_csv_row(const LossReport& r) {
  std::ostringstream os;
  os << std::setprecision(9);
  auto opt = [&os](const std::optional<double>& v) {
    if (v) os << *v;
    os << ',';
  };
  os << r.iteration << ',' << r.recon << ',' << (r.gated ? 1 : 0) << ',';
  opt(r.adv_local_g);
  opt(r.adv_local_d);
  opt(r.local);
  os << r.global_g << ',' << r.global_d << ',';
  opt(r.r1);
  os << r.lambda << ',' << r.p << ',' << r.gamma;
  return os.str();
}

void write_loss_trace(std::ostream& out, const std::vector<LossReport>& rows) {
  out << loss_report_csv_header() << '\n';
  for (const auto& r : rows) out << loss_report_csv_row(r) << '\n';
}

bool draw_gate(Rng& rng, double p) {
  if (!(p > 0.0 && p <= 1.0)) throw UsageError("gate probability must lie in (0, 1]");
  return rng.uniform() < p;
}

LossReport gated_step_losses(Rng& rng, double p, double lambda, double gamma, std::int64_t iteration, double recon,
                             const std::function<AdvTerms()>& local, const std::function<GlobalComponents()>& global) {
  if (lambda < 0.0) throw UsageError("lambda must be nonnegative");
  LossReport r;
  r.iteration = iteration;
  r.recon = recon;
  r.lambda = lambda;
  r.p = p;
  r.gamma = gamma;
  r.gated = draw_gate(rng, p);
  if (r.gated) {
    const AdvTerms adv = local();
    r.adv_local_g = adv.g_term;
    r.adv_local_d = adv.d_term;
    r.local = recon + lambda * adv.g_term;
  }
  const GlobalComponents g = global();
  r.global_g = g.adv.g_term;
  r.global_d = g.adv.d_term;
  r.r1 = g.r1;
  r.validate();
  return r;
}

}  // namespace gclone
