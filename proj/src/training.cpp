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


#include <cmath>

#include "gclone/backbone.hpp"
#include "gclone/losses.hpp"

namespace gclone {

using nn::Mat;
using nn::Tensor;

TrainedGan train_toy_gan(TrainSampler& sampler, const ToyTrainOptions& opts, const RunConfig& cfg,
                         const GeneratorConfig& gcfg, const DiscriminatorConfig& dcfg,
                         const std::function<void(const TrainLogRow&)>& on_log) {
  if (opts.steps < 1) throw UsageError("train_toy_gan: steps must be >= 1");
  if (opts.batch < 1) throw UsageError("train_toy_gan: batch must be >= 1");
  if (opts.gamma < 0.0) throw UsageError("train_toy_gan: gamma must be nonnegative");
  if (sampler.size() == 0) throw UsageError("train_toy_gan: empty dataset");
  const Image& probe = sampler.images().front();
  if (probe.height != gcfg.resolution() || probe.width != gcfg.resolution() || probe.channels != gcfg.image_channels) {
    throw UsageError("train_toy_gan: dataset images do not match the generator output dims");
  }

  TrainedGan out{Generator(gcfg, cfg.seed), Discriminator(dcfg, cfg.seed), {}};
  Generator& g = out.generator;
  Discriminator& d = out.discriminator;
  nn::Adam g_opt(g.params(), {opts.lr, 0.0f, 0.99f, 1e-8f});
  nn::Adam d_opt(d.params(), {opts.lr, 0.0f, 0.99f, 1e-8f});
  const int b = opts.batch;

  for (int step = 1; step <= opts.steps; ++step) {
    // Generator update.
    Generator::MappingCache mcache;
    const Mat z = sampler.prior_batch(b, g.latent_dim());
    const Mat w = g.map(z, &mcache);
    const std::vector<Mat> styles(g.layer_count(), w);
    Generator::SynthesisCache scache;
    const Tensor fake = g.synthesize(styles, &scache);
    Discriminator::Cache dcache;
    const Mat fake_logits = d.forward(fake, &dcache);
    Mat dlogits(1, b);
    double g_loss = 0.0;
    for (int i = 0; i < b; ++i) {
      double dl = 0.0;
      g_loss += generator_adv_loss(fake_logits(0, i), AdversarialConvention::NonSaturating, &dl) / b;
      dlogits(0, i) = static_cast<float>(dl / b);
    }
    const Tensor grad_img = d.backward(dcache, dlogits, false, true);
    const auto grad_styles = g.synthesize_backward(scache, styles, grad_img, true);
    Mat grad_w = Mat::Zero(w.rows(), w.cols());
    for (const Mat& gs : grad_styles) grad_w += gs;
    g.map_backward(mcache, grad_w);
    if (!nn::grads_finite(g.params())) throw NumericError("train_toy_gan: non-finite generator gradient at step " + std::to_string(step));
    g_opt.step();
    nn::zero_grads(g.params());

    // Discriminator update on the (pre-update) fakes and a real batch.
    const Tensor real = sampler.real_batch(b);
    Discriminator::Cache rcache;
    const Mat real_logits = d.forward(real, &rcache);
    const Mat& fl = fake_logits;
    Mat dreal(1, b), dfake(1, b);
    double d_loss = 0.0;
    for (int i = 0; i < b; ++i) {
      double gr = 0.0, gf = 0.0;
      d_loss += discriminator_adv_loss(real_logits(0, i), fl(0, i), &gr, &gf) / b;
      dreal(0, i) = static_cast<float>(gr / b);
      dfake(0, i) = static_cast<float>(gf / b);
    }
    d.backward(rcache, dreal, true, false);
    d.backward(dcache, dfake, true, false);
    double r1 = 0.0;
    if (opts.r1_interval > 0 && step % opts.r1_interval == 0) {
      r1 = r1_accumulate(d, real, opts.gamma, static_cast<double>(opts.r1_interval));
    }
    if (!std::isfinite(g_loss) || !std::isfinite(d_loss) || !std::isfinite(r1) || !nn::grads_finite(d.params())) {
      throw NumericError("train_toy_gan: divergence (non-finite loss) at step " + std::to_string(step));
    }
    d_opt.step();
    nn::zero_grads(d.params());

    if (step == 1 || step % std::max(opts.log_every, 1) == 0 || step == opts.steps) {
      TrainLogRow row{step, g_loss, d_loss, r1};
      out.log.push_back(row);
      if (on_log) on_log(row);
    }
  }
  return out;
}

}  // namespace gclone
