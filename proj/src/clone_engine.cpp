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


#include "gclone/clone_engine.hpp"

#include <cmath>
#include <sstream>

#include "gclone/projector.hpp"
#include "gclone/pyramid.hpp"

namespace gclone {

using nn::Mat;
using nn::Tensor;

void CloneConfig::validate() const {
  if (!(p > 0.0 && p <= 1.0)) throw UsageError("clone: p must lie in (0, 1]");
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw UsageError("clone: lambda must be nonnegative");
  if (!(gamma >= 0.0) || !std::isfinite(gamma)) throw UsageError("clone: gamma must be nonnegative");
  if (!(epsilon > 0.0)) throw UsageError("clone: epsilon must be positive");
  if (max_iters < 1) throw UsageError("clone: max_iters must be >= 1");
  if (!(lr_g > 0.0) || !(lr_d > 0.0)) throw UsageError("clone: learning rates must be positive");
  if (!(beta1 >= 0.0 && beta1 < 1.0)) throw UsageError("clone: beta1 must lie in [0, 1)");
  if (batch_size < 1) throw UsageError("clone: batch_size must be >= 1");
  if (levels < 0) throw UsageError("clone: levels must be >= 0");
  if (r1_interval < 0) throw UsageError("clone: r1_interval must be >= 0");
  if (mask) mask->validate();
}

namespace {

std::pair<int, int> parse_crop(const std::string& text) {
  const auto x = text.find('x');
  if (x == std::string::npos) throw UsageError("crop must look like HxW, got '" + text + "'");
  try {
    return {std::stoi(text.substr(0, x)), std::stoi(text.substr(x + 1))};
  } catch (const std::exception&) {
    throw UsageError("crop must look like HxW, got '" + text + "'");
  }
}

}  // namespace

CloneConfig CloneConfig::from_kv(const KeyValueConfig& kv, int image_h, int image_w) {
  CloneConfig c;
  if (auto v = kv.get_int("seed")) c.seed = static_cast<std::uint64_t>(*v);
  if (auto v = kv.get_double("p")) c.p = *v;
  if (auto v = kv.get_double("lambda")) c.lambda = *v;
  if (auto v = kv.get_double("gamma")) c.gamma = *v;
  if (auto v = kv.get_double("epsilon")) c.epsilon = *v;
  if (auto v = kv.get_int("max_iters")) c.max_iters = *v;
  if (auto v = kv.get_double("lr_g")) c.lr_g = *v;
  if (auto v = kv.get_double("lr_d")) c.lr_d = *v;
  if (auto v = kv.get_int("batch_size")) c.batch_size = static_cast<int>(*v);
  if (auto v = kv.get_int("levels")) c.levels = static_cast<int>(*v);
  if (auto v = kv.get("crop")) {
    const auto [ch, cw] = parse_crop(*v);
    c.mask = center_crop_mask(image_h, image_w, ch, cw);
  }
  c.validate();
  return c;
}

KeyValueConfig CloneConfig::to_kv() const {
  KeyValueConfig kv;
  auto num = [](double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
  };
  kv.set("seed", std::to_string(seed));
  kv.set("p", num(p));
  kv.set("lambda", num(lambda));
  kv.set("gamma", num(gamma));
  kv.set("epsilon", num(epsilon));
  kv.set("max_iters", std::to_string(max_iters));
  kv.set("lr_g", num(lr_g));
  kv.set("lr_d", num(lr_d));
  kv.set("batch_size", std::to_string(batch_size));
  kv.set("levels", std::to_string(levels));
  return kv;
}

namespace {

// Styles for the frozen code under the current generator. Z codes pass
// through the (trainable) mapping network.
struct CodeForward {
  std::vector<Mat> styles;
  Generator::MappingCache mapping;
};

CodeForward forward_code(const Generator& g, const LatentCode& code) {
  CodeForward f;
  if (code.space == LatentSpace::Z) {
    const Mat z = Eigen::Map<const Mat>(code.data.data(), code.dim, 1);
    f.styles.assign(g.layer_count(), g.map(z, &f.mapping));
  } else {
    f.styles = g.styles_for(code);
  }
  return f;
}

void backward_code(Generator& g, const LatentCode& code, const CodeForward& f, const std::vector<Mat>& style_grads) {
  if (code.space != LatentSpace::Z) return;
  Mat gw = Mat::Zero(code.dim, 1);
  for (const Mat& s : style_grads) gw += s;
  g.map_backward(f.mapping, gw);
}

}  // namespace

CloneResult clone(const Image& x, Generator& g, Discriminator& d, TrainSampler& sampler, const Projection& h,
                  const CloneConfig& cfg, const CloneProgress& progress) {
  cfg.validate();
  x.validate();
  if (x.height != g.resolution() || x.width != g.resolution() || x.channels != g.image_channels()) {
    throw UsageError("clone: query dims do not match the generator output");
  }
  if (sampler.size() == 0) throw UsageError("clone: empty training set");
  if (cfg.mask && !cfg.mask->matches(x)) throw UsageError("clone: mask dims do not match the query");
  const RegionMask* mask = cfg.mask ? &*cfg.mask : nullptr;
  const int levels = cfg.levels > 0 ? cfg.levels : default_pyramid_levels(x.height, x.width);

  const LatentCode code = h(x);
  code.validate();
  if (code.dim != g.latent_dim()) throw UsageError("clone: projected code dim mismatch");

  CloneResult res;
  res.code = code;
  res.g_pre = snapshot(g);
  res.d_pre = snapshot(d);

  nn::Adam g_opt(g.params(), {static_cast<float>(cfg.lr_g), static_cast<float>(cfg.beta1), 0.99f, 1e-8f});
  nn::Adam d_opt(d.params(), {static_cast<float>(cfg.lr_d), static_cast<float>(cfg.beta1), 0.99f, 1e-8f});
  Rng gate_rng = Rng(cfg.seed).fork("clone.gate");
  const Tensor query = Tensor::from_images({&x});
  const int b = cfg.batch_size;

  try {
    nn::zero_grads(g.params());
    nn::zero_grads(d.params());
    for (std::int64_t t = 1; t <= cfg.max_iters; ++t) {
      // Full recon every iteration; its value drives the stop check, its
      // gradient is used only when the gate fires.
      CodeForward cf = forward_code(g, code);
      Generator::SynthesisCache scache;
      const Tensor synth = g.synthesize(cf.styles, &scache);
      const LapLossGrad lg = lap_loss_with_grad(synth.image(0), x, levels, mask);

      auto local = [&]() -> AdvTerms {
        Discriminator::Cache qc, sc;
        const double ql = d.forward(query, &qc)(0, 0);
        const double sl = d.forward(synth, &sc)(0, 0);
        double dg = 0.0, dq = 0.0, ds = 0.0;
        AdvTerms adv;
        adv.g_term = generator_adv_loss(sl, cfg.convention, &dg);
        adv.d_term = discriminator_adv_loss(ql, sl, &dq, &ds);

        // Generator: recon + lambda * g_term through the synthesized image.
        Tensor gimg = d.backward(sc, Mat::Constant(1, 1, static_cast<float>(cfg.lambda * dg)), false, true);
        const Tensor grec = tensor_from_field(lg.grad_x1);
        for (std::size_t i = 0; i < gimg.data.size(); ++i) gimg.data[i] += grec.data[i];
        const auto sgrads = g.synthesize_backward(scache, cf.styles, gimg, true);
        backward_code(g, code, cf, sgrads);

        // Discriminator: lambda * d_term.
        d.backward(qc, Mat::Constant(1, 1, static_cast<float>(cfg.lambda * dq)), true, false);
        d.backward(sc, Mat::Constant(1, 1, static_cast<float>(cfg.lambda * ds)), true, false);
        return adv;
      };

      auto global = [&]() -> GlobalComponents {
        GlobalComponents out;
        Generator::MappingCache mc;
        const Mat z = sampler.prior_batch(b, g.latent_dim());
        const Mat w = g.map(z, &mc);
        const std::vector<Mat> styles(g.layer_count(), w);
        Generator::SynthesisCache fc;
        const Tensor fake = g.synthesize(styles, &fc);
        Discriminator::Cache fdc, rdc;
        const Mat fl = d.forward(fake, &fdc);
        const Tensor real = sampler.real_batch(b);
        const Mat rl = d.forward(real, &rdc);
        out.adv = global_terms_from_logits(rl, fl, cfg.convention);

        Mat gfake(1, b), dreal(1, b), dfake(1, b);
        for (int i = 0; i < b; ++i) {
          double dg = 0.0, dr = 0.0, df = 0.0;
          generator_adv_loss(fl(0, i), cfg.convention, &dg);
          discriminator_adv_loss(rl(0, i), fl(0, i), &dr, &df);
          gfake(0, i) = static_cast<float>(dg / b);
          dreal(0, i) = static_cast<float>(dr / b);
          dfake(0, i) = static_cast<float>(df / b);
        }
        const Tensor gimg = d.backward(fdc, gfake, false, true);
        const auto sgrads = g.synthesize_backward(fc, styles, gimg, true);
        Mat gw = Mat::Zero(w.rows(), w.cols());
        for (const Mat& s : sgrads) gw += s;
        g.map_backward(mc, gw);

        d.backward(rdc, dreal, true, false);
        d.backward(fdc, dfake, true, false);
        if (cfg.r1_interval > 0 && t % cfg.r1_interval == 0) {
          out.r1 = r1_accumulate(d, real, cfg.gamma, static_cast<double>(cfg.r1_interval));
        }
        return out;
      };

      LossReport report = gated_step_losses(gate_rng, cfg.p, cfg.lambda, cfg.gamma, t, lg.value, local, global);
      if (!nn::grads_finite(g.params()) || !nn::grads_finite(d.params())) {
        throw NumericError("clone: non-finite gradient at iteration " + std::to_string(t));
      }
      g_opt.step();
      d_opt.step();
      nn::zero_grads(g.params());
      nn::zero_grads(d.params());
      res.trace.push_back(report);
      if (progress) progress(report);
      res.stopped_at = t;
      if (report.recon < cfg.epsilon) {
        res.converged = true;
        break;
      }
    }
  } catch (const NumericError&) {
    restore(g, res.g_pre);
    restore(d, res.d_pre);
    throw;
  }

  res.x_star = g.generate(code);
  if (!res.x_star.all_finite()) {
    restore(g, res.g_pre);
    restore(d, res.d_pre);
    throw NumericError("clone: non-finite output image");
  }
  res.final_recon = lap_loss(res.x_star, x, levels, mask);
  res.g_post_hash = hash_params(static_cast<const Generator&>(g).params());
  res.d_post_hash = hash_params(static_cast<const Discriminator&>(d).params());
  return res;
}

double drift(const Generator& pre, const Generator& post, const std::vector<LatentCode>& codes) {
  if (codes.empty()) throw UsageError("drift: no evaluation codes");
  const auto& a = pre.config();
  const auto& b = post.config();
  if (a.latent_dim != b.latent_dim || a.channels != b.channels || a.image_channels != b.image_channels) {
    throw UsageError("drift: generator architectures differ");
  }
  double total = 0.0;
  for (const LatentCode& c : codes) {
    const Image x0 = pre.generate(c);
    const Image x1 = post.generate(c);
    double acc = 0.0;
    for (int y = 0; y < x0.height; ++y) {
      for (int xx = 0; xx < x0.width; ++xx) {
        double sq = 0.0;
        for (int ch = 0; ch < x0.channels; ++ch) {
          const double diff = static_cast<double>(x0.at(ch, y, xx)) - x1.at(ch, y, xx);
          sq += diff * diff;
        }
        acc += std::sqrt(sq);
      }
    }
    total += acc / static_cast<double>(x0.plane_size());
  }
  return total / static_cast<double>(codes.size());
}

double drift(const ParamSnapshot& pre, const Generator& post, const std::vector<LatentCode>& codes) {
  Generator before = post;
  restore(before, pre);
  return drift(before, post, codes);
}

}  // namespace gclone
