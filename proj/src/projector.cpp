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


#include "gclone/projector.hpp"

#include <cmath>
#include <fstream>
#include <numbers>

namespace gclone {

using nn::Mat;
using nn::Tensor;

LatentCode mean_latent(const Generator& g, int n, std::uint64_t seed) {
  if (n < 1) throw UsageError("mean_latent: n must be >= 1");
  Rng rng = Rng(seed).fork("mean_latent");
  const int q = g.latent_dim();
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(q);
  constexpr int kChunk = 1000;
  for (int done = 0; done < n;) {
    const int b = std::min(kChunk, n - done);
    Mat z(q, b);
    rng.fill_normal({z.data(), static_cast<std::size_t>(z.size())});
    acc += g.map(z).cast<double>().rowwise().sum();
    done += b;
  }
  acc /= n;
  std::vector<float> v(q);
  for (int i = 0; i < q; ++i) v[i] = static_cast<float>(acc[i]);
  return LatentCode::w(std::move(v));
}

Tensor tensor_from_field(const Field& f) {
  Tensor t(1, f.channels, f.height, f.width);
  for (std::size_t i = 0; i < f.values.size(); ++i) t.data[i] = static_cast<float>(f.values[i]);
  return t;
}

double lap_loss_backprop(Generator& g, const std::vector<Mat>& styles, const Image& target, int levels,
                         const RegionMask* mask, bool param_grads, std::vector<Mat>* style_grads, double scale) {
  Generator::SynthesisCache cache;
  const Tensor out = g.synthesize(styles, &cache);
  const LapLossGrad lg = lap_loss_with_grad(out.image(0), target, levels, mask);
  Tensor grad = tensor_from_field(lg.grad_x1);
  if (scale != 1.0) {
    for (float& v : grad.data) v *= static_cast<float>(scale);
  }
  auto sg = g.synthesize_backward(cache, styles, grad, param_grads);
  if (style_grads != nullptr) *style_grads = std::move(sg);
  return lg.value;
}

namespace {

std::vector<Mat> styles_from(std::span<const float> v, LatentSpace space, int layers, int q) {
  std::vector<Mat> styles;
  for (int l = 0; l < layers; ++l) {
    const float* src = v.data() + (space == LatentSpace::WPlus ? static_cast<std::size_t>(l) * q : 0);
    styles.emplace_back(Eigen::Map<const Mat>(src, q, 1));
  }
  return styles;
}

LatentCode code_from(std::span<const float> s, LatentSpace space, int layers, int q) {
  std::vector<float> v(s.begin(), s.end());
  if (space == LatentSpace::WPlus) return LatentCode::wplus(layers, q, std::move(v));
  return LatentCode::w(std::move(v));
}

}  // namespace

ProjectResult project(const Image& target, const Generator& g, const ProjectOptions& opts, const RegionMask* mask) {
  target.validate();
  if (opts.steps < 1) throw UsageError("project: steps must be >= 1");
  if (opts.space == LatentSpace::Z) throw UsageError("project: only W and W+ are supported");
  if (target.height != g.resolution() || target.width != g.resolution() || target.channels != g.image_channels()) {
    throw UsageError("project: target dims do not match the generator output");
  }
  if (mask != nullptr) {
    mask->validate();
    if (!mask->matches(target)) throw UsageError("project: mask dims do not match the target");
  }
  const int levels = opts.levels > 0 ? opts.levels : default_pyramid_levels(target.height, target.width);
  const int q = g.latent_dim();
  const int layers = g.layer_count();

  LatentCode init = opts.init ? *opts.init : mean_latent(g, opts.mean_samples, opts.seed);
  if (init.dim != q) throw UsageError("project: init code dim mismatch");
  if (opts.space == LatentSpace::WPlus && init.space == LatentSpace::W) init = init.broadcast(layers);
  if (init.space != opts.space) throw UsageError("project: init code space does not match the projection space");
  init.validate();

  // The synthesis backward pass needs a mutable generator for its parameter
  // gradient slots; with param_grads = false nothing is written.
  Generator& gm = const_cast<Generator&>(g);

  nn::Param code("code", {static_cast<int>(init.data.size())});
  code.value.assign(init.data.begin(), init.data.end());
  nn::Adam adam({&code}, {static_cast<float>(opts.lr), 0.9f, 0.999f, 1e-8f});

  ProjectResult res;
  nn::FloatBuffer best_code = code.value;
  double best = std::numeric_limits<double>::infinity();
  for (int step = 0; step <= opts.steps; ++step) {
    const auto styles = styles_from(code.value, opts.space, layers, q);
    std::vector<Mat> sg;
    const double loss = lap_loss_backprop(gm, styles, target, levels, mask, false, &sg);
    if (!std::isfinite(loss)) {
      throw NumericError("project: non-finite loss at step " + std::to_string(step));
    }
    if (loss < best) {
      best = loss;
      best_code = code.value;
    }
    res.trace.push_back({step, loss, best});
    if (step == opts.steps) break;

    code.zero_grad();
    for (int l = 0; l < layers; ++l) {
      float* dst = code.grad.data() + (opts.space == LatentSpace::WPlus ? static_cast<std::size_t>(l) * q : 0);
      for (int i = 0; i < q; ++i) dst[i] += sg[l](i, 0);
    }
    const double frac = static_cast<double>(step) / opts.steps;
    const double lr = opts.lr_final + 0.5 * (opts.lr - opts.lr_final) * (1.0 + std::cos(std::numbers::pi * frac));
    adam.set_lr(static_cast<float>(lr));
    adam.step();
  }
  res.code = code_from(best_code, opts.space, layers, q);
  res.image = g.generate(res.code);
  res.loss = best;
  return res;
}

void write_project_trace(const std::filesystem::path& path, const std::vector<ProjectTraceRow>& trace) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << "step,loss,best\n";
  out.precision(17);
  for (const auto& r : trace) out << r.step << ',' << r.loss << ',' << r.best << '\n';
}

}  // namespace gclone
