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


#include "gclone/backbone.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <nlohmann/json.hpp>
#include <sstream>

namespace gclone {

using nn::Mat;
using nn::Tensor;

std::string to_string(LatentSpace space) {
  switch (space) {
    case LatentSpace::Z:
      return "Z";
    case LatentSpace::W:
      return "W";
    case LatentSpace::WPlus:
      return "WPLUS";
  }
  return "?";
}

LatentSpace parse_latent_space(const std::string& text) {
  if (text == "Z" || text == "z") return LatentSpace::Z;
  if (text == "W" || text == "w") return LatentSpace::W;
  if (text == "WPLUS" || text == "wplus" || text == "W+" || text == "w+") return LatentSpace::WPlus;
  throw UsageError("unknown latent space '" + text + "'");
}

LatentCode LatentCode::z(std::vector<float> v) {
  const int d = static_cast<int>(v.size());
  return {LatentSpace::Z, 1, d, std::move(v)};
}

LatentCode LatentCode::w(std::vector<float> v) {
  const int d = static_cast<int>(v.size());
  return {LatentSpace::W, 1, d, std::move(v)};
}

LatentCode LatentCode::wplus(int layers, int dim, std::vector<float> v) {
  LatentCode c{LatentSpace::WPlus, layers, dim, std::move(v)};
  c.validate();
  return c;
}

LatentCode LatentCode::broadcast(int layer_count) const {
  if (space == LatentSpace::WPlus) {
    if (layers != layer_count) throw UsageError("W+ code layer count mismatch");
    return *this;
  }
  if (space != LatentSpace::W) throw UsageError("only W codes can be broadcast to W+");
  LatentCode out{LatentSpace::WPlus, layer_count, dim, {}};
  out.data.reserve(static_cast<std::size_t>(layer_count) * dim);
  for (int l = 0; l < layer_count; ++l) out.data.insert(out.data.end(), data.begin(), data.end());
  return out;
}

void LatentCode::validate() const {
  if (dim <= 0 || layers <= 0) throw UsageError("latent code dims must be positive");
  if (space != LatentSpace::WPlus && layers != 1) throw UsageError("Z/W codes hold a single vector");
  if (data.size() != static_cast<std::size_t>(layers) * dim) throw UsageError("latent code size mismatch");
  for (float v : data) {
    if (!std::isfinite(v)) throw NumericError("latent code contains non-finite entries");
  }
}

namespace {

std::vector<std::uint8_t> leaky_relu_mat(Mat& m) {
  std::vector<std::uint8_t> positive(static_cast<std::size_t>(m.size()));
  float* p = m.data();
  for (Eigen::Index i = 0; i < m.size(); ++i) {
    positive[i] = p[i] > 0.0f;
    p[i] *= positive[i] ? nn::kActGain : nn::kActGain * nn::kLeakySlope;
  }
  return positive;
}

void leaky_relu_mat_backward(Mat& g, const std::vector<std::uint8_t>& positive) {
  float* p = g.data();
  for (Eigen::Index i = 0; i < g.size(); ++i) p[i] *= positive[i] ? nn::kActGain : nn::kActGain * nn::kLeakySlope;
}

// x[c][n][:] *= scale(c, n)
void scale_planes(Tensor& x, const Mat& scale) {
  for (int c = 0; c < x.c; ++c) {
    for (int n = 0; n < x.n; ++n) {
      const float s = scale(c, n);
      float* p = x.data.data() + x.offset(c, n);
      for (std::size_t i = 0; i < x.plane(); ++i) p[i] *= s;
    }
  }
}

// out(c, n) = sum over the plane of a[c][n] * b[c][n]
Mat plane_dots(const Tensor& a, const Tensor& b) {
  Mat out(a.c, a.n);
  for (int c = 0; c < a.c; ++c) {
    for (int n = 0; n < a.n; ++n) {
      const float* pa = a.data.data() + a.offset(c, n);
      const float* pb = b.data.data() + b.offset(c, n);
      double acc = 0.0;
      for (std::size_t i = 0; i < a.plane(); ++i) acc += static_cast<double>(pa[i]) * pb[i];
      out(c, n) = static_cast<float>(acc);
    }
  }
  return out;
}

}  // namespace

// --- StyledConv ---------------------------------------------------------------

StyledConv::StyledConv(const std::string& name, int latent_dim, int in, int out, int resolution)
    : affine_(name + ".affine", latent_dim, in, 1.0f),
      conv_(name + ".conv", in, out, 3, false),
      noise_strength_(name + ".noise_strength", {1}),
      bias_(name + ".bias", {out}),
      noise_(static_cast<std::size_t>(resolution) * resolution),
      resolution_(resolution) {}

void StyledConv::init(Rng& rng, Rng& noise_rng) {
  affine_.init(rng);
  conv_.init(rng);
  noise_rng.fill_normal(noise_);
}

nn::ParamRefs StyledConv::params() {
  nn::ParamRefs out = affine_.params();
  for (nn::Param* p : conv_.params()) out.push_back(p);
  out.push_back(&noise_strength_);
  out.push_back(&bias_);
  return out;
}

Tensor StyledConv::forward(const Tensor& x, const Mat& w, Cache* cache) const {
  if (x.h != resolution_ || x.w != resolution_) throw UsageError("StyledConv: resolution mismatch");
  const Mat style = affine_.forward(w);
  Tensor xm = x;
  scale_planes(xm, style);
  nn::Conv2d::Cache conv_cache;
  Tensor u = conv_.forward(xm, cache != nullptr ? &conv_cache : nullptr);

  const Mat eff = conv_.effective_weight();
  const int kk = conv_.kernel() * conv_.kernel();
  Mat energy(conv_.out(), conv_.in());
  for (int i = 0; i < conv_.in(); ++i) energy.col(i) = eff.middleCols(static_cast<Eigen::Index>(i) * kk, kk).rowwise().squaredNorm();
  const Mat demod = ((energy * style.cwiseAbs2()).array() + 1e-8f).rsqrt().matrix();

  Tensor v = u;
  const float strength = noise_strength_.value[0];
  for (int o = 0; o < v.c; ++o) {
    const float b = bias_.value[o];
    for (int n = 0; n < v.n; ++n) {
      const float d = demod(o, n);
      float* p = v.data.data() + v.offset(o, n);
      for (std::size_t i = 0; i < v.plane(); ++i) p[i] = p[i] * d + strength * noise_[i] + b;
    }
  }
  auto positive = nn::leaky_relu_inplace(v.data);
  if (cache != nullptr) {
    cache->input = x;
    cache->style = style;
    cache->conv = std::move(conv_cache);
    cache->conv_out = std::move(u);
    cache->demod = demod;
    cache->positive = std::move(positive);
  }
  return v;
}

Tensor StyledConv::backward(const Cache& cache, const Mat& w, Tensor grad, Mat& grad_w, bool param_grads) {
  nn::leaky_relu_backward_inplace(grad.data, cache.positive);
  const Tensor& u = cache.conv_out;
  const Mat& demod = cache.demod;
  const Mat& style = cache.style;

  if (param_grads) {
    double strength_grad = 0.0;
    for (int o = 0; o < grad.c; ++o) {
      double bias_grad = 0.0;
      for (int n = 0; n < grad.n; ++n) {
        const float* g = grad.data.data() + grad.offset(o, n);
        for (std::size_t i = 0; i < grad.plane(); ++i) {
          bias_grad += g[i];
          strength_grad += static_cast<double>(g[i]) * noise_[i];
        }
      }
      bias_.grad[o] += static_cast<float>(bias_grad);
    }
    noise_strength_.grad[0] += static_cast<float>(strength_grad);
  }

  const Mat grad_demod = plane_dots(grad, u);
  Tensor grad_u = std::move(grad);
  scale_planes(grad_u, demod);

  // d = (sum_i s_i^2 A_oi + eps)^(-1/2)
  const Mat t = grad_demod.cwiseProduct(-demod.cwiseProduct(demod).cwiseProduct(demod));
  const Mat eff = conv_.effective_weight();
  const int kk = conv_.kernel() * conv_.kernel();
  Mat energy(conv_.out(), conv_.in());
  for (int i = 0; i < conv_.in(); ++i) energy.col(i) = eff.middleCols(static_cast<Eigen::Index>(i) * kk, kk).rowwise().squaredNorm();
  Mat grad_style = (energy.transpose() * t).cwiseProduct(style);

  if (param_grads) {
    const Mat m = t * style.cwiseAbs2().transpose();  // out x in
    const float g2 = conv_.gain() * conv_.gain();
    nn::Param& wp = conv_.weight();
    Eigen::Map<Mat> gw(wp.grad.data(), conv_.out(), static_cast<Eigen::Index>(conv_.in()) * kk);
    const Eigen::Map<const Mat> wraw(wp.value.data(), conv_.out(), static_cast<Eigen::Index>(conv_.in()) * kk);
    for (int i = 0; i < conv_.in(); ++i) {
      for (int k = 0; k < kk; ++k) {
        const Eigen::Index col = static_cast<Eigen::Index>(i) * kk + k;
        gw.col(col) += g2 * wraw.col(col).cwiseProduct(m.col(i));
      }
    }
  }

  Tensor grad_xm = conv_.backward(cache.conv, grad_u, param_grads, true);
  grad_style += plane_dots(grad_xm, cache.input);
  scale_planes(grad_xm, style);
  grad_w += affine_.backward(w, grad_style, param_grads);
  return grad_xm;
}

// --- Generator -----------------------------------------------------------------

Generator::Generator(GeneratorConfig config, std::uint64_t seed) : config_(std::move(config)), seed_(seed) {
  if (config_.channels.empty()) throw UsageError("generator needs at least one stage");
  const int q = config_.latent_dim;
  for (int i = 0; i < config_.mapping_layers; ++i) {
    mapping_.emplace_back("G.mapping" + std::to_string(i), q, q, 0.0f, config_.mapping_lr_mul);
  }
  const int c0 = config_.channels.front();
  const_input_ = nn::Param("G.const", {c0, 4, 4});
  int in = c0;
  for (int s = 0; s < config_.layer_count(); ++s) {
    stages_.emplace_back("G.stage" + std::to_string(s), q, in, config_.channels[s], 4 << s);
    in = config_.channels[s];
  }
  rgb_affine_ = nn::Dense("G.torgb.affine", q, in, 1.0f);
  rgb_conv_ = nn::Conv2d("G.torgb.conv", in, config_.image_channels, 1, true);

  Rng rng = Rng(seed).fork("generator.init");
  Rng noise_rng = Rng(seed).fork("generator.noise");
  for (auto& d : mapping_) d.init(rng);
  rng.fill_normal(const_input_.value);
  for (auto& s : stages_) s.init(rng, noise_rng);
  rgb_affine_.init(rng);
  rgb_conv_.init(rng);
}

Mat Generator::map(const Mat& z, MappingCache* cache) const {
  if (z.rows() != config_.latent_dim) throw UsageError("mapping: latent dim mismatch");
  Mat x = z;
  for (Eigen::Index n = 0; n < x.cols(); ++n) {
    const float rms = std::sqrt(x.col(n).squaredNorm() / static_cast<float>(x.rows()) + 1e-8f);
    x.col(n) /= rms;
  }
  for (const auto& layer : mapping_) {
    if (cache != nullptr) cache->inputs.push_back(x);
    x = layer.forward(x);
    auto pos = leaky_relu_mat(x);
    if (cache != nullptr) cache->positive.push_back(std::move(pos));
  }
  return x;
}

void Generator::map_backward(const MappingCache& cache, const Mat& grad_w) {
  Mat g = grad_w;
  for (int l = static_cast<int>(mapping_.size()) - 1; l >= 0; --l) {
    leaky_relu_mat_backward(g, cache.positive[l]);
    g = mapping_[l].backward(cache.inputs[l], g, true);
  }
}

Tensor Generator::synthesize(const std::vector<Mat>& styles, SynthesisCache* cache) const {
  if (static_cast<int>(styles.size()) != layer_count()) throw UsageError("synthesis: style count mismatch");
  const int n = static_cast<int>(styles.front().cols());
  for (const Mat& s : styles) {
    if (s.rows() != config_.latent_dim || s.cols() != n) throw UsageError("synthesis: style dims mismatch");
  }
  const int c0 = config_.channels.front();
  Tensor x(n, c0, 4, 4);
  for (int c = 0; c < c0; ++c) {
    for (int s = 0; s < n; ++s) std::copy_n(const_input_.value.begin() + c * 16, 16, x.data.begin() + static_cast<std::ptrdiff_t>(x.offset(c, s)));
  }
  if (cache != nullptr) cache->stages.resize(stages_.size());
  for (int s = 0; s < layer_count(); ++s) {
    if (s > 0) x = nn::upsample2x(x);
    x = stages_[s].forward(x, styles[s], cache != nullptr ? &cache->stages[s] : nullptr);
  }
  const Mat style = rgb_affine_.forward(styles.back());
  Tensor xm = x;
  scale_planes(xm, style);
  nn::Conv2d::Cache conv_cache;
  Tensor y = rgb_conv_.forward(xm, cache != nullptr ? &conv_cache : nullptr);
  for (float& v : y.data) v = std::tanh(v);
  if (cache != nullptr) {
    cache->rgb_input = std::move(x);
    cache->rgb_style = style;
    cache->rgb_conv = std::move(conv_cache);
    cache->output = y;
  }
  return y;
}

std::vector<Mat> Generator::synthesize_backward(const SynthesisCache& cache, const std::vector<Mat>& styles,
                                                const Tensor& grad_image, bool param_grads) {
  const int n = static_cast<int>(styles.front().cols());
  std::vector<Mat> grad_styles;
  for (int l = 0; l < layer_count(); ++l) grad_styles.push_back(Mat::Zero(config_.latent_dim, n));

  Tensor g = grad_image;
  for (std::size_t i = 0; i < g.data.size(); ++i) {
    const float o = cache.output.data[i];
    g.data[i] *= 1.0f - o * o;
  }
  Tensor grad_xm = rgb_conv_.backward(cache.rgb_conv, g, param_grads, true);
  const Mat grad_style = plane_dots(grad_xm, cache.rgb_input);
  scale_planes(grad_xm, cache.rgb_style);
  grad_styles.back() += rgb_affine_.backward(styles.back(), grad_style, param_grads);

  Tensor gx = std::move(grad_xm);
  for (int s = layer_count() - 1; s >= 0; --s) {
    gx = stages_[s].backward(cache.stages[s], styles[s], std::move(gx), grad_styles[s], param_grads);
    if (s > 0) gx = nn::upsample2x_backward(gx);
  }
  if (param_grads) {
    for (int c = 0; c < gx.c; ++c) {
      for (int s = 0; s < gx.n; ++s) {
        const float* p = gx.data.data() + gx.offset(c, s);
        for (int i = 0; i < 16; ++i) const_input_.grad[c * 16 + i] += p[i];
      }
    }
  }
  return grad_styles;
}

std::vector<Mat> Generator::styles_for(const LatentCode& code) const {
  code.validate();
  if (code.dim != config_.latent_dim) throw UsageError("latent dim mismatch");
  std::vector<Mat> styles;
  switch (code.space) {
    case LatentSpace::Z: {
      const Mat z = Eigen::Map<const Mat>(code.data.data(), code.dim, 1);
      const Mat w = map(z);
      styles.assign(layer_count(), w);
      break;
    }
    case LatentSpace::W:
      styles.assign(layer_count(), Eigen::Map<const Mat>(code.data.data(), code.dim, 1));
      break;
    case LatentSpace::WPlus:
      if (code.layers != layer_count()) throw UsageError("W+ code layer count mismatch");
      for (int l = 0; l < layer_count(); ++l) styles.emplace_back(Eigen::Map<const Mat>(code.layer(l).data(), code.dim, 1));
      break;
  }
  return styles;
}

Image Generator::generate(const LatentCode& code) const { return synthesize(styles_for(code)).image(0); }

nn::ParamRefs Generator::mapping_params() {
  nn::ParamRefs out;
  for (auto& d : mapping_) {
    for (nn::Param* p : d.params()) out.push_back(p);
  }
  return out;
}

nn::ParamRefs Generator::params() {
  nn::ParamRefs out = mapping_params();
  out.push_back(&const_input_);
  for (auto& s : stages_) {
    for (nn::Param* p : s.params()) out.push_back(p);
  }
  for (nn::Param* p : rgb_affine_.params()) out.push_back(p);
  for (nn::Param* p : rgb_conv_.params()) out.push_back(p);
  return out;
}

std::vector<const nn::Param*> Generator::params() const {
  auto refs = const_cast<Generator*>(this)->params();
  return {refs.begin(), refs.end()};
}

std::vector<std::pair<std::string, nn::FloatBuffer*>> Generator::buffers() {
  std::vector<std::pair<std::string, nn::FloatBuffer*>> out;
  for (std::size_t s = 0; s < stages_.size(); ++s) out.emplace_back("G.stage" + std::to_string(s) + ".noise", &stages_[s].noise());
  return out;
}

// --- Discriminator ---------------------------------------------------------------

Discriminator::Discriminator(DiscriminatorConfig config, std::uint64_t seed) : config_(std::move(config)) {
  if (config_.channels.empty()) throw UsageError("discriminator needs at least one block");
  int in = config_.image_channels;
  for (std::size_t i = 0; i < config_.channels.size(); ++i) {
    convs_.emplace_back("D.conv" + std::to_string(i), in, config_.channels[i], 3, true);
    in = config_.channels[i];
  }
  const int final_res = config_.resolution >> config_.channels.size();
  if (final_res < 1) throw UsageError("discriminator too deep for its resolution");
  fc_ = nn::Dense("D.fc", in * final_res * final_res, config_.hidden);
  out_ = nn::Dense("D.out", config_.hidden, 1);
  Rng rng = Rng(seed).fork("discriminator.init");
  for (auto& c : convs_) c.init(rng);
  fc_.init(rng);
  out_.init(rng);
}

Mat Discriminator::forward(const Tensor& input, Cache* cache) const { return forward_impl(input, cache, nullptr); }

Mat Discriminator::forward_impl(const Tensor& input, Cache* cache, const Cache* frozen) const {
  if (input.c != config_.image_channels || input.h != config_.resolution || input.w != config_.resolution) {
    throw UsageError("discriminator input dims mismatch");
  }
  Tensor x = input;
  if (cache != nullptr) {
    cache->convs.resize(convs_.size());
    cache->positive.resize(convs_.size());
    cache->conv_res.resize(convs_.size());
  }
  for (std::size_t i = 0; i < convs_.size(); ++i) {
    Tensor y = convs_[i].forward(x, cache != nullptr ? &cache->convs[i] : nullptr);
    std::vector<std::uint8_t> pos;
    if (frozen != nullptr) {
      pos = frozen->positive[i];
      nn::leaky_relu_backward_inplace(y.data, pos);
    } else {
      pos = nn::leaky_relu_inplace(y.data);
    }
    if (cache != nullptr) {
      cache->positive[i] = std::move(pos);
      cache->conv_res[i] = y.h;
    }
    x = nn::avgpool2x(y);
  }
  const int n = x.n;
  const int per = x.c * static_cast<int>(x.plane());
  Mat flat(per, n);
  for (int c = 0; c < x.c; ++c) {
    for (int s = 0; s < n; ++s) {
      const float* p = x.data.data() + x.offset(c, s);
      for (std::size_t i = 0; i < x.plane(); ++i) flat(c * static_cast<Eigen::Index>(x.plane()) + i, s) = p[i];
    }
  }
  Mat hidden = fc_.forward(flat);
  std::vector<std::uint8_t> hpos;
  if (frozen != nullptr) {
    hpos = frozen->hidden_positive;
    leaky_relu_mat_backward(hidden, hpos);
  } else {
    hpos = leaky_relu_mat(hidden);
  }
  Mat logits = out_.forward(hidden);
  if (cache != nullptr) {
    cache->flat = std::move(flat);
    cache->hidden = std::move(hidden);
    cache->hidden_positive = std::move(hpos);
  }
  return logits;
}

Tensor Discriminator::backward(const Cache& cache, const Mat& grad_logits, bool param_grads, bool input_grad) {
  Mat gh = out_.backward(cache.hidden, grad_logits, param_grads);
  leaky_relu_mat_backward(gh, cache.hidden_positive);
  const Mat gflat = fc_.backward(cache.flat, gh, param_grads);

  const int last_res = cache.conv_res.back() / 2;
  const int n = static_cast<int>(grad_logits.cols());
  Tensor g(n, convs_.back().out(), last_res, last_res);
  for (int c = 0; c < g.c; ++c) {
    for (int s = 0; s < n; ++s) {
      float* p = g.data.data() + g.offset(c, s);
      for (std::size_t i = 0; i < g.plane(); ++i) p[i] = gflat(c * static_cast<Eigen::Index>(g.plane()) + i, s);
    }
  }
  for (int i = static_cast<int>(convs_.size()) - 1; i >= 0; --i) {
    g = nn::avgpool2x_backward(g);
    nn::leaky_relu_backward_inplace(g.data, cache.positive[i]);
    const bool need_input = i > 0 || input_grad;
    g = convs_[i].backward(cache.convs[i], g, param_grads, need_input);
    if (!need_input) return {};
  }
  return g;
}

Tensor Discriminator::backprop(const Tensor& x, const Mat& coeffs, bool param_grads) {
  Cache cache;
  forward(x, &cache);
  return backward(cache, coeffs, param_grads, true);
}

void Discriminator::backprop_linearized(const Tensor& x, const Tensor& anchor, const Mat& coeffs) {
  if (x.n != anchor.n || x.data.size() != anchor.data.size()) throw UsageError("linearized backprop: dims mismatch");
  Cache pattern;
  forward(anchor, &pattern);
  Cache cache;
  forward_impl(x, &cache, &pattern);
  backward(cache, coeffs, true, false);
}

double Discriminator::logit(const Image& img) const { return forward(Tensor::from_images({&img}))(0, 0); }

std::vector<Tensor> Discriminator::features(const Tensor& input) const {
  std::vector<Tensor> out;
  Tensor x = input;
  for (const auto& conv : convs_) {
    Tensor y = conv.forward(x, nullptr);
    nn::leaky_relu_inplace(y.data);
    x = nn::avgpool2x(y);
    out.push_back(std::move(y));
  }
  return out;
}

nn::ParamRefs Discriminator::params() {
  nn::ParamRefs out;
  for (auto& c : convs_) {
    for (nn::Param* p : c.params()) out.push_back(p);
  }
  for (nn::Param* p : fc_.params()) out.push_back(p);
  for (nn::Param* p : out_.params()) out.push_back(p);
  return out;
}

std::vector<const nn::Param*> Discriminator::params() const {
  auto refs = const_cast<Discriminator*>(this)->params();
  return {refs.begin(), refs.end()};
}

// --- snapshots -----------------------------------------------------------------

std::uint64_t hash_params(const std::vector<const nn::Param*>& params) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const nn::Param* p : params) {
    h = fnv1a64(std::as_bytes(std::span(p->name.data(), p->name.size())), h);
    h = fnv1a64(std::as_bytes(std::span(p->shape)), h);
    h = fnv1a64(std::as_bytes(std::span(p->value)), h);
  }
  return h;
}

ParamSnapshot capture(const std::vector<const nn::Param*>& params) {
  ParamSnapshot snap;
  for (const nn::Param* p : params) {
    snap.names.push_back(p->name);
    snap.shapes.push_back(p->shape);
    snap.values.push_back(p->value);
  }
  snap.hash = hash_params(params);
  return snap;
}

void restore(const ParamSnapshot& snap, const nn::ParamRefs& params) {
  if (snap.names.size() != params.size()) throw UsageError("snapshot does not match architecture (parameter count)");
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (snap.names[i] != params[i]->name || snap.shapes[i] != params[i]->shape) {
      throw UsageError("snapshot does not match architecture at '" + params[i]->name + "'");
    }
  }
  // Verify the snapshot before touching the live parameters.
  std::vector<nn::Param> staged;
  staged.reserve(params.size());
  for (std::size_t i = 0; i < params.size(); ++i) {
    nn::Param p;
    p.name = snap.names[i];
    p.shape = snap.shapes[i];
    p.value = snap.values[i];
    staged.push_back(std::move(p));
  }
  std::vector<const nn::Param*> refs;
  for (const auto& p : staged) refs.push_back(&p);
  if (hash_params(refs) != snap.hash) throw UsageError("snapshot hash mismatch");
  for (std::size_t i = 0; i < params.size(); ++i) params[i]->value = snap.values[i];
}

std::string hash_hex(std::uint64_t hash) {
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << hash;
  return os.str();
}

// --- checkpoints ---------------------------------------------------------------

namespace {

constexpr char kMagic[8] = {'G', 'C', 'L', 'N', 'C', 'K', 'P', 'T'};

template <typename T>
void write_pod(std::ostream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::istream& in, const std::string& what) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw IoError("truncated checkpoint while reading " + what);
  return v;
}

struct NamedArray {
  std::string name;
  std::vector<int> shape;
  nn::FloatBuffer* values;
};

std::vector<NamedArray> checkpoint_arrays(Generator& g, Discriminator& d) {
  std::vector<NamedArray> arrays;
  for (nn::Param* p : g.params()) arrays.push_back({p->name, p->shape, &p->value});
  for (auto& [name, buf] : g.buffers()) arrays.push_back({name, {static_cast<int>(buf->size())}, buf});
  for (nn::Param* p : d.params()) arrays.push_back({p->name, p->shape, &p->value});
  return arrays;
}

nlohmann::json meta_to_json(const CheckpointMeta& m, std::uint64_t g_hash, std::uint64_t d_hash) {
  return {{"arch", m.arch},
          {"version", m.version},
          {"generator",
           {{"latent_dim", m.generator.latent_dim},
            {"mapping_layers", m.generator.mapping_layers},
            {"image_channels", m.generator.image_channels},
            {"channels", m.generator.channels},
            {"mapping_lr_mul", m.generator.mapping_lr_mul},
            {"layers", m.generator.layer_count()},
            {"resolution", m.generator.resolution()}}},
          {"discriminator",
           {{"image_channels", m.discriminator.image_channels},
            {"resolution", m.discriminator.resolution},
            {"channels", m.discriminator.channels},
            {"hidden", m.discriminator.hidden}}},
          {"gamma", m.gamma},
          {"seed", m.seed},
          {"train_steps", m.train_steps},
          {"generator_hash", hash_hex(g_hash)},
          {"discriminator_hash", hash_hex(d_hash)}};
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, Generator& g, Discriminator& d, const CheckpointMeta& meta) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write checkpoint " + path.string());
  out.write(kMagic, sizeof(kMagic));
  write_pod<std::uint32_t>(out, kCheckpointVersion);
  const auto arrays = checkpoint_arrays(g, d);
  write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(arrays.size()));
  for (const auto& a : arrays) {
    write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(a.name.size()));
    out.write(a.name.data(), static_cast<std::streamsize>(a.name.size()));
    write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(a.shape.size()));
    for (int dim : a.shape) write_pod<std::int32_t>(out, dim);
    write_pod<std::uint64_t>(out, a.values->size());
    out.write(reinterpret_cast<const char*>(a.values->data()), static_cast<std::streamsize>(a.values->size() * sizeof(float)));
  }
  if (!out) throw IoError("failed writing checkpoint " + path.string());

  std::ofstream side(path.string() + ".json");
  if (!side) throw IoError("cannot write checkpoint metadata for " + path.string());
  side << meta_to_json(meta, hash_params(std::as_const(g).params()), hash_params(std::as_const(d).params())).dump(2)
       << "\n";
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream side(path.string() + ".json");
  if (!side) throw IoError("missing checkpoint metadata " + path.string() + ".json");
  nlohmann::json j;
  try {
    side >> j;
  } catch (const nlohmann::json::exception& e) {
    throw IoError("malformed checkpoint metadata: " + std::string(e.what()));
  }

  CheckpointMeta meta;
  std::string g_hash, d_hash;
  try {
    meta.arch = j.at("arch").get<std::string>();
    meta.version = j.at("version").get<int>();
    const auto& gj = j.at("generator");
    meta.generator.latent_dim = gj.at("latent_dim").get<int>();
    meta.generator.mapping_layers = gj.at("mapping_layers").get<int>();
    meta.generator.image_channels = gj.at("image_channels").get<int>();
    meta.generator.channels = gj.at("channels").get<std::vector<int>>();
    meta.generator.mapping_lr_mul = gj.at("mapping_lr_mul").get<float>();
    const auto& dj = j.at("discriminator");
    meta.discriminator.image_channels = dj.at("image_channels").get<int>();
    meta.discriminator.resolution = dj.at("resolution").get<int>();
    meta.discriminator.channels = dj.at("channels").get<std::vector<int>>();
    meta.discriminator.hidden = dj.at("hidden").get<int>();
    meta.gamma = j.at("gamma").get<double>();
    meta.seed = j.at("seed").get<std::uint64_t>();
    meta.train_steps = j.at("train_steps").get<std::int64_t>();
    g_hash = j.at("generator_hash").get<std::string>();
    d_hash = j.at("discriminator_hash").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw IoError("incomplete checkpoint metadata: " + std::string(e.what()));
  }
  if (meta.version != kCheckpointVersion) {
    throw IoError("checkpoint metadata version " + std::to_string(meta.version) + " unsupported");
  }
  if (meta.arch != CheckpointMeta{}.arch) throw IoError("unknown checkpoint architecture '" + meta.arch + "'");

  Checkpoint ck{meta, Generator(meta.generator, meta.seed), Discriminator(meta.discriminator, meta.seed)};

  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read checkpoint " + path.string());
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) throw IoError("not a gclone checkpoint: " + path.string());
  const auto version = read_pod<std::uint32_t>(in, "version");
  if (version != kCheckpointVersion) throw IoError("checkpoint version " + std::to_string(version) + " unsupported");
  const auto count = read_pod<std::uint32_t>(in, "array count");

  auto arrays = checkpoint_arrays(ck.generator, ck.discriminator);
  if (count != arrays.size()) throw IoError("checkpoint array count does not match architecture");
  for (auto& a : arrays) {
    const auto name_len = read_pod<std::uint32_t>(in, "name length");
    if (name_len > 4096) throw IoError("corrupt checkpoint (name length)");
    std::string name(name_len, '\0');
    in.read(name.data(), name_len);
    if (!in) throw IoError("truncated checkpoint while reading name");
    if (name != a.name) throw IoError("checkpoint array '" + name + "' where '" + a.name + "' expected");
    const auto ndims = read_pod<std::uint32_t>(in, "rank");
    std::vector<int> shape;
    for (std::uint32_t k = 0; k < ndims && k < 16; ++k) shape.push_back(read_pod<std::int32_t>(in, "shape"));
    if (shape != a.shape) throw IoError("checkpoint shape mismatch for '" + name + "'");
    const auto n = read_pod<std::uint64_t>(in, "size");
    if (n != a.values->size()) throw IoError("checkpoint size mismatch for '" + name + "'");
    in.read(reinterpret_cast<char*>(a.values->data()), static_cast<std::streamsize>(n * sizeof(float)));
    if (!in) throw IoError("truncated checkpoint while reading '" + name + "'");
  }
  if (hash_hex(hash_params(std::as_const(ck.generator).params())) != g_hash ||
      hash_hex(hash_params(std::as_const(ck.discriminator).params())) != d_hash) {
    throw IoError("checkpoint content does not match metadata hashes");
  }
  return ck;
}

// --- sampler / data -----------------------------------------------------------

TrainSampler::TrainSampler(std::vector<Image> images, Rng rng)
    : images_(std::move(images)), data_rng_(rng.fork("sampler.data")), prior_rng_(rng.fork("sampler.prior")) {
  if (images_.empty()) throw UsageError("training set is empty");
  for (const auto& img : images_) {
    img.validate();
    if (!img.same_shape(images_.front())) throw UsageError("training images have mixed dims");
  }
}

Tensor TrainSampler::real_batch(int batch) {
  if (batch < 1) throw UsageError("batch must be >= 1");
  std::vector<const Image*> picks;
  for (int i = 0; i < batch; ++i) picks.push_back(&images_[data_rng_.below(images_.size())]);
  return Tensor::from_images(picks);
}

Mat TrainSampler::prior_batch(int batch, int dim) {
  Mat z(dim, batch);
  for (Eigen::Index i = 0; i < z.size(); ++i) z.data()[i] = static_cast<float>(prior_rng_.normal());
  return z;
}

std::vector<Image> make_synthetic_dataset(int count, std::uint64_t seed, int resolution) {
  if (count < 1) throw UsageError("dataset size must be >= 1");
  Rng rng = Rng(seed).fork("synthetic-dataset");
  std::vector<Image> out;
  out.reserve(count);
  auto color = [&rng] {
    std::array<float, 3> c{};
    for (float& v : c) v = static_cast<float>(rng.uniform(-0.8, 0.8));
    return c;
  };
  const float r = static_cast<float>(resolution);
  for (int i = 0; i < count; ++i) {
    Image img(resolution, resolution, 3);
    const auto c1 = color();
    const auto c2 = color();
    const auto c3 = color();
    if (rng.uniform() < 0.5) {
      const float cx = static_cast<float>(rng.uniform(0.25, 0.75)) * r;
      const float cy = static_cast<float>(rng.uniform(0.25, 0.75)) * r;
      const float rad = static_cast<float>(rng.uniform(0.15, 0.3)) * r;
      for (int y = 0; y < resolution; ++y) {
        for (int x = 0; x < resolution; ++x) {
          const float t = (static_cast<float>(y) + 0.5f) / r;
          const float dist = std::hypot(static_cast<float>(x) + 0.5f - cx, static_cast<float>(y) + 0.5f - cy);
          const float inside = std::clamp((rad - dist) / 1.5f + 0.5f, 0.0f, 1.0f);
          for (int c = 0; c < 3; ++c) {
            const float bg = c1[c] * (1.0f - t) + c2[c] * t;
            img.at(c, y, x) = bg * (1.0f - inside) + c3[c] * inside;
          }
        }
      }
    } else {
      const double period = rng.uniform(6.0, 12.0);
      const double phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
      for (int y = 0; y < resolution; ++y) {
        const float t = static_cast<float>(0.5 + 0.5 * std::sin(2.0 * std::numbers::pi * y / period + phase));
        for (int x = 0; x < resolution; ++x) {
          for (int c = 0; c < 3; ++c) img.at(c, y, x) = c1[c] * (1.0f - t) + c2[c] * t;
        }
      }
    }
    out.push_back(std::move(img));
  }
  return out;
}

}  // namespace gclone
