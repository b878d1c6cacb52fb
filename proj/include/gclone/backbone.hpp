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
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "gclone/core.hpp"
#include "gclone/nn.hpp"

namespace gclone {

enum class LatentSpace { Z, W, WPlus };

std::string to_string(LatentSpace space);
LatentSpace parse_latent_space(const std::string& text);

/// A latent code in Z, W (one q-vector) or W+ (one q-vector per synthesis
/// layer).
struct LatentCode {
  LatentSpace space = LatentSpace::W;
  int layers = 1;
  int dim = 0;
  std::vector<float> data;  // [layer][coordinate]

  static LatentCode z(std::vector<float> v);
  static LatentCode w(std::vector<float> v);
  static LatentCode wplus(int layers, int dim, std::vector<float> v);

  std::span<float> layer(int l) { return {data.data() + static_cast<std::size_t>(l) * dim, static_cast<std::size_t>(dim)}; }
  std::span<const float> layer(int l) const {
    return {data.data() + static_cast<std::size_t>(l) * dim, static_cast<std::size_t>(dim)};
  }
  /// W -> W+ by repeating the vector for every layer.
  LatentCode broadcast(int layer_count) const;
  void validate() const;
  bool operator==(const LatentCode&) const = default;
};

struct GeneratorConfig {
  int latent_dim = 64;
  int mapping_layers = 3;
  int image_channels = 3;
  // One entry per synthesis stage; stage 0 runs at 4x4, each later stage
  // doubles the resolution. Stage s is modulated by W+ slot s.
  std::vector<int> channels = {32, 32, 16, 16};
  float mapping_lr_mul = 0.01f;

  int resolution() const { return 4 << (static_cast<int>(channels.size()) - 1); }
  int layer_count() const { return static_cast<int>(channels.size()); }
};

/// Modulated 3x3 convolution with demodulation, frozen per-pixel noise,
/// bias and leaky ReLU.
class StyledConv {
 public:
  struct Cache {
    nn::Tensor input;
    nn::Mat style;      // in x N
    nn::Conv2d::Cache conv;
    nn::Tensor conv_out;  // before demodulation
    nn::Mat demod;      // out x N
    std::vector<std::uint8_t> positive;
  };

  StyledConv() = default;
  StyledConv(const std::string& name, int latent_dim, int in, int out, int resolution);

  void init(Rng& rng, Rng& noise_rng);
  nn::Tensor forward(const nn::Tensor& x, const nn::Mat& w, Cache* cache) const;
  /// Returns d/dx; adds d/dw into grad_w.
  nn::Tensor backward(const Cache& cache, const nn::Mat& w, nn::Tensor grad_out, nn::Mat& grad_w, bool param_grads);

  nn::ParamRefs params();
  nn::FloatBuffer& noise() { return noise_; }
  const nn::FloatBuffer& noise() const { return noise_; }

 private:
  nn::Dense affine_;
  nn::Conv2d conv_;
  nn::Param noise_strength_;
  nn::Param bias_;
  nn::FloatBuffer noise_;  // resolution x resolution, frozen
  int resolution_ = 0;
};

/// Mapping network (Z -> W) plus style-modulated synthesis network
/// (W+ -> image in [-1, 1]).
class Generator {
 public:
  struct MappingCache {
    std::vector<nn::Mat> inputs;  // input of each dense layer
    std::vector<std::vector<std::uint8_t>> positive;
  };
  struct SynthesisCache {
    std::vector<StyledConv::Cache> stages;
    nn::Tensor rgb_input;
    nn::Mat rgb_style;
    nn::Conv2d::Cache rgb_conv;
    nn::Tensor output;  // after tanh
  };

  Generator() = default;
  Generator(GeneratorConfig config, std::uint64_t seed);

  const GeneratorConfig& config() const { return config_; }
  int layer_count() const { return config_.layer_count(); }
  int latent_dim() const { return config_.latent_dim; }
  int resolution() const { return config_.resolution(); }
  int image_channels() const { return config_.image_channels; }
  std::uint64_t seed() const { return seed_; }

  /// z: q x N -> w: q x N.
  nn::Mat map(const nn::Mat& z, MappingCache* cache = nullptr) const;
  void map_backward(const MappingCache& cache, const nn::Mat& grad_w);

  /// styles: one q x N matrix per layer.
  nn::Tensor synthesize(const std::vector<nn::Mat>& styles, SynthesisCache* cache = nullptr) const;
  /// Returns d/d(styles); accumulates parameter gradients when requested.
  std::vector<nn::Mat> synthesize_backward(const SynthesisCache& cache, const std::vector<nn::Mat>& styles,
                                           const nn::Tensor& grad_image, bool param_grads);

  /// Z codes route through mapping; W codes are broadcast to every layer.
  Image generate(const LatentCode& code) const;
  /// Per-layer style matrices (batch of one) for a code.
  std::vector<nn::Mat> styles_for(const LatentCode& code) const;

  nn::ParamRefs params();
  nn::ParamRefs mapping_params();
  std::vector<const nn::Param*> params() const;
  /// Frozen noise buffers, serialized next to the parameters.
  std::vector<std::pair<std::string, nn::FloatBuffer*>> buffers();

 private:
  GeneratorConfig config_;
  std::uint64_t seed_ = 0;
  std::vector<nn::Dense> mapping_;
  nn::Param const_input_;
  std::vector<StyledConv> stages_;
  nn::Dense rgb_affine_;
  nn::Conv2d rgb_conv_;
};

/// A model producing one differentiable scalar logit per sample.
class LogitModel {
 public:
  virtual ~LogitModel() = default;
  /// 1 x N logits.
  virtual nn::Mat logits(const nn::Tensor& x) const = 0;
  /// Gradient of sum_i coeffs(i) * logit_i w.r.t. x; accumulates parameter
  /// gradients when param_grads is set.
  virtual nn::Tensor backprop(const nn::Tensor& x, const nn::Mat& coeffs, bool param_grads) = 0;
  /// Parameter gradients of sum_i coeffs(i) * logit_i at x, with every
  /// activation kink held at the pattern it has at `anchor`. Models without
  /// kinks can keep the default.
  virtual void backprop_linearized(const nn::Tensor& x, const nn::Tensor& anchor, const nn::Mat& coeffs) {
    (void)anchor;
    backprop(x, coeffs, true);
  }
};

struct DiscriminatorConfig {
  int image_channels = 3;
  int resolution = 32;
  std::vector<int> channels = {16, 32, 32};
  int hidden = 64;
};

class Discriminator : public LogitModel {
 public:
  struct Cache {
    std::vector<nn::Conv2d::Cache> convs;
    std::vector<std::vector<std::uint8_t>> positive;
    std::vector<int> conv_res;
    nn::Mat flat;
    nn::Mat hidden;
    std::vector<std::uint8_t> hidden_positive;
  };

  Discriminator() = default;
  Discriminator(DiscriminatorConfig config, std::uint64_t seed);

  const DiscriminatorConfig& config() const { return config_; }

  /// Logits, 1 x N.
  nn::Mat forward(const nn::Tensor& x, Cache* cache = nullptr) const;
  /// Returns d/dx when input_grad is set.
  nn::Tensor backward(const Cache& cache, const nn::Mat& grad_logits, bool param_grads, bool input_grad);
  double logit(const Image& img) const;

  nn::Mat logits(const nn::Tensor& x) const override { return forward(x); }
  nn::Tensor backprop(const nn::Tensor& x, const nn::Mat& coeffs, bool param_grads) override;
  void backprop_linearized(const nn::Tensor& x, const nn::Tensor& anchor, const nn::Mat& coeffs) override;

  /// Post-activation outputs of the three convolution blocks.
  std::vector<nn::Tensor> features(const nn::Tensor& x) const;

  nn::ParamRefs params();
  std::vector<const nn::Param*> params() const;

 private:
  // `frozen` supplies the activation pattern instead of the signs of x.
  nn::Mat forward_impl(const nn::Tensor& x, Cache* cache, const Cache* frozen) const;

  DiscriminatorConfig config_;
  std::vector<nn::Conv2d> convs_;
  nn::Dense fc_;
  nn::Dense out_;
};

// --- snapshots and checkpoints -----------------------------------------------

/// Exact copy of a parameter set with a content hash over names and values.
struct ParamSnapshot {
  std::vector<std::string> names;
  std::vector<std::vector<int>> shapes;
  std::vector<nn::FloatBuffer> values;
  std::uint64_t hash = 0;
};

std::uint64_t hash_params(const std::vector<const nn::Param*>& params);
ParamSnapshot capture(const std::vector<const nn::Param*>& params);
/// Throws UsageError when names or shapes disagree, or the snapshot hash
/// does not match its contents.
void restore(const ParamSnapshot& snap, const nn::ParamRefs& params);

inline ParamSnapshot snapshot(const Generator& g) { return capture(g.params()); }
inline ParamSnapshot snapshot(const Discriminator& d) { return capture(d.params()); }
inline void restore(Generator& g, const ParamSnapshot& s) { restore(s, g.params()); }
inline void restore(Discriminator& d, const ParamSnapshot& s) { restore(s, d.params()); }

std::string hash_hex(std::uint64_t hash);

struct CheckpointMeta {
  std::string arch = "gclone-toy-stylegan";
  int version = 1;
  GeneratorConfig generator;
  DiscriminatorConfig discriminator;
  double gamma = 10.0;
  std::uint64_t seed = 0;
  std::int64_t train_steps = 0;
};

struct Checkpoint {
  CheckpointMeta meta;
  Generator generator;
  Discriminator discriminator;
};

constexpr int kCheckpointVersion = 1;

/// Writes `path` (binary parameter container) and `path + ".json"` (metadata).
void save_checkpoint(const std::filesystem::path& path, Generator& g, Discriminator& d, const CheckpointMeta& meta);
Checkpoint load_checkpoint(const std::filesystem::path& path);

// --- training data -----------------------------------------------------------

/// Real images plus the standard-normal prior over Z.
class TrainSampler {
 public:
  TrainSampler(std::vector<Image> images, Rng rng);

  std::size_t size() const { return images_.size(); }
  const std::vector<Image>& images() const { return images_; }
  nn::Tensor real_batch(int batch);
  nn::Mat prior_batch(int batch, int dim);

 private:
  std::vector<Image> images_;
  Rng data_rng_;
  Rng prior_rng_;
};

/// Two-mode synthetic 32x32 RGB dataset: soft discs on a vertical gradient
/// and horizontal stripes with random phase and colors.
std::vector<Image> make_synthetic_dataset(int count, std::uint64_t seed, int resolution = 32);

struct TrainLogRow {
  std::int64_t step = 0;
  double g_loss = 0.0;
  double d_loss = 0.0;
  double r1 = 0.0;
};

struct ToyTrainOptions {
  int steps = 5000;
  int batch = 32;
  double gamma = 10.0;
  float lr = 2e-3f;
  int r1_interval = 16;
  int log_every = 50;
};

struct TrainedGan {
  Generator generator;
  Discriminator discriminator;
  std::vector<TrainLogRow> log;
};

TrainedGan train_toy_gan(TrainSampler& sampler, const ToyTrainOptions& opts, const RunConfig& cfg,
                         const GeneratorConfig& gcfg = {}, const DiscriminatorConfig& dcfg = {},
                         const std::function<void(const TrainLogRow&)>& on_log = {});

}  // namespace gclone
