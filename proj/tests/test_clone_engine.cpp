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


#include <doctest.h>

#include <cmath>
#include <sstream>

#include "gclone/clone_engine.hpp"
#include "gclone/projector.hpp"

using namespace gclone;
using nn::Mat;

namespace {

GeneratorConfig small_gen() {
  GeneratorConfig c;
  c.latent_dim = 16;
  c.channels = {8, 8, 4, 4};
  return c;
}

DiscriminatorConfig small_disc() {
  DiscriminatorConfig c;
  c.channels = {4, 8, 8};
  c.hidden = 16;
  return c;
}

LatentCode mapped(const Generator& g, std::uint64_t seed) {
  std::vector<float> z(g.latent_dim());
  Rng(seed).fill_normal(z);
  const Mat w = g.map(Eigen::Map<const Mat>(z.data(), g.latent_dim(), 1));
  return LatentCode::w(std::vector<float>(w.data(), w.data() + w.size()));
}

struct Rig {
  Generator g{small_gen(), 1};
  Discriminator d{small_disc(), 2};
  TrainSampler sampler{make_synthetic_dataset(16, 3), Rng(4)};
};

std::string trace_text(const CloneResult& r) {
  std::ostringstream os;
  write_loss_trace(os, r.trace);
  return os.str();
}

}  // namespace

TEST_CASE("on-manifold query converges immediately") {
  Rig rig;
  const LatentCode w0 = mapped(rig.g, 5);
  const Image x = rig.g.generate(w0);
  CloneConfig cfg;
  cfg.p = 0.125;
  cfg.max_iters = 50;
  const CloneResult r = clone(x, rig.g, rig.d, rig.sampler, [&](const Image&) { return w0; }, cfg);
  CHECK(r.converged);
  CHECK(r.stopped_at <= 5);
  CHECK(r.trace.back().recon < cfg.epsilon);
  // x* comes from the generator after that iteration's update.
  CHECK(r.final_recon == doctest::Approx(lap_loss(x, r.x_star, 2)).epsilon(1e-9));
  CHECK(r.code == w0);
  // One optimizer step at most separates G+ from G.
  CHECK(drift(r.g_pre, rig.g, {w0}) < 0.05);
}

TEST_CASE("clone runs are reproducible and budget-monotone") {
  const Image x = make_synthetic_dataset(1, 20)[0];
  CloneConfig cfg;
  cfg.p = 0.5;
  cfg.seed = 9;
  cfg.max_iters = 40;

  auto run = [&](std::int64_t iters) {
    Rig rig;
    CloneConfig c = cfg;
    c.max_iters = iters;
    const LatentCode h = mapped(rig.g, 6).broadcast(rig.g.layer_count());
    return clone(x, rig.g, rig.d, rig.sampler, [&](const Image&) { return h; }, c);
  };
  const CloneResult a = run(40), b = run(40), shorter = run(20);
  CHECK(trace_text(a) == trace_text(b));
  CHECK(a.x_star == b.x_star);
  CHECK(a.g_post_hash == b.g_post_hash);
  CHECK(a.d_post_hash == b.d_post_hash);
  CHECK(a.stopped_at == 40);
  CHECK_FALSE(a.converged);
  REQUIRE(shorter.trace.size() == 20);
  for (std::size_t i = 0; i < 20; ++i) CHECK(loss_report_csv_row(shorter.trace[i]) == loss_report_csv_row(a.trace[i]));

  int gated = 0;
  for (const auto& row : a.trace) {
    gated += row.gated;
    CHECK(row.gated == row.adv_local_g.has_value());
  }
  CHECK(gated > 0);
  CHECK(gated < 40);
  // The latent stays frozen.
  Rig rig;
  CHECK(a.code == mapped(rig.g, 6).broadcast(rig.g.layer_count()));
}

TEST_CASE("numeric failure rolls back") {
  Rig rig;
  const auto g_hash = hash_params(std::as_const(rig.g).params());
  const auto d_hash = hash_params(std::as_const(rig.d).params());
  const Image x = make_synthetic_dataset(1, 21)[0];
  CloneConfig cfg;
  cfg.p = 1.0;
  cfg.lr_g = 1e30;
  cfg.lr_d = 1e30;
  cfg.max_iters = 50;
  const LatentCode h = mapped(rig.g, 7);
  CHECK_THROWS_AS(clone(x, rig.g, rig.d, rig.sampler, [&](const Image&) { return h; }, cfg), NumericError);
  CHECK(hash_params(std::as_const(rig.g).params()) == g_hash);
  CHECK(hash_params(std::as_const(rig.d).params()) == d_hash);
}

TEST_CASE("drift") {
  Rig rig;
  const ParamSnapshot pre = snapshot(rig.g);
  std::vector<LatentCode> codes;
  for (std::uint64_t s = 0; s < 4; ++s) codes.push_back(mapped(rig.g, 30 + s));
  CHECK(drift(pre, rig.g, codes) == 0.0);

  for (nn::Param* p : rig.g.params()) {
    for (float& v : p->value) v *= 1.01f;
  }
  const double forward = drift(pre, rig.g, codes);
  CHECK(forward > 0.0);
  std::vector<LatentCode> reversed(codes.rbegin(), codes.rend());
  CHECK(drift(pre, rig.g, reversed) == doctest::Approx(forward).epsilon(1e-12));

  // Direct per-pixel channel-L2 recomputation.
  Generator before(small_gen(), 1);
  double total = 0.0;
  for (const auto& c : codes) {
    const Image a = before.generate(c), b = rig.g.generate(c);
    double acc = 0.0;
    for (int y = 0; y < a.height; ++y) {
      for (int x = 0; x < a.width; ++x) {
        double sq = 0.0;
        for (int ch = 0; ch < a.channels; ++ch) sq += std::pow(a.at(ch, y, x) - b.at(ch, y, x), 2);
        acc += std::sqrt(sq);
      }
    }
    total += acc / (a.height * a.width);
  }
  CHECK(forward == doctest::Approx(total / codes.size()).epsilon(1e-6));

  restore(rig.g, pre);
  CHECK(drift(pre, rig.g, codes) == 0.0);
}

TEST_CASE("clone config") {
  CloneConfig c;
  CHECK(c.p == 0.25);
  CHECK(c.lambda == 10.0);
  CHECK(c.gamma == 10.0);
  CHECK_NOTHROW(c.validate());

  auto bad = c;
  bad.p = 0.0;
  CHECK_THROWS_AS(bad.validate(), UsageError);
  bad = c;
  bad.epsilon = 0.0;
  CHECK_THROWS_AS(bad.validate(), UsageError);
  bad = c;
  bad.max_iters = 0;
  CHECK_THROWS_AS(bad.validate(), UsageError);

  const auto kv = KeyValueConfig::parse("p = 1/8\nlambda = 20\nmax_iters = 7\ncrop = 24x32\nseed = 5\n");
  const CloneConfig parsed = CloneConfig::from_kv(kv, 32, 32);
  CHECK(parsed.p == 0.125);
  CHECK(parsed.lambda == 20.0);
  CHECK(parsed.max_iters == 7);
  CHECK(parsed.seed == 5);
  REQUIRE(parsed.mask.has_value());
  CHECK(parsed.mask->at(3, 16) == 0.0f);
  CHECK(parsed.mask->at(4, 16) == 1.0f);
  CHECK(parsed.mask->at(27, 16) == 1.0f);
  CHECK(parsed.mask->at(28, 16) == 0.0f);

  const CloneConfig round = CloneConfig::from_kv(parsed.to_kv(), 32, 32);
  CHECK(round.p == parsed.p);
  CHECK(round.lambda == parsed.lambda);
  CHECK(round.lr_g == parsed.lr_g);
  CHECK_THROWS_AS(CloneConfig::from_kv(KeyValueConfig::parse("crop = 40x8\n"), 32, 32), UsageError);
  CHECK_THROWS_AS(CloneConfig::from_kv(KeyValueConfig::parse("crop = big\n"), 32, 32), UsageError);
}
