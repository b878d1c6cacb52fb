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

LatentCode mapped(const Generator& g, std::uint64_t seed) {
  std::vector<float> z(g.latent_dim());
  Rng(seed).fill_normal(z);
  const Mat w = g.map(Eigen::Map<const Mat>(z.data(), g.latent_dim(), 1));
  return LatentCode::w(std::vector<float>(w.data(), w.data() + w.size()));
}

}  // namespace

TEST_CASE("mean latent") {
  const Generator g(small_gen(), 1);
  // n = 1 reproduces mapping of the first prior draw.
  std::vector<float> z(16);
  Rng(5).fork("mean_latent").fill_normal(z);
  const Mat w = g.map(Eigen::Map<const Mat>(z.data(), 16, 1));
  const LatentCode one = mean_latent(g, 1, 5);
  for (int i = 0; i < 16; ++i) CHECK(one.data[i] == doctest::Approx(w(i, 0)).epsilon(1e-6));

  CHECK(mean_latent(g, 3000, 7) == mean_latent(g, 3000, 7));
  CHECK_THROWS_AS(mean_latent(g, 0, 1), UsageError);

  // Two seeds agree within 5 standard errors of the difference.
  const int n = 10000;
  const LatentCode a = mean_latent(g, n, 1), b = mean_latent(g, n, 2);
  Mat zs(16, 2000);
  Rng rng(3);
  rng.fill_normal({zs.data(), static_cast<std::size_t>(zs.size())});
  const Mat ws = g.map(zs);
  for (int i = 0; i < 16; ++i) {
    const double mu = ws.row(i).cast<double>().mean();
    const double var = (ws.row(i).cast<double>().array() - mu).square().sum() / (ws.cols() - 1);
    CHECK(std::abs(a.data[i] - b.data[i]) < 5.0 * std::sqrt(2.0 * var / n));
  }
}

TEST_CASE("projection from the true code stays put") {
  const Generator g(small_gen(), 2);
  const LatentCode w0 = mapped(g, 4);
  const Image x = g.generate(w0);
  ProjectOptions o;
  o.steps = 5;
  o.init = w0;
  o.space = LatentSpace::W;
  const ProjectResult r = project(x, g, o);
  CHECK(r.trace.front().loss < 1e-6);
  CHECK(r.code == w0);
  CHECK(r.image == x);
}

TEST_CASE("projection recovers an on-manifold target") {
  const Generator g(small_gen(), 3);
  const auto before = hash_params(g.params());
  const Image x = g.generate(mapped(g, 5).broadcast(g.layer_count()));
  ProjectOptions o;
  o.mean_samples = 2000;
  o.seed = 1;
  const ProjectResult r = project(x, g, o);
  CHECK(r.loss < 0.1 * r.trace.front().loss);
  CHECK(hash_params(g.params()) == before);
  CHECK(r.image == g.generate(r.code));
  CHECK(r.loss == doctest::Approx(lap_loss(x, r.image, default_pyramid_levels(32, 32))).epsilon(1e-6));

  // Best-so-far bookkeeping.
  for (std::size_t i = 0; i < r.trace.size(); ++i) {
    CHECK(r.loss <= r.trace[i].best);
    CHECK(r.trace[i].best <= r.trace[i].loss);
    if (i > 0) CHECK(r.trace[i].best <= r.trace[i - 1].best);
  }

  // Same inputs, same answer.
  const ProjectResult again = project(x, g, o);
  CHECK(again.code == r.code);

  // Off-manifold targets keep a floor above the on-manifold residual.
  const Image stripes = make_synthetic_dataset(2, 9)[1];
  const ProjectResult off = project(stripes, g, o);
  CHECK(off.loss > 0.0);
  CHECK(off.loss > r.loss);
}

TEST_CASE("W+ does at least as well as W") {
  const Generator g(small_gen(), 6);
  const Image x = make_synthetic_dataset(1, 10)[0];
  ProjectOptions o;
  o.mean_samples = 2000;
  o.steps = 300;
  o.space = LatentSpace::W;
  const double w_loss = project(x, g, o).loss;
  o.space = LatentSpace::WPlus;
  const double wp_loss = project(x, g, o).loss;
  CHECK(wp_loss <= w_loss + 1e-6);
}

TEST_CASE("projection argument checks") {
  const Generator g(small_gen(), 7);
  ProjectOptions o;
  o.steps = 0;
  CHECK_THROWS_AS(project(Image(32, 32, 3), g, o), UsageError);
  o.steps = 1;
  CHECK_THROWS_AS(project(Image(16, 16, 3), g, o), UsageError);
  o.space = LatentSpace::Z;
  CHECK_THROWS_AS(project(Image(32, 32, 3), g, o), UsageError);
}
