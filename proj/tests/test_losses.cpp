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

#include "gclone/losses.hpp"

using namespace gclone;
using nn::Mat;
using nn::Tensor;

namespace {

double sp(double x) { return std::log1p(std::exp(x)); }

// logit_i = <w, x_i>; parameter gradients accumulate into w.
class LinearD : public LogitModel {
 public:
  explicit LinearD(std::size_t dim, std::uint64_t seed) : w("w", {static_cast<int>(dim)}) {
    Rng rng(seed);
    rng.fill_normal(w.value);
  }
  Mat logits(const Tensor& x) const override {
    Mat out(1, x.n);
    for (int s = 0; s < x.n; ++s) {
      double acc = 0.0;
      const Tensor one = x.sample(s);
      for (std::size_t i = 0; i < one.data.size(); ++i) acc += static_cast<double>(w.value[i]) * one.data[i];
      out(0, s) = static_cast<float>(acc);
    }
    return out;
  }
  Tensor backprop(const Tensor& x, const Mat& coeffs, bool param_grads) override {
    Tensor g(x.n, x.c, x.h, x.w);
    for (int s = 0; s < x.n; ++s) {
      const Tensor one = x.sample(s);
      std::size_t i = 0;
      for (int c = 0; c < x.c; ++c) {
        for (int y = 0; y < x.h; ++y) {
          for (int xx = 0; xx < x.w; ++xx, ++i) {
            g.at(c, s, y, xx) = coeffs(0, s) * w.value[i];
            if (param_grads) w.grad[i] += coeffs(0, s) * one.data[i];
          }
        }
      }
    }
    return g;
  }
  nn::Param w;
};

class ZeroD : public LogitModel {
 public:
  Mat logits(const Tensor& x) const override { return Mat::Zero(1, x.n); }
  Tensor backprop(const Tensor& x, const Mat&, bool) override { return Tensor(x.n, x.c, x.h, x.w); }
};

Tensor random_batch(int n, int c, int h, int w, std::uint64_t seed) {
  Tensor t(n, c, h, w);
  Rng rng(seed);
  for (float& v : t.data) v = static_cast<float>(rng.uniform(-1.0, 1.0));
  return t;
}

}  // namespace

TEST_CASE("adversarial terms at zero logits") {
  const AdvTerms t = adv_local_from_logits(0.0, 0.0);
  CHECK(t.d_term == doctest::Approx(2.0 * std::log(2.0)).epsilon(1e-12));
  CHECK(t.d_term == doctest::Approx(1.3863).epsilon(1e-4));
  CHECK(t.g_term == doctest::Approx(std::log(2.0)).epsilon(1e-12));
  CHECK(adv_local_from_logits(0.0, 0.0, AdversarialConvention::Minimax).g_term ==
        doctest::Approx(-std::log(2.0)).epsilon(1e-12));

  const Image img(8, 8, 3);
  ZeroD d;
  const AdvTerms via_model = adv_local(d, img, img);
  CHECK(via_model.d_term == t.d_term);
  CHECK(via_model.g_term == t.g_term);
}

TEST_CASE("perfect discriminator limit") {
  CHECK(adv_local_from_logits(60.0, -60.0).d_term < 1e-20);
  CHECK(std::isfinite(adv_local_from_logits(700.0, -700.0).d_term));
  CHECK_THROWS_AS(adv_local_from_logits(std::nan(""), 0.0), NumericError);
}

TEST_CASE("adversarial terms match scalar formulas") {
  Rng rng(1);
  for (int i = 0; i < 50; ++i) {
    const double q = rng.uniform(-6, 6), s = rng.uniform(-6, 6);
    const AdvTerms t = adv_local_from_logits(q, s);
    CHECK(t.d_term == doctest::Approx(sp(-q) + sp(s)).epsilon(1e-10));
    CHECK(t.g_term == doctest::Approx(sp(-s)).epsilon(1e-10));
    const double mm = adv_local_from_logits(q, s, AdversarialConvention::Minimax).g_term;
    CHECK(mm == doctest::Approx(std::log(1.0 - 1.0 / (1.0 + std::exp(-s)))).epsilon(1e-9));

    // Derivatives by central difference.
    const double h = 1e-5;
    double dg = 0, dr = 0, df = 0;
    generator_adv_loss(s, AdversarialConvention::NonSaturating, &dg);
    discriminator_adv_loss(q, s, &dr, &df);
    CHECK(dg == doctest::Approx((sp(-(s + h)) - sp(-(s - h))) / (2 * h)).epsilon(1e-6));
    CHECK(dr == doctest::Approx((sp(-(q + h)) - sp(-(q - h))) / (2 * h)).epsilon(1e-6));
    CHECK(df == doctest::Approx((sp(s + h) - sp(s - h)) / (2 * h)).epsilon(1e-6));
    double dm = 0;
    generator_adv_loss(s, AdversarialConvention::Minimax, &dm);
    CHECK(dm == doctest::Approx((-sp(s + h) + sp(s - h)) / (2 * h)).epsilon(1e-6));
  }
}

TEST_CASE("global loss") {
  GeneratorConfig gc;
  gc.latent_dim = 8;
  gc.channels = {4, 4, 3, 3};
  const Generator g(gc, 3);
  ZeroD zero;
  Rng rng(4);
  Mat z(8, 5);
  for (Eigen::Index i = 0; i < z.size(); ++i) z.data()[i] = static_cast<float>(rng.normal());
  const AdvTerms t = global_loss(zero, g, random_batch(5, 3, 32, 32, 5), z);
  CHECK(t.g_term == doctest::Approx(std::log(2.0)).epsilon(1e-12));
  CHECK(t.d_term == doctest::Approx(2.0 * std::log(2.0)).epsilon(1e-12));

  // A single pair matches the local form; duplicating it changes nothing.
  Mat real(1, 1), fake(1, 1);
  real << 0.7f;
  fake << -1.3f;
  const AdvTerms one = global_terms_from_logits(real, fake);
  const AdvTerms local = adv_local_from_logits(0.7f, -1.3f);
  CHECK(one.g_term == doctest::Approx(local.g_term).epsilon(1e-12));
  CHECK(one.d_term == doctest::Approx(local.d_term).epsilon(1e-12));
  Mat real2(1, 2), fake2(1, 2);
  real2 << 0.7f, 0.7f;
  fake2 << -1.3f, -1.3f;
  const AdvTerms two = global_terms_from_logits(real2, fake2);
  CHECK(two.g_term == doctest::Approx(one.g_term).epsilon(1e-12));
  CHECK(two.d_term == doctest::Approx(one.d_term).epsilon(1e-12));

  CHECK_THROWS_AS(global_terms_from_logits(Mat(1, 0), Mat(1, 0)), UsageError);
  CHECK_THROWS_AS(global_terms_from_logits(real, fake2), UsageError);
}

TEST_CASE("r1 penalty") {
  const Tensor batch = random_batch(3, 3, 4, 4, 6);
  LinearD d(3 * 4 * 4, 7);
  double w2 = 0.0;
  for (float v : d.w.value) w2 += static_cast<double>(v) * v;
  CHECK(r1_penalty(d, batch, 0.0) == 0.0);
  CHECK(r1_penalty(d, batch, 10.0) == doctest::Approx(5.0 * w2).epsilon(1e-6));
  CHECK(r1_penalty(d, batch, 20.0) == doctest::Approx(2.0 * r1_penalty(d, batch, 10.0)).epsilon(1e-12));
  CHECK_THROWS_AS(r1_penalty(d, batch, -1.0), UsageError);

  // d/dw of (gamma/2)|w|^2 is gamma * w.
  d.w.zero_grad();
  const double pen = r1_accumulate(d, batch, 10.0, 2.0);
  CHECK(pen == doctest::Approx(5.0 * w2).epsilon(1e-6));
  for (std::size_t i = 0; i < d.w.size(); ++i) CHECK(d.w.grad[i] == doctest::Approx(2.0 * 10.0 * d.w.value[i]).epsilon(1e-3));
}

TEST_CASE("r1 parameter gradient on the toy discriminator") {
  DiscriminatorConfig dc;
  dc.resolution = 16;
  dc.channels = {4, 4, 4};
  dc.hidden = 8;
  Discriminator d(dc, 8);
  const Tensor batch = random_batch(2, 3, 16, 16, 9);
  const auto params = d.params();
  nn::zero_grads(params);
  r1_accumulate(d, batch, 10.0, 1.0);

  // Per-coordinate central differences of the penalty. The input gradient of
  // a piecewise-linear D does not depend on biases, so those entries are 0.
  Rng pick(10);
  for (int t = 0; t < 40; ++t) {
    nn::Param* p = params[pick.below(params.size())];
    const std::size_t i = pick.below(p->size());
    if (p->name.find("bias") != std::string::npos) {
      CHECK(p->grad[i] == 0.0f);
      continue;
    }
    double best = 1e300;
    for (float h : {1e-3f, 3e-4f, 1e-2f}) {
      const float orig = p->value[i];
      p->value[i] = orig + h;
      const double up = r1_penalty(d, batch, 10.0);
      p->value[i] = orig - h;
      const double down = r1_penalty(d, batch, 10.0);
      p->value[i] = orig;
      best = std::min(best, std::abs((up - down) / (2.0 * h) - p->grad[i]));
    }
    CHECK(best <= 1e-6 + 1e-3 * std::abs(p->grad[i]));
  }
}

TEST_CASE("gate") {
  SUBCASE("p = 1 always gates") {
    Rng rng(1);
    for (int i = 0; i < 200; ++i) CHECK(draw_gate(rng, 1.0));
  }
  SUBCASE("frequency at p = 1/8") {
    Rng rng(2);
    const double p = 0.125;
    int hits = 0;
    for (int i = 0; i < 2000; ++i) hits += draw_gate(rng, p);
    CHECK(std::abs(hits / 2000.0 - p) <= 3.0 * std::sqrt(p * (1 - p) / 2000.0));
  }
  SUBCASE("fixed seed reproduces the sequence") {
    Rng a(3), b(3);
    for (int i = 0; i < 500; ++i) CHECK(draw_gate(a, 0.3) == draw_gate(b, 0.3));
  }
  SUBCASE("range") {
    Rng rng(4);
    CHECK_THROWS_AS(draw_gate(rng, 0.0), UsageError);
    CHECK_THROWS_AS(draw_gate(rng, 1.5), UsageError);
  }
}

TEST_CASE("gated step composition") {
  const AdvTerms adv{0.4, 1.1};
  auto local = [&] { return adv; };
  auto global = [] { return GlobalComponents{{0.7, 1.2}, 0.05}; };

  Rng rng(5);
  const LossReport r = gated_step_losses(rng, 1.0, 10.0, 10.0, 3, 0.2, local, global);
  CHECK(r.gated);
  CHECK(*r.local == doctest::Approx(0.2 + 10.0 * 0.4));
  CHECK(r.total_g() == doctest::Approx(0.2 + 4.0 + 0.7));
  CHECK(*r.r1 == 0.05);

  // lambda enters linearly.
  Rng r1(6), r2(6);
  const LossReport a = gated_step_losses(r1, 1.0, 3.0, 10.0, 0, 0.2, local, global);
  const LossReport b = gated_step_losses(r2, 1.0, 6.0, 10.0, 0, 0.2, local, global);
  CHECK(*b.local - 0.2 == doctest::Approx(2.0 * (*a.local - 0.2)));

  // Ungated iterations never call the local term.
  Rng rng2(7);
  int calls = 0, ungated = 0;
  for (int i = 0; i < 200; ++i) {
    const LossReport u = gated_step_losses(rng2, 0.1, 10.0, 10.0, i, 0.2,
                                           [&] {
                                             ++calls;
                                             return adv;
                                           },
                                           global);
    if (!u.gated) {
      ++ungated;
      CHECK_FALSE(u.adv_local_g.has_value());
      CHECK_FALSE(u.local.has_value());
      CHECK(u.total_g() == 0.7);
    }
  }
  CHECK(calls + ungated == 200);
  CHECK(calls > 0);

  Rng rng3(8);
  CHECK_THROWS_AS(gated_step_losses(rng3, 0.5, -1.0, 10.0, 0, 0.2, local, global), UsageError);
  auto bad_global = [] { return GlobalComponents{{std::nan(""), 1.0}, std::nullopt}; };
  CHECK_THROWS_AS(gated_step_losses(rng3, 0.5, 1.0, 10.0, 0, 0.2, local, bad_global), NumericError);
}

TEST_CASE("loss trace csv") {
  LossReport r;
  r.iteration = 4;
  r.recon = 0.5;
  r.global_g = 0.25;
  r.global_d = 1.5;
  r.lambda = 10;
  r.p = 0.125;
  r.gamma = 10;
  std::ostringstream os;
  write_loss_trace(os, {r});
  CHECK(os.str() == loss_report_csv_header() + "\n4,0.5,0,,,,0.25,1.5,,10,0.125,10\n");
}
