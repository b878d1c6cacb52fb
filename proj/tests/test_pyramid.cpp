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

#include <array>
#include <cmath>

#include "gclone/pyramid.hpp"

using namespace gclone;

namespace {

// Independent reference: dense 5x5 convolution with mirrored indexing.
using Grid = std::vector<std::vector<double>>;

int mirror(int i, int n) {
  while (i < 0 || i >= n) {
    if (i < 0) i = -i;
    if (i >= n) i = 2 * (n - 1) - i;
  }
  return i;
}

constexpr std::array<double, 5> k1 = {1, 4, 6, 4, 1};

Grid conv5(const Grid& in, double scale) {
  const int h = static_cast<int>(in.size()), w = static_cast<int>(in[0].size());
  Grid out(h, std::vector<double>(w, 0.0));
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double acc = 0.0;
      for (int i = 0; i < 5; ++i) {
        for (int j = 0; j < 5; ++j) acc += k1[i] * k1[j] / 256.0 * in[mirror(y + i - 2, h)][mirror(x + j - 2, w)];
      }
      out[y][x] = scale * acc;
    }
  }
  return out;
}

Grid naive_down(const Grid& in) {
  const Grid b = conv5(in, 1.0);
  const int h = (static_cast<int>(in.size()) + 1) / 2, w = (static_cast<int>(in[0].size()) + 1) / 2;
  Grid out(h, std::vector<double>(w));
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) out[y][x] = b[2 * y][2 * x];
  }
  return out;
}

Grid naive_up(const Grid& coarse, int h, int w) {
  Grid z(h, std::vector<double>(w, 0.0));
  for (std::size_t y = 0; y < coarse.size(); ++y) {
    for (std::size_t x = 0; x < coarse[0].size(); ++x) z[2 * y][2 * x] = coarse[y][x];
  }
  return conv5(z, 4.0);
}

Grid minus(const Grid& a, const Grid& b) {
  Grid out = a;
  for (std::size_t y = 0; y < a.size(); ++y) {
    for (std::size_t x = 0; x < a[0].size(); ++x) out[y][x] -= b[y][x];
  }
  return out;
}

std::vector<Grid> naive_pyramid(Grid g, int levels) {
  std::vector<Grid> out;
  for (int i = 0; i < levels; ++i) {
    Grid next = naive_down(g);
    out.push_back(minus(g, naive_up(next, static_cast<int>(g.size()), static_cast<int>(g[0].size()))));
    g = next;
  }
  out.push_back(g);
  return out;
}

Grid plane(const Image& img, int c) {
  Grid g(img.height, std::vector<double>(img.width));
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) g[y][x] = img.at(c, y, x);
  }
  return g;
}

double naive_lap_loss(const Image& a, const Image& b, int levels) {
  std::vector<double> sums(levels + 1, 0.0), counts(levels + 1, 0.0);
  for (int c = 0; c < a.channels; ++c) {
    const auto pa = naive_pyramid(plane(a, c), levels);
    const auto pb = naive_pyramid(plane(b, c), levels);
    for (int l = 0; l <= levels; ++l) {
      for (std::size_t y = 0; y < pa[l].size(); ++y) {
        for (std::size_t x = 0; x < pa[l][0].size(); ++x) {
          sums[l] += std::abs(pa[l][y][x] - pb[l][y][x]);
          counts[l] += 1.0;
        }
      }
    }
  }
  double total = 0.0;
  for (int l = 0; l <= levels; ++l) total += sums[l] / counts[l];
  return total;
}

Image random_image(int h, int w, int c, std::uint64_t seed) {
  Image img(h, w, c);
  Rng rng(seed);
  for (float& v : img.pixels) v = static_cast<float>(rng.uniform(-1.0, 1.0));
  return img;
}

}  // namespace

TEST_CASE("blur_downsample") {
  SUBCASE("constant stays constant") {
    const Field out = blur_downsample(Field(9, 6, 2, 0.37));
    CHECK(out.height == 5);
    CHECK(out.width == 3);
    for (double v : out.values) CHECK(v == doctest::Approx(0.37).epsilon(1e-14));
  }
  SUBCASE("2x2 by hand") {
    // Mirrored taps on a 2-long line land on indices 0,1,0,1,0 with weights
    // 1,4,6,4,1 -> 8/16 each, so the 2-D output is the plain mean.
    Field f(2, 2, 1);
    f.values = {1.0, 2.0, 3.0, 10.0};
    const Field out = blur_downsample(f);
    REQUIRE(out.values.size() == 1);
    CHECK(out.values[0] == doctest::Approx(4.0).epsilon(1e-14));
  }
  SUBCASE("8x8 matches dense convolution") {
    const Image img = random_image(8, 8, 1, 3);
    const Field out = blur_downsample(Field::from_image(img));
    const Grid ref = naive_down(plane(img, 0));
    for (int y = 0; y < 4; ++y) {
      for (int x = 0; x < 4; ++x) CHECK(out.at(0, y, x) == doctest::Approx(ref[y][x]).epsilon(1e-12));
    }
  }
  SUBCASE("odd sizes and degenerate input") {
    const Image img = random_image(7, 5, 1, 4);
    const Field out = blur_downsample(Field::from_image(img));
    const Grid ref = naive_down(plane(img, 0));
    for (int y = 0; y < 4; ++y) {
      for (int x = 0; x < 3; ++x) CHECK(out.at(0, y, x) == doctest::Approx(ref[y][x]).epsilon(1e-12));
    }
    CHECK_THROWS_AS(blur_downsample(Field(1, 4, 1)), UsageError);
  }
}

TEST_CASE("adjoints") {
  Rng rng(9);
  auto fill = [&](Field f) {
    for (double& v : f.values) v = rng.normal();
    return f;
  };
  auto dot = [](const Field& a, const Field& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.values.size(); ++i) s += a.values[i] * b.values[i];
    return s;
  };
  for (auto [h, w] : {std::pair{8, 8}, std::pair{7, 10}}) {
    const Field x = fill(Field(h, w, 2));
    const Field y = fill(Field((h + 1) / 2, (w + 1) / 2, 2));
    CHECK(dot(blur_downsample(x), y) == doctest::Approx(dot(x, blur_downsample_adjoint(y, h, w))).epsilon(1e-12));
    CHECK(dot(expand(y, h, w), x) == doctest::Approx(dot(y, expand_adjoint(x, y.height, y.width))).epsilon(1e-12));
  }
}

TEST_CASE("pyramid construction") {
  SUBCASE("constant image") {
    const Pyramid p = build_pyramid(Image::constant(32, 32, 3, 0.25f), 2);
    REQUIRE(p.levels.size() == 3);
    for (int i = 0; i < 2; ++i) {
      for (double v : p.levels[i].values) CHECK(std::abs(v) < 1e-12);
    }
    for (double v : p.residual().values) CHECK(v == doctest::Approx(0.25));
  }
  SUBCASE("matches naive pyramid") {
    const Image img = random_image(32, 32, 3, 5);
    const Pyramid p = build_pyramid(img, 2);
    CHECK(p.levels[0].height == 32);
    CHECK(p.levels[1].height == 16);
    CHECK(p.levels[2].height == 8);
    for (int c = 0; c < 3; ++c) {
      const auto ref = naive_pyramid(plane(img, c), 2);
      for (int l = 0; l < 3; ++l) {
        double worst = 0.0;
        for (int y = 0; y < p.levels[l].height; ++y) {
          for (int x = 0; x < p.levels[l].width; ++x) worst = std::max(worst, std::abs(p.levels[l].at(c, y, x) - ref[l][y][x]));
        }
        CHECK(worst < 1e-12);
      }
    }
  }
  SUBCASE("depth limits") {
    CHECK(default_pyramid_levels(32, 32) == 2);
    CHECK(default_pyramid_levels(8, 8) == 1);
    CHECK(max_pyramid_levels(32, 32) == 3);
    CHECK_THROWS_AS(build_pyramid(Image(32, 32, 1), 4), UsageError);
    CHECK_THROWS_AS(build_pyramid(Image(32, 32, 1), 0), UsageError);
  }
}

TEST_CASE("collapse") {
  SUBCASE("inverse") {
    for (std::uint64_t s = 0; s < 10; ++s) {
      const Image img = random_image(16 + static_cast<int>(s), 16, 3, s);
      for (int k : {1, 2}) {
        const Image back = collapse(build_pyramid(img, k));
        float worst = 0.0f;
        for (std::size_t i = 0; i < img.pixels.size(); ++i) worst = std::max(worst, std::abs(back.pixels[i] - img.pixels[i]));
        CHECK(worst < 1e-5f);
      }
    }
  }
  SUBCASE("linearity") {
    Pyramid zero = build_pyramid(Image(16, 16, 1), 2);
    for (float v : collapse(zero).pixels) CHECK(v == 0.0f);

    const Image img = random_image(16, 16, 1, 2);
    Pyramid p = build_pyramid(img, 2);
    for (auto& l : p.levels) {
      for (double& v : l.values) v *= 2.0;
    }
    const Image twice = collapse(p);
    for (std::size_t i = 0; i < img.pixels.size(); ++i) CHECK(twice.pixels[i] == doctest::Approx(2.0f * img.pixels[i]).epsilon(1e-5));
  }
  SUBCASE("inconsistent levels") {
    Pyramid p = build_pyramid(Image(16, 16, 1), 1);
    p.levels.back() = Field(3, 3, 1);
    CHECK_THROWS_AS(collapse(p), UsageError);
  }
}

TEST_CASE("lap_loss values") {
  const Image a = random_image(16, 16, 3, 10), b = random_image(16, 16, 3, 11);
  CHECK(lap_loss(a, a, 1) == 0.0);
  CHECK(lap_loss(a, b, 1) == doctest::Approx(naive_lap_loss(a, b, 1)).epsilon(1e-10));
  CHECK(lap_loss(a, b, 2) == doctest::Approx(naive_lap_loss(a, b, 2)).epsilon(1e-10));
  CHECK(lap_loss(a, b, 2) == lap_loss(b, a, 2));
  const Image c1 = Image::constant(16, 16, 3, 0.5f), c2 = Image::constant(16, 16, 3, -0.25f);
  CHECK(lap_loss(c1, c2, 2) == doctest::Approx(0.75).epsilon(1e-12));
  CHECK_THROWS_AS(lap_loss(a, Image(16, 8, 3), 1), UsageError);
}

TEST_CASE("lap_loss gradient matches finite differences") {
  const Image a = random_image(8, 8, 3, 20), b = random_image(8, 8, 3, 21);
  const int k = default_pyramid_levels(8, 8);
  const LapLossGrad g = lap_loss_with_grad(a, b, k);
  CHECK(g.value == lap_loss(a, b, k));
  Rng pick(22);
  int checked = 0;
  for (int n = 0; n < 64; ++n) {
    const auto i = static_cast<std::size_t>(pick.below(a.pixels.size()));
    Image up = a, down = a;
    up.pixels[i] += 1e-3f;
    down.pixels[i] -= 1e-3f;
    const double h = static_cast<double>(up.pixels[i]) - down.pixels[i];
    const double fd = (lap_loss(up, b, k) - lap_loss(down, b, k)) / h;
    const double an = g.grad_x1.values[i];
    CHECK(std::abs(an - fd) <= 1e-3 * std::max(std::abs(an), std::abs(fd)) + 1e-12);
    ++checked;
  }
  CHECK(checked == 64);
}

TEST_CASE("masked lap_loss") {
  const int k = 2;
  const RegionMask crop = center_crop_mask(64, 64, 40, 40);
  const RegionMask mask = erode_mask(crop, 2 << (k + 1));
  const Image a = random_image(64, 64, 3, 30), b = random_image(64, 64, 3, 31);
  const double base = lap_loss(a, b, k, &mask);

  Image moved = a;
  Rng rng(32);
  for (int c = 0; c < 3; ++c) {
    for (int y = 0; y < 64; ++y) {
      for (int x = 0; x < 64; ++x) {
        if (crop.at(y, x) == 0.0f) moved.at(c, y, x) = static_cast<float>(rng.uniform(-1.0, 1.0));
      }
    }
  }
  CHECK(std::abs(lap_loss(moved, b, k, &mask) - base) < 1e-6);
  // Without a mask the same perturbation is visible.
  CHECK(std::abs(lap_loss(moved, b, k) - lap_loss(a, b, k)) > 1e-3);

  const RegionMask ones(64, 64, 1.0f);
  CHECK(lap_loss(a, b, k, &ones) == doctest::Approx(lap_loss(a, b, k)).epsilon(1e-12));
  const RegionMask wrong(32, 32);
  CHECK_THROWS_AS(lap_loss(a, b, k, &wrong), UsageError);
}
