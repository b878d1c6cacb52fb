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
#include <filesystem>
#include <fstream>
#include <numbers>

#include "gclone/preprocess.hpp"

using namespace gclone;

namespace {

// Low-frequency pattern so bilinear resampling is nearly exact.
Image smooth_image(int h, int w) {
  Image img(h, w, 3);
  for (int c = 0; c < 3; ++c) {
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        img.at(c, y, x) = static_cast<float>(0.8 * std::sin(0.15 * x + 0.5 * c) * std::cos(0.11 * y));
      }
    }
  }
  return img;
}

const std::vector<Point2> kLandmarks = {{20, 24}, {44, 24}, {32, 36}, {23, 46}, {41, 46}};

std::vector<Point2> mapped(const std::vector<Point2>& pts, const Eigen::Matrix2d& a, const Point2& t) {
  std::vector<Point2> out;
  for (const auto& p : pts) out.push_back(a * p + t);
  return out;
}

std::filesystem::path scratch() {
  const auto dir = std::filesystem::temp_directory_path() / "gclone_tests";
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("similarity estimate") {
  SUBCASE("identity") {
    const auto m = estimate_similarity(kLandmarks, kLandmarks);
    CHECK((m - Eigen::Matrix<double, 2, 3>::Identity()).cwiseAbs().maxCoeff() < 1e-9);
    const Image img = smooth_image(64, 64);
    const Aligned a = align(img, kLandmarks, kLandmarks, 64);
    for (std::size_t i = 0; i < img.pixels.size(); ++i) CHECK(a.image.pixels[i] == doctest::Approx(img.pixels[i]).epsilon(1e-5));
  }
  SUBCASE("scale two") {
    const auto dst = mapped(kLandmarks, 2.0 * Eigen::Matrix2d::Identity(), Point2::Zero());
    const Image img = smooth_image(32, 32);
    const Aligned a = align(img, kLandmarks, dst, 64);
    CHECK(a.transform.scale() == doctest::Approx(2.0).epsilon(1e-9));
    CHECK(a.transform.rotation() == doctest::Approx(0.0).epsilon(1e-9));
    for (int y = 0; y < 32; y += 3) {
      for (int x = 0; x < 32; x += 3) CHECK(a.image.at(1, 2 * y, 2 * x) == doctest::Approx(img.at(1, y, x)).epsilon(1e-4));
    }
  }
  SUBCASE("quarter turn") {
    Eigen::Matrix2d r;
    r << 0, -1, 1, 0;
    const auto m = estimate_similarity(kLandmarks, mapped(kLandmarks, r, {64, 0}));
    AlignTransform t;
    t.m = m;
    CHECK(t.rotation() == doctest::Approx(std::numbers::pi / 2).epsilon(1e-9));
    CHECK(t.scale() == doctest::Approx(1.0).epsilon(1e-9));
    const Point2 p = t.apply({10, 3});
    CHECK(p.x() == doctest::Approx(61.0));
    CHECK(p.y() == doctest::Approx(10.0));
  }
  SUBCASE("inverse") {
    Eigen::Matrix2d a;
    const double th = 0.3;
    a << std::cos(th), -std::sin(th), std::sin(th), std::cos(th);
    AlignTransform t;
    t.m = estimate_similarity(kLandmarks, mapped(kLandmarks, 1.4 * a, {5, -7}));
    t.src_height = 50;
    t.src_width = 60;
    t.dst_height = t.dst_width = 64;
    const AlignTransform inv = t.inverse();
    CHECK(inv.src_height == 64);
    CHECK(inv.dst_width == 60);
    for (const auto& p : kLandmarks) {
      CHECK((t.apply_inverse(t.apply(p)) - p).norm() < 1e-9);
      CHECK((inv.apply(t.apply(p)) - p).norm() < 1e-9);
      CHECK((t.apply(p) - (1.4 * a * p + Point2(5, -7))).norm() < 1e-9);
    }
    CHECK(inv.scale() == doctest::Approx(1.0 / 1.4).epsilon(1e-9));
  }
  SUBCASE("degenerate input") {
    const std::vector<Point2> same(5, Point2(3, 3));
    CHECK_THROWS_AS(estimate_similarity(same, kLandmarks), UsageError);
    CHECK_THROWS_AS(estimate_similarity(kLandmarks, same), UsageError);
    CHECK_THROWS_AS(estimate_similarity({kLandmarks[0]}, {kLandmarks[0]}), UsageError);
    CHECK_THROWS_AS(estimate_similarity(kLandmarks, {kLandmarks[0], kLandmarks[1]}), UsageError);
    AlignTransform flat;
    flat.m.setZero();
    CHECK_THROWS_AS(flat.inverse(), UsageError);
  }
}

TEST_CASE("boundary blur") {
  const Image img = smooth_image(40, 36);
  CHECK(boundary_blur(img, 0, 1.0) == img);
  CHECK_THROWS_AS(boundary_blur(img, 18, 1.0), UsageError);
  CHECK_THROWS_AS(boundary_blur(img, 4, 0.0), UsageError);

  const Image flat = Image::constant(20, 20, 3, 0.3f);
  const Image fb = boundary_blur(flat, 4, 1.5);
  for (float v : fb.pixels) CHECK(v == doctest::Approx(0.3f).epsilon(1e-6));

  // Pixels at least `band` from every edge keep their bits.
  Image noisy(24, 24, 1);
  Rng rng(3);
  for (float& v : noisy.pixels) v = static_cast<float>(rng.uniform(-1.0, 1.0));
  const Image nb = boundary_blur(noisy, 5, 2.0);
  int changed_edge = 0;
  for (int y = 0; y < 24; ++y) {
    for (int x = 0; x < 24; ++x) {
      const int d = std::min({x, y, 23 - x, 23 - y});
      if (d >= 5) CHECK(nb.at(0, y, x) == noisy.at(0, y, x));
      if (d == 0 && nb.at(0, y, x) != noisy.at(0, y, x)) ++changed_edge;
    }
  }
  CHECK(changed_edge > 80);
  CHECK(boundary_blur(noisy).same_shape(noisy));
}

TEST_CASE("paste back") {
  const Image img = smooth_image(80, 72);
  Eigen::Matrix2d a;
  const double th = 0.2;
  a << std::cos(th), -std::sin(th), std::sin(th), std::cos(th);
  const auto dst = mapped(kLandmarks, 0.9 * a, {6, 2});
  const Aligned al = align(img, kLandmarks, dst, 48);

  SUBCASE("round trip") {
    const Image back = paste_back(img, al.image, al.transform, 0);
    double worst = 0.0;
    int covered = 0;
    for (int y = 0; y < img.height; ++y) {
      for (int x = 0; x < img.width; ++x) {
        const Point2 q = al.transform.apply({double(x), double(y)});
        if (q.x() < 1 || q.y() < 1 || q.x() > 46 || q.y() > 46) continue;
        ++covered;
        for (int c = 0; c < 3; ++c) worst = std::max(worst, double(std::abs(back.at(c, y, x) - img.at(c, y, x))));
      }
    }
    CHECK(covered > 1000);
    CHECK(worst < 0.05);
  }
  SUBCASE("outside the crop is untouched") {
    Image edited = al.image;
    for (float& v : edited.pixels) v = -v;
    for (int feather : {0, 4}) {
      const Image back = paste_back(img, edited, al.transform, feather);
      int outside = 0;
      for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < img.width; ++x) {
          const Point2 q = al.transform.apply({double(x), double(y)});
          const bool out = q.x() < 0 || q.y() < 0 || q.x() > 47 || q.y() > 47;
          if (!out) continue;
          ++outside;
          for (int c = 0; c < 3; ++c) CHECK(back.at(c, y, x) == img.at(c, y, x));
        }
      }
      CHECK(outside > 1000);
    }
  }
  SUBCASE("argument checks") {
    CHECK_THROWS_AS(paste_back(img, al.image, al.transform, -1), UsageError);
    CHECK_THROWS_AS(paste_back(img, Image(10, 10, 3), al.transform, 0), UsageError);
    CHECK_THROWS_AS(paste_back(img, Image(48, 48, 1), al.transform, 0), UsageError);
  }
}

TEST_CASE("alignment files") {
  const auto dir = scratch();
  AlignTransform t;
  t.m << 0.9, -0.1, 3.5, 0.1, 0.9, -2.25;
  t.src_height = 80;
  t.src_width = 72;
  t.dst_height = t.dst_width = 48;
  save_transform(t, dir / "t.json");
  const AlignTransform u = load_transform(dir / "t.json");
  CHECK(u.m == t.m);
  CHECK(u.src_width == 72);
  CHECK(u.dst_height == 48);

  std::ofstream(dir / "lm.json") << R"([{"face_id": 7, "points": [[1, 2], [3.5, 4]]}, {"face_id": "b", "points": [[0, 0], [1, 1]]}])";
  const auto faces = load_landmarks(dir / "lm.json");
  REQUIRE(faces.size() == 2);
  CHECK(faces[0].face_id == "7");
  CHECK(faces[0].points[1] == Point2(3.5, 4));
  CHECK(faces[1].face_id == "b");

  std::ofstream(dir / "tpl.json") << R"({"points": [[10, 20], [30, 40]]})";
  CHECK(load_template(dir / "tpl.json").size() == 2);
  std::ofstream(dir / "bad_tpl.json") << R"([[1, 2, 3]])";
  CHECK_THROWS_AS(load_template(dir / "bad_tpl.json"), UsageError);
  CHECK_THROWS_AS(load_transform(dir / "none.json"), IoError);
}
