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
#include <sstream>

#include "gclone/evalkit.hpp"

using namespace gclone;

namespace {

Image random_image(int h, int w, int c, std::uint64_t seed) {
  Image img(h, w, c);
  Rng rng(seed);
  for (float& v : img.pixels) v = static_cast<float>(rng.uniform(-1.0, 1.0));
  return img;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("mse") {
  const Image a = random_image(5, 6, 3, 1), b = random_image(5, 6, 3, 2);
  CHECK(mse(a, a) == 0.0);
  CHECK(mse(Image::constant(4, 4, 3, -1.0f), Image::constant(4, 4, 3, 1.0f)) == 4.0);
  double acc = 0.0;
  for (std::size_t i = 0; i < a.pixels.size(); ++i) acc += std::pow(double(a.pixels[i]) - b.pixels[i], 2);
  CHECK(mse(a, b) == doctest::Approx(acc / a.pixels.size()).epsilon(1e-12));
  CHECK_THROWS_AS(mse(a, Image(5, 5, 3)), UsageError);
}

TEST_CASE("perceptual distance") {
  const auto id = identity_extractor();
  const Image lo = Image::constant(4, 4, 3, -1.0f), hi = Image::constant(4, 4, 3, 1.0f);
  // Unit vectors -(1,1,1)/sqrt3 and +(1,1,1)/sqrt3: squared distance 3 * (2/sqrt3)^2.
  CHECK(perceptual_distance(lo, hi, id) == doctest::Approx(4.0).epsilon(1e-9));

  const Image a = random_image(6, 5, 3, 3), b = random_image(6, 5, 3, 4);
  CHECK(perceptual_distance(a, a, id) == 0.0);
  CHECK(perceptual_distance(a, b, id) == perceptual_distance(b, a, id));

  double acc = 0.0;
  for (int y = 0; y < 6; ++y) {
    for (int x = 0; x < 5; ++x) {
      double na = 0.0, nb = 0.0;
      for (int c = 0; c < 3; ++c) {
        na += std::pow(a.at(c, y, x), 2);
        nb += std::pow(b.at(c, y, x), 2);
      }
      na = std::sqrt(na);
      nb = std::sqrt(nb);
      for (int c = 0; c < 3; ++c) acc += std::pow(a.at(c, y, x) / na - b.at(c, y, x) / nb, 2);
    }
  }
  CHECK(perceptual_distance(a, b, id) == doctest::Approx(acc / 30.0).epsilon(1e-6));

  // A two-layer extractor sums its layers.
  const FeatureExtractor twice = [&](const Image& img) {
    auto f = id(img);
    f.push_back(f.front());
    return f;
  };
  CHECK(perceptual_distance(a, b, twice) == doctest::Approx(2.0 * acc / 30.0).epsilon(1e-6));

  DiscriminatorConfig dc;
  dc.channels = {4, 4, 4};
  dc.hidden = 8;
  const Discriminator d(dc, 5);
  const Image c = random_image(32, 32, 3, 6), e = random_image(32, 32, 3, 7);
  const auto dx = discriminator_extractor(d);
  CHECK(dx(c).size() == 3);
  CHECK(perceptual_distance(c, c, dx) == 0.0);
  CHECK(perceptual_distance(c, e, dx) > 0.0);
}

TEST_CASE("pixel diff map") {
  const Image a = random_image(4, 5, 3, 8);
  const DiffMap same = pixel_diff_map(a, a);
  CHECK(same.scale == 0.0);
  for (float v : same.map.pixels) CHECK(v == -1.0f);

  Image b = a;
  b.at(0, 2, 3) += 0.3f;
  b.at(2, 2, 3) -= 0.4f;
  const DiffMap one = pixel_diff_map(a, b);
  CHECK(one.scale == doctest::Approx(0.5).epsilon(1e-6));
  CHECK(one.map.channels == 1);
  for (int y = 0; y < 4; ++y) {
    for (int x = 0; x < 5; ++x) CHECK(one.map.at(0, y, x) == (y == 2 && x == 3 ? 1.0f : -1.0f));
  }
  CHECK(pixel_diff_map(b, a).map == one.map);
}

TEST_CASE("frechet distance") {
  SUBCASE("diagonal closed form") {
    Eigen::VectorXd m1(3), m2(3), v1(3), v2(3);
    m1 << 0, 1, 2;
    m2 << 1, 1, 0;
    v1 << 1, 4, 9;
    v2 << 4, 1, 1;
    double expect = (m1 - m2).squaredNorm();
    for (int i = 0; i < 3; ++i) expect += v1[i] + v2[i] - 2 * std::sqrt(v1[i] * v2[i]);
    CHECK(frechet_gaussian(m1, v1.asDiagonal().toDenseMatrix(), m2, v2.asDiagonal().toDenseMatrix()) ==
          doctest::Approx(expect).epsilon(1e-12));
  }
  SUBCASE("full covariance against identity") {
    // tr(sqrt(M)) for 2x2 SPD M is sqrt(tr M + 2 sqrt(det M)).
    Eigen::MatrixXd s2(2, 2);
    s2 << 3.0, 1.2, 1.2, 2.0;
    const Eigen::VectorXd mu = Eigen::VectorXd::Zero(2);
    const double tr_sqrt = std::sqrt(s2.trace() + 2.0 * std::sqrt(s2(0, 0) * s2(1, 1) - s2(0, 1) * s2(1, 0)));
    const double expect = 2.0 + s2.trace() - 2.0 * tr_sqrt;
    CHECK(frechet_gaussian(mu, Eigen::MatrixXd::Identity(2, 2), mu, s2) == doctest::Approx(expect).epsilon(1e-12));
    CHECK(frechet_gaussian(mu, s2, mu, Eigen::MatrixXd::Identity(2, 2)) == doctest::Approx(expect).epsilon(1e-12));
  }
  SUBCASE("sample sets") {
    Rng rng(9);
    Eigen::MatrixXd a(400, 3), b(300, 3);
    for (Eigen::Index i = 0; i < a.size(); ++i) a.data()[i] = rng.normal();
    for (Eigen::Index i = 0; i < b.size(); ++i) b.data()[i] = 0.5 + 2.0 * rng.normal();
    CHECK(frechet_distance(a, a).distance < 1e-3);
    CHECK(frechet_distance(a, b).distance == doctest::Approx(frechet_distance(b, a).distance).epsilon(1e-9));

    auto stats = [](const Eigen::MatrixXd& m) {
      Eigen::VectorXd mu = Eigen::VectorXd::Zero(m.cols());
      for (Eigen::Index r = 0; r < m.rows(); ++r) mu += m.row(r).transpose();
      mu /= static_cast<double>(m.rows());
      Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(m.cols(), m.cols());
      for (Eigen::Index r = 0; r < m.rows(); ++r) {
        const Eigen::VectorXd d = m.row(r).transpose() - mu;
        cov += d * d.transpose();
      }
      return std::make_pair(mu, Eigen::MatrixXd(cov / static_cast<double>(m.rows() - 1)));
    };
    const auto [ma, ca] = stats(a);
    const auto [mb, cb] = stats(b);
    const Eigen::MatrixXd ridge = 1e-6 * Eigen::MatrixXd::Identity(3, 3);
    const FrechetResult r = frechet_distance(a, b);
    CHECK(r.regularization == 1e-6);
    CHECK(r.distance == doctest::Approx(frechet_gaussian(ma, ca + ridge, mb, cb + ridge)).epsilon(1e-9));
    CHECK_THROWS_AS(frechet_distance(a.topRows(1), b), UsageError);
  }
}

TEST_CASE("fid proxy") {
  GeneratorConfig gc;
  gc.latent_dim = 8;
  gc.channels = {4, 4, 4, 4};
  const Generator g(gc, 1);
  const auto real = make_synthetic_dataset(20, 2);
  const auto id = identity_extractor();
  const FrechetResult a = fid_proxy(g, real, 20, id, 3);
  CHECK(a.distance > 0.0);
  CHECK(fid_proxy(g, real, 20, id, 3).distance == a.distance);
  CHECK_THROWS_AS(fid_proxy(g, real, 1, id, 3), UsageError);
}

TEST_CASE("metric tables") {
  const MeanStd ms = mean_std({1.0, 2.0, 3.0, 4.0});
  CHECK(ms.mean == 2.5);
  CHECK(ms.stddev == doctest::Approx(std::sqrt(5.0 / 3.0)).epsilon(1e-12));
  CHECK(mean_std({2.0}).stddev == 0.0);

  const auto dir = std::filesystem::temp_directory_path() / "gclone_tests";
  std::filesystem::create_directories(dir);
  write_metrics_csv(dir / "m.csv", {{"a", 0.0, 0.0}, {"b", 2.0, 4.0}});
  const std::string csv = slurp(dir / "m.csv");
  CHECK(csv.find("name,mse,perceptual") == 0);
  CHECK(csv.find("\na,0,0\n") != std::string::npos);
  CHECK(csv.find("\nmean,1,2\n") != std::string::npos);
  write_metrics_json(dir / "m.json", {{"a", 0.0, 0.0}});
  CHECK(slurp(dir / "m.json").find("\"mse\"") != std::string::npos);
}
