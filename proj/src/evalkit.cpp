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


#include "gclone/evalkit.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <fstream>
#include <nlohmann/json.hpp>

namespace gclone {

using nn::Tensor;

namespace {

void require_same(const Image& a, const Image& b, const char* what) {
  if (!a.same_shape(b)) throw UsageError(std::string(what) + ": image dims mismatch");
}

}  // namespace

double mse(const Image& x1, const Image& x2) {
  require_same(x1, x2, "mse");
  double acc = 0.0;
  for (std::size_t i = 0; i < x1.pixels.size(); ++i) {
    const double d = static_cast<double>(x1.pixels[i]) - x2.pixels[i];
    acc += d * d;
  }
  return acc / static_cast<double>(x1.pixels.size());
}

FeatureExtractor identity_extractor() {
  return [](const Image& img) { return std::vector<Tensor>{Tensor::from_images({&img})}; };
}

FeatureExtractor discriminator_extractor(const Discriminator& d) {
  return [&d](const Image& img) { return d.features(Tensor::from_images({&img})); };
}

double perceptual_distance(const Image& x1, const Image& x2, const FeatureExtractor& extractor) {
  require_same(x1, x2, "perceptual_distance");
  const auto f1 = extractor(x1);
  const auto f2 = extractor(x2);
  if (f1.empty() || f1.size() != f2.size()) throw UsageError("perceptual_distance: extractor produced no features");
  constexpr double kEps = 1e-10;
  double total = 0.0;
  for (std::size_t l = 0; l < f1.size(); ++l) {
    const Tensor& a = f1[l];
    const Tensor& b = f2[l];
    if (a.c != b.c || a.h != b.h || a.w != b.w || a.n != 1 || b.n != 1) {
      throw UsageError("perceptual_distance: feature shapes differ");
    }
    const std::size_t plane = a.plane();
    double layer = 0.0;
    for (std::size_t i = 0; i < plane; ++i) {
      double na = 0.0, nb = 0.0;
      for (int c = 0; c < a.c; ++c) {
        na += static_cast<double>(a.data[c * plane + i]) * a.data[c * plane + i];
        nb += static_cast<double>(b.data[c * plane + i]) * b.data[c * plane + i];
      }
      na = std::sqrt(na) + kEps;
      nb = std::sqrt(nb) + kEps;
      double sq = 0.0;
      for (int c = 0; c < a.c; ++c) {
        const double d = a.data[c * plane + i] / na - b.data[c * plane + i] / nb;
        sq += d * d;
      }
      layer += sq;
    }
    total += layer / static_cast<double>(plane);
  }
  return total;
}

DiffMap pixel_diff_map(const Image& x1, const Image& x2) {
  require_same(x1, x2, "pixel_diff_map");
  std::vector<double> norms(x1.plane_size());
  double peak = 0.0;
  for (int y = 0; y < x1.height; ++y) {
    for (int x = 0; x < x1.width; ++x) {
      double sq = 0.0;
      for (int c = 0; c < x1.channels; ++c) {
        const double d = static_cast<double>(x1.at(c, y, x)) - x2.at(c, y, x);
        sq += d * d;
      }
      const double n = std::sqrt(sq);
      norms[static_cast<std::size_t>(y) * x1.width + x] = n;
      peak = std::max(peak, n);
    }
  }
  DiffMap out{Image(x1.height, x1.width, 1, -1.0f), peak};
  if (peak > 0.0) {
    for (std::size_t i = 0; i < norms.size(); ++i) out.map.pixels[i] = static_cast<float>(2.0 * norms[i] / peak - 1.0);
  }
  return out;
}

namespace {

Eigen::MatrixXd sqrt_psd(const Eigen::MatrixXd& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
  if (es.info() != Eigen::Success) throw NumericError("eigendecomposition failed");
  const Eigen::VectorXd ev = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
}

}  // namespace

double frechet_gaussian(const Eigen::VectorXd& mu1, const Eigen::MatrixXd& s1, const Eigen::VectorXd& mu2,
                        const Eigen::MatrixXd& s2) {
  if (mu1.size() != mu2.size() || s1.rows() != mu1.size() || s2.rows() != mu2.size()) {
    throw UsageError("frechet: dimension mismatch");
  }
  // tr((s1 s2)^1/2) = tr((r s2 r)^1/2) with r = s1^1/2, which keeps the
  // argument symmetric.
  const Eigen::MatrixXd r = sqrt_psd(s1);
  const Eigen::MatrixXd inner = r * s2 * r;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (inner + inner.transpose()), Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw NumericError("frechet: eigendecomposition failed");
  const double tr_sqrt = es.eigenvalues().cwiseMax(0.0).cwiseSqrt().sum();
  const double d = (mu1 - mu2).squaredNorm() + s1.trace() + s2.trace() - 2.0 * tr_sqrt;
  return std::max(d, 0.0);
}

FrechetResult frechet_distance(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, double ridge) {
  if (a.rows() < 2 || b.rows() < 2) throw UsageError("frechet: need at least two samples per set");
  if (a.cols() != b.cols()) throw UsageError("frechet: feature dims differ");
  auto stats = [ridge](const Eigen::MatrixXd& m) {
    const Eigen::VectorXd mu = m.colwise().mean().transpose();
    const Eigen::MatrixXd c = m.rowwise() - mu.transpose();
    Eigen::MatrixXd cov = (c.transpose() * c) / static_cast<double>(m.rows() - 1);
    cov.diagonal().array() += ridge;
    return std::make_pair(mu, cov);
  };
  const auto [m1, c1] = stats(a);
  const auto [m2, c2] = stats(b);
  return {frechet_gaussian(m1, c1, m2, c2), ridge};
}

Eigen::MatrixXd pooled_features(const std::vector<Image>& images, const FeatureExtractor& extractor) {
  if (images.empty()) throw UsageError("pooled_features: no images");
  Eigen::MatrixXd out;
  for (std::size_t i = 0; i < images.size(); ++i) {
    const auto feats = extractor(images[i]);
    std::vector<double> row;
    for (const Tensor& t : feats) {
      for (int c = 0; c < t.c; ++c) {
        double acc = 0.0;
        for (std::size_t k = 0; k < t.plane(); ++k) acc += t.data[c * t.plane() + k];
        row.push_back(acc / static_cast<double>(t.plane()));
      }
    }
    if (i == 0) out.resize(static_cast<Eigen::Index>(images.size()), static_cast<Eigen::Index>(row.size()));
    if (static_cast<Eigen::Index>(row.size()) != out.cols()) throw UsageError("pooled_features: ragged features");
    out.row(static_cast<Eigen::Index>(i)) = Eigen::Map<const Eigen::RowVectorXd>(row.data(), out.cols());
  }
  return out;
}

FrechetResult fid_proxy(const Generator& g, const std::vector<Image>& real, int n_fake,
                        const FeatureExtractor& extractor, std::uint64_t seed) {
  if (n_fake < 2 || real.size() < 2) throw UsageError("fid_proxy: need at least two real and two fake images");
  Rng rng = Rng(seed).fork("fid_proxy");
  std::vector<Image> fake;
  fake.reserve(n_fake);
  for (int i = 0; i < n_fake; ++i) {
    std::vector<float> z(g.latent_dim());
    rng.fill_normal(z);
    fake.push_back(g.generate(LatentCode::z(std::move(z))));
  }
  return frechet_distance(pooled_features(real, extractor), pooled_features(fake, extractor));
}

MeanStd mean_std(const std::vector<double>& values) {
  if (values.empty()) throw UsageError("mean_std: no values");
  MeanStd out;
  for (double v : values) out.mean += v;
  out.mean /= static_cast<double>(values.size());
  if (values.size() > 1) {
    double acc = 0.0;
    for (double v : values) acc += (v - out.mean) * (v - out.mean);
    out.stddev = std::sqrt(acc / static_cast<double>(values.size() - 1));
  }
  return out;
}

void write_metrics_csv(const std::filesystem::path& path, const std::vector<MetricRow>& rows) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out.precision(9);
  out << "name,mse,perceptual\n";
  for (const auto& r : rows) out << r.name << ',' << r.mse << ',' << r.perceptual << '\n';
  if (!rows.empty()) {
    std::vector<double> m, p;
    for (const auto& r : rows) {
      m.push_back(r.mse);
      p.push_back(r.perceptual);
    }
    const auto ms = mean_std(m);
    const auto ps = mean_std(p);
    out << "mean," << ms.mean << ',' << ps.mean << '\n';
    out << "std," << ms.stddev << ',' << ps.stddev << '\n';
  }
}

void write_metrics_json(const std::filesystem::path& path, const std::vector<MetricRow>& rows) {
  nlohmann::json j;
  j["rows"] = nlohmann::json::array();
  std::vector<double> m, p;
  for (const auto& r : rows) {
    j["rows"].push_back({{"name", r.name}, {"mse", r.mse}, {"perceptual", r.perceptual}});
    m.push_back(r.mse);
    p.push_back(r.perceptual);
  }
  if (!rows.empty()) {
    const auto ms = mean_std(m);
    const auto ps = mean_std(p);
    j["summary"] = {{"mse_mean", ms.mean}, {"mse_std", ms.stddev}, {"perceptual_mean", ps.mean},
                    {"perceptual_std", ps.stddev}};
  }
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

}  // namespace gclone
