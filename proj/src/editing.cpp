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


#include "gclone/editing.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <fstream>
#include <nlohmann/json.hpp>

namespace gclone {

using nn::Mat;
using json = nlohmann::json;

void EditDirection::validate() const {
  if (space == LatentSpace::Z) throw UsageError("edit direction must live in W or W+");
  if (direction.empty()) throw UsageError("edit direction is empty");
  double sq = 0.0;
  for (float v : direction) {
    if (!std::isfinite(v)) throw NumericError("edit direction has non-finite entries");
    sq += static_cast<double>(v) * v;
  }
  if (std::abs(std::sqrt(sq) - 1.0) > 1e-6) throw UsageError("edit direction must have unit norm");
  if (layers && (layers->first < 0 || layers->second <= layers->first)) throw UsageError("bad edit layer range");
  if (layers && space != LatentSpace::WPlus) throw UsageError("layer ranges need a W+ direction");
}

LatentCode apply_direction(const LatentCode& code, const EditDirection& d, double alpha) {
  code.validate();
  d.validate();
  if (static_cast<int>(d.direction.size()) != code.dim) throw UsageError("edit direction dim mismatch");
  if (code.space == LatentSpace::Z) throw UsageError("edits apply to W or W+ codes");
  if (code.space == LatentSpace::W && d.layers) throw UsageError("layer-restricted edits need a W+ code");
  int begin = 0, end = code.layers;
  if (d.layers) {
    if (d.layers->second > code.layers) throw UsageError("edit layer range out of bounds");
    begin = d.layers->first;
    end = d.layers->second;
  }
  LatentCode out = code;
  for (int l = begin; l < end; ++l) {
    auto dst = out.layer(l);
    for (int i = 0; i < code.dim; ++i) dst[i] += static_cast<float>(alpha * d.direction[i]);
  }
  return out;
}

LatentCode style_channel_edit(const LatentCode& code, int layer, int channel, double delta) {
  code.validate();
  if (code.space != LatentSpace::WPlus) throw UsageError("style channel edits need a W+ code");
  if (layer < 0 || layer >= code.layers || channel < 0 || channel >= code.dim) {
    throw UsageError("style channel index out of bounds");
  }
  LatentCode out = code;
  out.layer(layer)[channel] += static_cast<float>(delta);
  return out;
}

double mean_brightness(const Image& img) {
  double acc = 0.0;
  for (float v : img.pixels) acc += v;
  return acc / static_cast<double>(img.pixels.size());
}

EditDirection discover_direction(const Generator& g, const ImageProbe& probe, int n, std::uint64_t seed) {
  if (n < 100) throw UsageError("discover_direction: need at least 100 samples");
  const int q = g.latent_dim();
  Rng rng = Rng(seed).fork("discover_direction");
  Mat z(q, n);
  rng.fill_normal({z.data(), static_cast<std::size_t>(z.size())});
  const Mat w = g.map(z);
  Eigen::VectorXd y(n);
  for (int i = 0; i < n; ++i) {
    std::vector<float> v(w.col(i).data(), w.col(i).data() + q);
    y[i] = probe(g.generate(LatentCode::w(std::move(v))));
    if (!std::isfinite(y[i])) throw NumericError("discover_direction: probe returned a non-finite value");
  }
  const double ymean = y.mean();
  const Eigen::VectorXd yc = y.array() - ymean;
  if (yc.squaredNorm() / n < 1e-12) throw UsageError("discover_direction: probe has zero variance");

  Eigen::MatrixXd wc = w.cast<double>().transpose();  // n x q
  wc.rowwise() -= wc.colwise().mean();
  Eigen::MatrixXd gram = wc.transpose() * wc;
  const double ridge = 1e-3 * gram.trace() / q;
  gram.diagonal().array() += ridge;
  const Eigen::VectorXd beta = gram.ldlt().solve(wc.transpose() * yc);
  const double norm = beta.norm();
  if (!(norm > 0.0) || !std::isfinite(norm)) throw NumericError("discover_direction: degenerate regression");

  EditDirection d;
  d.space = LatentSpace::W;
  d.direction.resize(q);
  for (int i = 0; i < q; ++i) d.direction[i] = static_cast<float>(beta[i] / norm);
  // Renormalize in float so the stored vector itself is unit length.
  double sq = 0.0;
  for (float v : d.direction) sq += static_cast<double>(v) * v;
  for (float& v : d.direction) v = static_cast<float>(v / std::sqrt(sq));
  return d;
}

namespace {

json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw UsageError("malformed JSON in " + path.string() + ": " + e.what());
  }
}

void write_json(const json& j, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

}  // namespace

void save_direction(const EditDirection& d, const std::filesystem::path& path) {
  d.validate();
  json j;
  j["space"] = to_string(d.space);
  j["layers"] = d.layers ? json::array({d.layers->first, d.layers->second}) : json(nullptr);
  j["direction"] = d.direction;
  write_json(j, path);
}

EditDirection load_direction(const std::filesystem::path& path) {
  const json j = read_json(path);
  EditDirection d;
  try {
    d.space = parse_latent_space(j.at("space").get<std::string>());
    if (j.contains("layers") && !j.at("layers").is_null()) {
      const auto r = j.at("layers").get<std::vector<int>>();
      if (r.size() != 2) throw UsageError("direction layers must be [start, end)");
      d.layers = std::make_pair(r[0], r[1]);
    }
    d.direction = j.at("direction").get<std::vector<float>>();
  } catch (const json::exception& e) {
    throw UsageError("bad direction file " + path.string() + ": " + e.what());
  }
  d.validate();
  return d;
}

void save_code(const LatentCode& code, const std::filesystem::path& path) {
  code.validate();
  json j;
  j["space"] = to_string(code.space);
  j["layers"] = code.layers;
  j["dim"] = code.dim;
  j["data"] = code.data;
  write_json(j, path);
}

LatentCode load_code(const std::filesystem::path& path) {
  const json j = read_json(path);
  LatentCode c;
  try {
    c.space = parse_latent_space(j.at("space").get<std::string>());
    c.layers = j.at("layers").get<int>();
    c.dim = j.at("dim").get<int>();
    c.data = j.at("data").get<std::vector<float>>();
  } catch (const json::exception& e) {
    throw UsageError("bad code file " + path.string() + ": " + e.what());
  }
  c.validate();
  return c;
}

}  // namespace gclone
