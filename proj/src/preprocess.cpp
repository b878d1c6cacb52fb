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


#include "gclone/preprocess.hpp"

#include <Eigen/Geometry>
#include <cmath>
#include <fstream>
#include <nlohmann/json.hpp>

namespace gclone {

using json = nlohmann::json;

Point2 AlignTransform::apply_inverse(const Point2& p) const {
  return m.leftCols<2>().inverse() * (p - m.col(2));
}

AlignTransform AlignTransform::inverse() const {
  const double det = m.leftCols<2>().determinant();
  if (!(std::abs(det) > 1e-12)) throw UsageError("alignment transform is not invertible");
  AlignTransform out;
  const Eigen::Matrix2d a = m.leftCols<2>().inverse();
  out.m.leftCols<2>() = a;
  out.m.col(2) = -a * m.col(2);
  out.src_height = dst_height;
  out.src_width = dst_width;
  out.dst_height = src_height;
  out.dst_width = src_width;
  return out;
}

double AlignTransform::scale() const { return std::sqrt(std::abs(m.leftCols<2>().determinant())); }

double AlignTransform::rotation() const { return std::atan2(m(1, 0), m(0, 0)); }

Eigen::Matrix<double, 2, 3> estimate_similarity(const std::vector<Point2>& src, const std::vector<Point2>& dst) {
  if (src.size() != dst.size()) throw UsageError("landmark and template counts differ");
  if (src.size() < 2) throw UsageError("alignment needs at least two landmark pairs");
  const auto n = static_cast<Eigen::Index>(src.size());
  Eigen::Matrix2Xd a(2, n), b(2, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    a.col(i) = src[i];
    b.col(i) = dst[i];
  }
  const Eigen::Vector2d ca = a.rowwise().mean();
  const Eigen::Vector2d cb = b.rowwise().mean();
  const double spread_a = (a.colwise() - ca).squaredNorm() / n;
  const double spread_b = (b.colwise() - cb).squaredNorm() / n;
  if (spread_a < 1e-12 || spread_b < 1e-12) throw UsageError("degenerate landmark configuration");
  const Eigen::Matrix3d t = Eigen::umeyama(a, b, true);
  if (!t.allFinite()) throw NumericError("similarity estimate is not finite");
  return t.topRows<2>();
}

float sample_bilinear(const Image& img, int channel, double x, double y) {
  x = std::clamp(x, 0.0, static_cast<double>(img.width - 1));
  y = std::clamp(y, 0.0, static_cast<double>(img.height - 1));
  const int x0 = static_cast<int>(std::floor(x));
  const int y0 = static_cast<int>(std::floor(y));
  const int x1 = std::min(x0 + 1, img.width - 1);
  const int y1 = std::min(y0 + 1, img.height - 1);
  const double fx = x - x0, fy = y - y0;
  const double top = (1.0 - fx) * img.at(channel, y0, x0) + fx * img.at(channel, y0, x1);
  const double bot = (1.0 - fx) * img.at(channel, y1, x0) + fx * img.at(channel, y1, x1);
  return static_cast<float>((1.0 - fy) * top + fy * bot);
}

Aligned align(const Image& img, const std::vector<Point2>& landmarks, const std::vector<Point2>& canonical,
              int out_size) {
  img.validate();
  if (out_size < 1) throw UsageError("align: output size must be positive");
  Aligned out;
  out.transform.m = estimate_similarity(landmarks, canonical);
  out.transform.src_height = img.height;
  out.transform.src_width = img.width;
  out.transform.dst_height = out_size;
  out.transform.dst_width = out_size;
  const AlignTransform inv = out.transform.inverse();
  out.image = Image(out_size, out_size, img.channels);
  for (int y = 0; y < out_size; ++y) {
    for (int x = 0; x < out_size; ++x) {
      const Point2 s = inv.apply({static_cast<double>(x), static_cast<double>(y)});
      for (int c = 0; c < img.channels; ++c) out.image.at(c, y, x) = sample_bilinear(img, c, s.x(), s.y());
    }
  }
  return out;
}

namespace {

int reflect(int i, int n) {
  if (n == 1) return 0;
  while (i < 0 || i >= n) i = i < 0 ? -i : 2 * (n - 1) - i;
  return i;
}

Image gaussian_blur(const Image& img, double sigma) {
  const int radius = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
  std::vector<double> k(2 * radius + 1);
  double sum = 0.0;
  for (int i = -radius; i <= radius; ++i) sum += k[i + radius] = std::exp(-0.5 * i * i / (sigma * sigma));
  for (double& v : k) v /= sum;
  Image tmp = img, out = img;
  for (int c = 0; c < img.channels; ++c) {
    for (int y = 0; y < img.height; ++y) {
      for (int x = 0; x < img.width; ++x) {
        double acc = 0.0;
        for (int i = -radius; i <= radius; ++i) acc += k[i + radius] * img.at(c, y, reflect(x + i, img.width));
        tmp.at(c, y, x) = static_cast<float>(acc);
      }
    }
    for (int y = 0; y < img.height; ++y) {
      for (int x = 0; x < img.width; ++x) {
        double acc = 0.0;
        for (int i = -radius; i <= radius; ++i) acc += k[i + radius] * tmp.at(c, reflect(y + i, img.height), x);
        out.at(c, y, x) = static_cast<float>(acc);
      }
    }
  }
  return out;
}

}  // namespace

Image boundary_blur(const Image& img, int band, double sigma) {
  img.validate();
  if (band < 0 || 2 * band >= std::min(img.height, img.width)) throw UsageError("boundary_blur: band out of range");
  if (band == 0) return img;
  if (!(sigma > 0.0)) throw UsageError("boundary_blur: sigma must be positive");
  const Image blurred = gaussian_blur(img, sigma);
  Image out = img;
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      const int d = std::min({x, y, img.width - 1 - x, img.height - 1 - y});
      if (d >= band) continue;
      const float a = 1.0f - static_cast<float>(d) / static_cast<float>(band);
      for (int c = 0; c < img.channels; ++c) {
        out.at(c, y, x) = (1.0f - a) * img.at(c, y, x) + a * blurred.at(c, y, x);
      }
    }
  }
  return out;
}

Image boundary_blur(const Image& img) {
  const int band = std::max(1, static_cast<int>(std::lround(0.08 * std::min(img.height, img.width))));
  return boundary_blur(img, band, band / 3.0);
}

Image paste_back(const Image& original, const Image& edited_crop, const AlignTransform& t, int feather) {
  original.validate();
  edited_crop.validate();
  if (feather < 0) throw UsageError("paste_back: feather must be nonnegative");
  if (original.channels != edited_crop.channels) throw UsageError("paste_back: channel counts differ");
  if (t.dst_height != 0 && (edited_crop.height != t.dst_height || edited_crop.width != t.dst_width)) {
    throw UsageError("paste_back: crop dims do not match the transform");
  }
  if (!(std::abs(t.m.leftCols<2>().determinant()) > 1e-12)) throw UsageError("paste_back: transform not invertible");
  Image out = original;
  const double max_x = edited_crop.width - 1, max_y = edited_crop.height - 1;
  for (int y = 0; y < original.height; ++y) {
    for (int x = 0; x < original.width; ++x) {
      const Point2 q = t.apply({static_cast<double>(x), static_cast<double>(y)});
      if (q.x() < 0.0 || q.y() < 0.0 || q.x() > max_x || q.y() > max_y) continue;
      float w = 1.0f;
      if (feather > 0) {
        const double edge = std::min({q.x(), q.y(), max_x - q.x(), max_y - q.y()});
        w = static_cast<float>(std::min(1.0, edge / feather));
      }
      for (int c = 0; c < original.channels; ++c) {
        const float v = sample_bilinear(edited_crop, c, q.x(), q.y());
        out.at(c, y, x) = w == 1.0f ? v : (1.0f - w) * original.at(c, y, x) + w * v;
      }
    }
  }
  return out;
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

std::vector<Point2> parse_points(const json& j) {
  std::vector<Point2> pts;
  for (const auto& p : j) {
    const auto v = p.get<std::vector<double>>();
    if (v.size() != 2) throw UsageError("landmark points must be [x, y]");
    pts.emplace_back(v[0], v[1]);
  }
  return pts;
}

}  // namespace

std::vector<FaceLandmarks> load_landmarks(const std::filesystem::path& path) {
  const json j = read_json(path);
  std::vector<FaceLandmarks> out;
  try {
    for (const auto& face : j) {
      FaceLandmarks f;
      f.face_id = face.at("face_id").is_string() ? face.at("face_id").get<std::string>()
                                                 : std::to_string(face.at("face_id").get<long long>());
      f.points = parse_points(face.at("points"));
      out.push_back(std::move(f));
    }
  } catch (const json::exception& e) {
    throw UsageError("bad landmark file " + path.string() + ": " + e.what());
  }
  return out;
}

std::vector<Point2> load_template(const std::filesystem::path& path) {
  const json j = read_json(path);
  try {
    return parse_points(j.is_object() ? j.at("points") : j);
  } catch (const json::exception& e) {
    throw UsageError("bad template file " + path.string() + ": " + e.what());
  }
}

void save_transform(const AlignTransform& t, const std::filesystem::path& path) {
  json j;
  j["matrix"] = {{t.m(0, 0), t.m(0, 1), t.m(0, 2)}, {t.m(1, 0), t.m(1, 1), t.m(1, 2)}};
  j["src"] = {t.src_height, t.src_width};
  j["dst"] = {t.dst_height, t.dst_width};
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

AlignTransform load_transform(const std::filesystem::path& path) {
  const json j = read_json(path);
  AlignTransform t;
  try {
    const auto m = j.at("matrix").get<std::vector<std::vector<double>>>();
    if (m.size() != 2 || m[0].size() != 3 || m[1].size() != 3) throw UsageError("transform matrix must be 2x3");
    for (int r = 0; r < 2; ++r) {
      for (int c = 0; c < 3; ++c) t.m(r, c) = m[r][c];
    }
    const auto s = j.at("src").get<std::vector<int>>();
    const auto d = j.at("dst").get<std::vector<int>>();
    if (s.size() != 2 || d.size() != 2) throw UsageError("transform dims must be [h, w]");
    t.src_height = s[0];
    t.src_width = s[1];
    t.dst_height = d[0];
    t.dst_width = d[1];
  } catch (const json::exception& e) {
    throw UsageError("bad transform file " + path.string() + ": " + e.what());
  }
  return t;
}

}  // namespace gclone
