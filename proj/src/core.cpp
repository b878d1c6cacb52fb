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

#include "gclone/core.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#if defined(__GLIBC__)
#include <malloc.h>
#endif
#include <numbers>
#include <sstream>

namespace gclone {

Image::Image(int h, int w, int c, float fill)
    : height(h), width(w), channels(c),
      pixels(static_cast<std::size_t>(std::max(h, 0)) * std::max(w, 0) * std::max(c, 0), fill) {}

bool Image::all_finite() const {
  return std::all_of(pixels.begin(), pixels.end(), [](float v) { return std::isfinite(v); });
}

bool Image::in_range(float lo, float hi) const {
  return std::all_of(pixels.begin(), pixels.end(), [=](float v) { return v >= lo && v <= hi; });
}

void Image::validate() const {
  if (height <= 0 || width <= 0) throw UsageError("image dims must be positive");
  if (channels != 1 && channels != 3) {
    throw UsageError("unsupported channel count " + std::to_string(channels));
  }
  if (pixels.size() != static_cast<std::size_t>(height) * width * channels) {
    throw UsageError("image buffer size does not match dims");
  }
  if (!all_finite()) throw NumericError("image contains non-finite pixels");
}

RegionMask::RegionMask(int h, int w, float fill)
    : height(h), width(w), weights(static_cast<std::size_t>(std::max(h, 0)) * std::max(w, 0), fill) {}

void RegionMask::validate() const {
  if (height <= 0 || width <= 0) throw UsageError("mask dims must be positive");
  if (weights.size() != static_cast<std::size_t>(height) * width) {
    throw UsageError("mask buffer size does not match dims");
  }
  bool any_positive = false;
  for (float v : weights) {
    if (!(v >= 0.0f && v <= 1.0f)) throw UsageError("mask weights must lie in [0, 1]");
    any_positive = any_positive || v > 0.0f;
  }
  if (!any_positive) throw UsageError("mask has no positive weight");
}

RegionMask center_crop_mask(int h, int w, int crop_h, int crop_w) {
  if (h <= 0 || w <= 0 || crop_h <= 0 || crop_w <= 0) throw UsageError("crop dims must be positive");
  if (crop_h > h || crop_w > w) throw UsageError("crop larger than image");
  RegionMask mask(h, w, 0.0f);
  const int top = (h - crop_h) / 2;
  const int left = (w - crop_w) / 2;
  for (int y = top; y < top + crop_h; ++y) {
    for (int x = left; x < left + crop_w; ++x) mask.at(y, x) = 1.0f;
  }
  return mask;
}

RegionMask erode_mask(const RegionMask& mask, int guard) {
  if (guard < 0) throw UsageError("guard must be nonnegative");
  RegionMask out(mask.height, mask.width, 0.0f);
  for (int y = 0; y < mask.height; ++y) {
    for (int x = 0; x < mask.width; ++x) {
      if (mask.at(y, x) <= 0.0f) continue;
      bool keep = true;
      for (int dy = -guard; dy <= guard && keep; ++dy) {
        for (int dx = -guard; dx <= guard && keep; ++dx) {
          const int yy = y + dy, xx = x + dx;
          keep = yy >= 0 && yy < mask.height && xx >= 0 && xx < mask.width && mask.at(yy, xx) > 0.0f;
        }
      }
      if (keep) out.at(y, x) = mask.at(y, x);
    }
  }
  return out;
}

std::uint64_t fnv1a64(std::span<const std::byte> bytes, std::uint64_t seed) {
  std::uint64_t h = seed;
  for (std::byte b : bytes) {
    h ^= static_cast<std::uint64_t>(b);
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t fnv1a64(std::string_view text) { return fnv1a64(std::as_bytes(std::span(text.data(), text.size()))); }

namespace {
std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}
}  // namespace

Rng Rng::fork(std::string_view label) const { return Rng(splitmix64(seed_ ^ fnv1a64(label))); }

std::uint64_t Rng::below(std::uint64_t n) {
  if (n == 0) throw UsageError("Rng::below(0)");
  // Rejection sampling keeps the draw unbiased.
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % n;
  std::uint64_t v;
  do {
    v = engine_();
  } while (v >= limit);
  return v % n;
}

double Rng::normal() {
  if (spare_) {
    const double v = *spare_;
    spare_.reset();
    return v;
  }
  double u1;
  do {
    u1 = uniform();
  } while (u1 <= 0.0);
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double theta = 2.0 * std::numbers::pi * u2;
  spare_ = r * std::sin(theta);
  return r * std::cos(theta);
}

void Rng::fill_normal(std::span<float> out, float stddev) {
  for (float& v : out) v = static_cast<float>(normal()) * stddev;
}

// --- key/value config --------------------------------------------------------

const std::vector<std::string>& KeyValueConfig::known_keys() {
  static const std::vector<std::string> keys = {"seed",     "p",         "lambda", "gamma",
                                                "epsilon",  "max_iters", "lr_g",   "lr_d",
                                                "batch_size", "levels",  "crop"};
  return keys;
}

namespace {
std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}
}  // namespace

KeyValueConfig KeyValueConfig::parse(std::string_view text) {
  KeyValueConfig cfg;
  std::istringstream in{std::string(text)};
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const std::string stripped = trim(line);
    if (stripped.empty()) continue;
    const auto eq = stripped.find('=');
    if (eq == std::string::npos) {
      throw UsageError("config line " + std::to_string(lineno) + ": expected key = value");
    }
    cfg.set(trim(std::string_view(stripped).substr(0, eq)), trim(std::string_view(stripped).substr(eq + 1)));
  }
  return cfg;
}

KeyValueConfig KeyValueConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

void KeyValueConfig::set(const std::string& key, const std::string& value) {
  const auto& keys = known_keys();
  if (std::find(keys.begin(), keys.end(), key) == keys.end()) throw UsageError("unknown config key '" + key + "'");
  if (value.empty()) throw UsageError("empty value for config key '" + key + "'");
  values_[key] = value;
}

std::optional<std::string> KeyValueConfig::get(const std::string& key) const {
  if (auto it = values_.find(key); it != values_.end()) return it->second;
  return std::nullopt;
}

void tune_allocator() {
#if defined(__GLIBC__)
  mallopt(M_MMAP_THRESHOLD, 1 << 30);
  mallopt(M_TRIM_THRESHOLD, 1 << 30);
  mallopt(M_TOP_PAD, 64 << 20);
#endif
}

double parse_real(std::string_view text) {
  const std::string s = trim(text);
  auto parse_one = [](std::string_view part) {
    double v = 0.0;
    const auto* first = part.data();
    const auto* last = part.data() + part.size();
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || ptr != last) throw UsageError("not a number: '" + std::string(part) + "'");
    return v;
  };
  if (auto slash = s.find('/'); slash != std::string::npos) {
    const double den = parse_one(trim(std::string_view(s).substr(slash + 1)));
    if (den == 0.0) throw UsageError("zero denominator in '" + s + "'");
    return parse_one(trim(std::string_view(s).substr(0, slash))) / den;
  }
  return parse_one(s);
}

std::optional<double> KeyValueConfig::get_double(const std::string& key) const {
  if (auto v = get(key)) return parse_real(*v);
  return std::nullopt;
}

std::optional<std::int64_t> KeyValueConfig::get_int(const std::string& key) const {
  auto v = get(key);
  if (!v) return std::nullopt;
  std::int64_t out = 0;
  auto [ptr, ec] = std::from_chars(v->data(), v->data() + v->size(), out);
  if (ec != std::errc() || ptr != v->data() + v->size()) {
    throw UsageError("config key '" + key + "' expects an integer, got '" + *v + "'");
  }
  return out;
}

void KeyValueConfig::merge(const KeyValueConfig& overrides) {
  for (const auto& [k, v] : overrides.values_) values_[k] = v;
}

std::string KeyValueConfig::to_string() const {
  std::string out;
  for (const auto& [k, v] : values_) out += k + " = " + v + "\n";
  return out;
}

void KeyValueConfig::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write config " + path.string());
  out << to_string();
}

}  // namespace gclone
