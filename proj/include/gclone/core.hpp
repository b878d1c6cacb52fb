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

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace gclone {

// Error categories map onto CLI exit codes (usage 1, numeric 2, io 3).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};
class UsageError : public Error {
 public:
  using Error::Error;
};
class NumericError : public Error {
 public:
  using Error::Error;
};
class IoError : public Error {
 public:
  using Error::Error;
};

/// Planar (channel-major) image with pixels in the canonical range [-1, 1].
struct Image {
  int height = 0;
  int width = 0;
  int channels = 0;
  std::vector<float> pixels;  // [c][y][x]

  Image() = default;
  Image(int h, int w, int c, float fill = 0.0f);

  static Image constant(int h, int w, int c, float value) { return Image(h, w, c, value); }

  std::size_t plane_size() const { return static_cast<std::size_t>(height) * width; }
  std::size_t size() const { return pixels.size(); }

  float& at(int c, int y, int x) { return pixels[(static_cast<std::size_t>(c) * height + y) * width + x]; }
  float at(int c, int y, int x) const {
    return pixels[(static_cast<std::size_t>(c) * height + y) * width + x];
  }
  std::span<float> plane(int c) { return {pixels.data() + c * plane_size(), plane_size()}; }
  std::span<const float> plane(int c) const { return {pixels.data() + c * plane_size(), plane_size()}; }

  bool same_shape(const Image& o) const {
    return height == o.height && width == o.width && channels == o.channels;
  }
  bool all_finite() const;
  bool in_range(float lo = -1.0f, float hi = 1.0f) const;

  // Throws UsageError on bad dims, channel count or buffer size and
  // NumericError on non-finite pixels.
  void validate() const;

  bool operator==(const Image&) const = default;
};

/// Per-pixel weights in [0, 1] sharing an image's spatial dims.
struct RegionMask {
  int height = 0;
  int width = 0;
  std::vector<float> weights;  // [y][x]

  RegionMask() = default;
  RegionMask(int h, int w, float fill = 1.0f);

  float& at(int y, int x) { return weights[static_cast<std::size_t>(y) * width + x]; }
  float at(int y, int x) const { return weights[static_cast<std::size_t>(y) * width + x]; }

  void validate() const;
  bool matches(const Image& img) const { return img.height == height && img.width == width; }
};

/// Ones inside the centered crop_h x crop_w window, zero outside.
RegionMask center_crop_mask(int h, int w, int crop_h, int crop_w);

/// Shrinks the positive support of a mask by `guard` pixels on every side.
RegionMask erode_mask(const RegionMask& mask, int guard);

// --- randomness ------------------------------------------------------------

std::uint64_t fnv1a64(std::span<const std::byte> bytes, std::uint64_t seed = 0xcbf29ce484222325ULL);
std::uint64_t fnv1a64(std::string_view text);

/// Deterministic random stream. Draws are produced with explicit bit
/// manipulation so sequences do not depend on the standard library's
/// distribution implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : seed_(seed), engine_(seed) {}

  std::uint64_t seed() const { return seed_; }

  /// Independent stream derived from this stream's seed and a label; does not
  /// advance this stream.
  Rng fork(std::string_view label) const;

  std::uint64_t next_u64() { return engine_(); }
  /// Uniform in [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n);
  double normal();
  void fill_normal(std::span<float> out, float stddev = 1.0f);

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
  std::optional<double> spare_;
};

struct RunConfig {
  std::uint64_t seed = 0;
  std::string device = "cpu";
  std::filesystem::path output_dir = ".";
};

// --- flat key/value configuration -------------------------------------------

/// `key = value` lines, `#` comments. Unknown keys are rejected so typos do
/// not silently fall back to defaults.
class KeyValueConfig {
 public:
  static const std::vector<std::string>& known_keys();

  static KeyValueConfig parse(std::string_view text);
  static KeyValueConfig load(const std::filesystem::path& path);

  void set(const std::string& key, const std::string& value);
  bool has(const std::string& key) const { return values_.count(key) != 0; }
  std::optional<std::string> get(const std::string& key) const;
  std::optional<double> get_double(const std::string& key) const;
  std::optional<std::int64_t> get_int(const std::string& key) const;

  /// Later values win.
  void merge(const KeyValueConfig& overrides);
  std::string to_string() const;
  void save(const std::filesystem::path& path) const;

  const std::map<std::string, std::string>& values() const { return values_; }

 private:
  std::map<std::string, std::string> values_;
};

/// Keeps large freed buffers in the heap instead of returning them to the OS;
/// the training loops reallocate the same large activations every step.
void tune_allocator();

/// Parses "p" style values; accepts fractions such as "1/8".
double parse_real(std::string_view text);

}  // namespace gclone
