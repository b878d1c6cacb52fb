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
#include <vector>

#include "gclone/core.hpp"

namespace gclone {

// 8-bit <-> canonical range. Encoding rounds to nearest, ties away from zero.
inline float byte_to_pixel(std::uint8_t v) { return 2.0f * (static_cast<float>(v) / 255.0f) - 1.0f; }
std::uint8_t pixel_to_byte(float v);

/// Reads an 8-bit gray, gray+alpha, RGB or RGBA PNG. Alpha is dropped.
Image load_image(const std::filesystem::path& path);
void save_image(const Image& img, const std::filesystem::path& path);

/// Channel-last 8-bit raster, the interchange layout written to PNG.
std::vector<std::uint8_t> to_bytes(const Image& img);
Image from_bytes(const std::vector<std::uint8_t>& bytes, int height, int width, int channels);

/// Clamps to [-1, 1] and snaps every pixel to the nearest 8-bit level.
Image quantize(const Image& img);

/// Loads every PNG in a directory, sorted by file name.
std::vector<Image> load_image_dir(const std::filesystem::path& dir);

}  // namespace gclone
