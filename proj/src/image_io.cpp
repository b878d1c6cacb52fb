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


#include "gclone/image_io.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>

namespace gclone {

std::uint8_t pixel_to_byte(float v) {
  const double scaled = (std::clamp(static_cast<double>(v), -1.0, 1.0) + 1.0) * 0.5 * 255.0;
  return static_cast<std::uint8_t>(std::clamp<long>(std::lround(scaled), 0, 255));
}

std::vector<std::uint8_t> to_bytes(const Image& img) {
  std::vector<std::uint8_t> out(img.size());
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      for (int c = 0; c < img.channels; ++c) {
        out[(static_cast<std::size_t>(y) * img.width + x) * img.channels + c] = pixel_to_byte(img.at(c, y, x));
      }
    }
  }
  return out;
}

Image from_bytes(const std::vector<std::uint8_t>& bytes, int height, int width, int channels) {
  if (bytes.size() != static_cast<std::size_t>(height) * width * channels) {
    throw UsageError("raster size does not match dims");
  }
  Image img(height, width, channels);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      for (int c = 0; c < channels; ++c) {
        img.at(c, y, x) = byte_to_pixel(bytes[(static_cast<std::size_t>(y) * width + x) * channels + c]);
      }
    }
  }
  return img;
}

Image quantize(const Image& img) {
  Image out = img;
  for (float& v : out.pixels) v = byte_to_pixel(pixel_to_byte(v));
  return out;
}

Image load_image(const std::filesystem::path& path) {
  png_image png{};
  png.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&png, path.c_str())) {
    throw IoError("cannot read image " + path.string() + ": " + png.message);
  }
  const bool color = (png.format & PNG_FORMAT_FLAG_COLOR) != 0;
  png.format = color ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  const int channels = color ? 3 : 1;
  std::vector<std::uint8_t> buffer(PNG_IMAGE_SIZE(png));
  if (!png_image_finish_read(&png, nullptr, buffer.data(), 0, nullptr)) {
    const std::string msg = png.message;
    png_image_free(&png);
    throw IoError("cannot decode image " + path.string() + ": " + msg);
  }
  return from_bytes(buffer, static_cast<int>(png.height), static_cast<int>(png.width), channels);
}

void save_image(const Image& img, const std::filesystem::path& path) {
  img.validate();
  const auto bytes = to_bytes(img);
  png_image png{};
  png.version = PNG_IMAGE_VERSION;
  png.width = static_cast<png_uint_32>(img.width);
  png.height = static_cast<png_uint_32>(img.height);
  png.format = img.channels == 3 ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  if (!png_image_write_to_file(&png, path.c_str(), 0, bytes.data(), 0, nullptr)) {
    throw IoError("cannot write image " + path.string() + ": " + png.message);
  }
}

std::vector<Image> load_image_dir(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw IoError("not a directory: " + dir.string());
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".png") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<Image> images;
  images.reserve(files.size());
  for (const auto& f : files) images.push_back(load_image(f));
  return images;
}

}  // namespace gclone
