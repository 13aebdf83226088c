// Copyright 2026 The Persuade Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace persuade {

/// 8-bit interleaved raster.
struct Image {
    int width = 0;
    int height = 0;
    int channels = 0;
    std::vector<std::uint8_t> pixels;

    std::uint8_t at(int x, int y, int c) const {
        return pixels[(static_cast<std::size_t>(y) * width + x) * channels + c];
    }
    bool empty() const noexcept { return width == 0 || height == 0; }
};

/// Decodes PNG or binary/ASCII PNM (P2, P3, P5, P6). Throws DecodeError.
Image decode_image(const std::filesystem::path& path);
Image decode_image_bytes(std::span<const std::uint8_t> bytes);

/// Reads only the header; cheaper than a full decode.
struct ImageSize {
    int width = 0;
    int height = 0;
};
ImageSize probe_image_size(const std::filesystem::path& path);

void write_ppm(const std::filesystem::path& path, const Image& img);
/// Grayscale or RGB PNG, depending on `img.channels` (1 or 3).
void write_png(const std::filesystem::path& path, const Image& img);

/// Nearest-neighbour resample to side x side.
Image resize_square(const Image& img, int side);

/// True when every pixel equals the first one.
bool is_uniform(const Image& img);

}  // namespace persuade
