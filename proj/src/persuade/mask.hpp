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
#include <string>
#include <vector>

namespace persuade {

/// Row-major binary raster.
struct BinaryMask {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> bits;  // 0 or 1, width*height

    BinaryMask() = default;
    BinaryMask(int w, int h);
    bool at(int x, int y) const { return bits[static_cast<std::size_t>(y) * width + x] != 0; }
    void set(int x, int y, bool v) { bits[static_cast<std::size_t>(y) * width + x] = v ? 1 : 0; }
    std::size_t count() const;
    friend bool operator==(const BinaryMask&, const BinaryMask&) = default;
};

/// Alternating run lengths over the row-major raster, starting with a run of
/// zeros (possibly empty).
struct RleMask {
    int width = 0;
    int height = 0;
    std::vector<std::uint32_t> counts;
    friend bool operator==(const RleMask&, const RleMask&) = default;
};

RleMask encode_rle(const BinaryMask& m);
/// Throws ValidationError when the runs do not cover exactly width*height pixels.
BinaryMask decode_rle(const RleMask& r);

/// Compact text form "W H c0 c1 ...". Throws ParseError.
std::string rle_to_string(const RleMask& r);
RleMask rle_from_string(const std::string& s);

/// Non-zero pixels (any channel) are foreground. PNG and PNM are accepted.
BinaryMask import_mask(const std::filesystem::path& path);
/// Writes an 8-bit grayscale PNG (foreground 255).
void export_mask_png(const std::filesystem::path& path, const BinaryMask& m);
/// Writes a binary PGM (P5).
void export_mask_pgm(const std::filesystem::path& path, const BinaryMask& m);

/// Dice over foreground pixel sets. Throws DimensionMismatch on differing
/// sizes and DegenerateError when both masks are empty.
double pixel_dice(const BinaryMask& a, const BinaryMask& b);

}  // namespace persuade
