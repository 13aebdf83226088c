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

#include "persuade/mask.hpp"

#include <fstream>
#include <numeric>
#include <sstream>

#include "persuade/error.hpp"
#include "persuade/image.hpp"

namespace persuade {

BinaryMask::BinaryMask(int w, int h) : width(w), height(h) {
    if (w < 0 || h < 0) throw ValidationError("mask: negative dimensions");
    bits.assign(static_cast<std::size_t>(w) * static_cast<std::size_t>(h), 0);
}

std::size_t BinaryMask::count() const {
    return static_cast<std::size_t>(std::count(bits.begin(), bits.end(), std::uint8_t{1}));
}

RleMask encode_rle(const BinaryMask& m) {
    RleMask r{m.width, m.height, {}};
    std::uint8_t current = 0;
    std::uint32_t run = 0;
    for (auto b : m.bits) {
        const std::uint8_t v = b ? 1 : 0;
        if (v != current) {
            r.counts.push_back(run);
            run = 0;
            current = v;
        }
        ++run;
    }
    r.counts.push_back(run);
    return r;
}

BinaryMask decode_rle(const RleMask& r) {
    if (r.width < 0 || r.height < 0) throw ValidationError("mask: negative dimensions");
    const std::uint64_t total = static_cast<std::uint64_t>(r.width) * static_cast<std::uint64_t>(r.height);
    const std::uint64_t covered = std::accumulate(r.counts.begin(), r.counts.end(), std::uint64_t{0});
    if (covered != total)
        throw ValidationError("mask: runs cover " + std::to_string(covered) + " pixels, raster has " +
                              std::to_string(total));
    BinaryMask m(r.width, r.height);
    std::size_t pos = 0;
    std::uint8_t v = 0;
    for (auto c : r.counts) {
        std::fill_n(m.bits.begin() + static_cast<std::ptrdiff_t>(pos), c, v);
        pos += c;
        v ^= 1;
    }
    return m;
}

std::string rle_to_string(const RleMask& r) {
    std::ostringstream os;
    os << r.width << ' ' << r.height;
    for (auto c : r.counts) os << ' ' << c;
    return os.str();
}

RleMask rle_from_string(const std::string& s) {
    std::istringstream is(s);
    RleMask r;
    if (!(is >> r.width >> r.height)) throw ParseError("mask: missing dimensions in RLE text");
    long long c;
    while (is >> c) {
        if (c < 0 || c > 0xffffffffLL) throw ParseError("mask: run length out of range");
        r.counts.push_back(static_cast<std::uint32_t>(c));
    }
    if (!is.eof()) throw ParseError("mask: non-numeric token in RLE text");
    return r;
}

BinaryMask import_mask(const std::filesystem::path& path) {
    const Image img = decode_image(path);
    BinaryMask m(img.width, img.height);
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x) {
            bool on = false;
            for (int c = 0; c < img.channels; ++c) on = on || img.at(x, y, c) != 0;
            m.set(x, y, on);
        }
    return m;
}

void export_mask_png(const std::filesystem::path& path, const BinaryMask& m) {
    Image img;
    img.width = m.width;
    img.height = m.height;
    img.channels = 1;
    img.pixels.resize(m.bits.size());
    for (std::size_t i = 0; i < m.bits.size(); ++i) img.pixels[i] = m.bits[i] ? 255 : 0;
    write_png(path, img);
}

void export_mask_pgm(const std::filesystem::path& path, const BinaryMask& m) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("mask: cannot write " + path.string());
    os << "P5\n" << m.width << ' ' << m.height << "\n255\n";
    for (auto b : m.bits) os.put(static_cast<char>(b ? 255 : 0));
}

double pixel_dice(const BinaryMask& a, const BinaryMask& b) {
    if (a.width != b.width || a.height != b.height)
        throw DimensionMismatchError("mask: " + std::to_string(a.width) + "x" + std::to_string(a.height) + " vs " +
                                     std::to_string(b.width) + "x" + std::to_string(b.height));
    std::size_t both = 0, na = 0, nb = 0;
    for (std::size_t i = 0; i < a.bits.size(); ++i) {
        na += a.bits[i];
        nb += b.bits[i];
        both += a.bits[i] & b.bits[i];
    }
    if (na + nb == 0) throw DegenerateError("mask: both masks are empty");
    return 2.0 * static_cast<double>(both) / static_cast<double>(na + nb);
}

}  // namespace persuade
