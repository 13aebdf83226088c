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

#include "persuade/image.hpp"

#include <png.h>

#include <algorithm>
#include <cctype>
#include <csetjmp>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iterator>
#include <memory>
#include <string>

#include "persuade/error.hpp"

namespace persuade {

namespace {

std::vector<std::uint8_t> read_all(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DecodeError("cannot open image " + path.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

bool is_png(std::span<const std::uint8_t> b) {
    return b.size() >= 8 && png_sig_cmp(b.data(), 0, 8) == 0;
}

bool is_pnm(std::span<const std::uint8_t> b) {
    return b.size() >= 2 && b[0] == 'P' && (b[1] == '2' || b[1] == '3' || b[1] == '5' || b[1] == '6');
}

class PnmReader {
public:
    explicit PnmReader(std::span<const std::uint8_t> b) : b_(b) {}

    Image read() {
        const char kind = static_cast<char>(b_[1]);
        pos_ = 2;
        Image img;
        img.width = next_int();
        img.height = next_int();
        const int maxval = next_int();
        if (img.width <= 0 || img.height <= 0 || maxval <= 0 || maxval > 255)
            throw DecodeError("pnm: unsupported header");
        img.channels = (kind == '3' || kind == '6') ? 3 : 1;
        const std::size_t n = static_cast<std::size_t>(img.width) * img.height * img.channels;
        img.pixels.resize(n);
        if (kind == '5' || kind == '6') {
            ++pos_;  // single whitespace after maxval
            if (pos_ + n > b_.size()) throw DecodeError("pnm: truncated pixel data");
            std::memcpy(img.pixels.data(), b_.data() + pos_, n);
        } else {
            for (std::size_t i = 0; i < n; ++i) img.pixels[i] = static_cast<std::uint8_t>(next_int());
        }
        if (maxval != 255)
            for (auto& p : img.pixels) p = static_cast<std::uint8_t>(p * 255 / maxval);
        return img;
    }

private:
    void skip_space() {
        while (pos_ < b_.size()) {
            if (b_[pos_] == '#') {
                while (pos_ < b_.size() && b_[pos_] != '\n') ++pos_;
            } else if (std::isspace(b_[pos_])) {
                ++pos_;
            } else {
                break;
            }
        }
    }
    int next_int() {
        skip_space();
        if (pos_ >= b_.size() || !std::isdigit(b_[pos_])) throw DecodeError("pnm: malformed header");
        long v = 0;
        while (pos_ < b_.size() && std::isdigit(b_[pos_])) {
            v = v * 10 + (b_[pos_++] - '0');
            if (v > (1 << 24)) throw DecodeError("pnm: value out of range");
        }
        return static_cast<int>(v);
    }

    std::span<const std::uint8_t> b_;
    std::size_t pos_ = 0;
};

struct PngMemSource {
    std::span<const std::uint8_t> data;
    std::size_t pos = 0;
};

void png_read_mem(png_structp png, png_bytep out, png_size_t n) {
    auto* src = static_cast<PngMemSource*>(png_get_io_ptr(png));
    if (src->pos + n > src->data.size()) png_error(png, "truncated");
    std::memcpy(out, src->data.data() + src->pos, n);
    src->pos += n;
}

void png_warn_fn(png_structp, png_const_charp) {}
[[noreturn]] void png_quiet_error_fn(png_structp png, png_const_charp) { png_longjmp(png, 1); }

// libpng reports errors by longjmp back to the setjmp in the caller; no C++
// object with a non-trivial destructor may be constructed between the two.
Image decode_png(std::span<const std::uint8_t> bytes) {
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, png_quiet_error_fn, png_warn_fn);
    if (!png) throw DecodeError("png: cannot create reader");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_read_struct(&png, nullptr, nullptr);
        throw DecodeError("png: cannot create reader");
    }

    // Mutated after setjmp, so kept behind a pointer that is not.
    struct State {
        Image img;
        std::vector<png_bytep> rows;
        PngMemSource src;
    };
    const auto state = std::make_unique<State>();
    state->src = PngMemSource{bytes, 0};
    Image& img = state->img;
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw DecodeError("png: corrupt or truncated data");
    }
    png_set_read_fn(png, &state->src, png_read_mem);
    png_read_info(png, info);
    png_set_strip_16(png);
    png_set_packing(png);
    png_set_expand(png);
    png_set_strip_alpha(png);
    png_read_update_info(png, info);

    img.width = static_cast<int>(png_get_image_width(png, info));
    img.height = static_cast<int>(png_get_image_height(png, info));
    img.channels = png_get_channels(png, info);
    const std::size_t stride = png_get_rowbytes(png, info);
    img.pixels.resize(stride * img.height);
    state->rows.resize(img.height);
    for (int y = 0; y < img.height; ++y) state->rows[y] = img.pixels.data() + y * stride;
    png_read_image(png, state->rows.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);
    return std::move(img);
}

}  // namespace

Image decode_image_bytes(std::span<const std::uint8_t> bytes) {
    if (is_png(bytes)) return decode_png(bytes);
    if (is_pnm(bytes)) return PnmReader(bytes).read();
    throw DecodeError("unrecognised image format");
}

Image decode_image(const std::filesystem::path& path) {
    const auto bytes = read_all(path);
    try {
        return decode_image_bytes(bytes);
    } catch (const DecodeError& e) {
        throw DecodeError(path.string() + ": " + e.what());
    }
}

ImageSize probe_image_size(const std::filesystem::path& path) {
    const Image img = decode_image(path);
    return {img.width, img.height};
}

void write_ppm(const std::filesystem::path& path, const Image& img) {
    if (img.channels != 1 && img.channels != 3) throw InvalidArgumentError("write_ppm: need 1 or 3 channels");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    out << (img.channels == 3 ? "P6" : "P5") << '\n' << img.width << ' ' << img.height << "\n255\n";
    out.write(reinterpret_cast<const char*>(img.pixels.data()), static_cast<std::streamsize>(img.pixels.size()));
}

void write_png(const std::filesystem::path& path, const Image& img) {
    if (img.channels != 1 && img.channels != 3) throw InvalidArgumentError("write_png: need 1 or 3 channels");
    std::unique_ptr<FILE, int (*)(FILE*)> fp(std::fopen(path.c_str(), "wb"), &std::fclose);
    if (!fp) throw IoError("cannot write " + path.string());
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, png_warn_fn);
    if (!png) throw IoError("png: cannot create writer");
    png_infop info = png_create_info_struct(png);
    if (!info || setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw IoError("png: write failed for " + path.string());
    }
    png_init_io(png, fp.get());
    png_set_IHDR(png, info, img.width, img.height, 8,
                 img.channels == 3 ? PNG_COLOR_TYPE_RGB : PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE,
                 PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    const std::size_t stride = static_cast<std::size_t>(img.width) * img.channels;
    for (int y = 0; y < img.height; ++y)
        png_write_row(png, const_cast<png_bytep>(img.pixels.data() + y * stride));
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

Image resize_square(const Image& img, int side) {
    Image out;
    out.width = out.height = side;
    out.channels = img.channels;
    out.pixels.resize(static_cast<std::size_t>(side) * side * img.channels);
    for (int y = 0; y < side; ++y) {
        const int sy = std::min(img.height - 1, y * img.height / side);
        for (int x = 0; x < side; ++x) {
            const int sx = std::min(img.width - 1, x * img.width / side);
            for (int c = 0; c < img.channels; ++c)
                out.pixels[(static_cast<std::size_t>(y) * side + x) * img.channels + c] = img.at(sx, sy, c);
        }
    }
    return out;
}

bool is_uniform(const Image& img) {
    if (img.pixels.empty()) return true;
    const std::size_t ch = static_cast<std::size_t>(img.channels);
    for (std::size_t i = ch; i < img.pixels.size(); ++i)
        if (img.pixels[i] != img.pixels[i % ch]) return false;
    return true;
}

}  // namespace persuade
