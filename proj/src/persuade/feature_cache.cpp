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

#include "persuade/feature_cache.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>

#include "persuade/error.hpp"
#include "persuade/hashing.hpp"

namespace persuade {

namespace {

constexpr char kMagic[4] = {'P', 'S', 'F', 'C'};
constexpr std::uint32_t kVersion = 1;

template <class T>
void put_pod(std::string& out, T v) {
    out.append(reinterpret_cast<const char*>(&v), sizeof(T));
}

void put_matrix(std::string& out, const Matrix& m) {
    put_pod<std::uint32_t>(out, static_cast<std::uint32_t>(m.rows()));
    put_pod<std::uint32_t>(out, static_cast<std::uint32_t>(m.cols()));
    out.append(reinterpret_cast<const char*>(m.data()), sizeof(double) * static_cast<std::size_t>(m.size()));
}

class Reader {
public:
    explicit Reader(const std::string& s) : s_(s) {}
    template <class T>
    T pod() {
        if (pos_ + sizeof(T) > s_.size()) throw ParseError("feature cache: truncated blob");
        T v;
        std::memcpy(&v, s_.data() + pos_, sizeof(T));
        pos_ += sizeof(T);
        return v;
    }
    Matrix matrix() {
        const auto rows = pod<std::uint32_t>();
        const auto cols = pod<std::uint32_t>();
        const std::size_t n = static_cast<std::size_t>(rows) * cols;
        if (pos_ + n * sizeof(double) > s_.size()) throw ParseError("feature cache: truncated blob");
        Matrix m(rows, cols);
        std::memcpy(m.data(), s_.data() + pos_, n * sizeof(double));
        pos_ += n * sizeof(double);
        return m;
    }
    bool done() const { return pos_ == s_.size(); }

private:
    const std::string& s_;
    std::size_t pos_ = 0;
};

}  // namespace

std::string serialize_raw(const RawFeatures& raw) {
    std::string out(kMagic, 4);
    put_pod(out, kVersion);
    put_matrix(out, Matrix(raw.image.transpose()));
    put_matrix(out, raw.rois);
    put_matrix(out, raw.ocr);
    put_matrix(out, raw.captions);
    put_matrix(out, Matrix(raw.symbols.transpose()));
    return out;
}

RawFeatures deserialize_raw(const std::string& blob) {
    if (blob.size() < 8 || std::memcmp(blob.data(), kMagic, 4) != 0)
        throw ParseError("feature cache: bad magic");
    Reader r(blob);
    r.pod<std::uint32_t>();
    if (r.pod<std::uint32_t>() != kVersion) throw ParseError("feature cache: unsupported version");
    RawFeatures raw;
    raw.image = r.matrix().row(0).transpose();
    raw.rois = r.matrix();
    raw.ocr = r.matrix();
    raw.captions = r.matrix();
    raw.symbols = r.matrix().row(0).transpose();
    if (!r.done()) throw ParseError("feature cache: trailing bytes");
    return raw;
}

FeatureCache::FeatureCache(std::filesystem::path dir) : dir_(std::move(dir)) {
    std::filesystem::create_directories(dir_);
}

std::string FeatureCache::key(const std::string& sample_id, const std::string& suite_version,
                              const ExtractorConfig& cfg) const {
    return sha256_hex(sample_id + '\x1f' + suite_version + '\x1f' + cfg.canonical());
}

std::optional<RawFeatures> FeatureCache::get(const std::string& key) const {
    std::ifstream in(dir_ / (key + ".bin"), std::ios::binary);
    if (!in) return std::nullopt;
    std::stringstream ss;
    ss << in.rdbuf();
    try {
        return deserialize_raw(ss.str());
    } catch (const ParseError&) {
        return std::nullopt;  // corrupt entry: recompute
    }
}

void FeatureCache::put(const std::string& key, const RawFeatures& raw) const {
    const auto final_path = dir_ / (key + ".bin");
    const auto tmp = dir_ / (key + ".tmp");
    std::filesystem::create_directories(dir_);  // the directory may have been wiped underneath us
    {
        std::ofstream out(tmp, std::ios::binary);
        if (!out) throw IoError("cannot write " + tmp.string());
        const std::string blob = serialize_raw(raw);
        out.write(blob.data(), static_cast<std::streamsize>(blob.size()));
    }
    std::filesystem::rename(tmp, final_path);
}

}  // namespace persuade
