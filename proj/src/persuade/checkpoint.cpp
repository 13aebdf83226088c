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

#include "persuade/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <map>

#include "persuade/hashing.hpp"
#include "persuade/json_io.hpp"

namespace persuade {

namespace {

constexpr char kMagic[4] = {'P', 'S', 'C', 'K'};
constexpr std::uint32_t kVersion = 1;

template <class T>
void write_pod(std::ostream& os, const T& v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T read_pod(std::istream& is) {
    T v{};
    if (!is.read(reinterpret_cast<char*>(&v), sizeof(T))) throw ParseError("checkpoint: truncated header");
    return v;
}

}  // namespace

std::string save_checkpoint(const std::filesystem::path& path, const FusionModel& model, const TrainConfig& train) {
    Json params = Json::array();
    const auto ps = model.parameters();
    for (const Parameter* p : ps) params.push_back({{"name", p->name}, {"rows", p->value.rows()}, {"cols", p->value.cols()}});
    const Json header{{"model_config", model.config()},
                      {"train_config", train},
                      {"class_ids", model.class_ids()},
                      {"taxonomy_hash", model.taxonomy_hash()},
                      {"vocab", model.vocab().tokens()},
                      {"params", params}};
    const std::string text = header.dump();

    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
        if (!os) throw IoError("checkpoint: cannot write " + tmp.string());
        os.write(kMagic, 4);
        write_pod(os, kVersion);
        write_pod(os, static_cast<std::uint64_t>(text.size()));
        os.write(text.data(), static_cast<std::streamsize>(text.size()));
        for (const Parameter* p : ps)
            os.write(reinterpret_cast<const char*>(p->value.data()),
                     static_cast<std::streamsize>(p->value.size() * sizeof(double)));
        if (!os) throw IoError("checkpoint: write failed for " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
    return sha256_file(path);
}

LoadedCheckpoint load_checkpoint(const std::filesystem::path& path,
                                 const std::optional<std::string>& expected_taxonomy_hash) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw NotFoundError("checkpoint: cannot open " + path.string());
    char magic[4];
    if (!is.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0) throw ParseError("checkpoint: bad magic");
    if (read_pod<std::uint32_t>(is) != kVersion) throw ParseError("checkpoint: unsupported version");
    const auto len = read_pod<std::uint64_t>(is);
    if (len > (1ULL << 30)) throw ParseError("checkpoint: implausible header length");
    std::string text(len, '\0');
    if (!is.read(text.data(), static_cast<std::streamsize>(len))) throw ParseError("checkpoint: truncated header");

    Json header;
    try {
        header = Json::parse(text);
    } catch (const Json::exception& e) {
        throw ParseError(std::string("checkpoint: header: ") + e.what());
    }

    const auto tax_hash = header.at("taxonomy_hash").get<std::string>();
    if (expected_taxonomy_hash && *expected_taxonomy_hash != tax_hash)
        throw TaxonomyMismatchError("checkpoint was trained against taxonomy " + tax_hash.substr(0, 12) +
                                    ", active taxonomy is " + expected_taxonomy_hash->substr(0, 12));

    LoadedCheckpoint out;
    const auto cfg = header.at("model_config").get<ModelConfig>();
    out.train_config = header.at("train_config").get<TrainConfig>();
    out.model = std::make_unique<FusionModel>(cfg, header.at("class_ids").get<std::vector<std::string>>(), tax_hash,
                                              Vocabulary(header.at("vocab").get<std::vector<std::string>>()), 0);

    std::map<std::string, Parameter*> by_name;
    for (Parameter* p : out.model->parameters()) by_name[p->name] = p;
    const auto& params = header.at("params");
    if (params.size() != by_name.size()) throw ParseError("checkpoint: parameter count does not match model");
    for (const auto& entry : params) {
        auto it = by_name.find(entry.at("name").get<std::string>());
        if (it == by_name.end()) throw ParseError("checkpoint: unknown parameter " + entry.at("name").dump());
        Parameter& p = *it->second;
        if (p.value.rows() != entry.at("rows").get<Eigen::Index>() || p.value.cols() != entry.at("cols").get<Eigen::Index>())
            throw ParseError("checkpoint: shape mismatch for " + p.name);
        if (!is.read(reinterpret_cast<char*>(p.value.data()), static_cast<std::streamsize>(p.value.size() * sizeof(double))))
            throw ParseError("checkpoint: truncated parameter data");
    }
    is.close();
    out.hash = sha256_file(path);
    return out;
}

}  // namespace persuade
