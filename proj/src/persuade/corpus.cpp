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

#include "persuade/corpus.hpp"

#include "json.hpp"

#include <cctype>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "persuade/error.hpp"

namespace persuade {

using nlohmann::json;

namespace {

std::string resolve_ref(const std::string& ref, const std::filesystem::path& base_dir) {
    if (ref.empty() || base_dir.empty()) return ref;
    if (ref.find("://") != std::string::npos) return ref;
    std::filesystem::path p(ref);
    if (p.is_absolute()) return p.lexically_normal().string();
    return (base_dir / p).lexically_normal().string();
}

AdSample from_json_value(const json& j, const std::filesystem::path& base_dir) {
    if (!j.is_object()) throw ParseError("manifest record must be a JSON object");
    AdSample s;
    if (!j.contains("sample_id") || !j["sample_id"].is_string())
        throw ParseError("manifest record lacks string 'sample_id'");
    s.sample_id = j["sample_id"].get<std::string>();
    if (s.sample_id.empty()) throw ParseError("manifest record has empty 'sample_id'");
    s.image_ref = resolve_ref(j.value("image_ref", std::string()), base_dir);
    s.ocr_text = j.value("ocr_text", std::string());
    if (j.contains("topic_tags") && !j["topic_tags"].is_null())
        s.topic_tags = j["topic_tags"].get<std::vector<std::string>>();
    if (j.contains("gold_action_reason") && !j["gold_action_reason"].is_null()) {
        const auto& g = j["gold_action_reason"];
        if (g.is_array()) {
            std::string joined;
            for (const auto& tok : g) {
                if (!joined.empty()) joined += ' ';
                joined += tok.get<std::string>();
            }
            s.gold_action_reason = joined;
        } else {
            s.gold_action_reason = g.get<std::string>();
        }
    }
    if (j.contains("gold_labels") && !j["gold_labels"].is_null())
        s.gold_labels = StrategySet(j["gold_labels"].get<std::vector<std::string>>());
    s.split = j.value("split", std::string("train"));
    if (s.split != "train" && s.split != "val" && s.split != "test")
        throw ParseError("sample '" + s.sample_id + "': split must be train, val or test");
    return s;
}

}  // namespace

AdSample sample_from_json(std::string_view text, const std::filesystem::path& base_dir) {
    try {
        return from_json_value(json::parse(text), base_dir);
    } catch (const json::exception& e) {
        throw ParseError(e.what());
    }
}

std::string sample_to_json(const AdSample& s) {
    json j{{"sample_id", s.sample_id}, {"image_ref", s.image_ref}, {"ocr_text", s.ocr_text},
           {"split", s.split}};
    if (s.topic_tags) j["topic_tags"] = *s.topic_tags;
    if (s.gold_action_reason) j["gold_action_reason"] = *s.gold_action_reason;
    if (s.gold_labels) j["gold_labels"] = s.gold_labels->ids();
    return j.dump();
}

std::vector<AdSample> parse_manifest(std::string_view text, const std::filesystem::path& base_dir) {
    std::vector<AdSample> out;
    std::map<std::string, int> counts;
    std::istringstream in{std::string(text)};
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos || line[first] == '#') continue;
        try {
            out.push_back(from_json_value(json::parse(line), base_dir));
        } catch (const json::exception& e) {
            throw ParseError("manifest line " + std::to_string(lineno) + ": " + e.what());
        } catch (const ParseError& e) {
            throw ParseError("manifest line " + std::to_string(lineno) + ": " + e.what());
        }
        ++counts[out.back().sample_id];
    }
    std::string dups;
    for (const auto& [id, n] : counts) {
        if (n > 1) dups += (dups.empty() ? "" : ", ") + id;
    }
    if (!dups.empty()) throw DuplicateIdError("duplicate sample ids in manifest: " + dups);
    return out;
}

std::vector<AdSample> read_manifest(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open manifest " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_manifest(ss.str(), std::filesystem::absolute(path).parent_path());
}

void write_manifest(const std::filesystem::path& path, const std::vector<AdSample>& samples) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    for (const auto& s : samples) out << sample_to_json(s) << '\n';
}

std::vector<std::string> split_words(std::string_view text) {
    std::vector<std::string> words;
    std::string cur;
    for (char c : text) {
        if (std::isspace(static_cast<unsigned char>(c))) {
            if (!cur.empty()) words.push_back(std::move(cur));
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    if (!cur.empty()) words.push_back(std::move(cur));
    return words;
}

std::vector<std::string> tokenize_sentence(std::string_view text) {
    std::vector<std::string> out;
    for (auto& w : split_words(text)) {
        std::size_t b = 0, e = w.size();
        while (b < e && std::ispunct(static_cast<unsigned char>(w[b]))) ++b;
        while (e > b && std::ispunct(static_cast<unsigned char>(w[e - 1]))) --e;
        if (b == e) continue;
        std::string tok = w.substr(b, e - b);
        for (auto& c : tok) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
        out.push_back(std::move(tok));
    }
    return out;
}

}  // namespace persuade
