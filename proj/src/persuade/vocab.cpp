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

#include "persuade/vocab.hpp"

#include <algorithm>
#include <map>

#include "persuade/corpus.hpp"
#include "persuade/error.hpp"

namespace persuade {

Vocabulary::Vocabulary() : Vocabulary(std::vector<std::string>{}) {}

Vocabulary::Vocabulary(std::vector<std::string> tokens) {
    const std::vector<std::string> specials = {"<pad>", "<bos>", "<eos>", "<unk>"};
    if (tokens.size() >= specials.size() && std::equal(specials.begin(), specials.end(), tokens.begin())) {
        tokens_ = std::move(tokens);
    } else {
        tokens_ = specials;
        tokens_.insert(tokens_.end(), tokens.begin(), tokens.end());
    }
    for (std::size_t i = 0; i < tokens_.size(); ++i) {
        if (!index_.emplace(tokens_[i], static_cast<int>(i)).second)
            throw VocabError("duplicate vocabulary token '" + tokens_[i] + "'");
    }
}

Vocabulary Vocabulary::build(std::span<const std::string> sentences, int min_freq) {
    std::map<std::string, int> counts;
    for (const auto& s : sentences)
        for (auto& tok : tokenize_sentence(s)) ++counts[tok];
    std::vector<std::pair<std::string, int>> kept;
    for (auto& [tok, n] : counts)
        if (n >= min_freq && tok.front() != '<') kept.emplace_back(tok, n);
    std::stable_sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
    std::vector<std::string> tokens;
    tokens.reserve(kept.size());
    for (auto& [tok, n] : kept) tokens.push_back(tok);
    return Vocabulary(std::move(tokens));
}

int Vocabulary::id(std::string_view token) const {
    auto it = index_.find(std::string(token));
    return it == index_.end() ? kUnk : it->second;
}

std::vector<int> Vocabulary::encode(std::string_view sentence, int max_len) const {
    std::vector<int> out{kBos};
    for (const auto& tok : tokenize_sentence(sentence)) {
        if (static_cast<int>(out.size()) >= max_len - 1) break;
        out.push_back(id(tok));
    }
    out.push_back(kEos);
    return out;
}

std::string Vocabulary::decode(std::span<const int> ids) const {
    std::string out;
    for (int i : ids) {
        if (i == kEos) break;
        if (i == kBos || i == kPad) continue;
        if (i < 0 || i >= size()) throw VocabError("token id " + std::to_string(i) + " outside vocabulary");
        if (!out.empty()) out += ' ';
        out += tokens_[static_cast<std::size_t>(i)];
    }
    return out;
}

}  // namespace persuade
