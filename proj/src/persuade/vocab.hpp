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

#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace persuade {

/// Word-level vocabulary for the action-reason decoder.
class Vocabulary {
public:
    static constexpr int kPad = 0;
    static constexpr int kBos = 1;
    static constexpr int kEos = 2;
    static constexpr int kUnk = 3;

    /// Only the four special tokens.
    Vocabulary();
    explicit Vocabulary(std::vector<std::string> tokens);

    /// Words with frequency >= min_freq, ordered by descending count then
    /// lexicographically, after the specials.
    static Vocabulary build(std::span<const std::string> sentences, int min_freq = 2);

    int size() const noexcept { return static_cast<int>(tokens_.size()); }
    int id(std::string_view token) const;
    const std::string& token(int id) const { return tokens_.at(static_cast<std::size_t>(id)); }
    const std::vector<std::string>& tokens() const noexcept { return tokens_; }

    /// [<bos>, words..., <eos>], truncated so the total is at most max_len.
    std::vector<int> encode(std::string_view sentence, int max_len) const;
    /// Joins tokens up to the first <eos>, skipping <bos>/<pad>.
    std::string decode(std::span<const int> ids) const;

    friend bool operator==(const Vocabulary& a, const Vocabulary& b) { return a.tokens_ == b.tokens_; }

private:
    std::vector<std::string> tokens_;
    std::unordered_map<std::string, int> index_;
};

}  // namespace persuade
