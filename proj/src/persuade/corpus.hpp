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

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "persuade/taxonomy.hpp"

namespace persuade {

/// One advertisement in a user-supplied corpus.
struct AdSample {
    std::string sample_id;
    /// Resolved path (manifest-relative references are made absolute on load).
    std::string image_ref;
    std::string ocr_text;
    std::optional<std::vector<std::string>> topic_tags;
    /// "I should ... because ..." statement used by the auxiliary decoder.
    std::optional<std::string> gold_action_reason;
    std::optional<StrategySet> gold_labels;
    /// train | val | test
    std::string split = "train";
};

/// Parses a line-delimited JSON manifest. Blank lines and lines starting
/// with '#' are skipped. Throws ParseError (with line number) or
/// DuplicateIdError listing every colliding id.
std::vector<AdSample> read_manifest(const std::filesystem::path& path);
std::vector<AdSample> parse_manifest(std::string_view text, const std::filesystem::path& base_dir);

void write_manifest(const std::filesystem::path& path, const std::vector<AdSample>& samples);

std::string sample_to_json(const AdSample& s);
AdSample sample_from_json(std::string_view json, const std::filesystem::path& base_dir = {});

/// Lower-cases and splits on whitespace, trimming surrounding punctuation.
std::vector<std::string> tokenize_sentence(std::string_view text);

/// Whitespace-delimited words, in order.
std::vector<std::string> split_words(std::string_view text);

}  // namespace persuade
