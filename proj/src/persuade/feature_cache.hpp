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

#include "persuade/features.hpp"

namespace persuade {

/// Per-sample binary blobs keyed by (sample_id, extractor version, config).
/// Changing the adapter version or any config field changes the key, so
/// stale entries are never read.
class FeatureCache {
public:
    explicit FeatureCache(std::filesystem::path dir);

    std::string key(const std::string& sample_id, const std::string& suite_version,
                    const ExtractorConfig& cfg) const;

    std::optional<RawFeatures> get(const std::string& key) const;
    void put(const std::string& key, const RawFeatures& raw) const;

    const std::filesystem::path& dir() const noexcept { return dir_; }

private:
    std::filesystem::path dir_;
};

std::string serialize_raw(const RawFeatures& raw);
/// Throws ParseError on a corrupt blob.
RawFeatures deserialize_raw(const std::string& blob);

}  // namespace persuade
