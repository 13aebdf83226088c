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

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "persuade/tensor.hpp"

namespace persuade {

struct Strategy {
    std::string id;
    std::string display_name;
    std::string group;
    std::string definition;
    /// Marker classes (e.g. "Unclear") are not persuasion strategies proper.
    bool marker = false;
};

struct StrategyGroup {
    std::string name;
    bool marker = false;
};

/// Ordered list of strategy ids, most prominent first. Equality is set-based.
class StrategySet {
public:
    StrategySet() = default;
    StrategySet(std::initializer_list<std::string> ids) : ids_(ids) {}
    explicit StrategySet(std::vector<std::string> ids) : ids_(std::move(ids)) {}

    const std::vector<std::string>& ids() const noexcept { return ids_; }
    std::size_t size() const noexcept { return ids_.size(); }
    bool empty() const noexcept { return ids_.empty(); }
    bool contains(std::string_view id) const;

    /// Ids sorted lexicographically; the canonical form used for comparison.
    std::vector<std::string> sorted() const;

    friend bool operator==(const StrategySet& a, const StrategySet& b) {
        return a.sorted() == b.sorted();
    }

private:
    std::vector<std::string> ids_;
};

inline constexpr std::size_t kMaxStrategiesPerAd = 3;

struct TaxonomyOptions {
    /// Keep marker classes such as "Unclear" as ordinary model classes.
    bool include_markers = true;
};

/// Immutable after construction; safe to share across threads.
class Taxonomy {
public:
    Taxonomy(std::vector<StrategyGroup> groups, std::vector<Strategy> strategies,
             TaxonomyOptions options = {});

    std::size_t size() const noexcept { return strategies_.size(); }
    const std::vector<Strategy>& strategies() const noexcept { return strategies_; }
    const std::vector<StrategyGroup>& groups() const noexcept { return groups_; }
    const Strategy& at(std::size_t index) const { return strategies_.at(index); }

    /// Number of non-marker strategies / groups.
    std::size_t strategy_count() const noexcept;
    std::size_t group_count() const noexcept;

    std::optional<std::size_t> find(std::string_view id) const;
    std::size_t index_of(std::string_view id) const;
    const std::unordered_map<std::string, std::size_t>& index() const noexcept { return index_; }

    /// Content hash over ids, groups and ordering; stable across restarts.
    const std::string& hash() const noexcept { return hash_; }

private:
    std::vector<StrategyGroup> groups_;
    std::vector<Strategy> strategies_;
    std::unordered_map<std::string, std::size_t> index_;
    std::string hash_;
};

/// Throws ParseError on malformed YAML, ValidationError on bad entries.
Taxonomy load_taxonomy(const std::filesystem::path& path, TaxonomyOptions options = {});
Taxonomy parse_taxonomy(std::string_view yaml_text, TaxonomyOptions options = {});

/// Path of the taxonomy shipped with the sources (data/taxonomy.yaml).
std::filesystem::path default_taxonomy_path();

/// nullopt when valid, otherwise a human-readable violation.
std::optional<std::string> validate_label_set(const StrategySet& s, const Taxonomy& t);

/// Multi-hot vector of length |P|. Throws ValidationError on invalid sets.
Vector encode_labels(const StrategySet& s, const Taxonomy& t);

/// Inverse of encode_labels; entries > 0.5 are present, emitted in taxonomy order.
StrategySet decode_labels(const Vector& y, const Taxonomy& t);

}  // namespace persuade
