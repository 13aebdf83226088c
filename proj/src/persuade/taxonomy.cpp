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

#include "persuade/taxonomy.hpp"

#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include "persuade/error.hpp"
#include "persuade/hashing.hpp"

#ifndef PERSUADE_BUILTIN_DATA_DIR
#define PERSUADE_BUILTIN_DATA_DIR "data"
#endif

namespace persuade {

bool StrategySet::contains(std::string_view id) const {
    return std::find(ids_.begin(), ids_.end(), id) != ids_.end();
}

std::vector<std::string> StrategySet::sorted() const {
    std::vector<std::string> out = ids_;
    std::sort(out.begin(), out.end());
    return out;
}

Taxonomy::Taxonomy(std::vector<StrategyGroup> groups, std::vector<Strategy> strategies,
                   TaxonomyOptions options)
    : groups_(std::move(groups)) {
    std::set<std::string> group_names;
    for (const auto& g : groups_) {
        if (g.name.empty()) throw ValidationError("taxonomy: group with empty name");
        if (!group_names.insert(g.name).second)
            throw ValidationError("taxonomy: duplicate group '" + g.name + "'");
    }
    for (auto& s : strategies) {
        if (s.id.empty()) throw ValidationError("taxonomy: strategy with empty id");
        auto git = std::find_if(groups_.begin(), groups_.end(),
                                [&](const StrategyGroup& g) { return g.name == s.group; });
        if (git == groups_.end())
            throw ValidationError("taxonomy: strategy '" + s.id + "' has unknown group '" + s.group + "'");
        s.marker = s.marker || git->marker;
        if (index_.contains(s.id))
            throw ValidationError("taxonomy: duplicate strategy id '" + s.id + "'");
        if (s.marker && !options.include_markers) {
            index_.emplace(s.id, static_cast<std::size_t>(-1));
            continue;
        }
        index_.emplace(s.id, strategies_.size());
        strategies_.push_back(std::move(s));
    }
    std::erase_if(index_, [](const auto& kv) { return kv.second == static_cast<std::size_t>(-1); });
    if (strategies_.empty()) throw ValidationError("taxonomy: no strategies");

    std::ostringstream canon;
    for (const auto& g : groups_) canon << "g:" << g.name << ':' << g.marker << '\n';
    for (const auto& s : strategies_) canon << "s:" << s.id << ':' << s.group << ':' << s.marker << '\n';
    hash_ = sha256_hex(canon.str());
}

std::size_t Taxonomy::strategy_count() const noexcept {
    return static_cast<std::size_t>(
        std::count_if(strategies_.begin(), strategies_.end(), [](const Strategy& s) { return !s.marker; }));
}

std::size_t Taxonomy::group_count() const noexcept {
    std::set<std::string> used;
    for (const auto& s : strategies_)
        if (!s.marker) used.insert(s.group);
    return used.size();
}

std::optional<std::size_t> Taxonomy::find(std::string_view id) const {
    auto it = index_.find(std::string(id));
    if (it == index_.end()) return std::nullopt;
    return it->second;
}

std::size_t Taxonomy::index_of(std::string_view id) const {
    auto idx = find(id);
    if (!idx) throw ValidationError("unknown strategy '" + std::string(id) + "'");
    return *idx;
}

namespace {

std::string required_string(const YAML::Node& node, const char* key, const std::string& where) {
    const YAML::Node v = node[key];
    if (!v || !v.IsScalar()) throw ParseError("taxonomy: " + where + " is missing '" + key + "'");
    return v.as<std::string>();
}

}  // namespace

Taxonomy parse_taxonomy(std::string_view yaml_text, TaxonomyOptions options) {
    YAML::Node root;
    try {
        root = YAML::Load(std::string(yaml_text));
    } catch (const YAML::Exception& e) {
        throw ParseError(std::string("taxonomy: ") + e.what());
    }
    if (!root.IsMap()) throw ParseError("taxonomy: document root must be a mapping");

    std::vector<StrategyGroup> groups;
    const YAML::Node gnode = root["groups"];
    if (!gnode || !gnode.IsSequence()) throw ParseError("taxonomy: 'groups' must be a list");
    for (std::size_t i = 0; i < gnode.size(); ++i) {
        const YAML::Node g = gnode[i];
        StrategyGroup group;
        if (g.IsScalar()) {
            group.name = g.as<std::string>();
        } else if (g.IsMap()) {
            group.name = required_string(g, "name", "group #" + std::to_string(i));
            if (g["marker"]) group.marker = g["marker"].as<bool>();
        } else {
            throw ParseError("taxonomy: group #" + std::to_string(i) + " must be a name or mapping");
        }
        groups.push_back(std::move(group));
    }

    std::vector<Strategy> strategies;
    const YAML::Node snode = root["strategies"];
    if (!snode || !(snode.IsSequence() || snode.IsNull()))
        throw ParseError("taxonomy: 'strategies' must be a list");
    for (std::size_t i = 0; i < snode.size(); ++i) {
        const YAML::Node s = snode[i];
        if (!s.IsMap()) throw ParseError("taxonomy: strategy #" + std::to_string(i) + " must be a mapping");
        const std::string where = "strategy #" + std::to_string(i);
        Strategy st;
        try {
            st.id = required_string(s, "id", where);
            st.display_name = s["name"] ? s["name"].as<std::string>() : st.id;
            st.group = required_string(s, "group", where);
            st.definition = s["definition"] ? s["definition"].as<std::string>() : std::string();
            if (s["marker"]) st.marker = s["marker"].as<bool>();
        } catch (const YAML::Exception& e) {
            throw ParseError("taxonomy: " + where + ": " + e.what());
        }
        strategies.push_back(std::move(st));
    }
    return Taxonomy(std::move(groups), std::move(strategies), options);
}

Taxonomy load_taxonomy(const std::filesystem::path& path, TaxonomyOptions options) {
    std::ifstream in(path);
    if (!in) throw ParseError("taxonomy: cannot open " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_taxonomy(ss.str(), options);
}

std::filesystem::path default_taxonomy_path() {
    if (const char* env = std::getenv("PERSUADE_TAXONOMY"); env && *env) return env;
    return std::filesystem::path(PERSUADE_BUILTIN_DATA_DIR) / "taxonomy.yaml";
}

std::optional<std::string> validate_label_set(const StrategySet& s, const Taxonomy& t) {
    if (s.empty()) return "empty label set: at least 1 strategy required";
    if (s.size() > kMaxStrategiesPerAd)
        return "more than 3 strategies (" + std::to_string(s.size()) + " given)";
    std::set<std::string> seen;
    for (const auto& id : s.ids()) {
        if (!seen.insert(id).second) return "duplicate strategy '" + id + "'";
        if (!t.find(id)) return "unknown strategy '" + id + "'";
    }
    return std::nullopt;
}

Vector encode_labels(const StrategySet& s, const Taxonomy& t) {
    if (auto violation = validate_label_set(s, t)) throw ValidationError(*violation);
    Vector y = Vector::Zero(static_cast<Eigen::Index>(t.size()));
    for (const auto& id : s.ids()) y(static_cast<Eigen::Index>(t.index_of(id))) = 1.0;
    return y;
}

StrategySet decode_labels(const Vector& y, const Taxonomy& t) {
    if (static_cast<std::size_t>(y.size()) != t.size())
        throw ShapeError("decode_labels: vector length " + std::to_string(y.size()) +
                         " != taxonomy size " + std::to_string(t.size()));
    std::vector<std::string> ids;
    for (Eigen::Index i = 0; i < y.size(); ++i)
        if (y(i) > 0.5) ids.push_back(t.at(static_cast<std::size_t>(i)).id);
    return StrategySet(std::move(ids));
}

}  // namespace persuade
