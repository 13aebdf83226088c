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

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "persuade/corpus.hpp"
#include "persuade/mask.hpp"
#include "persuade/taxonomy.hpp"

struct sqlite3;

namespace persuade {

struct AnnotationRecord {
    std::int64_t record_id = 0;
    std::string sample_id;
    std::string annotator_id;
    StrategySet labels;
    std::string submitted_at;
    int round_t = 0;

    friend bool operator==(const AnnotationRecord&, const AnnotationRecord&) = default;
};

struct Assignment {
    int round_t = 0;
    std::string sample_id;
    std::string annotator_id;
    /// 1 and 2 for the initial pair, 3 for the tie-breaker.
    int slot = 1;

    friend bool operator==(const Assignment&, const Assignment&) = default;
};

enum class ResolutionMethod { Agreement, ThirdAnnotatorMajority };
const char* resolution_method_name(ResolutionMethod m);

struct ResolutionRecord {
    std::string sample_id;
    int round_t = 0;
    StrategySet final_labels;
    ResolutionMethod method = ResolutionMethod::Agreement;
    std::vector<std::int64_t> record_ids;

    friend bool operator==(const ResolutionRecord&, const ResolutionRecord&) = default;
};

struct MaskRecord {
    std::int64_t mask_id = 0;
    std::string sample_id;
    std::string strategy_id;
    std::string annotator_id;
    RleMask mask;
    std::string submitted_at;

    friend bool operator==(const MaskRecord&, const MaskRecord&) = default;
};

struct StoredSample {
    AdSample sample;
    int width = 0;
    int height = 0;
};

struct RoundRow {
    int round_t = 0;
    bool open = true;
    std::string opened_at;
    std::string checkpoint_hash;
};

/// UTC timestamp, ISO 8601 with milliseconds.
std::string utc_now();

/// Embedded transactional store. All methods are serialized on one
/// connection; `transaction` makes a group of calls atomic.
class Store {
public:
    explicit Store(const std::filesystem::path& path);
    ~Store();
    Store(const Store&) = delete;
    Store& operator=(const Store&) = delete;

    void transaction(const std::function<void()>& body);

    /// Returns false when the id already exists.
    bool insert_sample(const StoredSample& s);
    std::optional<StoredSample> sample(const std::string& id) const;
    std::vector<StoredSample> samples() const;

    void insert_round(int round_t);
    std::optional<RoundRow> round(int round_t) const;
    std::vector<RoundRow> rounds() const;
    void close_round(int round_t, const std::string& checkpoint_hash);

    void insert_assignment(const Assignment& a);
    std::vector<Assignment> assignments(int round_t) const;
    std::vector<Assignment> assignments(int round_t, const std::string& sample_id) const;

    /// Insert or replace on (round, sample, annotator). Returns the stored
    /// record and whether a prior submission was replaced.
    std::pair<AnnotationRecord, bool> upsert_annotation(const AnnotationRecord& r);
    std::vector<AnnotationRecord> annotations(int round_t, const std::string& sample_id) const;
    std::vector<AnnotationRecord> annotations(int round_t) const;
    std::vector<AnnotationRecord> all_annotations() const;

    void put_resolution(const ResolutionRecord& r);
    void delete_resolution(int round_t, const std::string& sample_id);
    std::optional<ResolutionRecord> resolution(int round_t, const std::string& sample_id) const;
    std::vector<ResolutionRecord> resolutions(int round_t) const;
    /// Most recent resolution of a sample across rounds.
    std::optional<ResolutionRecord> latest_resolution(const std::string& sample_id) const;

    std::int64_t insert_mask(const MaskRecord& m);
    std::vector<MaskRecord> masks(const std::string& sample_id, const std::string& strategy_id) const;
    std::vector<MaskRecord> all_masks() const;

    void put_gold(const std::string& sample_id, const StrategySet& labels, int round_t);
    std::map<std::string, StrategySet> gold() const;

    void put_kv(const std::string& key, const std::string& value);
    std::optional<std::string> get_kv(const std::string& key) const;

    void audit(const std::string& kind, const std::string& detail_json);
    std::vector<std::pair<std::string, std::string>> audit_log() const;

private:
    void exec(const char* sql) const;

    sqlite3* db_ = nullptr;
    int tx_depth_ = 0;
    mutable std::recursive_mutex mu_;
};

}  // namespace persuade
