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
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "persuade/active_learning.hpp"
#include "persuade/feature_cache.hpp"
#include "persuade/json_io.hpp"
#include "persuade/ledger.hpp"
#include "persuade/store.hpp"

namespace persuade {

struct ServiceConfig {
    std::filesystem::path data_dir;
    /// Empty: default_taxonomy_path().
    std::filesystem::path taxonomy_path;
    /// "stub" or "real".
    std::string extractors = "stub";
    std::vector<std::string> roster;
    ModelConfig model;
    ALConfig al;
    std::size_t ocr_preview_chars = 120;
};

/// Reads <data_dir>/config.json when present (keys: extractors, taxonomy,
/// roster, model, train, k, retrain, seed) over the defaults, then applies
/// PERSUADE_EXTRACTORS and PERSUADE_TAXONOMY.
ServiceConfig load_service_config(const std::filesystem::path& data_dir);
/// Overlays the config.json keys present in `j`.
void apply_config_json(ServiceConfig& cfg, const nlohmann::json& j);

/// Two annotations decide by unanimity per strategy; three by >= 2 votes,
/// falling back to the third annotator's set when nothing reaches 2.
struct VoteOutcome {
    bool disagreed = false;
    StrategySet final_labels;  // taxonomy order
    ResolutionMethod method = ResolutionMethod::Agreement;
};
VoteOutcome resolve_votes(const StrategySet& first, const StrategySet& second,
                          const std::optional<StrategySet>& third, const Taxonomy& taxonomy);

/// Sample i of the batch goes to roster[2i mod n] and roster[2i+1 mod n].
/// Throws RosterTooSmall below 3 annotators.
std::vector<Assignment> assign_pairs(int round_t, const std::vector<std::string>& sample_ids,
                                     const std::vector<std::string>& roster);

enum class SampleStatus { Pending, PartiallyAnnotated, Disagreed, Resolved };
const char* sample_status_name(SampleStatus s);

struct IngestResult {
    std::size_t ingested = 0;
    std::size_t skipped = 0;
};

struct RoundOpened {
    int round_t = 0;
    std::vector<std::string> sample_ids;
    std::vector<Assignment> assignments;
};

struct ResolveOutcome {
    SampleStatus status = SampleStatus::Pending;
    std::optional<ResolutionRecord> resolution;
    /// Set when a disagreement just pulled in a third annotator.
    std::optional<std::string> third_annotator;
};

struct SubmitResult {
    AnnotationRecord record;
    bool replaced = false;
    ResolveOutcome outcome;
};

struct MaskResult {
    std::int64_t mask_id = 0;
    /// Pixel Dice against the latest mask from another annotator for the same
    /// (sample, strategy), when one exists.
    std::optional<double> agreement;
};

struct RoundStatus {
    int round_t = 0;
    bool open = true;
    std::size_t total = 0;
    std::size_t pending = 0;
    std::size_t partially_annotated = 0;
    std::size_t disagreed = 0;
    std::size_t resolved = 0;
    bool closable = false;
};

struct CloseResult {
    int round_t = 0;
    std::string checkpoint_hash;
    std::size_t n_labeled = 0;
    bool already_closed = false;
    EvalReport metrics;
};

struct PendingAssignment {
    std::string sample_id;
    std::string image_url;
    std::string ocr_preview;
    int width = 0;
    int height = 0;
    int slot = 1;
};

struct TrainSummary {
    std::string checkpoint_hash;
    std::size_t n_examples = 0;
    TrainResult result;
    EvalReport metrics;
};

class AnnotationService {
public:
    explicit AnnotationService(ServiceConfig cfg);

    const Taxonomy& taxonomy() const noexcept { return taxonomy_; }
    const ServiceConfig& config() const noexcept { return cfg_; }
    Store& store() noexcept { return *store_; }
    Ledger& ledger() noexcept { return ledger_; }

    /// Idempotent; new ids join the pool. Throws ParseError, DuplicateIdError,
    /// DecodeError for undecodable images.
    IngestResult ingest(const std::filesystem::path& manifest);
    IngestResult ingest_samples(const std::vector<AdSample>& samples);

    /// Explicit ids must be in the pool; otherwise the top-k by entropy under
    /// the published model, or a uniform sample before any model exists.
    RoundOpened open_round(std::optional<std::size_t> k = std::nullopt,
                           std::optional<std::vector<std::string>> ids = std::nullopt);
    std::optional<int> current_round() const;

    std::vector<PendingAssignment> pending_assignments(int round_t, const std::string& annotator_id) const;

    SubmitResult submit_annotation(const AnnotationRecord& record);
    ResolveOutcome resolve(int round_t, const std::string& sample_id);
    SampleStatus sample_status(int round_t, const std::string& sample_id) const;

    MaskResult submit_mask(const MaskRecord& mask);

    RoundStatus round_status(int round_t) const;
    CloseResult close_round_and_train(int round_t);

    /// Trains a fresh model on every available label (resolved gold plus
    /// manifest gold of the train split) and publishes it.
    TrainSummary train_all();
    EvalReport evaluate(const std::string& split) const;
    std::vector<ScoredSample> rank_current_pool() const;
    nlohmann::json analyze() const;

    std::optional<EvalReport> latest_metrics() const;
    ALState state() const;
    std::shared_ptr<const FusionModel> published_model() const;
    std::optional<std::string> published_checkpoint_hash() const;

    RawFeatures features(const AdSample& sample) const;
    std::optional<StoredSample> sample(const std::string& id) const { return store_->sample(id); }

private:
    TrainingExample make_example(const AdSample& sample, const StrategySet& labels, const Vocabulary& vocab) const;
    std::unique_ptr<FusionModel> fresh_model() const;
    std::map<std::string, StrategySet> all_labels() const;
    EvalReport evaluate_model(const FusionModel& model, const std::vector<TrainingExample>& fallback) const;
    void publish(std::shared_ptr<const FusionModel> model, const std::string& hash);
    void persist_state(const ALState& s);

    ServiceConfig cfg_;
    Taxonomy taxonomy_;
    std::unique_ptr<Store> store_;
    Ledger ledger_;
    FeatureCache cache_;
    mutable ExtractorSuite suite_;
    mutable std::mutex suite_mu_;

    std::mutex round_mu_;
    mutable std::mutex state_mu_;
    ALState state_;
    std::shared_ptr<const FusionModel> published_;
    std::string published_hash_;
};

/// Ranks the samples of `pool_manifest` under a checkpoint with the given
/// extractor suite and returns the top k.
std::vector<ScoredSample> select_from_manifest(const std::filesystem::path& checkpoint,
                                               const std::filesystem::path& pool_manifest, std::size_t k,
                                               const std::string& extractors,
                                               const std::filesystem::path& taxonomy_path = {});

nlohmann::json to_json(const Assignment& a);
nlohmann::json to_json(const AnnotationRecord& r);
nlohmann::json to_json(const ResolutionRecord& r);
nlohmann::json to_json(const SubmitResult& r);
nlohmann::json to_json(const MaskResult& r);
nlohmann::json to_json(const RoundStatus& s);
nlohmann::json to_json(const RoundOpened& r);
nlohmann::json to_json(const CloseResult& r);
nlohmann::json to_json(const PendingAssignment& p);
nlohmann::json to_json(const ScoredSample& s);

/// Parses {"sample_id","annotator_id","round_t","labels"}; throws ParseError.
AnnotationRecord annotation_from_json(const nlohmann::json& j);
/// Parses {"sample_id","strategy_id","annotator_id","mask":{"width","height","counts"}}.
MaskRecord mask_from_json(const nlohmann::json& j);

}  // namespace persuade
