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
#include <functional>
#include <map>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "persuade/metrics.hpp"
#include "persuade/trainer.hpp"

namespace persuade {

struct ScoredSample {
    std::string sample_id;
    double entropy = 0.0;  // nats
    Vector probs;
};

/// p / sum(p). Throws DegenerateError when the sum is <= 1e-12 and
/// ValidationError on negative or non-finite entries.
Vector normalize_probs(const Vector& p);

/// -sum p ln p with 0 ln 0 = 0. Throws ShapeError unless `pn` is a
/// distribution within 1e-6.
double entropy_score(const Vector& pn);

/// Acquisition score of a raw sigmoid vector. An all-zero prediction gets
/// ln|P|, the maximum.
double uncertainty(const Vector& sigmoid_probs);

/// Pluggable acquisition: maps a sigmoid vector to a score, higher is picked first.
using AcquisitionFn = std::function<double(const Vector& sigmoid_probs)>;

/// Sorts by score descending, then sample_id ascending.
void sort_scored(std::vector<ScoredSample>& scored);

using ProbabilityFn = std::function<Vector(const std::string& sample_id)>;

/// Scores every pool id and returns them ranked. Throws EmptyPool.
std::vector<ScoredSample> rank_pool(std::span<const std::string> pool_ids, const ProbabilityFn& probs,
                                    const AcquisitionFn& score = uncertainty);

/// Model-backed ranking in eval mode.
using FeatureFn = std::function<RawFeatures(const std::string& sample_id)>;
std::vector<ScoredSample> rank_pool(const FusionModel& model, std::span<const std::string> pool_ids,
                                    const FeatureFn& features);

/// First min(k, |ranked|) ids in ranked order.
std::vector<std::string> select_batch(std::span<const ScoredSample> ranked, std::size_t k);

struct EntropyStats {
    double mean = 0.0;
    double min = 0.0;
    double max = 0.0;
    friend bool operator==(const EntropyStats&, const EntropyStats&) = default;
};
EntropyStats entropy_stats(std::span<const ScoredSample> selected);

struct RoundRecord {
    int round_t = 0;
    std::vector<std::string> selected;
    EntropyStats entropy;
    EvalReport metrics;
    std::size_t n_labeled = 0;
    std::string checkpoint_hash;

    friend bool operator==(const RoundRecord&, const RoundRecord&) = default;
};

struct ALState {
    int round_t = 0;
    std::set<std::string> labeled_ids;
    std::set<std::string> pool_ids;
    std::size_t k = 250;
    std::vector<RoundRecord> history;

    /// Throws ValidationError when labeled and pool overlap or k is 0.
    void validate() const;
    friend bool operator==(const ALState&, const ALState&) = default;
};

ALState initial_state(std::span<const std::string> corpus_ids, std::size_t k = 250);

/// Moves `selected` from the pool to the labeled set and records the round.
/// Throws ValidationError if an id is not in the pool.
void apply_round(ALState& state, const RoundRecord& record);

nlohmann::json state_to_json(const ALState& s);
ALState state_from_json(const nlohmann::json& j);
nlohmann::json round_to_json(const RoundRecord& r);
RoundRecord round_from_json(const nlohmann::json& j);

enum class Acquisition { Entropy, Random };
enum class RetrainMode { FromScratch, WarmStart };

enum class StopReason { None, PoolExhausted, MaxRounds, BudgetReached, Plateau };
const char* stop_reason_name(StopReason r);

struct ALConfig {
    std::size_t k = 250;
    Acquisition acquisition = Acquisition::Entropy;
    RetrainMode retrain = RetrainMode::FromScratch;
    TrainConfig train;
    /// 0 disables each limit.
    int max_rounds = 0;
    std::size_t label_budget = 0;
    /// Plateau: validation top-1 gains no more than this for `plateau_rounds` rounds.
    double plateau_delta = 0.005;
    int plateau_rounds = 2;
    std::uint64_t seed = 0;
};

StopReason should_stop(const ALState& state, const ALConfig& cfg);

/// Uniform random sample of min(n, |pool|) pool ids, deterministic in `seed`.
std::vector<std::string> random_batch(const ALState& state, std::size_t n, std::uint64_t seed);

/// Labels for the requested ids. Throws OracleError when any label is missing.
using Oracle = std::function<std::map<std::string, StrategySet>(const std::vector<std::string>& ids)>;
using ExampleFn = std::function<TrainingExample(const std::string& sample_id, const StrategySet& labels)>;

struct RoundContext {
    ExampleFn make_example;
    FeatureFn features;
    Oracle oracle;
    /// Held-out examples for history metrics; the labeled set is used when empty.
    std::span<const TrainingExample> validation;
};

struct Selection {
    std::vector<std::string> ids;
    EntropyStats entropy;
};

/// Next batch: a uniform seed batch on round 0 or under Random acquisition,
/// otherwise the top-k by entropy. Honours the label budget.
Selection select_next(const ALState& state, const FusionModel& model, const RoundContext& ctx, const ALConfig& cfg);

struct RoundOutcome {
    ALState state;
    StopReason stop = StopReason::None;
};

/// One annotate-retrain round. `labels` accumulates oracle answers for the
/// labeled set. On OracleError or a training failure, `state`, `labels` and
/// the model parameters are left unchanged.
RoundOutcome run_round(const ALState& state, FusionModel& model, std::map<std::string, StrategySet>& labels,
                       const RoundContext& ctx, const ALConfig& cfg);

/// Retrains `model` on the labeled set (reinitialised for FromScratch).
TrainResult retrain(FusionModel& model, const std::vector<TrainingExample>& examples, const ALConfig& cfg,
                    int round_t);

}  // namespace persuade
