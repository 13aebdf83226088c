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

#include "persuade/active_learning.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "persuade/json_io.hpp"

namespace persuade {

Vector normalize_probs(const Vector& p) {
    if (p.size() == 0) throw ShapeError("normalize_probs: empty vector");
    if (!p.allFinite()) throw ValidationError("normalize_probs: non-finite probability");
    if ((p.array() < 0.0).any()) throw ValidationError("normalize_probs: negative probability");
    const double s = p.sum();
    if (s <= 1e-12) throw DegenerateError("normalize_probs: prediction sums to zero");
    return p / s;
}

double entropy_score(const Vector& pn) {
    if (pn.size() == 0) throw ShapeError("entropy: empty distribution");
    if ((pn.array() < 0.0).any() || std::abs(pn.sum() - 1.0) > 1e-6)
        throw ShapeError("entropy: input is not a normalized distribution");
    double g = 0.0;
    for (Eigen::Index i = 0; i < pn.size(); ++i)
        if (pn[i] > 0.0) g -= pn[i] * std::log(pn[i]);
    return std::max(0.0, g);
}

double uncertainty(const Vector& sigmoid_probs) {
    try {
        return entropy_score(normalize_probs(sigmoid_probs));
    } catch (const DegenerateError&) {
        return std::log(static_cast<double>(sigmoid_probs.size()));
    }
}

void sort_scored(std::vector<ScoredSample>& scored) {
    std::sort(scored.begin(), scored.end(), [](const ScoredSample& a, const ScoredSample& b) {
        if (a.entropy != b.entropy) return a.entropy > b.entropy;
        return a.sample_id < b.sample_id;
    });
}

std::vector<ScoredSample> rank_pool(std::span<const std::string> pool_ids, const ProbabilityFn& probs,
                                    const AcquisitionFn& score) {
    if (pool_ids.empty()) throw EmptyPoolError("rank_pool: pool is empty");
    std::vector<ScoredSample> out;
    out.reserve(pool_ids.size());
    for (const auto& id : pool_ids) {
        ScoredSample s;
        s.sample_id = id;
        s.probs = probs(id);
        s.entropy = score(s.probs);
        out.push_back(std::move(s));
    }
    sort_scored(out);
    return out;
}

std::vector<ScoredSample> rank_pool(const FusionModel& model, std::span<const std::string> pool_ids,
                                    const FeatureFn& features) {
    return rank_pool(pool_ids, [&](const std::string& id) { return model.predict_sample(features(id)).probs; });
}

std::vector<std::string> select_batch(std::span<const ScoredSample> ranked, std::size_t k) {
    std::vector<std::string> out;
    const std::size_t n = std::min(k, ranked.size());
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) out.push_back(ranked[i].sample_id);
    return out;
}

EntropyStats entropy_stats(std::span<const ScoredSample> selected) {
    EntropyStats st;
    if (selected.empty()) return st;
    st.min = st.max = selected.front().entropy;
    double sum = 0.0;
    for (const auto& s : selected) {
        sum += s.entropy;
        st.min = std::min(st.min, s.entropy);
        st.max = std::max(st.max, s.entropy);
    }
    st.mean = sum / static_cast<double>(selected.size());
    return st;
}

void ALState::validate() const {
    if (k == 0) throw ValidationError("AL state: k must be >= 1");
    for (const auto& id : labeled_ids)
        if (pool_ids.count(id)) throw ValidationError("AL state: '" + id + "' is both labeled and in the pool");
}

ALState initial_state(std::span<const std::string> corpus_ids, std::size_t k) {
    ALState s;
    s.k = k;
    s.pool_ids.insert(corpus_ids.begin(), corpus_ids.end());
    s.validate();
    return s;
}

void apply_round(ALState& state, const RoundRecord& record) {
    for (const auto& id : record.selected)
        if (!state.pool_ids.count(id)) throw ValidationError("AL round: '" + id + "' is not in the pool");
    for (const auto& id : record.selected) {
        state.pool_ids.erase(id);
        state.labeled_ids.insert(id);
    }
    state.history.push_back(record);
    ++state.round_t;
}

nlohmann::json round_to_json(const RoundRecord& r) {
    return {{"round_t", r.round_t},
            {"selected", r.selected},
            {"entropy", {{"mean", r.entropy.mean}, {"min", r.entropy.min}, {"max", r.entropy.max}}},
            {"metrics", r.metrics},
            {"n_labeled", r.n_labeled},
            {"checkpoint_hash", r.checkpoint_hash}};
}

RoundRecord round_from_json(const nlohmann::json& j) {
    RoundRecord r;
    j.at("round_t").get_to(r.round_t);
    j.at("selected").get_to(r.selected);
    const auto& e = j.at("entropy");
    e.at("mean").get_to(r.entropy.mean);
    e.at("min").get_to(r.entropy.min);
    e.at("max").get_to(r.entropy.max);
    j.at("metrics").get_to(r.metrics);
    j.at("n_labeled").get_to(r.n_labeled);
    j.at("checkpoint_hash").get_to(r.checkpoint_hash);
    return r;
}

nlohmann::json state_to_json(const ALState& s) {
    nlohmann::json history = nlohmann::json::array();
    for (const auto& r : s.history) history.push_back(round_to_json(r));
    return {{"round_t", s.round_t},
            {"labeled_ids", s.labeled_ids},
            {"pool_ids", s.pool_ids},
            {"k", s.k},
            {"history", history}};
}

ALState state_from_json(const nlohmann::json& j) {
    ALState s;
    j.at("round_t").get_to(s.round_t);
    j.at("labeled_ids").get_to(s.labeled_ids);
    j.at("pool_ids").get_to(s.pool_ids);
    j.at("k").get_to(s.k);
    for (const auto& r : j.at("history")) s.history.push_back(round_from_json(r));
    s.validate();
    return s;
}

const char* stop_reason_name(StopReason r) {
    switch (r) {
        case StopReason::None: return "continue";
        case StopReason::PoolExhausted: return "pool exhausted";
        case StopReason::MaxRounds: return "max rounds";
        case StopReason::BudgetReached: return "label budget reached";
        case StopReason::Plateau: return "validation plateau";
    }
    return "unknown";
}

StopReason should_stop(const ALState& state, const ALConfig& cfg) {
    if (state.pool_ids.empty()) return StopReason::PoolExhausted;
    if (cfg.max_rounds > 0 && state.round_t >= cfg.max_rounds) return StopReason::MaxRounds;
    if (cfg.label_budget > 0 && state.labeled_ids.size() >= cfg.label_budget) return StopReason::BudgetReached;
    const auto n = state.history.size();
    const auto r = static_cast<std::size_t>(std::max(cfg.plateau_rounds, 0));
    if (r > 0 && n > r) {
        double best_before = 0.0;
        for (std::size_t i = 0; i < n - r; ++i) best_before = std::max(best_before, state.history[i].metrics.top1);
        bool improved = false;
        for (std::size_t i = n - r; i < n; ++i)
            if (state.history[i].metrics.top1 > best_before + cfg.plateau_delta) improved = true;
        if (!improved) return StopReason::Plateau;
    }
    return StopReason::None;
}

std::vector<std::string> random_batch(const ALState& state, std::size_t n, std::uint64_t seed) {
    std::vector<std::string> ids(state.pool_ids.begin(), state.pool_ids.end());
    std::mt19937_64 rng(seed);
    std::shuffle(ids.begin(), ids.end(), rng);
    ids.resize(std::min(n, ids.size()));
    return ids;
}

Selection select_next(const ALState& state, const FusionModel& model, const RoundContext& ctx, const ALConfig& cfg) {
    std::size_t n = cfg.k;
    if (cfg.label_budget > 0)
        n = std::min(n, cfg.label_budget > state.labeled_ids.size() ? cfg.label_budget - state.labeled_ids.size() : 0);
    Selection sel;
    if (n == 0 || state.pool_ids.empty()) return sel;
    if (cfg.acquisition == Acquisition::Random || (state.round_t == 0 && state.labeled_ids.empty())) {
        std::seed_seq seq{cfg.seed, static_cast<std::uint64_t>(state.round_t)};
        std::uint64_t s[1];
        seq.generate(reinterpret_cast<std::uint32_t*>(s), reinterpret_cast<std::uint32_t*>(s) + 2);
        sel.ids = random_batch(state, n, s[0]);
        return sel;
    }
    const std::vector<std::string> pool(state.pool_ids.begin(), state.pool_ids.end());
    const auto ranked = rank_pool(model, pool, ctx.features);
    sel.ids = select_batch(ranked, n);
    sel.entropy = entropy_stats(std::span(ranked).first(sel.ids.size()));
    return sel;
}

TrainResult retrain(FusionModel& model, const std::vector<TrainingExample>& examples, const ALConfig& cfg,
                    int /*round_t*/) {
    if (cfg.retrain == RetrainMode::FromScratch) model.reinitialize(cfg.train.seed);
    return train(model, examples, cfg.train);
}

RoundOutcome run_round(const ALState& state, FusionModel& model, std::map<std::string, StrategySet>& labels,
                       const RoundContext& ctx, const ALConfig& cfg) {
    RoundOutcome out{state, StopReason::None};
    if (state.pool_ids.empty()) {
        out.stop = StopReason::PoolExhausted;
        return out;
    }
    const auto sel = select_next(state, model, ctx, cfg);
    if (sel.ids.empty()) {
        out.stop = should_stop(state, cfg);
        if (out.stop == StopReason::None) out.stop = StopReason::BudgetReached;
        return out;
    }

    const auto answers = ctx.oracle(sel.ids);
    for (const auto& id : sel.ids)
        if (!answers.count(id)) throw OracleError("oracle returned no label for '" + id + "'");

    auto merged = labels;
    for (const auto& id : sel.ids) merged[id] = answers.at(id);

    std::vector<TrainingExample> examples;
    for (const auto& id : state.labeled_ids) examples.push_back(ctx.make_example(id, merged.at(id)));
    for (const auto& id : sel.ids) examples.push_back(ctx.make_example(id, merged.at(id)));

    std::vector<Matrix> saved;
    for (const Parameter* p : std::as_const(model).parameters()) saved.push_back(p->value);
    RoundRecord rec;
    try {
        retrain(model, examples, cfg, state.round_t);
        std::span<const TrainingExample> eval_set = ctx.validation.empty() ? std::span<const TrainingExample>(examples)
                                                                           : ctx.validation;
        const auto preds = predict_all(model, eval_set);
        std::vector<StrategySet> truths;
        for (const auto& ex : eval_set) truths.push_back(labels_from_multi_hot(ex.y, model.class_ids()));
        rec.metrics = evaluate(preds, truths);
    } catch (...) {
        auto params = model.parameters();
        for (std::size_t i = 0; i < params.size(); ++i) params[i]->value = saved[i];
        throw;
    }

    rec.round_t = state.round_t;
    rec.selected = sel.ids;
    rec.entropy = sel.entropy;
    rec.n_labeled = examples.size();
    apply_round(out.state, rec);
    labels = std::move(merged);
    out.stop = should_stop(out.state, cfg);
    return out;
}

}  // namespace persuade
