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

#include <algorithm>
#include <array>
#include <cstddef>
#include <map>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "persuade/corpus.hpp"
#include "persuade/error.hpp"
#include "persuade/fusion_model.hpp"
#include "persuade/taxonomy.hpp"

namespace persuade {

struct EvalReport {
    double top1 = 0.0;
    double top3 = 0.0;
    double recall = 0.0;
    std::size_t n_samples = 0;

    friend bool operator==(const EvalReport&, const EvalReport&) = default;
};

/// Fraction of samples whose highest-probability strategy is in the truth set.
double top1_accuracy(std::span<const PredictionResult> predictions, std::span<const StrategySet> truths);
/// Fraction of samples whose k best strategies intersect the truth set.
double topk_accuracy(std::span<const PredictionResult> predictions, std::span<const StrategySet> truths,
                     std::size_t k = 3);
/// Micro-averaged share of gold labels found among the k best predictions.
double recall_at_k(std::span<const PredictionResult> predictions, std::span<const StrategySet> truths,
                   std::size_t k = 3);
EvalReport evaluate(std::span<const PredictionResult> predictions, std::span<const StrategySet> truths);

/// 2|X ∩ Y| / (|X| + |Y|). Throws DegenerateError when both sets are empty.
template <class T>
double dice(const std::set<T>& x, const std::set<T>& y) {
    if (x.empty() && y.empty()) throw DegenerateError("dice: both sets empty");
    std::size_t common = 0;
    auto i = x.begin();
    auto j = y.begin();
    while (i != x.end() && j != y.end()) {
        if (*i < *j) ++i;
        else if (*j < *i) ++j;
        else {
            ++common;
            ++i;
            ++j;
        }
    }
    return 2.0 * static_cast<double>(common) / static_cast<double>(x.size() + y.size());
}

/// Labelled |rows| x |cols| matrix of Dice coefficients.
struct DiceMatrix {
    std::vector<std::string> row_ids;
    std::vector<std::string> col_ids;
    Matrix values;

    double at(const std::string& row, const std::string& col) const;
};

/// Entry (i, j) = dice(ads containing i, ads containing j). The diagonal is 1
/// for strategies that occur at least once; pairs that never occur are 0.
DiceMatrix strategy_cooccurrence(std::span<const StrategySet> labels, const Taxonomy& taxonomy);

/// Dice between the ads carrying each topic and the ads carrying each
/// strategy. Uses samples that have both gold labels and topic tags; throws
/// MissingTags when none do.
DiceMatrix topic_strategy_correlation(std::span<const AdSample> samples, const Taxonomy& taxonomy);

struct KappaResult {
    double kappa = 0.0;
    double kappa_max = 0.0;
    double adjusted = 0.0;
    /// Categories (or strategies) that contributed; degenerate ones are skipped.
    std::size_t n_used = 0;
};

/// Kappa of a square contingency table (rows: rater 1, cols: rater 2), with
/// the maximum attainable under the table's marginals.
KappaResult cohens_kappa_table(const Matrix& table);

/// kappa / kappa_max. Throws DegenerateError when kappa_max is 0.
double adjust_kappa(double kappa, double kappa_max);

/// Per-strategy binary-presence kappa, macro-averaged over strategies with
/// p_e < 1; adjusted = mean kappa / mean kappa_max. Items are matched by id.
/// Throws LengthMismatch on differing id sets, DegenerateError when every
/// strategy is constant.
KappaResult cohens_kappa(const std::map<std::string, StrategySet>& rater1,
                         const std::map<std::string, StrategySet>& rater2, const Taxonomy& taxonomy);

struct DatasetStats {
    std::size_t n_ads = 0;
    std::vector<std::size_t> per_strategy;  // taxonomy order
    std::array<std::size_t, 3> ads_with{};  // ads with 1, 2, 3 strategies
    double mean = 0.0;
    /// Population standard deviation of strategies per ad.
    double stddev = 0.0;
};

DatasetStats dataset_stats(std::span<const StrategySet> labels, const Taxonomy& taxonomy);

struct CorpusStats {
    DatasetStats total;
    std::map<std::string, DatasetStats> per_split;
};
/// Over samples with gold labels, overall and per split.
CorpusStats corpus_stats(std::span<const AdSample> samples, const Taxonomy& taxonomy);

}  // namespace persuade
