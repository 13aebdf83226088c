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

#include "persuade/metrics.hpp"

#include <cmath>

namespace persuade {

namespace {

void check_lengths(std::span<const PredictionResult> p, std::span<const StrategySet> t) {
    if (p.size() != t.size())
        throw LengthMismatchError("metrics: " + std::to_string(p.size()) + " predictions vs " +
                                  std::to_string(t.size()) + " truths");
}

std::size_t hits_in_topk(const PredictionResult& p, const StrategySet& truth, std::size_t k) {
    std::size_t hits = 0;
    const std::size_t n = std::min(k, p.ranked_ids.size());
    for (std::size_t i = 0; i < n; ++i)
        if (truth.contains(p.ranked_ids[i])) ++hits;
    return hits;
}

}  // namespace

double topk_accuracy(std::span<const PredictionResult> predictions, std::span<const StrategySet> truths,
                     std::size_t k) {
    check_lengths(predictions, truths);
    if (predictions.empty()) return 0.0;
    std::size_t hit = 0;
    for (std::size_t i = 0; i < predictions.size(); ++i)
        if (hits_in_topk(predictions[i], truths[i], k) > 0) ++hit;
    return static_cast<double>(hit) / static_cast<double>(predictions.size());
}

double top1_accuracy(std::span<const PredictionResult> predictions, std::span<const StrategySet> truths) {
    return topk_accuracy(predictions, truths, 1);
}

double recall_at_k(std::span<const PredictionResult> predictions, std::span<const StrategySet> truths,
                   std::size_t k) {
    check_lengths(predictions, truths);
    std::size_t found = 0, total = 0;
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        found += hits_in_topk(predictions[i], truths[i], k);
        total += truths[i].size();
    }
    return total == 0 ? 0.0 : static_cast<double>(found) / static_cast<double>(total);
}

EvalReport evaluate(std::span<const PredictionResult> predictions, std::span<const StrategySet> truths) {
    EvalReport r;
    r.top1 = top1_accuracy(predictions, truths);
    r.top3 = topk_accuracy(predictions, truths, 3);
    r.recall = recall_at_k(predictions, truths, 3);
    r.n_samples = predictions.size();
    return r;
}

double DiceMatrix::at(const std::string& row, const std::string& col) const {
    auto r = std::find(row_ids.begin(), row_ids.end(), row);
    auto c = std::find(col_ids.begin(), col_ids.end(), col);
    if (r == row_ids.end() || c == col_ids.end()) throw NotFoundError("dice matrix: no entry " + row + "/" + col);
    return values(r - row_ids.begin(), c - col_ids.begin());
}

namespace {

double dice_or_zero(const std::set<std::size_t>& a, const std::set<std::size_t>& b) {
    if (a.empty() && b.empty()) return 0.0;
    return dice(a, b);
}

}  // namespace

DiceMatrix strategy_cooccurrence(std::span<const StrategySet> labels, const Taxonomy& taxonomy) {
    const std::size_t P = taxonomy.size();
    std::vector<std::set<std::size_t>> ads(P);
    for (std::size_t a = 0; a < labels.size(); ++a)
        for (const auto& id : labels[a].ids()) ads[taxonomy.index_of(id)].insert(a);
    DiceMatrix m;
    for (const auto& s : taxonomy.strategies()) m.row_ids.push_back(s.id);
    m.col_ids = m.row_ids;
    m.values = Matrix::Zero(static_cast<Eigen::Index>(P), static_cast<Eigen::Index>(P));
    for (std::size_t i = 0; i < P; ++i)
        for (std::size_t j = i; j < P; ++j) {
            const double v = dice_or_zero(ads[i], ads[j]);
            m.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = v;
            m.values(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = v;
        }
    return m;
}

DiceMatrix topic_strategy_correlation(std::span<const AdSample> samples, const Taxonomy& taxonomy) {
    const std::size_t P = taxonomy.size();
    std::map<std::string, std::set<std::size_t>> topic_ads;
    std::vector<std::set<std::size_t>> strategy_ads(P);
    std::size_t used = 0;
    for (std::size_t a = 0; a < samples.size(); ++a) {
        const auto& s = samples[a];
        if (!s.gold_labels || !s.topic_tags) continue;
        ++used;
        for (const auto& t : *s.topic_tags) topic_ads[t].insert(a);
        for (const auto& id : s.gold_labels->ids()) strategy_ads[taxonomy.index_of(id)].insert(a);
    }
    if (used == 0) throw MissingTagsError("topic correlation: no labelled sample carries topic tags");
    DiceMatrix m;
    for (const auto& [t, _] : topic_ads) m.row_ids.push_back(t);
    for (const auto& s : taxonomy.strategies()) m.col_ids.push_back(s.id);
    m.values = Matrix::Zero(static_cast<Eigen::Index>(m.row_ids.size()), static_cast<Eigen::Index>(P));
    Eigen::Index r = 0;
    for (const auto& [t, ads] : topic_ads) {
        for (std::size_t j = 0; j < P; ++j) m.values(r, static_cast<Eigen::Index>(j)) = dice_or_zero(ads, strategy_ads[j]);
        ++r;
    }
    return m;
}

KappaResult cohens_kappa_table(const Matrix& table) {
    if (table.rows() != table.cols() || table.rows() == 0)
        throw ShapeError("kappa: contingency table must be square and non-empty");
    if ((table.array() < 0.0).any()) throw InvalidArgumentError("kappa: negative counts");
    const double n = table.sum();
    if (n <= 0.0) throw DegenerateError("kappa: empty table");
    const Vector rows = table.rowwise().sum() / n;
    const Vector cols = table.colwise().sum().transpose() / n;
    const double po = table.trace() / n;
    const double pe = rows.dot(cols);
    if (pe >= 1.0 - 1e-12) throw DegenerateError("kappa: chance agreement is 1 (constant labels)");
    const double pmax = rows.cwiseMin(cols).sum();
    KappaResult r;
    r.kappa = (po - pe) / (1.0 - pe);
    r.kappa_max = (pmax - pe) / (1.0 - pe);
    r.adjusted = r.kappa_max > 0.0 ? r.kappa / r.kappa_max : 0.0;
    r.n_used = static_cast<std::size_t>(table.rows());
    return r;
}

double adjust_kappa(double kappa, double kappa_max) {
    if (kappa_max == 0.0) throw DegenerateError("kappa_max is 0");
    return kappa / kappa_max;
}

KappaResult cohens_kappa(const std::map<std::string, StrategySet>& rater1,
                         const std::map<std::string, StrategySet>& rater2, const Taxonomy& taxonomy) {
    if (rater1.size() != rater2.size())
        throw LengthMismatchError("kappa: raters labelled different numbers of items");
    for (auto a = rater1.begin(), b = rater2.begin(); a != rater1.end(); ++a, ++b)
        if (a->first != b->first) throw LengthMismatchError("kappa: item '" + a->first + "' not labelled by both");
    if (rater1.empty()) throw DegenerateError("kappa: no items");

    double sum_k = 0.0, sum_max = 0.0;
    std::size_t used = 0;
    for (const auto& s : taxonomy.strategies()) {
        Matrix table = Matrix::Zero(2, 2);
        for (auto a = rater1.begin(), b = rater2.begin(); a != rater1.end(); ++a, ++b) {
            const int x = a->second.contains(s.id) ? 1 : 0;
            const int y = b->second.contains(s.id) ? 1 : 0;
            table(x, y) += 1.0;
        }
        try {
            const auto k = cohens_kappa_table(table);
            sum_k += k.kappa;
            sum_max += k.kappa_max;
            ++used;
        } catch (const DegenerateError&) {
            // strategy constant for both raters: no information
        }
    }
    if (used == 0) throw DegenerateError("kappa: every strategy has constant labels");
    KappaResult r;
    r.kappa = sum_k / static_cast<double>(used);
    r.kappa_max = sum_max / static_cast<double>(used);
    r.adjusted = adjust_kappa(r.kappa, r.kappa_max);
    r.n_used = used;
    return r;
}

DatasetStats dataset_stats(std::span<const StrategySet> labels, const Taxonomy& taxonomy) {
    DatasetStats st;
    st.per_strategy.assign(taxonomy.size(), 0);
    st.n_ads = labels.size();
    double sum = 0.0, sum_sq = 0.0;
    for (const auto& s : labels) {
        for (const auto& id : s.ids()) ++st.per_strategy[taxonomy.index_of(id)];
        const std::size_t n = s.size();
        if (n >= 1 && n <= 3) ++st.ads_with[n - 1];
        sum += static_cast<double>(n);
        sum_sq += static_cast<double>(n * n);
    }
    if (st.n_ads > 0) {
        const double n = static_cast<double>(st.n_ads);
        st.mean = sum / n;
        st.stddev = std::sqrt(std::max(0.0, sum_sq / n - st.mean * st.mean));
    }
    return st;
}

CorpusStats corpus_stats(std::span<const AdSample> samples, const Taxonomy& taxonomy) {
    std::vector<StrategySet> all;
    std::map<std::string, std::vector<StrategySet>> by_split;
    for (const auto& s : samples) {
        if (!s.gold_labels) continue;
        all.push_back(*s.gold_labels);
        by_split[s.split].push_back(*s.gold_labels);
    }
    CorpusStats cs;
    cs.total = dataset_stats(all, taxonomy);
    for (const auto& [split, labels] : by_split) cs.per_split[split] = dataset_stats(labels, taxonomy);
    return cs;
}

}  // namespace persuade
