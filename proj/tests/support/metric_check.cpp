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

#include "metric_check.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <set>

#include "oracles.hpp"
#include "persuade/error.hpp"
#include "persuade/metrics.hpp"
#include "synthetic.hpp"

namespace persuade::testkit {

PredictionResult prediction_from_probs(const Vector& probs, const std::vector<std::string>& class_ids) {
    PredictionResult r;
    r.probs = probs;
    r.ranking = rank_classes(probs);
    for (auto i : r.ranking) r.ranked_ids.push_back(class_ids[i]);
    return r;
}

double MetricGap::worst() const { return std::max({top1, top3, recall, dice, kappa}); }

namespace {

std::vector<std::size_t> random_label_set(std::size_t P, std::mt19937_64& rng) {
    std::uniform_int_distribution<std::size_t> size(1, std::min<std::size_t>(3, P));
    std::uniform_int_distribution<std::size_t> cls(0, P - 1);
    std::set<std::size_t> s;
    const std::size_t n = size(rng);
    while (s.size() < n) s.insert(cls(rng));
    return {s.begin(), s.end()};
}

}  // namespace

MetricGap metric_oracle_gap(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> n_items(5, 60);
    std::uniform_int_distribution<int> n_classes(3, 21);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const int P = n_classes(rng);
    const int N = n_items(rng);
    const bool coarse = u(rng) < 0.5;  // quantized probabilities exercise tie-breaking

    const Taxonomy tax = toy_taxonomy(P);
    const auto ids = class_ids(tax);

    std::vector<PredictionResult> preds;
    std::vector<StrategySet> truths;
    std::vector<std::vector<double>> o_probs;
    std::vector<std::vector<std::size_t>> o_truths;
    for (int n = 0; n < N; ++n) {
        Vector p(P);
        std::vector<double> pv;
        for (int i = 0; i < P; ++i) {
            p(i) = coarse ? std::round(u(rng) * 5.0) / 5.0 : u(rng);
            pv.push_back(p(i));
        }
        preds.push_back(prediction_from_probs(p, ids));
        o_probs.push_back(pv);
        const auto t = random_label_set(static_cast<std::size_t>(P), rng);
        std::vector<std::string> names;
        for (auto c : t) names.push_back(ids[c]);
        truths.emplace_back(names);
        o_truths.push_back(t);
    }

    MetricGap g;
    g.top1 = std::abs(top1_accuracy(preds, truths) - oracle::topk_accuracy(o_probs, o_truths, 1));
    g.top3 = std::abs(topk_accuracy(preds, truths, 3) - oracle::topk_accuracy(o_probs, o_truths, 3));
    g.recall = std::abs(recall_at_k(preds, truths, 3) - oracle::recall_at_k(o_probs, o_truths, 3));

    double prev = -1.0;
    for (std::size_t k = 1; k <= static_cast<std::size_t>(P); ++k) {
        const double acc = topk_accuracy(preds, truths, k);
        if (acc < prev) g.monotone_in_k = false;
        prev = acc;
    }
    g.top1_le_top3 = top1_accuracy(preds, truths) <= topk_accuracy(preds, truths, 3);

    // Dice on random string sets, including overlapping and disjoint ones.
    std::uniform_int_distribution<int> len(0, 6);
    std::uniform_int_distribution<int> letter(0, 7);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<std::string> a, b;
        for (int i = len(rng); i > 0; --i) a.push_back(std::string(1, static_cast<char>('a' + letter(rng))));
        for (int i = len(rng); i > 0; --i) b.push_back(std::string(1, static_cast<char>('a' + letter(rng))));
        if (a.empty() && b.empty()) continue;
        const std::set<std::string> sa(a.begin(), a.end()), sb(b.begin(), b.end());
        g.dice = std::max(g.dice, std::abs(persuade::dice(sa, sb) - oracle::dice(a, b)));
    }

    // Kappa: second rater copies the first with probability 0.6.
    std::map<std::string, StrategySet> r1, r2;
    for (int n = 0; n < N; ++n) {
        const std::string item = "item" + std::to_string(n);
        r1[item] = truths[static_cast<std::size_t>(n)];
        if (u(rng) < 0.6) {
            r2[item] = truths[static_cast<std::size_t>(n)];
        } else {
            std::vector<std::string> names;
            for (auto c : random_label_set(static_cast<std::size_t>(P), rng)) names.push_back(ids[c]);
            r2[item] = StrategySet(names);
        }
    }
    double sum_k = 0.0, sum_max = 0.0;
    int used = 0;
    for (const auto& id : ids) {
        std::vector<bool> a, b;
        for (const auto& [item, s] : r1) {
            a.push_back(s.contains(id));
            b.push_back(r2[item].contains(id));
        }
        const double n = static_cast<double>(a.size());
        const double a1 = static_cast<double>(std::count(a.begin(), a.end(), true)) / n;
        const double b1 = static_cast<double>(std::count(b.begin(), b.end(), true)) / n;
        if (a1 * b1 + (1 - a1) * (1 - b1) >= 1.0 - 1e-12) continue;
        const auto k = oracle::binary_kappa(a, b);
        sum_k += k.kappa;
        sum_max += k.kappa_max;
        ++used;
    }
    try {
        const auto lib = cohens_kappa(r1, r2, tax);
        if (used == 0) {
            g.kappa = 1.0;
        } else {
            g.kappa = std::max({std::abs(lib.kappa - sum_k / used), std::abs(lib.kappa_max - sum_max / used),
                                std::abs(lib.adjusted - sum_k / sum_max)});
        }
    } catch (const DegenerateError&) {
        g.kappa = used == 0 ? 0.0 : 1.0;
    }
    return g;
}

}  // namespace persuade::testkit
