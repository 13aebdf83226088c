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

#include "oracles.hpp"

#include <algorithm>
#include <cmath>

namespace persuade::oracle {

double entropy(const std::vector<double>& p) {
    double s = 0.0;
    for (double v : p) s += v;
    if (s <= 1e-12) return std::log(static_cast<double>(p.size()));
    double acc = 0.0;
    for (double v : p)
        if (v > 0.0) acc += v * std::log(v);
    return std::log(s) - acc / s;
}

std::vector<std::string> rank(const std::vector<std::string>& ids, const std::vector<double>& entropies) {
    std::vector<bool> used(ids.size(), false);
    std::vector<std::string> out;
    for (std::size_t round = 0; round < ids.size(); ++round) {
        std::size_t best = ids.size();
        for (std::size_t i = 0; i < ids.size(); ++i) {
            if (used[i]) continue;
            if (best == ids.size() || entropies[i] > entropies[best] ||
                (entropies[i] == entropies[best] && ids[i] < ids[best]))
                best = i;
        }
        used[best] = true;
        out.push_back(ids[best]);
    }
    return out;
}

bool in_topk(const std::vector<double>& probs, std::size_t cls, std::size_t k) {
    std::size_t ahead = 0;
    for (std::size_t i = 0; i < probs.size(); ++i)
        if (probs[i] > probs[cls] || (probs[i] == probs[cls] && i < cls)) ++ahead;
    return ahead < k;
}

double topk_accuracy(const std::vector<std::vector<double>>& probs, const std::vector<std::vector<std::size_t>>& truths,
                     std::size_t k) {
    if (probs.empty()) return 0.0;
    std::size_t hits = 0;
    for (std::size_t n = 0; n < probs.size(); ++n) {
        bool hit = false;
        for (auto c : truths[n]) hit = hit || in_topk(probs[n], c, k);
        hits += hit;
    }
    return static_cast<double>(hits) / static_cast<double>(probs.size());
}

double recall_at_k(const std::vector<std::vector<double>>& probs, const std::vector<std::vector<std::size_t>>& truths,
                   std::size_t k) {
    std::size_t found = 0, total = 0;
    for (std::size_t n = 0; n < probs.size(); ++n)
        for (auto c : truths[n]) {
            ++total;
            found += in_topk(probs[n], c, k);
        }
    return total ? static_cast<double>(found) / static_cast<double>(total) : 0.0;
}

double dice(std::vector<std::string> a, std::vector<std::string> b) {
    std::sort(a.begin(), a.end());
    a.erase(std::unique(a.begin(), a.end()), a.end());
    std::sort(b.begin(), b.end());
    b.erase(std::unique(b.begin(), b.end()), b.end());
    std::vector<std::string> both;
    std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(both));
    return 2.0 * static_cast<double>(both.size()) / static_cast<double>(a.size() + b.size());
}

Kappa binary_kappa(const std::vector<bool>& a, const std::vector<bool>& b) {
    double n11 = 0, n10 = 0, n01 = 0, n00 = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i] && b[i]) ++n11;
        else if (a[i]) ++n10;
        else if (b[i]) ++n01;
        else ++n00;
    }
    const double n = static_cast<double>(a.size());
    const double po = (n11 + n00) / n;
    const double a1 = (n11 + n10) / n, b1 = (n11 + n01) / n;
    const double pe = a1 * b1 + (1 - a1) * (1 - b1);
    const double pmax = std::min(a1, b1) + std::min(1 - a1, 1 - b1);
    return {(po - pe) / (1 - pe), (pmax - pe) / (1 - pe)};
}

double bce(const std::vector<double>& probs, const std::vector<double>& y) {
    double s = 0.0;
    for (std::size_t i = 0; i < probs.size(); ++i) {
        const double p = std::clamp(probs[i], 1e-7, 1.0 - 1e-7);
        s += -(y[i] * std::log(p) + (1 - y[i]) * std::log(1 - p));
    }
    return s / static_cast<double>(probs.size());
}

}  // namespace persuade::oracle
