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
#include <span>
#include <string>
#include <vector>

#include "persuade/fusion_model.hpp"
#include "persuade/taxonomy.hpp"

namespace persuade {

struct TrainConfig {
    double learning_rate = 1e-3;
    int batch_size = 16;
    int epochs = 10;
    /// Weight of the action-reason generation loss.
    double lambda_gen = 1.0;
    /// Fixes initialisation (when the caller reinitialises), shuffling and dropout.
    std::uint64_t seed = 0;
    bool focal = false;
    double focal_gamma = 2.0;
    /// Global gradient-norm clip; 0 disables.
    double max_grad_norm = 5.0;
    /// Evaluate top-1/top-3 on the training set after every epoch.
    bool eval_each_epoch = true;

    void validate() const;
    friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

struct TrainingExample {
    std::string sample_id;
    RawFeatures raw;
    Vector y;                 // multi-hot [|P|]
    std::vector<int> tokens;  // [<bos> ... <eos>], empty when no gold sentence
};

struct EpochLog {
    int epoch = 0;
    double strategy_loss = 0.0;
    double generation_loss = 0.0;
    double top1 = 0.0;
    double top3 = 0.0;
};

struct TrainResult {
    std::vector<EpochLog> log;
    bool stopped_early = false;
};

/// Return false to stop after the current epoch.
using EpochCallback = std::function<bool(const EpochLog&)>;

/// Adam with bias correction.
class Adam {
public:
    explicit Adam(double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
        : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {}
    void step(const std::vector<Parameter*>& params);

private:
    double lr_, beta1_, beta2_, eps_;
    long t_ = 0;
    std::vector<Matrix> m_, v_;
};

/// Loss of one example on a fresh tape; gradients accumulate into the
/// model's parameters scaled by `weight` when `backprop` is set.
struct ExampleLoss {
    double strategy = 0.0;
    double generation = 0.0;
    bool has_generation = false;
};
ExampleLoss example_loss(FusionModel& model, const TrainingExample& ex, const TrainConfig& cfg, bool train,
                         std::mt19937_64* rng, bool backprop, double weight);

/// Mini-batch training, mean-reduced over classes then over the batch.
/// Throws EmptyCorpus, or DivergenceError after restoring the parameters
/// from the start of the failing epoch.
TrainResult train(FusionModel& model, std::span<const TrainingExample> data, const TrainConfig& cfg,
                  const EpochCallback& on_epoch = {});

/// Eval-mode predictions over a set of raw features.
StrategySet labels_from_multi_hot(const Vector& y, const std::vector<std::string>& class_ids);

std::vector<PredictionResult> predict_all(const FusionModel& model, std::span<const TrainingExample> data);

}  // namespace persuade
