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

#include "persuade/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "persuade/error.hpp"
#include "persuade/metrics.hpp"

namespace persuade {

void TrainConfig::validate() const {
    if (!(learning_rate > 0.0)) throw ValidationError("train config: learning_rate must be positive");
    if (batch_size < 1) throw ValidationError("train config: batch_size must be >= 1");
    if (epochs < 0) throw ValidationError("train config: epochs must be >= 0");
    if (lambda_gen < 0.0) throw ValidationError("train config: lambda_gen must be >= 0");
    if (max_grad_norm < 0.0) throw ValidationError("train config: max_grad_norm must be >= 0");
}

void Adam::step(const std::vector<Parameter*>& params) {
    if (m_.empty()) {
        for (const Parameter* p : params) {
            m_.push_back(Matrix::Zero(p->value.rows(), p->value.cols()));
            v_.push_back(Matrix::Zero(p->value.rows(), p->value.cols()));
        }
    }
    ++t_;
    const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
    for (std::size_t i = 0; i < params.size(); ++i) {
        Parameter& p = *params[i];
        if (p.grad.size() == 0) continue;
        m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * p.grad;
        v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * p.grad.cwiseAbs2();
        p.value.array() -= lr_ * (m_[i].array() / c1) / ((v_[i].array() / c2).sqrt() + eps_);
    }
}

ExampleLoss example_loss(FusionModel& model, const TrainingExample& ex, const TrainConfig& cfg, bool train,
                         std::mt19937_64* rng, bool backprop, double weight) {
    Tape tape(backprop);
    const auto g = model.forward(tape, ex.raw, train, rng);
    const Matrix y = ex.y.transpose();
    Var ls = cfg.focal ? focal_with_logits(g.logits, y, cfg.focal_gamma) : bce_with_logits(g.logits, y);
    ExampleLoss out;
    out.strategy = ls.value()(0, 0);
    Var total = ls;
    if (cfg.lambda_gen > 0.0 && ex.tokens.size() >= 2) {
        const std::span<const int> toks(ex.tokens);
        Var logits = model.decoder_on_tape(tape, g.enc, toks.first(toks.size() - 1), train, rng);
        Var lg = cross_entropy_rows(logits, toks.subspan(1));
        out.generation = lg.value()(0, 0);
        out.has_generation = true;
        total = add_scalars(ls, scale(lg, cfg.lambda_gen));
    }
    if (backprop) tape.backward(scale(total, weight));
    return out;
}

StrategySet labels_from_multi_hot(const Vector& y, const std::vector<std::string>& class_ids) {
    std::vector<std::string> ids;
    for (Eigen::Index i = 0; i < y.size(); ++i)
        if (y(i) > 0.5) ids.push_back(class_ids.at(static_cast<std::size_t>(i)));
    return StrategySet(std::move(ids));
}

std::vector<PredictionResult> predict_all(const FusionModel& model, std::span<const TrainingExample> data) {
    std::vector<PredictionResult> out;
    out.reserve(data.size());
    for (const auto& ex : data) out.push_back(model.predict_sample(ex.raw));
    return out;
}

namespace {

double global_norm(const std::vector<Parameter*>& params) {
    double s = 0.0;
    for (const Parameter* p : params)
        if (p->grad.size() > 0) s += p->grad.squaredNorm();
    return std::sqrt(s);
}

std::vector<Matrix> snapshot(const std::vector<Parameter*>& params) {
    std::vector<Matrix> out;
    out.reserve(params.size());
    for (const Parameter* p : params) out.push_back(p->value);
    return out;
}

void restore(const std::vector<Parameter*>& params, const std::vector<Matrix>& values) {
    for (std::size_t i = 0; i < params.size(); ++i) params[i]->value = values[i];
}

}  // namespace

TrainResult train(FusionModel& model, std::span<const TrainingExample> data, const TrainConfig& cfg,
                  const EpochCallback& on_epoch) {
    cfg.validate();
    if (data.empty()) throw EmptyCorpusError("train: no labelled samples");
    for (const auto& ex : data)
        if (static_cast<std::size_t>(ex.y.size()) != model.n_classes())
            throw ShapeError("train: label vector of '" + ex.sample_id + "' does not match class count");

    const auto params = model.parameters();
    Adam opt(cfg.learning_rate);
    std::mt19937_64 shuffle_rng(cfg.seed);
    std::vector<std::size_t> order(data.size());
    std::iota(order.begin(), order.end(), 0);

    std::vector<StrategySet> truths;
    truths.reserve(data.size());
    for (const auto& ex : data) truths.push_back(labels_from_multi_hot(ex.y, model.class_ids()));

    TrainResult result;
    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        const auto last_good = snapshot(params);
        std::shuffle(order.begin(), order.end(), shuffle_rng);
        double sum_s = 0.0, sum_g = 0.0;
        std::size_t n_g = 0;

        for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(cfg.batch_size)) {
            const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
            const double weight = 1.0 / static_cast<double>(end - start);
            for (Parameter* p : params) p->zero_grad();
            double batch_loss = 0.0;
            for (std::size_t pos = start; pos < end; ++pos) {
                std::seed_seq seq{cfg.seed, static_cast<std::uint64_t>(epoch), static_cast<std::uint64_t>(pos)};
                std::mt19937_64 rng(seq);
                const auto l = example_loss(model, data[order[pos]], cfg, true, &rng, true, weight);
                sum_s += l.strategy;
                batch_loss += l.strategy;
                if (l.has_generation) {
                    sum_g += l.generation;
                    batch_loss += cfg.lambda_gen * l.generation;
                    ++n_g;
                }
            }
            const double norm = global_norm(params);
            if (!std::isfinite(batch_loss) || !std::isfinite(norm)) {
                restore(params, last_good);
                throw DivergenceError("train: non-finite loss in epoch " + std::to_string(epoch) +
                                      "; parameters restored to the start of the epoch");
            }
            if (cfg.max_grad_norm > 0.0 && norm > cfg.max_grad_norm) {
                const double s = cfg.max_grad_norm / norm;
                for (Parameter* p : params) p->grad *= s;
            }
            opt.step(params);
        }

        EpochLog log;
        log.epoch = epoch;
        log.strategy_loss = sum_s / static_cast<double>(data.size());
        log.generation_loss = n_g ? sum_g / static_cast<double>(n_g) : 0.0;
        if (cfg.eval_each_epoch) {
            const auto preds = predict_all(model, data);
            log.top1 = top1_accuracy(preds, truths);
            log.top3 = topk_accuracy(preds, truths, 3);
        }
        result.log.push_back(log);
        if (on_epoch && !on_epoch(log)) {
            result.stopped_early = epoch < cfg.epochs;
            break;
        }
    }
    return result;
}

}  // namespace persuade
