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
#include <random>
#include <span>
#include <string>
#include <vector>

#include "persuade/autograd.hpp"
#include "persuade/features.hpp"
#include "persuade/vocab.hpp"

namespace persuade {

/// Architecture hyperparameters. Only depth (2) and width (256) of the
/// encoder are fixed by the reference design; the rest are defaults.
struct ModelConfig {
    ExtractorConfig extractor;
    int n_heads = 4;
    int ff_dim = 512;
    int n_encoder_layers = 2;
    double dropout = 0.1;
    int n_decoder_layers = 1;
    int decoder_heads = 4;
    int decoder_ff_dim = 512;
    /// Longest decoder sequence, including <bos>/<eos>.
    int max_target_len = 32;

    void validate() const;
    friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

struct PredictionResult {
    Vector probs;
    /// Class indices by descending probability; ties by ascending index.
    std::vector<std::size_t> ranking;
    /// Strategy ids in `ranking` order.
    std::vector<std::string> ranked_ids;
    Vector pooled;

    std::vector<std::string> topk(std::size_t k) const;
};

struct PoolOutput {
    Vector output;   // [d_model]
    Vector weights;  // [rows], softmax over row scores
};

/// Softmax-weighted convex combination of the rows of `enc`, scored by `w_pool`.
/// Throws NumericalError on non-finite scores.
PoolOutput pool_self_attention(const Matrix& enc, const Vector& w_pool);

Vector sigmoid(const Vector& logits);
std::vector<std::size_t> rank_classes(const Vector& probs);

/// Mean over classes of clamped binary cross-entropy. Throws ShapeError.
double strategy_loss(const Vector& probs, const Vector& y);
double focal_loss(const Vector& probs, const Vector& y, double gamma);
double multitask_loss(double strategy, double generation, double lambda_gen);

/// Loss and analytic gradients of BCE(sigmoid(pool(enc) * w_out + b_out), y)
/// with respect to the pooling vector and the output head.
struct HeadGradients {
    double loss = 0.0;
    Vector d_w_pool;
    Matrix d_w_out;
    Vector d_b_out;
};
HeadGradients pool_head_gradients(const Matrix& enc, const Vector& w_pool, const Matrix& w_out, const Vector& b_out,
                                  const Vector& y);

/// Attention pooling recorded on a tape: enc [N, d], w_pool [d, 1] -> [1, d].
Var pool_on_tape(Var enc, Var w_pool);

/// Cross-modal attention encoder + pooling + sigmoid head + action-reason decoder.
class FusionModel {
public:
    FusionModel(ModelConfig cfg, std::vector<std::string> class_ids, std::string taxonomy_hash, Vocabulary vocab,
                std::uint64_t seed);

    const ModelConfig& config() const noexcept { return cfg_; }
    std::size_t n_classes() const noexcept { return class_ids_.size(); }
    const std::vector<std::string>& class_ids() const noexcept { return class_ids_; }
    const std::string& taxonomy_hash() const noexcept { return taxonomy_hash_; }
    const Vocabulary& vocab() const noexcept { return vocab_; }

    /// Seeded uniform initialisation scaled by fan-in; layer-norm gains 1, offsets 0.
    void reinitialize(std::uint64_t seed);

    // Inference (eval mode, no dropout). Safe for concurrent callers.
    Matrix bundle(const RawFeatures& raw) const;
    Matrix encode(const Matrix& bundle) const;
    PredictionResult predict(const Vector& pooled) const;
    PredictionResult predict_sample(const RawFeatures& raw) const;
    /// Teacher-forced logits [T, V] for input tokens `target` (starting with <bos>).
    Matrix decode_action_reason(const Matrix& enc, std::span<const int> target) const;
    std::vector<int> greedy_decode(const Matrix& enc, int max_len) const;
    std::string generate_action_reason(const RawFeatures& raw) const;

    // Differentiable graph construction. `rng` is used for dropout when `train`.
    struct Graph {
        Var bundle;
        Var enc;
        Var pooled;
        Var logits;
    };
    Graph forward(Tape& tape, const RawFeatures& raw, bool train, std::mt19937_64* rng) const;
    Var project_on_tape(Tape& tape, const RawFeatures& raw) const;
    Var encode_on_tape(Tape& tape, Var bundle, bool train, std::mt19937_64* rng) const;
    Var decoder_on_tape(Tape& tape, Var enc, std::span<const int> input, bool train, std::mt19937_64* rng) const;

    std::vector<Parameter*> parameters();
    std::vector<const Parameter*> parameters() const;
    std::size_t parameter_count() const;

    Parameter& w_pool() { return w_pool_; }
    Parameter& w_out() { return w_out_; }
    Parameter& b_out() { return b_out_; }
    const Parameter& w_pool() const { return w_pool_; }
    const Parameter& w_out() const { return w_out_; }
    const Parameter& b_out() const { return b_out_; }

private:
    struct Attention {
        Parameter wq, wk, wv, wo, bq, bk, bv, bo;
    };
    struct Norm {
        Parameter gain, bias;
    };
    struct FeedForward {
        Parameter w1, b1, w2, b2;
    };
    struct EncoderLayer {
        Attention attn;
        Norm ln1;
        FeedForward ff;
        Norm ln2;
    };
    struct DecoderLayer {
        Attention self_attn;
        Norm ln1;
        Attention cross_attn;
        Norm ln2;
        FeedForward ff;
        Norm ln3;
    };
    struct ProjectionParams {
        Parameter w, b;
    };

    void allocate();
    Var attention(Tape& tape, const Attention& a, Var query, Var memory, int heads, bool causal) const;
    Var feed_forward(Tape& tape, const FeedForward& f, Var x, bool train, std::mt19937_64* rng) const;
    Var project_block(Tape& tape, const ProjectionParams& p, const Matrix& raw, int rows) const;
    template <class F>
    void for_each_param(F&& f);

    ModelConfig cfg_;
    std::vector<std::string> class_ids_;
    std::string taxonomy_hash_;
    Vocabulary vocab_;

    ProjectionParams proj_image_, proj_roi_, proj_ocr_, proj_caption_, proj_symbol_;
    std::vector<EncoderLayer> encoder_;
    Parameter w_pool_;
    Parameter w_out_;
    Parameter b_out_;
    Parameter token_embedding_;
    std::vector<DecoderLayer> decoder_;
    Parameter w_vocab_;
    Parameter b_vocab_;
};

/// Fixed sinusoidal position table [rows, d].
Matrix sinusoidal_positions(int rows, int d);

}  // namespace persuade
