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

#include "persuade/fusion_model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "persuade/error.hpp"

namespace persuade {

void ModelConfig::validate() const {
    extractor.validate();
    const int d = extractor.d_model;
    if (n_heads <= 0 || d % n_heads != 0) throw ValidationError("model config: d_model must divide by n_heads");
    if (decoder_heads <= 0 || d % decoder_heads != 0)
        throw ValidationError("model config: d_model must divide by decoder_heads");
    if (ff_dim <= 0 || decoder_ff_dim <= 0) throw ValidationError("model config: feed-forward widths must be positive");
    if (n_encoder_layers < 0 || n_decoder_layers < 0) throw ValidationError("model config: negative layer count");
    if (dropout < 0.0 || dropout >= 1.0) throw ValidationError("model config: dropout must be in [0, 1)");
    if (max_target_len < 2) throw ValidationError("model config: max_target_len must be >= 2");
}

std::vector<std::string> PredictionResult::topk(std::size_t k) const {
    std::vector<std::string> out(ranked_ids.begin(), ranked_ids.begin() + std::min(k, ranked_ids.size()));
    return out;
}

Vector sigmoid(const Vector& logits) {
    return logits.unaryExpr([](double z) {
        if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
        const double e = std::exp(z);
        return e / (1.0 + e);
    });
}

std::vector<std::size_t> rank_classes(const Vector& probs) {
    std::vector<std::size_t> idx(static_cast<std::size_t>(probs.size()));
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
        return probs(static_cast<Eigen::Index>(a)) > probs(static_cast<Eigen::Index>(b));
    });
    return idx;
}

PoolOutput pool_self_attention(const Matrix& enc, const Vector& w_pool) {
    if (enc.cols() != w_pool.size())
        throw ShapeError("pool: enc width " + std::to_string(enc.cols()) + " != w_pool length " +
                         std::to_string(w_pool.size()));
    if (enc.rows() == 0) throw ShapeError("pool: no rows");
    const Vector scores = enc * w_pool;
    if (!scores.allFinite()) throw NumericalError("pool: non-finite attention scores");
    const double mx = scores.maxCoeff();
    Vector w = (scores.array() - mx).exp();
    w /= w.sum();
    PoolOutput out;
    out.output = enc.transpose() * w;
    out.weights = std::move(w);
    return out;
}

namespace {

void check_loss_shapes(const Vector& probs, const Vector& y) {
    if (probs.size() != y.size())
        throw ShapeError("loss: probs length " + std::to_string(probs.size()) + " != labels length " +
                         std::to_string(y.size()));
    if (probs.size() == 0) throw ShapeError("loss: empty vectors");
}

}  // namespace

double strategy_loss(const Vector& probs, const Vector& y) { return focal_loss(probs, y, 0.0); }

double focal_loss(const Vector& probs, const Vector& y, double gamma) {
    check_loss_shapes(probs, y);
    double total = 0.0;
    for (Eigen::Index i = 0; i < probs.size(); ++i) {
        const double p = std::clamp(probs(i), kProbEpsilon, 1.0 - kProbEpsilon);
        const double w1 = gamma == 0.0 ? 1.0 : std::pow(1.0 - p, gamma);
        const double w0 = gamma == 0.0 ? 1.0 : std::pow(p, gamma);
        total += -(y(i) * w1 * std::log(p) + (1.0 - y(i)) * w0 * std::log(1.0 - p));
    }
    return total / static_cast<double>(probs.size());
}

double multitask_loss(double strategy, double generation, double lambda_gen) {
    if (lambda_gen < 0.0) throw InvalidArgumentError("lambda_gen must be >= 0");
    return strategy + lambda_gen * generation;
}

Var pool_on_tape(Var enc, Var w_pool) {
    Var scores = matmul(enc, w_pool);                   // [N, 1]
    Var weights = softmax_rows(transpose(scores));      // [1, N]
    return matmul(weights, enc);                        // [1, d]
}

HeadGradients pool_head_gradients(const Matrix& enc, const Vector& w_pool, const Matrix& w_out, const Vector& b_out,
                                  const Vector& y) {
    Parameter pw{"w_pool", Matrix(w_pool), {}};
    Parameter po{"w_out", w_out, {}};
    Parameter pb{"b_out", Matrix(b_out.transpose()), {}};
    Tape tape;
    Var e = tape.constant(enc);
    Var pooled = pool_on_tape(e, tape.param(pw));
    Var logits = add_row(matmul(pooled, tape.param(po)), tape.param(pb));
    Var loss = bce_with_logits(logits, Matrix(y.transpose()));
    tape.backward(loss);
    HeadGradients g;
    g.loss = loss.value()(0, 0);
    g.d_w_pool = pw.grad.col(0);
    g.d_w_out = po.grad;
    g.d_b_out = pb.grad.row(0).transpose();
    return g;
}

Matrix sinusoidal_positions(int rows, int d) {
    Matrix pe(rows, d);
    for (int pos = 0; pos < rows; ++pos) {
        for (int i = 0; i < d; ++i) {
            const double rate = std::pow(10000.0, -static_cast<double>(2 * (i / 2)) / d);
            pe(pos, i) = (i % 2 == 0) ? std::sin(pos * rate) : std::cos(pos * rate);
        }
    }
    return pe;
}

FusionModel::FusionModel(ModelConfig cfg, std::vector<std::string> class_ids, std::string taxonomy_hash,
                         Vocabulary vocab, std::uint64_t seed)
    : cfg_(std::move(cfg)),
      class_ids_(std::move(class_ids)),
      taxonomy_hash_(std::move(taxonomy_hash)),
      vocab_(std::move(vocab)) {
    cfg_.validate();
    if (class_ids_.empty()) throw ValidationError("model: no classes");
    allocate();
    reinitialize(seed);
}

namespace {

enum class Init { Uniform, Zeros, Ones };

Parameter make_param(std::string name, Eigen::Index rows, Eigen::Index cols) {
    Parameter p;
    p.name = std::move(name);
    p.value = Matrix::Zero(rows, cols);
    p.grad = Matrix::Zero(rows, cols);
    return p;
}

}  // namespace

void FusionModel::allocate() {
    const auto& ex = cfg_.extractor;
    const int d = ex.d_model;
    const int P = static_cast<int>(class_ids_.size());
    const int V = vocab_.size();

    auto proj = [&](const std::string& name, int in) {
        return ProjectionParams{make_param("proj." + name + ".w", in, d), make_param("proj." + name + ".b", 1, d)};
    };
    proj_image_ = proj("image", ex.backbone_dim);
    proj_roi_ = proj("roi", ex.backbone_dim);
    proj_ocr_ = proj("ocr", ex.backbone_dim);
    proj_caption_ = proj("caption", ex.backbone_dim);
    proj_symbol_ = proj("symbol", ex.n_symbols);

    auto attention = [&](const std::string& prefix) {
        return Attention{make_param(prefix + ".wq", d, d), make_param(prefix + ".wk", d, d),
                         make_param(prefix + ".wv", d, d), make_param(prefix + ".wo", d, d),
                         make_param(prefix + ".bq", 1, d), make_param(prefix + ".bk", 1, d),
                         make_param(prefix + ".bv", 1, d), make_param(prefix + ".bo", 1, d)};
    };
    auto norm = [&](const std::string& prefix) {
        return Norm{make_param(prefix + ".gain", 1, d), make_param(prefix + ".bias", 1, d)};
    };
    auto ff = [&](const std::string& prefix, int width) {
        return FeedForward{make_param(prefix + ".w1", d, width), make_param(prefix + ".b1", 1, width),
                           make_param(prefix + ".w2", width, d), make_param(prefix + ".b2", 1, d)};
    };

    encoder_.clear();
    for (int l = 0; l < cfg_.n_encoder_layers; ++l) {
        const std::string p = "enc." + std::to_string(l);
        encoder_.push_back(EncoderLayer{attention(p + ".attn"), norm(p + ".ln1"), ff(p + ".ff", cfg_.ff_dim),
                                        norm(p + ".ln2")});
    }
    w_pool_ = make_param("pool.w", d, 1);
    w_out_ = make_param("head.w", d, P);
    b_out_ = make_param("head.b", 1, P);

    token_embedding_ = make_param("dec.embedding", V, d);
    decoder_.clear();
    for (int l = 0; l < cfg_.n_decoder_layers; ++l) {
        const std::string p = "dec." + std::to_string(l);
        decoder_.push_back(DecoderLayer{attention(p + ".self"), norm(p + ".ln1"), attention(p + ".cross"),
                                        norm(p + ".ln2"), ff(p + ".ff", cfg_.decoder_ff_dim), norm(p + ".ln3")});
    }
    w_vocab_ = make_param("dec.vocab.w", d, V);
    b_vocab_ = make_param("dec.vocab.b", 1, V);
}

template <class F>
void FusionModel::for_each_param(F&& f) {
    auto proj = [&](ProjectionParams& p) {
        f(p.w, Init::Uniform);
        f(p.b, Init::Zeros);
    };
    auto attention = [&](Attention& a) {
        for (Parameter* w : {&a.wq, &a.wk, &a.wv, &a.wo}) f(*w, Init::Uniform);
        for (Parameter* b : {&a.bq, &a.bk, &a.bv, &a.bo}) f(*b, Init::Zeros);
    };
    auto norm = [&](Norm& n) {
        f(n.gain, Init::Ones);
        f(n.bias, Init::Zeros);
    };
    auto ff = [&](FeedForward& x) {
        f(x.w1, Init::Uniform);
        f(x.b1, Init::Zeros);
        f(x.w2, Init::Uniform);
        f(x.b2, Init::Zeros);
    };
    proj(proj_image_);
    proj(proj_roi_);
    proj(proj_ocr_);
    proj(proj_caption_);
    proj(proj_symbol_);
    for (auto& l : encoder_) {
        attention(l.attn);
        norm(l.ln1);
        ff(l.ff);
        norm(l.ln2);
    }
    f(w_pool_, Init::Uniform);
    f(w_out_, Init::Uniform);
    f(b_out_, Init::Zeros);
    f(token_embedding_, Init::Uniform);
    for (auto& l : decoder_) {
        attention(l.self_attn);
        norm(l.ln1);
        attention(l.cross_attn);
        norm(l.ln2);
        ff(l.ff);
        norm(l.ln3);
    }
    f(w_vocab_, Init::Uniform);
    f(b_vocab_, Init::Zeros);
}

void FusionModel::reinitialize(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    const double d = cfg_.extractor.d_model;
    for_each_param([&](Parameter& p, Init init) {
        switch (init) {
            case Init::Zeros: p.value.setZero(); break;
            case Init::Ones: p.value.setOnes(); break;
            case Init::Uniform: {
                // Embedding tables are indexed by row, so their fan-in is the width.
                const double fan_in = (&p == &token_embedding_) ? d : static_cast<double>(p.value.rows());
                const double bound = 1.0 / std::sqrt(fan_in);
                std::uniform_real_distribution<double> u(-bound, bound);
                for (Eigen::Index i = 0; i < p.value.size(); ++i) p.value.data()[i] = u(rng);
                break;
            }
        }
        p.grad.setZero(p.value.rows(), p.value.cols());
    });
}

std::vector<Parameter*> FusionModel::parameters() {
    std::vector<Parameter*> out;
    for_each_param([&](Parameter& p, Init) { out.push_back(&p); });
    return out;
}

std::vector<const Parameter*> FusionModel::parameters() const {
    std::vector<const Parameter*> out;
    const_cast<FusionModel*>(this)->for_each_param([&](Parameter& p, Init) { out.push_back(&p); });
    return out;
}

std::size_t FusionModel::parameter_count() const {
    std::size_t n = 0;
    for (const Parameter* p : parameters()) n += static_cast<std::size_t>(p->value.size());
    return n;
}

Var FusionModel::project_block(Tape& tape, const ProjectionParams& p, const Matrix& raw, int rows) const {
    const Eigen::Index valid = std::min<Eigen::Index>(raw.rows(), rows);
    const int d = cfg_.extractor.d_model;
    std::vector<Var> parts;
    if (valid > 0) {
        Var x = tape.constant(raw.topRows(valid));
        parts.push_back(add_row(matmul(x, tape.param(p.w)), tape.param(p.b)));
    }
    if (valid < rows) parts.push_back(tape.constant(Matrix::Zero(rows - valid, d)));
    if (parts.size() == 1) return parts[0];
    return concat_rows(parts);
}

Var FusionModel::project_on_tape(Tape& tape, const RawFeatures& raw) const {
    const auto& ex = cfg_.extractor;
    raw.validate(ex);
    std::vector<Var> blocks;
    blocks.push_back(project_block(tape, proj_image_, Matrix(raw.image.transpose()), 1));
    if (ex.n_roi > 0) blocks.push_back(project_block(tape, proj_roi_, raw.rois, ex.n_roi));
    if (ex.ocr_max_tokens > 0) blocks.push_back(project_block(tape, proj_ocr_, raw.ocr, ex.ocr_max_tokens));
    if (ex.n_cap > 0) blocks.push_back(project_block(tape, proj_caption_, raw.captions, ex.n_cap));
    blocks.push_back(project_block(tape, proj_symbol_, Matrix(raw.symbols.transpose()), 1));
    return concat_rows(blocks);
}

Var FusionModel::attention(Tape& tape, const Attention& a, Var query, Var memory, int heads, bool causal) const {
    const int d = cfg_.extractor.d_model;
    const int dh = d / heads;
    Var q = add_row(matmul(query, tape.param(a.wq)), tape.param(a.bq));
    Var k = add_row(matmul(memory, tape.param(a.wk)), tape.param(a.bk));
    Var v = add_row(matmul(memory, tape.param(a.wv)), tape.param(a.bv));
    const double inv = 1.0 / std::sqrt(static_cast<double>(dh));
    std::vector<Var> outs;
    outs.reserve(static_cast<std::size_t>(heads));
    for (int h = 0; h < heads; ++h) {
        Var qh = col_slice(q, h * dh, dh);
        Var kh = col_slice(k, h * dh, dh);
        Var vh = col_slice(v, h * dh, dh);
        Var scores = scale(matmul(qh, transpose(kh)), inv);
        outs.push_back(matmul(softmax_rows(scores, causal), vh));
    }
    Var joined = heads == 1 ? outs[0] : concat_cols(outs);
    return add_row(matmul(joined, tape.param(a.wo)), tape.param(a.bo));
}

Var FusionModel::feed_forward(Tape& tape, const FeedForward& f, Var x, bool train, std::mt19937_64* rng) const {
    Var h = relu(add_row(matmul(x, tape.param(f.w1)), tape.param(f.b1)));
    if (train && rng) h = dropout(h, cfg_.dropout, *rng);
    return add_row(matmul(h, tape.param(f.w2)), tape.param(f.b2));
}

Var FusionModel::encode_on_tape(Tape& tape, Var x, bool train, std::mt19937_64* rng) const {
    const bool drop = train && rng && cfg_.dropout > 0.0;
    for (const auto& layer : encoder_) {
        Var a = attention(tape, layer.attn, x, x, cfg_.n_heads, false);
        if (drop) a = dropout(a, cfg_.dropout, *rng);
        x = layer_norm(add(x, a), tape.param(layer.ln1.gain), tape.param(layer.ln1.bias));
        Var f = feed_forward(tape, layer.ff, x, train, rng);
        if (drop) f = dropout(f, cfg_.dropout, *rng);
        x = layer_norm(add(x, f), tape.param(layer.ln2.gain), tape.param(layer.ln2.bias));
    }
    return x;
}

Var FusionModel::decoder_on_tape(Tape& tape, Var enc, std::span<const int> input, bool train,
                                 std::mt19937_64* rng) const {
    if (input.empty()) throw ShapeError("decoder: empty input sequence");
    if (static_cast<int>(input.size()) > cfg_.max_target_len)
        throw ShapeError("decoder: sequence of " + std::to_string(input.size()) + " exceeds max_target_len " +
                         std::to_string(cfg_.max_target_len));
    const int d = cfg_.extractor.d_model;
    const bool drop = train && rng && cfg_.dropout > 0.0;
    Var x = scale(gather_rows(tape.param(token_embedding_), input), std::sqrt(static_cast<double>(d)));
    x = add_constant(x, sinusoidal_positions(static_cast<int>(input.size()), d));
    if (drop) x = dropout(x, cfg_.dropout, *rng);
    for (const auto& layer : decoder_) {
        Var s = attention(tape, layer.self_attn, x, x, cfg_.decoder_heads, true);
        if (drop) s = dropout(s, cfg_.dropout, *rng);
        x = layer_norm(add(x, s), tape.param(layer.ln1.gain), tape.param(layer.ln1.bias));
        Var c = attention(tape, layer.cross_attn, x, enc, cfg_.decoder_heads, false);
        if (drop) c = dropout(c, cfg_.dropout, *rng);
        x = layer_norm(add(x, c), tape.param(layer.ln2.gain), tape.param(layer.ln2.bias));
        Var f = feed_forward(tape, layer.ff, x, train, rng);
        if (drop) f = dropout(f, cfg_.dropout, *rng);
        x = layer_norm(add(x, f), tape.param(layer.ln3.gain), tape.param(layer.ln3.bias));
    }
    return add_row(matmul(x, tape.param(w_vocab_)), tape.param(b_vocab_));
}

FusionModel::Graph FusionModel::forward(Tape& tape, const RawFeatures& raw, bool train, std::mt19937_64* rng) const {
    Graph g;
    g.bundle = project_on_tape(tape, raw);
    g.enc = encode_on_tape(tape, g.bundle, train, rng);
    g.pooled = pool_on_tape(g.enc, tape.param(w_pool_));
    g.logits = add_row(matmul(g.pooled, tape.param(w_out_)), tape.param(b_out_));
    return g;
}

Matrix FusionModel::bundle(const RawFeatures& raw) const {
    Tape tape(false);
    return project_on_tape(tape, raw).value();
}

Matrix FusionModel::encode(const Matrix& bundle) const {
    const auto& ex = cfg_.extractor;
    if (bundle.rows() != ex.total_rows() || bundle.cols() != ex.d_model)
        throw ShapeError("encode: expected [" + std::to_string(ex.total_rows()) + ", " + std::to_string(ex.d_model) +
                         "], got [" + std::to_string(bundle.rows()) + ", " + std::to_string(bundle.cols()) + "]");
    if (!bundle.allFinite()) throw NumericalError("encode: non-finite input bundle");
    Tape tape(false);
    Matrix out = encode_on_tape(tape, tape.constant(bundle), false, nullptr).value();
    if (!out.allFinite()) throw NumericalError("encode: non-finite output");
    return out;
}

PredictionResult FusionModel::predict(const Vector& pooled) const {
    if (pooled.size() != cfg_.extractor.d_model) throw ShapeError("predict: pooled width mismatch");
    if (!pooled.allFinite()) throw NumericalError("predict: non-finite pooled vector");
    const Vector logits = w_out_.value.transpose() * pooled + b_out_.value.row(0).transpose();
    PredictionResult r;
    r.probs = sigmoid(logits);
    r.ranking = rank_classes(r.probs);
    for (std::size_t i : r.ranking) r.ranked_ids.push_back(class_ids_[i]);
    r.pooled = pooled;
    return r;
}

PredictionResult FusionModel::predict_sample(const RawFeatures& raw) const {
    const Matrix enc = encode(bundle(raw));
    return predict(pool_self_attention(enc, w_pool_.value.col(0)).output);
}

Matrix FusionModel::decode_action_reason(const Matrix& enc, std::span<const int> target) const {
    if (target.empty() || target.front() != Vocabulary::kBos)
        throw VocabError("decoder input must start with <bos>");
    for (int id : target)
        if (id < 0 || id >= vocab_.size()) throw VocabError("token id " + std::to_string(id) + " outside vocabulary");
    Tape tape(false);
    return decoder_on_tape(tape, tape.constant(enc), target, false, nullptr).value();
}

std::vector<int> FusionModel::greedy_decode(const Matrix& enc, int max_len) const {
    max_len = std::min(max_len, cfg_.max_target_len);
    std::vector<int> seq{Vocabulary::kBos};
    while (static_cast<int>(seq.size()) < max_len) {
        const Matrix logits = decode_action_reason(enc, seq);
        Eigen::Index next = 0;
        logits.row(logits.rows() - 1).maxCoeff(&next);
        seq.push_back(static_cast<int>(next));
        if (next == Vocabulary::kEos) break;
    }
    return seq;
}

std::string FusionModel::generate_action_reason(const RawFeatures& raw) const {
    const Matrix enc = encode(bundle(raw));
    return vocab_.decode(greedy_decode(enc, cfg_.max_target_len));
}

}  // namespace persuade
