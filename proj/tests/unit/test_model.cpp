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

#include <filesystem>
#include <fstream>
#include <thread>

#include "doctest.h"
#include "oracles.hpp"
#include "persuade/checkpoint.hpp"
#include "persuade/error.hpp"
#include "persuade/fusion_model.hpp"
#include "persuade/trainer.hpp"
#include "synthetic.hpp"

using namespace persuade;

namespace {

FusionModel make_model(int n_classes = 4, std::uint64_t seed = 1, Vocabulary vocab = {}) {
    std::vector<std::string> ids;
    for (int i = 0; i < n_classes; ++i) ids.push_back("c" + std::to_string(i));
    return FusionModel(testkit::small_model(), ids, "toyhash", std::move(vocab), seed);
}

}  // namespace

TEST_CASE("self-attention pooling is a convex combination of rows") {
    Matrix enc(3, 2);
    enc << 1, 0, 0, 1, 2, 2;
    const Vector w = (Vector(2) << 0.5, -0.25).finished();
    const auto p = pool_self_attention(enc, w);
    CHECK(p.weights.sum() == doctest::Approx(1.0).epsilon(1e-15));
    const Vector s = enc * w;
    const Vector e = s.array().exp();
    for (int i = 0; i < 3; ++i) CHECK(p.weights(i) == doctest::Approx(e(i) / e.sum()).epsilon(1e-12));
    CHECK((p.output - enc.transpose() * p.weights).norm() < 1e-15);
    CHECK_THROWS_AS(pool_self_attention(enc, Vector::Zero(3)), ShapeError);

    // Large scores stay finite
    const auto big = pool_self_attention(enc * 1e3, w);
    CHECK(big.output.allFinite());
}

TEST_CASE("rank_classes breaks ties by index") {
    const Vector p = (Vector(5) << 0.2, 0.9, 0.2, 0.9, 0.5).finished();
    const auto r = rank_classes(p);
    CHECK(r == std::vector<std::size_t>{1, 3, 4, 0, 2});
}

TEST_CASE("strategy loss agrees with the BCE oracle") {
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 100; ++trial) {
        const int n = 1 + trial % 21;
        Vector p(n), y(n);
        std::vector<double> pv, yv;
        for (int i = 0; i < n; ++i) {
            p(i) = trial % 7 == 0 ? (u(rng) < 0.5 ? 0.0 : 1.0) : u(rng);
            y(i) = u(rng) < 0.3 ? 1.0 : 0.0;
            pv.push_back(p(i));
            yv.push_back(y(i));
        }
        CHECK(strategy_loss(p, y) == doctest::Approx(oracle::bce(pv, yv)).epsilon(1e-12));
    }
    CHECK_THROWS_AS(strategy_loss(Vector::Zero(2), Vector::Zero(3)), ShapeError);
    CHECK(multitask_loss(0.5, 2.0, 0.25) == doctest::Approx(1.0));
    CHECK_THROWS_AS(multitask_loss(0.5, 2.0, -1.0), InvalidArgumentError);
    // Focal with gamma 0 is plain BCE
    const Vector p = (Vector(3) << 0.1, 0.7, 0.4).finished();
    const Vector y = (Vector(3) << 0, 1, 1).finished();
    CHECK(focal_loss(p, y, 0.0) == doctest::Approx(strategy_loss(p, y)));
    CHECK(focal_loss(p, y, 2.0) < strategy_loss(p, y));
}

TEST_CASE("model shapes and deterministic inference") {
    auto model = make_model();
    const auto cfg = model.config().extractor;
    const auto raw = testkit::stub_features("m1", cfg);
    const Matrix b = model.bundle(raw);
    CHECK(b.rows() == cfg.total_rows());
    CHECK(b.cols() == cfg.d_model);
    const Matrix enc = model.encode(b);
    CHECK(enc.rows() == b.rows());
    CHECK(enc.cols() == b.cols());
    CHECK_THROWS_AS(model.encode(Matrix::Zero(b.rows() + 1, b.cols())), ShapeError);

    const auto r1 = model.predict_sample(raw);
    const auto r2 = model.predict_sample(raw);
    CHECK(r1.probs == r2.probs);
    CHECK(r1.probs.size() == 4);
    CHECK(r1.ranked_ids.size() == 4);
    CHECK(r1.topk(2).size() == 2);
    CHECK((r1.probs.array() > 0.0).all());
    CHECK((r1.probs.array() < 1.0).all());

    // Concurrent callers see the same result
    std::vector<Vector> out(4);
    std::vector<std::thread> threads;
    for (int i = 0; i < 4; ++i) threads.emplace_back([&, i] { out[static_cast<std::size_t>(i)] = model.predict_sample(raw).probs; });
    for (auto& t : threads) t.join();
    for (const auto& v : out) CHECK(v == r1.probs);
}

TEST_CASE("reinitialize is seeded") {
    auto a = make_model(3, 5);
    auto b = make_model(3, 5);
    auto c = make_model(3, 6);
    const auto raw = testkit::stub_features("s", a.config().extractor);
    CHECK(a.predict_sample(raw).probs == b.predict_sample(raw).probs);
    CHECK(a.predict_sample(raw).probs != c.predict_sample(raw).probs);
    c.reinitialize(5);
    CHECK(a.predict_sample(raw).probs == c.predict_sample(raw).probs);
}

TEST_CASE("model config validation") {
    auto mc = testkit::small_model();
    CHECK_NOTHROW(mc.validate());
    mc.n_heads = 3;
    CHECK_THROWS_AS(mc.validate(), ValidationError);
    mc = testkit::small_model();
    mc.dropout = 1.0;
    CHECK_THROWS_AS(mc.validate(), ValidationError);
    CHECK_THROWS_AS(FusionModel(testkit::small_model(), {}, "h", Vocabulary(), 1), ValidationError);
}

TEST_CASE("sinusoidal positions") {
    const Matrix pe = sinusoidal_positions(4, 6);
    CHECK(pe.rows() == 4);
    CHECK(pe(0, 0) == 0.0);
    CHECK(pe(0, 1) == 1.0);
    CHECK(pe(1, 0) == doctest::Approx(std::sin(1.0)));
}

TEST_CASE("decoder: teacher forcing shapes and greedy decode bounds") {
    const std::vector<std::string> sents{"i should buy it because it is cheap"};
    auto model = make_model(3, 2, Vocabulary::build(sents, 1));
    const auto raw = testkit::stub_features("d", model.config().extractor);
    const Matrix enc = model.encode(model.bundle(raw));
    const auto tokens = model.vocab().encode(sents[0], model.config().max_target_len);
    const Matrix logits = model.decode_action_reason(enc, std::span<const int>(tokens).first(tokens.size() - 1));
    CHECK(logits.rows() == static_cast<Eigen::Index>(tokens.size() - 1));
    CHECK(logits.cols() == model.vocab().size());
    const auto g = model.greedy_decode(enc, 100);
    CHECK(static_cast<int>(g.size()) <= model.config().max_target_len);
    CHECK(g.front() == Vocabulary::kBos);
    const std::vector<int> too_long(static_cast<std::size_t>(model.config().max_target_len + 1), Vocabulary::kBos);
    CHECK_THROWS_AS(model.decode_action_reason(enc, too_long), ShapeError);
}

TEST_CASE("checkpoint round-trip preserves predictions") {
    const auto dir = testkit::temp_dir("ckpt");
    const std::vector<std::string> sents{"i should go"};
    auto model = make_model(5, 8, Vocabulary::build(sents, 1));
    TrainConfig tc;
    tc.learning_rate = 0.01;
    tc.seed = 42;
    const auto hash = save_checkpoint(dir / "m.ckpt", model, tc);
    CHECK(hash.size() == 64);
    const auto loaded = load_checkpoint(dir / "m.ckpt", std::string("toyhash"));
    CHECK(loaded.hash == hash);
    CHECK(loaded.train_config == tc);
    CHECK(loaded.model->config() == model.config());
    CHECK(loaded.model->class_ids() == model.class_ids());
    CHECK(loaded.model->vocab() == model.vocab());
    const auto raw = testkit::stub_features("r", model.config().extractor);
    CHECK(loaded.model->predict_sample(raw).probs == model.predict_sample(raw).probs);

    // Same model, same bytes
    CHECK(save_checkpoint(dir / "again.ckpt", model, tc) == hash);

    CHECK_THROWS_AS(load_checkpoint(dir / "m.ckpt", std::string("otherhash")), TaxonomyMismatchError);
    CHECK_THROWS_AS(load_checkpoint(dir / "missing.ckpt"), NotFoundError);
    std::filesystem::resize_file(dir / "again.ckpt", std::filesystem::file_size(dir / "again.ckpt") - 16);
    CHECK_THROWS_AS(load_checkpoint(dir / "again.ckpt"), ParseError);
    {
        std::ofstream junk(dir / "junk.ckpt", std::ios::binary);
        junk << "NOPE and some more bytes";
    }
    CHECK_THROWS_AS(load_checkpoint(dir / "junk.ckpt"), ParseError);
    std::filesystem::remove_all(dir);
}

TEST_CASE("training lowers the loss on planted data") {
    auto model = make_model(4, 3);
    const auto data = testkit::planted_examples(24, model.config().extractor, 4, 1.0, 7);
    TrainConfig tc;
    tc.learning_rate = 3e-3;
    tc.batch_size = 8;
    tc.epochs = 15;
    tc.lambda_gen = 0.0;
    tc.seed = 3;
    const auto r = train(model, data, tc);
    REQUIRE(r.log.size() == 15);
    CHECK(r.log.back().strategy_loss < r.log.front().strategy_loss);
    CHECK(r.log.back().top1 >= r.log.front().top1);
}

TEST_CASE("training is reproducible for a fixed seed") {
    const auto data = testkit::planted_examples(10, testkit::small_extractor(), 4, 1.0, 7);
    TrainConfig tc;
    tc.epochs = 2;
    tc.batch_size = 4;
    tc.seed = 9;
    tc.eval_each_epoch = false;
    auto a = make_model(4, 3);
    auto b = make_model(4, 3);
    train(a, data, tc);
    train(b, data, tc);
    const auto raw = data[0].raw;
    CHECK(a.predict_sample(raw).probs == b.predict_sample(raw).probs);
}

TEST_CASE("training errors") {
    auto model = make_model(4, 3);
    const auto data = testkit::planted_examples(4, model.config().extractor, 4, 1.0, 7);
    TrainConfig tc;
    tc.epochs = 1;
    CHECK_THROWS_AS(train(model, std::span<const TrainingExample>(), tc), EmptyCorpusError);

    auto wrong = data;
    wrong[0].y = Vector::Zero(3);
    CHECK_THROWS_AS(train(model, wrong, tc), ShapeError);

    TrainConfig bad = tc;
    bad.learning_rate = 0.0;
    CHECK_THROWS_AS(train(model, data, bad), ValidationError);

    model.b_out().value(0, 0) = std::nan("");
    CHECK_THROWS_AS(train(model, data, tc), DivergenceError);
}

TEST_CASE("epoch callback can stop training early") {
    auto model = make_model(4, 3);
    const auto data = testkit::planted_examples(4, model.config().extractor, 4, 1.0, 7);
    TrainConfig tc;
    tc.epochs = 10;
    tc.eval_each_epoch = false;
    const auto r = train(model, data, tc, [](const EpochLog& l) { return l.epoch < 3; });
    CHECK(r.log.size() == 3);
    CHECK(r.stopped_early);
}

TEST_CASE("labels_from_multi_hot") {
    const Vector y = (Vector(3) << 1, 0, 1).finished();
    CHECK(labels_from_multi_hot(y, {"a", "b", "c"}) == StrategySet{"a", "c"});
}
