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

#include "doctest.h"
#include "persuade/error.hpp"
#include "persuade/feature_cache.hpp"
#include "persuade/features.hpp"
#include "persuade/fusion_model.hpp"
#include "synthetic.hpp"

using namespace persuade;

namespace {

Projection random_projection(int in, int out, unsigned seed) {
    std::srand(seed);
    Projection p;
    p.weight = Matrix::Random(in, out) * 0.1;
    p.bias = Vector::Random(out) * 0.1;
    return p;
}

Image blank(int w, int h) {
    Image img;
    img.width = w;
    img.height = h;
    img.channels = 3;
    img.pixels.assign(static_cast<std::size_t>(w * h * 3), 200);
    return img;
}

}  // namespace

TEST_CASE("default bundle is 114 x 256") {
    const ExtractorConfig cfg;
    CHECK(cfg.total_rows() == 114);
    CHECK(cfg.d_model == 256);
    const auto l = BundleLayout::of(cfg);
    CHECK(l.roi == 1);
    CHECK(l.ocr == 11);
    CHECK(l.caption == 111);
    CHECK(l.symbol == 113);
    CHECK(l.rows == 114);
}

TEST_CASE("full-size stub extraction through the model gives a [114, 256] bundle") {
    ExtractorConfig cfg;
    ModelConfig mc;
    mc.extractor = cfg;
    FusionModel model(mc, {"a", "b", "c"}, "h", Vocabulary(), 1);
    auto suite = make_stub_suite();
    const Image img = testkit::noise_image(40, 30, 2);
    const auto raw = extract_raw({"ad-1"}, img, "limited offer only today", cfg, suite);
    CHECK(raw.ocr.rows() == 4);
    CHECK(raw.captions.rows() == 2);
    CHECK(raw.rois.rows() <= 10);
    CHECK(std::abs(raw.symbols.sum() - 1.0) < 1e-12);
    const Matrix b = model.bundle(raw);
    CHECK(b.rows() == 114);
    CHECK(b.cols() == 256);
    // OCR padding rows are exactly zero
    const auto l = BundleLayout::of(cfg);
    CHECK(b.middleRows(l.ocr + 4, cfg.ocr_max_tokens - 4).isZero(0.0));
    CHECK_FALSE(b.row(l.ocr).isZero(0.0));
}

TEST_CASE("stub extractors are deterministic per sample") {
    const auto cfg = testkit::small_extractor();
    auto suite = make_stub_suite();
    const Image img = testkit::noise_image(20, 20, 7);
    const auto a = extract_raw({"x"}, img, "hello world", cfg, suite);
    const auto b = extract_raw({"x"}, img, "hello world", cfg, suite);
    const auto c = extract_raw({"y"}, img, "hello world", cfg, suite);
    CHECK(a.image == b.image);
    CHECK(a.symbols == b.symbols);
    CHECK(a.image != c.image);
    // OCR rows depend only on the words
    CHECK(a.ocr == c.ocr);
}

TEST_CASE("blank image yields zero RoIs and zero captions") {
    const auto cfg = testkit::small_extractor();
    auto suite = make_stub_suite();
    const auto raw = extract_raw({"blank"}, blank(30, 30), "", cfg, suite);
    CHECK(raw.rois.rows() == 0);
    CHECK(raw.captions.rows() == 0);
    CHECK(raw.ocr.rows() == 0);

    const Projection proj = random_projection(cfg.backbone_dim, cfg.d_model, 3);
    const Matrix e = extract_rois({"blank"}, blank(30, 30), cfg, *suite.detector, proj);
    CHECK(e.rows() == cfg.n_roi);
    CHECK(e.isZero(0.0));
}

TEST_CASE("OCR is truncated to ocr_max_tokens") {
    auto cfg = testkit::small_extractor();
    std::string text;
    for (int i = 0; i < 50; ++i) text += "w" + std::to_string(i) + " ";
    CHECK(truncate_ocr(text, cfg.ocr_max_tokens).size() == static_cast<std::size_t>(cfg.ocr_max_tokens));
    CHECK(truncate_ocr(text, cfg.ocr_max_tokens).back() == "w3");
    auto suite = make_stub_suite();
    const Projection proj = random_projection(cfg.backbone_dim, cfg.d_model, 4);
    const Matrix e = extract_ocr(text, cfg, *suite.text, proj);
    CHECK(e.rows() == cfg.ocr_max_tokens);
    CHECK(e.cols() == cfg.d_model);
}

TEST_CASE("top_detections keeps the most confident, stable on ties") {
    std::vector<Detection> d(5);
    const double conf[] = {0.2, 0.9, 0.5, 0.9, 0.1};
    for (int i = 0; i < 5; ++i) {
        d[static_cast<std::size_t>(i)].confidence = conf[i];
        d[static_cast<std::size_t>(i)].embedding = Vector::Constant(1, i);
    }
    const auto kept = top_detections(d, 3);
    REQUIRE(kept.size() == 3);
    CHECK(kept[0].embedding(0) == 1);
    CHECK(kept[1].embedding(0) == 3);
    CHECK(kept[2].embedding(0) == 2);
}

TEST_CASE("assemble_bundle names the offending block") {
    const auto cfg = testkit::small_extractor();
    const Matrix img = Matrix::Zero(1, cfg.d_model);
    const Matrix roi = Matrix::Zero(cfg.n_roi, cfg.d_model);
    const Matrix ocr = Matrix::Zero(cfg.ocr_max_tokens, cfg.d_model);
    const Matrix cap = Matrix::Zero(cfg.n_cap, cfg.d_model);
    const Matrix sym = Matrix::Zero(1, cfg.d_model);
    CHECK(assemble_bundle(img, roi, ocr, cap, sym, cfg).rows() == cfg.total_rows());

    auto expect_block = [&](const Matrix& i, const Matrix& r, const Matrix& o, const Matrix& c, const Matrix& s,
                            const std::string& name) {
        try {
            assemble_bundle(i, r, o, c, s, cfg);
            FAIL("expected ShapeError");
        } catch (const ShapeError& e) {
            CHECK(std::string(e.what()).rfind(name, 0) == 0);
        }
    };
    expect_block(img, roi, Matrix::Zero(cfg.ocr_max_tokens + 1, cfg.d_model), cap, sym, "ocr");
    expect_block(img, Matrix::Zero(cfg.n_roi, cfg.d_model + 1), ocr, cap, sym, "roi");
    expect_block(img, roi, ocr, cap, Matrix::Zero(2, cfg.d_model), "symbol");
}

TEST_CASE("raw feature validation") {
    const auto cfg = testkit::small_extractor();
    auto raw = testkit::stub_features("v", cfg);
    CHECK_NOTHROW(raw.validate(cfg));

    auto bad = raw;
    bad.image = Vector::Zero(cfg.backbone_dim + 1);
    CHECK_THROWS_AS(bad.validate(cfg), ShapeError);

    bad = raw;
    bad.image(0) = std::nan("");
    CHECK_THROWS_AS(bad.validate(cfg), NumericalError);

    bad = raw;
    bad.symbols(0) += 0.5;
    CHECK_THROWS_AS(bad.validate(cfg), ValidationError);

    bad = raw;
    bad.rois = Matrix::Zero(cfg.n_roi + 1, cfg.backbone_dim);
    CHECK_THROWS_AS(bad.validate(cfg), ShapeError);
}

TEST_CASE("unconfigured real backends raise BackendUnavailable") {
    const auto cfg = testkit::small_extractor();
    auto suite = make_suite("real");
    CHECK_THROWS_AS(extract_raw({"r"}, testkit::noise_image(8, 8, 1), "", cfg, suite), BackendUnavailableError);
    CHECK_THROWS_AS(make_suite("gpu"), InvalidArgumentError);
    CHECK_THROWS_AS(extract_raw({"e"}, Image{}, "", cfg, suite), DecodeError);
}

TEST_CASE("extractor config validation") {
    ExtractorConfig cfg;
    CHECK_NOTHROW(cfg.validate());
    cfg.image_side = 225;
    CHECK_THROWS_AS(cfg.validate(), ValidationError);
    cfg = {};
    cfg.d_model = 0;
    CHECK_THROWS_AS(cfg.validate(), ValidationError);
    CHECK(ExtractorConfig{}.canonical() != testkit::small_extractor().canonical());
}

TEST_CASE("feature cache round-trip and corruption") {
    const auto dir = testkit::temp_dir("cache");
    const auto cfg = testkit::small_extractor();
    FeatureCache cache(dir);
    const auto raw = testkit::stub_features("c1", cfg);
    const auto key = cache.key("c1", "stub-1", cfg);
    CHECK(key != cache.key("c1", "stub-2", cfg));
    CHECK(key != cache.key("c2", "stub-1", cfg));
    CHECK_FALSE(cache.get(key).has_value());
    cache.put(key, raw);
    const auto back = cache.get(key);
    REQUIRE(back.has_value());
    CHECK(back->image == raw.image);
    CHECK(back->rois == raw.rois);
    CHECK(back->ocr == raw.ocr);
    CHECK(back->captions == raw.captions);
    CHECK(back->symbols == raw.symbols);

    const std::string blob = serialize_raw(raw);
    CHECK_THROWS_AS(deserialize_raw(blob.substr(0, blob.size() - 3)), ParseError);
    CHECK_THROWS_AS(deserialize_raw("XXXX" + blob.substr(4)), ParseError);
    CHECK_THROWS_AS(deserialize_raw(blob + "z"), ParseError);
    std::filesystem::remove_all(dir);
}

TEST_CASE("vocabulary") {
    const std::vector<std::string> sents{"I should buy it", "I should eat it", "buy buy"};
    const auto v = Vocabulary::build(sents, 2);
    CHECK(v.token(0) == "<pad>");
    CHECK(v.token(4) == "buy");  // 3 occurrences
    CHECK(v.id("eat") == Vocabulary::kUnk);
    const auto all = Vocabulary::build(sents, 1);
    CHECK(all.id("eat") != Vocabulary::kUnk);

    const auto ids = all.encode("I should eat it", 32);
    CHECK(ids.front() == Vocabulary::kBos);
    CHECK(ids.back() == Vocabulary::kEos);
    CHECK(ids.size() == 6);
    CHECK(all.decode(ids) == "i should eat it");
    CHECK(all.encode("i should eat it", 3).size() <= 3);
}
