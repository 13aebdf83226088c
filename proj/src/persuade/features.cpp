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

#include "persuade/features.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "persuade/corpus.hpp"
#include "persuade/error.hpp"
#include "persuade/hashing.hpp"

namespace persuade {

void ExtractorConfig::validate() const {
    if (d_model <= 0) throw ValidationError("extractor config: d_model must be positive");
    if (ocr_max_tokens < 0 || n_roi < 0 || n_cap < 0)
        throw ValidationError("extractor config: row counts must be non-negative");
    if (backbone_dim <= 0 || n_symbols <= 0)
        throw ValidationError("extractor config: backbone_dim and n_symbols must be positive");
    if (image_side <= 0 || patch_side <= 0 || image_side % patch_side != 0)
        throw ValidationError("extractor config: image_side must be a positive multiple of patch_side");
}

std::string ExtractorConfig::canonical() const {
    std::ostringstream os;
    os << "d_model=" << d_model << ";ocr_max_tokens=" << ocr_max_tokens << ";image_side=" << image_side
       << ";patch_side=" << patch_side << ";n_roi=" << n_roi << ";n_cap=" << n_cap
       << ";backbone_dim=" << backbone_dim << ";n_symbols=" << n_symbols;
    return os.str();
}

BundleLayout BundleLayout::of(const ExtractorConfig& cfg) {
    BundleLayout l;
    l.image = 0;
    l.roi = 1;
    l.ocr = l.roi + cfg.n_roi;
    l.caption = l.ocr + cfg.ocr_max_tokens;
    l.symbol = l.caption + cfg.n_cap;
    l.rows = l.symbol + 1;
    return l;
}

namespace {

Vector hashed_vector(std::string_view key, int dim) {
    std::uint64_t state = fnv1a64(key);
    Vector v(dim);
    for (int i = 0; i < dim; ++i) v(i) = to_signed_unit(splitmix64(state));
    return v;
}

std::string key_of(std::string_view a, std::string_view b, int c = -1) {
    std::string k(a);
    k += '\x1f';
    k += b;
    if (c >= 0) {
        k += '\x1f';
        k += std::to_string(c);
    }
    return k;
}

class StubImageBackbone final : public ImageBackbone {
public:
    Vector encode(const ExtractionContext& ctx, const Image&, const ExtractorConfig& cfg) override {
        return hashed_vector(key_of(ctx.sample_id, "image"), cfg.backbone_dim);
    }
};

class StubTextEncoder final : public TextEncoder {
public:
    Matrix encode_tokens(const std::vector<std::string>& words, const ExtractorConfig& cfg) override {
        Matrix out(static_cast<Eigen::Index>(words.size()), cfg.backbone_dim);
        for (std::size_t i = 0; i < words.size(); ++i)
            out.row(static_cast<Eigen::Index>(i)) = hashed_vector(key_of("ocr-token", words[i]), cfg.backbone_dim);
        return out;
    }
};

class StubDetector final : public ObjectDetector {
public:
    std::vector<Detection> detect(const ExtractionContext& ctx, const Image& image,
                                  const ExtractorConfig& cfg) override {
        if (is_uniform(image)) return {};
        std::uint64_t state = fnv1a64(key_of(ctx.sample_id, "roi-count"));
        const int n = static_cast<int>(splitmix64(state) % 16);
        std::vector<Detection> out;
        for (int k = 0; k < n; ++k) {
            Detection d;
            d.confidence = 0.5 * (to_signed_unit(splitmix64(state)) + 1.0);
            d.embedding = hashed_vector(key_of(ctx.sample_id, "roi", k), cfg.backbone_dim);
            out.push_back(std::move(d));
        }
        return out;
    }
};

class StubCaptioner final : public Captioner {
public:
    std::vector<Vector> captions(const ExtractionContext& ctx, const Image& image,
                                 const ExtractorConfig& cfg) override {
        if (is_uniform(image)) return {};
        std::vector<Vector> out;
        for (int k = 0; k < cfg.n_cap; ++k)
            out.push_back(hashed_vector(key_of(ctx.sample_id, "caption", k), cfg.backbone_dim));
        return out;
    }
};

class StubSymbolClassifier final : public SymbolClassifier {
public:
    Vector distribution(const ExtractionContext& ctx, const Image&, const ExtractorConfig& cfg) override {
        Vector logits = 3.0 * hashed_vector(key_of(ctx.sample_id, "symbols"), cfg.n_symbols);
        Vector e = (logits.array() - logits.maxCoeff()).exp();
        return e / e.sum();
    }
};

[[noreturn]] void unavailable(const char* what) {
    throw BackendUnavailableError(std::string(what) +
                                  " backend is not configured; set PERSUADE_EXTRACTORS=stub to use the stub adapters");
}

class UnavailableImage final : public ImageBackbone {
public:
    Vector encode(const ExtractionContext&, const Image&, const ExtractorConfig&) override { unavailable("image"); }
};
class UnavailableText final : public TextEncoder {
public:
    Matrix encode_tokens(const std::vector<std::string>&, const ExtractorConfig&) override { unavailable("text"); }
};
class UnavailableDetector final : public ObjectDetector {
public:
    std::vector<Detection> detect(const ExtractionContext&, const Image&, const ExtractorConfig&) override {
        unavailable("detector");
    }
};
class UnavailableCaptioner final : public Captioner {
public:
    std::vector<Vector> captions(const ExtractionContext&, const Image&, const ExtractorConfig&) override {
        unavailable("captioner");
    }
};
class UnavailableSymbols final : public SymbolClassifier {
public:
    Vector distribution(const ExtractionContext&, const Image&, const ExtractorConfig&) override {
        unavailable("symbol classifier");
    }
};

void check_width(const Matrix& m, int width, const char* block) {
    if (m.rows() > 0 && m.cols() != width)
        throw ShapeError(std::string(block) + ": expected width " + std::to_string(width) + ", got " +
                         std::to_string(m.cols()));
    if (!m.allFinite()) throw NumericalError(std::string(block) + ": non-finite backbone output");
}

}  // namespace

ExtractorSuite make_stub_suite() {
    ExtractorSuite s;
    s.image = std::make_shared<StubImageBackbone>();
    s.text = std::make_shared<StubTextEncoder>();
    s.detector = std::make_shared<StubDetector>();
    s.captioner = std::make_shared<StubCaptioner>();
    s.symbols = std::make_shared<StubSymbolClassifier>();
    s.version = "stub-1";
    return s;
}

ExtractorSuite make_unavailable_suite() {
    ExtractorSuite s;
    s.image = std::make_shared<UnavailableImage>();
    s.text = std::make_shared<UnavailableText>();
    s.detector = std::make_shared<UnavailableDetector>();
    s.captioner = std::make_shared<UnavailableCaptioner>();
    s.symbols = std::make_shared<UnavailableSymbols>();
    s.version = "real-unconfigured";
    return s;
}

ExtractorSuite make_suite(std::string_view name) {
    if (name.empty() || name == "stub") return make_stub_suite();
    if (name == "real") return make_unavailable_suite();
    throw InvalidArgumentError("unknown extractor suite '" + std::string(name) + "'");
}

Matrix Projection::apply(const Matrix& x) const {
    if (x.cols() != weight.rows())
        throw ShapeError("projection: input width " + std::to_string(x.cols()) + " != " +
                         std::to_string(weight.rows()));
    Matrix out = x * weight;
    out.rowwise() += bias.transpose();
    return out;
}

Matrix project_padded(const Matrix& raw, int rows, const Projection& proj) {
    Matrix out = Matrix::Zero(rows, proj.out_dim());
    const Eigen::Index valid = std::min<Eigen::Index>(raw.rows(), rows);
    if (valid > 0) out.topRows(valid) = proj.apply(raw.topRows(valid));
    return out;
}

std::vector<Detection> top_detections(std::vector<Detection> detections, int n) {
    std::stable_sort(detections.begin(), detections.end(),
                     [](const Detection& a, const Detection& b) { return a.confidence > b.confidence; });
    if (static_cast<int>(detections.size()) > n) detections.resize(static_cast<std::size_t>(n));
    return detections;
}

std::vector<std::string> truncate_ocr(std::string_view text, int max_tokens) {
    auto words = split_words(text);
    if (static_cast<int>(words.size()) > max_tokens) words.resize(static_cast<std::size_t>(max_tokens));
    return words;
}

void check_distribution(const Vector& dist) {
    if (!dist.allFinite()) throw ValidationError("symbol distribution has non-finite entries");
    if ((dist.array() < 0.0).any()) throw ValidationError("symbol distribution has negative entries");
    const double sum = dist.sum();
    if (std::abs(sum - 1.0) > 1e-6)
        throw ValidationError("symbol distribution sums to " + std::to_string(sum) + ", expected 1");
}

Matrix extract_image(const ExtractionContext& ctx, const Image& image, const ExtractorConfig& cfg,
                     ImageBackbone& backbone, const Projection& proj) {
    if (image.empty()) throw DecodeError("extract_image: empty image");
    const Image resized = resize_square(image, cfg.image_side);
    Vector pooled = backbone.encode(ctx, resized, cfg);
    Matrix row = pooled.transpose();
    check_width(row, cfg.backbone_dim, "image");
    return proj.apply(row);
}

Matrix extract_ocr(std::string_view text, const ExtractorConfig& cfg, TextEncoder& encoder, const Projection& proj) {
    const auto words = truncate_ocr(text, cfg.ocr_max_tokens);
    Matrix raw = words.empty() ? Matrix(0, cfg.backbone_dim) : encoder.encode_tokens(words, cfg);
    check_width(raw, cfg.backbone_dim, "ocr");
    return project_padded(raw, cfg.ocr_max_tokens, proj);
}

Matrix extract_rois(const ExtractionContext& ctx, const Image& image, const ExtractorConfig& cfg,
                    ObjectDetector& detector, const Projection& proj) {
    const auto kept = top_detections(detector.detect(ctx, image, cfg), cfg.n_roi);
    Matrix raw(static_cast<Eigen::Index>(kept.size()), cfg.backbone_dim);
    for (std::size_t i = 0; i < kept.size(); ++i) {
        if (kept[i].embedding.size() != cfg.backbone_dim) throw ShapeError("roi: embedding width mismatch");
        raw.row(static_cast<Eigen::Index>(i)) = kept[i].embedding.transpose();
    }
    check_width(raw, cfg.backbone_dim, "roi");
    return project_padded(raw, cfg.n_roi, proj);
}

Matrix extract_captions(const ExtractionContext& ctx, const Image& image, const ExtractorConfig& cfg,
                        Captioner& captioner, const Projection& proj) {
    auto caps = captioner.captions(ctx, image, cfg);
    if (static_cast<int>(caps.size()) > cfg.n_cap) caps.resize(static_cast<std::size_t>(cfg.n_cap));
    Matrix raw(static_cast<Eigen::Index>(caps.size()), cfg.backbone_dim);
    for (std::size_t i = 0; i < caps.size(); ++i) {
        if (caps[i].size() != cfg.backbone_dim) throw ShapeError("caption: embedding width mismatch");
        raw.row(static_cast<Eigen::Index>(i)) = caps[i].transpose();
    }
    check_width(raw, cfg.backbone_dim, "caption");
    return project_padded(raw, cfg.n_cap, proj);
}

Matrix extract_symbols(const ExtractionContext& ctx, const Image& image, const ExtractorConfig& cfg,
                       SymbolClassifier& classifier, const Projection& proj) {
    const Vector dist = classifier.distribution(ctx, image, cfg);
    if (dist.size() != cfg.n_symbols) throw ShapeError("symbol: distribution width mismatch");
    check_distribution(dist);
    return proj.apply(Matrix(dist.transpose()));
}

void RawFeatures::validate(const ExtractorConfig& cfg) const {
    if (image.size() != cfg.backbone_dim) throw ShapeError("image: expected backbone_dim entries");
    if (rois.rows() > cfg.n_roi) throw ShapeError("roi: more rows than n_roi");
    if (ocr.rows() > cfg.ocr_max_tokens) throw ShapeError("ocr: more rows than ocr_max_tokens");
    if (captions.rows() > cfg.n_cap) throw ShapeError("caption: more rows than n_cap");
    check_width(rois, cfg.backbone_dim, "roi");
    check_width(ocr, cfg.backbone_dim, "ocr");
    check_width(captions, cfg.backbone_dim, "caption");
    if (!image.allFinite()) throw NumericalError("image: non-finite backbone output");
    if (symbols.size() != cfg.n_symbols) throw ShapeError("symbol: expected n_symbols entries");
    check_distribution(symbols);
}

RawFeatures extract_raw(const ExtractionContext& ctx, const Image& image, std::string_view ocr_text,
                        const ExtractorConfig& cfg, ExtractorSuite& suite) {
    if (image.empty()) throw DecodeError("extract: empty image for sample '" + ctx.sample_id + "'");
    RawFeatures raw;
    raw.image = suite.image->encode(ctx, resize_square(image, cfg.image_side), cfg);

    const auto words = truncate_ocr(ocr_text, cfg.ocr_max_tokens);
    raw.ocr = words.empty() ? Matrix(0, cfg.backbone_dim) : suite.text->encode_tokens(words, cfg);

    const auto kept = top_detections(suite.detector->detect(ctx, image, cfg), cfg.n_roi);
    raw.rois.resize(static_cast<Eigen::Index>(kept.size()), cfg.backbone_dim);
    for (std::size_t i = 0; i < kept.size(); ++i) {
        if (kept[i].embedding.size() != cfg.backbone_dim) throw ShapeError("roi: embedding width mismatch");
        raw.rois.row(static_cast<Eigen::Index>(i)) = kept[i].embedding.transpose();
    }

    auto caps = suite.captioner->captions(ctx, image, cfg);
    if (static_cast<int>(caps.size()) > cfg.n_cap) caps.resize(static_cast<std::size_t>(cfg.n_cap));
    raw.captions.resize(static_cast<Eigen::Index>(caps.size()), cfg.backbone_dim);
    for (std::size_t i = 0; i < caps.size(); ++i) {
        if (caps[i].size() != cfg.backbone_dim) throw ShapeError("caption: embedding width mismatch");
        raw.captions.row(static_cast<Eigen::Index>(i)) = caps[i].transpose();
    }

    raw.symbols = suite.symbols->distribution(ctx, image, cfg);
    raw.validate(cfg);
    return raw;
}

Matrix assemble_bundle(const Matrix& e_img, const Matrix& e_roi, const Matrix& e_ocr, const Matrix& e_cap,
                       const Matrix& e_sym, const ExtractorConfig& cfg) {
    struct Block {
        const Matrix* m;
        int rows;
        const char* name;
    };
    const Block blocks[] = {{&e_img, 1, "image"},
                            {&e_roi, cfg.n_roi, "roi"},
                            {&e_ocr, cfg.ocr_max_tokens, "ocr"},
                            {&e_cap, cfg.n_cap, "caption"},
                            {&e_sym, 1, "symbol"}};
    for (const auto& b : blocks) {
        if (b.m->rows() != b.rows || (b.rows > 0 && b.m->cols() != cfg.d_model))
            throw ShapeError(std::string(b.name) + ": expected [" + std::to_string(b.rows) + ", " +
                             std::to_string(cfg.d_model) + "], got [" + std::to_string(b.m->rows()) + ", " +
                             std::to_string(b.m->cols()) + "]");
    }
    Matrix out(cfg.total_rows(), cfg.d_model);
    Eigen::Index r = 0;
    for (const auto& b : blocks) {
        if (b.rows > 0) out.middleRows(r, b.rows) = *b.m;
        r += b.rows;
    }
    return out;
}

}  // namespace persuade
