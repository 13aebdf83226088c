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

#include <cstddef>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "persuade/image.hpp"
#include "persuade/tensor.hpp"

namespace persuade {

struct ExtractorConfig {
    int d_model = 256;
    int ocr_max_tokens = 100;
    int image_side = 224;
    int patch_side = 16;
    int n_roi = 10;
    int n_cap = 2;
    int backbone_dim = 768;
    /// Width of the symbol-classifier output distribution.
    int n_symbols = 53;

    int total_rows() const noexcept { return 1 + n_roi + ocr_max_tokens + n_cap + 1; }
    /// Throws ValidationError.
    void validate() const;
    /// Canonical text form; feeds cache keys and checkpoint headers.
    std::string canonical() const;

    friend bool operator==(const ExtractorConfig&, const ExtractorConfig&) = default;
};

/// Row offsets of each modality block inside the stacked encoder input.
struct BundleLayout {
    int image = 0;
    int roi = 0;
    int ocr = 0;
    int caption = 0;
    int symbol = 0;
    int rows = 0;

    static BundleLayout of(const ExtractorConfig& cfg);
};

/// Identifies the sample being processed; stub adapters hash it.
struct ExtractionContext {
    std::string sample_id;
};

struct Detection {
    double confidence = 0.0;
    /// Region embedding in backbone space.
    Vector embedding;
};

class ImageBackbone {
public:
    virtual ~ImageBackbone() = default;
    /// Pooled (CLS) embedding of the resized, patch-encoded image, length backbone_dim.
    virtual Vector encode(const ExtractionContext& ctx, const Image& resized, const ExtractorConfig& cfg) = 0;
};

class TextEncoder {
public:
    virtual ~TextEncoder() = default;
    /// One backbone_dim row per word.
    virtual Matrix encode_tokens(const std::vector<std::string>& words, const ExtractorConfig& cfg) = 0;
};

class ObjectDetector {
public:
    virtual ~ObjectDetector() = default;
    virtual std::vector<Detection> detect(const ExtractionContext& ctx, const Image& image,
                                          const ExtractorConfig& cfg) = 0;
};

class Captioner {
public:
    virtual ~Captioner() = default;
    /// Caption embeddings, most salient first.
    virtual std::vector<Vector> captions(const ExtractionContext& ctx, const Image& image,
                                         const ExtractorConfig& cfg) = 0;
};

class SymbolClassifier {
public:
    virtual ~SymbolClassifier() = default;
    /// Probability distribution over n_symbols classes.
    virtual Vector distribution(const ExtractionContext& ctx, const Image& image, const ExtractorConfig& cfg) = 0;
};

/// The five backbone ports plus a version tag used for cache invalidation.
struct ExtractorSuite {
    std::shared_ptr<ImageBackbone> image;
    std::shared_ptr<TextEncoder> text;
    std::shared_ptr<ObjectDetector> detector;
    std::shared_ptr<Captioner> captioner;
    std::shared_ptr<SymbolClassifier> symbols;
    std::string version;
    /// False when any adapter must be called from one thread at a time.
    bool concurrent_safe = true;
};

/// Deterministic hash-seeded adapters: pure functions of (sample_id, modality, cfg).
ExtractorSuite make_stub_suite();

/// Placeholder for pretrained backbones; every call throws BackendUnavailable.
ExtractorSuite make_unavailable_suite();

/// Picks an adapter set by name ("stub" or "real").
ExtractorSuite make_suite(std::string_view name);

/// Learned linear map from a backbone space to d_model.
struct Projection {
    Matrix weight;  // [in, d_model]
    Vector bias;    // [d_model]

    int in_dim() const noexcept { return static_cast<int>(weight.rows()); }
    int out_dim() const noexcept { return static_cast<int>(weight.cols()); }
    /// rows x in -> rows x d_model
    Matrix apply(const Matrix& x) const;
};

/// Backbone outputs before projection. Variable-length blocks hold only the
/// valid rows; padding happens at projection time.
struct RawFeatures {
    Vector image;     // [backbone_dim]
    Matrix rois;      // [<= n_roi, backbone_dim]
    Matrix ocr;       // [<= ocr_max_tokens, backbone_dim]
    Matrix captions;  // [<= n_cap, backbone_dim]
    Vector symbols;   // [n_symbols], sums to 1

    /// Throws ShapeError / ValidationError / NumericalError.
    void validate(const ExtractorConfig& cfg) const;
};

/// Projects the valid rows of `raw` and zero-pads to `rows`.
Matrix project_padded(const Matrix& raw, int rows, const Projection& proj);

Matrix extract_image(const ExtractionContext& ctx, const Image& image, const ExtractorConfig& cfg,
                     ImageBackbone& backbone, const Projection& proj);
Matrix extract_ocr(std::string_view text, const ExtractorConfig& cfg, TextEncoder& encoder, const Projection& proj);
Matrix extract_rois(const ExtractionContext& ctx, const Image& image, const ExtractorConfig& cfg,
                    ObjectDetector& detector, const Projection& proj);
Matrix extract_captions(const ExtractionContext& ctx, const Image& image, const ExtractorConfig& cfg,
                        Captioner& captioner, const Projection& proj);
Matrix extract_symbols(const ExtractionContext& ctx, const Image& image, const ExtractorConfig& cfg,
                       SymbolClassifier& classifier, const Projection& proj);

/// Top-n detections by confidence, ties in detector order.
std::vector<Detection> top_detections(std::vector<Detection> detections, int n);

/// Words kept for OCR encoding: the first ocr_max_tokens whitespace-delimited words.
std::vector<std::string> truncate_ocr(std::string_view text, int max_tokens);

/// Throws ValidationError unless `dist` is a distribution within 1e-6.
void check_distribution(const Vector& dist);

/// Runs every backbone port on one sample.
RawFeatures extract_raw(const ExtractionContext& ctx, const Image& image, std::string_view ocr_text,
                        const ExtractorConfig& cfg, ExtractorSuite& suite);

/// Row-wise stack [image | RoI | OCR | caption | symbol]. Throws ShapeError
/// naming the offending block.
Matrix assemble_bundle(const Matrix& e_img, const Matrix& e_roi, const Matrix& e_ocr, const Matrix& e_cap,
                       const Matrix& e_sym, const ExtractorConfig& cfg);

}  // namespace persuade
