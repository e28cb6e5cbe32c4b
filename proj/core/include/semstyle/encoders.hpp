#pragma once

#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "semstyle/autodiff.hpp"
#include "semstyle/tensor.hpp"
#include "semstyle/types.hpp"

namespace semstyle {

/// Text side of the pretrained text-image embedding model. Pure: the same
/// string always yields the same vector.
struct ITextEncoder {
    virtual ~ITextEncoder() = default;
    virtual int dim() const = 0;
    virtual Tensor encode_text(const std::string& text) const = 0;  // (dim)
    virtual std::string describe() const = 0;
};

/// Image side. encode() builds a differentiable graph from the (3,H,W)
/// image variable to the (dim) embedding, so gradients reach the pixels.
struct IImageEncoder {
    virtual ~IImageEncoder() = default;
    virtual int dim() const = 0;
    virtual int input_resolution() const = 0;
    virtual ad::Var encode(const ad::Var& image) const = 0;
    virtual std::string describe() const = 0;
};

/// Perceptual feature extractor: exactly two named intermediate feature maps.
struct IFeatureExtractor {
    virtual ~IFeatureExtractor() = default;
    virtual std::vector<std::pair<std::string, ad::Var>> extract(const ad::Var& image) const = 0;
    virtual int min_input() const = 0;
    virtual std::string describe() const = 0;
};

struct EncoderSet {
    std::shared_ptr<ITextEncoder> text;
    std::shared_ptr<IImageEncoder> image;
    std::shared_ptr<IFeatureExtractor> features;
};

// ---------------------------------------------------------------------------
// Mock implementations, for running the full pipeline without model weights.
// Their formulas are fixed so tests can recompute outputs independently.
// ---------------------------------------------------------------------------

/// encode_text(s) draws dim values from RandomSource(splitmix64(seed ^ fnv1a64(s))),
/// one normal() per component in index order.
class MockTextEncoder final : public ITextEncoder {
public:
    MockTextEncoder(int dim, std::uint64_t seed);
    int dim() const override { return dim_; }
    Tensor encode_text(const std::string& text) const override;
    std::string describe() const override;

private:
    int dim_;
    std::uint64_t seed_;
};

/// encode(x) = W * flatten(resize_bilinear(x, 16, 16)) where W is a fixed
/// (dim, 768) matrix with entries normal()/sqrt(768), drawn row-major from
/// RandomSource(splitmix64(seed + 0x1000)). flatten is channel-major (c,y,x).
class MockImageEncoder final : public IImageEncoder {
public:
    static constexpr int kResolution = 16;

    MockImageEncoder(int dim, std::uint64_t seed);
    int dim() const override { return dim_; }
    int input_resolution() const override { return kResolution; }
    ad::Var encode(const ad::Var& image) const override;
    std::string describe() const override;

    const Tensor& projection() const { return weights_; }

private:
    int dim_;
    std::uint64_t seed_;
    Tensor weights_;
};

/// extract(x) = {("raw", x), ("half", 2x2 mean-pool of x)}.
class MockFeatureExtractor final : public IFeatureExtractor {
public:
    std::vector<std::pair<std::string, ad::Var>> extract(const ad::Var& image) const override;
    int min_input() const override { return 2; }
    std::string describe() const override { return "mock-features(raw,half)"; }
};

/// Mock set with a shared base seed; text and image streams are independent.
EncoderSet make_mock_encoders(std::uint64_t seed, int dim = 64);

// ---------------------------------------------------------------------------
// Prompt templates and embedding directions
// ---------------------------------------------------------------------------

/// Ordered format strings, each containing exactly one "{}" slot.
struct PromptTemplateSet {
    std::vector<std::string> templates;

    static PromptTemplateSet load(const std::string& path);
    /// Single identity template "{}" (no ensembling).
    static PromptTemplateSet identity();

    std::string fill(size_t index, const std::string& text) const;
    size_t size() const { return templates.size(); }
};

std::uint64_t fnv1a64(const std::string& s);

/// Unit-normalizes each filled-template embedding, averages them, and
/// normalizes the mean. Throws if the set is empty, the text is empty, or
/// the mean norm falls below 1e-8 (degenerate ensemble).
Tensor encode_text_ensembled(const ITextEncoder& enc, const std::string& text, const PromptTemplateSet& templates);

/// Ensembled style embedding minus ensembled source embedding. Throws a
/// zero-direction error when the difference norm is below 1e-8.
Tensor text_direction(const ITextEncoder& enc, const TextCondition& cond, const PromptTemplateSet& templates);

struct DifferentiableEmbedding {
    ad::Var image;      // leaf over the input pixels
    ad::Var embedding;  // (dim) graph output
};

/// Wraps the image in a gradient-tracked leaf and runs the encoder.
/// Throws on non-finite pixel values.
DifferentiableEmbedding encode_image_differentiable(const IImageEncoder& enc, const ImageTensor& image);

struct ContentFeatures {
    ad::Var image;
    std::vector<std::pair<std::string, ad::Var>> maps;
};

/// Throws if the image is smaller than the extractor's minimum input.
ContentFeatures extract_content_features(const IFeatureExtractor& fx, const ImageTensor& image);

}  // namespace semstyle
