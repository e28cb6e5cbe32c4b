#include "semstyle/encoders.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

#include "semstyle/rng.hpp"

namespace semstyle {

std::uint64_t fnv1a64(const std::string& s) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

// ---------------------------------------------------------------------------
// mocks
// ---------------------------------------------------------------------------

MockTextEncoder::MockTextEncoder(int dim, std::uint64_t seed) : dim_(dim), seed_(seed) {
    if (dim < 1) throw std::invalid_argument("MockTextEncoder: dim must be positive");
}

Tensor MockTextEncoder::encode_text(const std::string& text) const {
    RandomSource rng(RandomSource::splitmix64(seed_ ^ fnv1a64(text)));
    Tensor v({dim_});
    for (int i = 0; i < dim_; ++i) v[i] = rng.normal();
    return v;
}

std::string MockTextEncoder::describe() const {
    return "mock-text(dim=" + std::to_string(dim_) + ",seed=" + std::to_string(seed_) + ")";
}

MockImageEncoder::MockImageEncoder(int dim, std::uint64_t seed) : dim_(dim), seed_(seed) {
    if (dim < 1) throw std::invalid_argument("MockImageEncoder: dim must be positive");
    const int k = 3 * kResolution * kResolution;
    RandomSource rng(RandomSource::splitmix64(seed_ + 0x1000));
    weights_ = Tensor({dim_, k});
    double scale = 1.0 / std::sqrt(static_cast<double>(k));
    for (std::int64_t i = 0; i < weights_.numel(); ++i) weights_[i] = rng.normal() * scale;
}

ad::Var MockImageEncoder::encode(const ad::Var& image) const {
    ad::Var resized = ad::resize_bilinear(image, kResolution, kResolution);
    return ad::matvec(ad::Var::constant(weights_), ad::flatten(resized));
}

std::string MockImageEncoder::describe() const {
    return "mock-image(dim=" + std::to_string(dim_) + ",seed=" + std::to_string(seed_) + ",res=16)";
}

std::vector<std::pair<std::string, ad::Var>> MockFeatureExtractor::extract(const ad::Var& image) const {
    return {{"raw", image}, {"half", ad::avgpool2(image)}};
}

EncoderSet make_mock_encoders(std::uint64_t seed, int dim) {
    EncoderSet set;
    set.text = std::make_shared<MockTextEncoder>(dim, seed);
    set.image = std::make_shared<MockImageEncoder>(dim, seed);
    set.features = std::make_shared<MockFeatureExtractor>();
    return set;
}

// ---------------------------------------------------------------------------
// prompt templates
// ---------------------------------------------------------------------------

PromptTemplateSet PromptTemplateSet::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open template file '" + path + "'");
    PromptTemplateSet set;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        size_t slot = line.find("{}");
        if (slot == std::string::npos || line.find("{}", slot + 1) != std::string::npos)
            throw std::runtime_error("template '" + line + "' must contain exactly one {} slot");
        set.templates.push_back(line);
    }
    if (set.templates.empty()) throw std::runtime_error("template file '" + path + "' is empty");
    return set;
}

PromptTemplateSet PromptTemplateSet::identity() { return PromptTemplateSet{{"{}"}}; }

std::string PromptTemplateSet::fill(size_t index, const std::string& text) const {
    std::string t = templates.at(index);
    size_t slot = t.find("{}");
    return t.replace(slot, 2, text);
}

// ---------------------------------------------------------------------------
// embedding operations
// ---------------------------------------------------------------------------

namespace {
double vec_norm(const Tensor& v) {
    double s = 0.0;
    for (std::int64_t i = 0; i < v.numel(); ++i) s += v[i] * v[i];
    return std::sqrt(s);
}
}  // namespace

Tensor encode_text_ensembled(const ITextEncoder& enc, const std::string& text, const PromptTemplateSet& templates) {
    if (text.empty()) throw std::invalid_argument("encode_text_ensembled: text must be nonempty");
    if (templates.size() == 0) throw std::invalid_argument("encode_text_ensembled: empty template set");
    Tensor acc({enc.dim()});
    for (size_t i = 0; i < templates.size(); ++i) {
        Tensor e = enc.encode_text(templates.fill(i, text));
        if (e.numel() != enc.dim()) throw std::runtime_error("text encoder returned wrong dimension");
        double n = vec_norm(e);
        if (n < 1e-12) throw std::runtime_error("text encoder returned a zero embedding");
        for (int k = 0; k < enc.dim(); ++k) acc[k] += e[k] / n;
    }
    for (int k = 0; k < enc.dim(); ++k) acc[k] /= static_cast<double>(templates.size());
    double n = vec_norm(acc);
    if (n < 1e-8) throw std::runtime_error("degenerate ensemble: template embeddings cancel out");
    for (int k = 0; k < enc.dim(); ++k) acc[k] /= n;
    return acc;
}

Tensor text_direction(const ITextEncoder& enc, const TextCondition& cond, const PromptTemplateSet& templates) {
    if (cond.style_text.empty()) throw std::invalid_argument("text_direction: style text must be nonempty");
    Tensor sty = encode_text_ensembled(enc, cond.style_text, templates);
    Tensor src = encode_text_ensembled(enc, cond.source_text, templates);
    Tensor d({enc.dim()});
    for (int k = 0; k < enc.dim(); ++k) d[k] = sty[k] - src[k];
    if (vec_norm(d) < 1e-8)
        throw std::runtime_error("zero text direction: style and source embeddings coincide");
    return d;
}

DifferentiableEmbedding encode_image_differentiable(const IImageEncoder& enc, const ImageTensor& image) {
    if (image.height < 1 || image.width < 1) throw std::invalid_argument("encode: empty image");
    if (!image.data.all_finite()) throw std::invalid_argument("encode: non-finite pixel values");
    DifferentiableEmbedding out;
    out.image = ad::Var::leaf(image.data, true);
    out.embedding = enc.encode(out.image);
    return out;
}

ContentFeatures extract_content_features(const IFeatureExtractor& fx, const ImageTensor& image) {
    if (image.height < fx.min_input() || image.width < fx.min_input())
        throw std::invalid_argument("extract_content_features: image smaller than the extractor minimum (" +
                                    std::to_string(fx.min_input()) + ")");
    ContentFeatures out;
    out.image = ad::Var::leaf(image.data, true);
    out.maps = fx.extract(out.image);
    if (out.maps.size() != 2) throw std::runtime_error("feature extractor must produce exactly two maps");
    return out;
}

}  // namespace semstyle
