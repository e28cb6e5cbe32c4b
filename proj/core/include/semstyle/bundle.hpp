#pragma once

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "semstyle/autodiff.hpp"
#include "semstyle/encoders.hpp"
#include "semstyle/tensor.hpp"

namespace semstyle {

/// One layer of a bundle-described network. Supported ops:
///   conv (stride, pad, weight (O,I,kh,kw), optional bias (O))
///   linear (weight (D,K), optional bias (D))
///   relu | gelu | sigmoid | flatten | l2norm
///   maxpool2 | avgpool2 | upsample2
///   resize (h, w)  -- bilinear
///   layernorm (gamma, beta, eps)
struct LayerSpec {
    std::string op;
    int stride = 1;
    int pad = 0;
    int h = 0;
    int w = 0;
    double eps = 1e-5;
    Tensor weight;
    Tensor bias;  // empty when absent
    Tensor gamma;
    Tensor beta;
};

/// Differentiable executor for a layer list.
class SequentialNet {
public:
    explicit SequentialNet(std::vector<LayerSpec> layers);
    ad::Var forward(const ad::Var& x) const { return forward_range(x, 0, layers_.size()); }
    ad::Var forward_prefix(const ad::Var& x, size_t n_layers) const { return forward_range(x, 0, n_layers); }
    ad::Var forward_range(const ad::Var& x, size_t first, size_t last) const;
    size_t size() const { return layers_.size(); }

private:
    std::vector<LayerSpec> layers_;
};

/// Serialized weight container: a JSON architecture header plus a raw
/// little-endian float64 blob. Produced offline (see tools/export_weights.py)
/// and loaded lazily from the weight cache directory at run time.
struct WeightBundle {
    std::string kind;  // text_encoder | image_encoder | feature_extractor | segmenter
    std::map<std::string, double> scalars;
    std::map<std::string, int> taps;  // feature_extractor: name -> layer index (exclusive prefix end)
    std::vector<LayerSpec> layers;

    static WeightBundle load(const std::string& path);
    void save(const std::string& path) const;
};

/// Name of the environment variable holding the weight cache directory.
extern const char* kWeightCacheEnv;

/// Resolves the weight cache directory: explicit argument if nonempty, else
/// the environment variable. Throws if neither is set.
std::string resolve_weight_cache(const std::string& explicit_dir);

// Bundle-backed adapters. Loading throws when the file is missing; nothing
// is downloaded at build time.

class BundleTextEncoder final : public ITextEncoder {
public:
    explicit BundleTextEncoder(WeightBundle bundle);
    int dim() const override { return dim_; }
    Tensor encode_text(const std::string& text) const override;
    std::string describe() const override;

    /// Input featurization: byte trigrams of the text hashed (fnv1a64) into
    /// `hash_buckets` counts, then the bundle's layer stack.
    Tensor featurize(const std::string& text) const;

private:
    int dim_;
    int buckets_;
    SequentialNet net_;
};

class BundleImageEncoder final : public IImageEncoder {
public:
    explicit BundleImageEncoder(WeightBundle bundle);
    int dim() const override { return dim_; }
    int input_resolution() const override { return resolution_; }
    ad::Var encode(const ad::Var& image) const override;
    std::string describe() const override;

private:
    int dim_;
    int resolution_;
    SequentialNet net_;
};

class BundleFeatureExtractor final : public IFeatureExtractor {
public:
    explicit BundleFeatureExtractor(WeightBundle bundle);
    std::vector<std::pair<std::string, ad::Var>> extract(const ad::Var& image) const override;
    int min_input() const override { return min_input_; }
    std::string describe() const override;

private:
    int min_input_;
    std::vector<std::pair<std::string, int>> taps_;  // ordered (name, prefix length)
    SequentialNet net_;
};

/// Loads text_encoder.sswb, image_encoder.sswb and feature_extractor.sswb
/// from the cache directory.
EncoderSet load_encoders_from_cache(const std::string& cache_dir);

}  // namespace semstyle
