#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "semstyle/tensor.hpp"

namespace semstyle {

/// RGB image, channel-major (3, H, W), values nominally in [0,1].
/// Intermediate optimization values may drift outside the range; clamping
/// happens only at export time.
struct ImageTensor {
    int height = 0;
    int width = 0;
    Tensor data;  // shape (3, height, width)

    ImageTensor() = default;
    ImageTensor(int h, int w) : height(h), width(w), data({3, h, w}) {}
    ImageTensor(int h, int w, Tensor t);

    double& at(int c, int y, int x) { return data.at(c, y, x); }
    double at(int c, int y, int x) const { return data.at(c, y, x); }
    bool in_unit_range() const;
};

/// Binary per-pixel field: 0 on portrait pixels, 1 on background pixels.
struct SemanticMask {
    int height = 0;
    int width = 0;
    std::vector<std::uint8_t> values;  // row-major (y * width + x), each 0 or 1

    SemanticMask() = default;
    SemanticMask(int h, int w, std::uint8_t fill = 1)
        : height(h), width(w), values(static_cast<size_t>(h) * w, fill) {}

    std::uint8_t at(int y, int x) const { return values[static_cast<size_t>(y) * width + x]; }
    void set(int y, int x, std::uint8_t v) { values[static_cast<size_t>(y) * width + x] = v; }

    /// (H, W) double tensor view, for masking image tensors.
    Tensor as_tensor() const;
};

struct TextCondition {
    std::string style_text;
    std::string source_text;
};

enum class PatchLabel { Portrait, Background };

const char* to_string(PatchLabel label);

/// A square crop: position, size, semantic label, and the portrait fraction
/// of the centered membership sub-window that decided the label.
struct Patch {
    int x = 0;
    int y = 0;
    int size = 0;
    PatchLabel label = PatchLabel::Background;
    double membership_fraction = 0.0;
};

struct LossWeights {
    double lambda_d = 5e2;
    double lambda_p = 9e3;
    double lambda_c = 150.0;
    double lambda_tv = 2e-3;
};

struct ThresholdConfig {
    double tau_portrait = 0.9;
    double tau_back = 0.65;
};

struct WeightPenaltyConfig {
    double alpha_portrait = 0.2;
    double alpha_back = 1.0;
};

struct SamplerConfig {
    int n_patches = 64;
    int patch_size = 128;
    int portrait_quota = 16;       // default n_patches / 4
    int membership_region = 64;    // default patch_size / 2
    double membership_threshold = 0.5;
};

enum class RunMode { Baseline, SemanticAware };

const char* to_string(RunMode mode);

struct TrainRunConfig {
    RunMode mode = RunMode::SemanticAware;
    LossWeights loss_weights;
    ThresholdConfig thresholds;
    WeightPenaltyConfig penalties;
    SamplerConfig sampler;
    int iterations = 400;
    double initial_lr = 5e-4;
    int lr_halving_period = 100;
    double distortion_degree = 0.5;
    std::int64_t seed = 0;
    double contrast_factor = 1.5;

    /// Defaults for the given mode. Baseline uses a single 0.7 threshold for
    /// every patch and ignores the semantic penalties and quota.
    static TrainRunConfig defaults(RunMode mode);
};

struct LossRecord {
    int iteration = 0;
    double l_dir = 0.0;
    double l_patch = 0.0;
    double l_content = 0.0;
    double l_tv = 0.0;
    double l_total = 0.0;
    double lr = 0.0;
};

/// Returns an empty list when every invariant holds, otherwise one message
/// per violated invariant, each naming the offending field.
std::vector<std::string> validate_config(const TrainRunConfig& config);

}  // namespace semstyle
