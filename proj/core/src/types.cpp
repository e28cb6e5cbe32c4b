#include "semstyle/types.hpp"

#include <cmath>
#include <stdexcept>

namespace semstyle {

ImageTensor::ImageTensor(int h, int w, Tensor t) : height(h), width(w), data(std::move(t)) {
    if (data.rank() != 3 || data.dim(0) != 3 || data.dim(1) != h || data.dim(2) != w)
        throw std::invalid_argument("ImageTensor: tensor shape must be (3," + std::to_string(h) + "," +
                                    std::to_string(w) + "), got " + data.shape_str());
}

bool ImageTensor::in_unit_range() const {
    for (std::int64_t i = 0; i < data.numel(); ++i)
        if (!(data[i] >= 0.0 && data[i] <= 1.0)) return false;
    return true;
}

Tensor SemanticMask::as_tensor() const {
    Tensor t({height, width});
    for (std::int64_t i = 0; i < t.numel(); ++i) t[i] = static_cast<double>(values[static_cast<size_t>(i)]);
    return t;
}

const char* to_string(PatchLabel label) { return label == PatchLabel::Portrait ? "portrait" : "background"; }

const char* to_string(RunMode mode) { return mode == RunMode::Baseline ? "baseline" : "semantic"; }

TrainRunConfig TrainRunConfig::defaults(RunMode mode) {
    TrainRunConfig c;
    c.mode = mode;
    if (mode == RunMode::Baseline) {
        c.thresholds.tau_portrait = 0.7;
        c.thresholds.tau_back = 0.7;
        c.penalties.alpha_portrait = 1.0;
        c.penalties.alpha_back = 1.0;
        c.sampler.portrait_quota = c.sampler.n_patches;
    }
    return c;
}

namespace {
void require_finite(std::vector<std::string>& errs, double v, const char* field) {
    if (!std::isfinite(v)) errs.push_back(std::string(field) + " must be finite");
}
}  // namespace

std::vector<std::string> validate_config(const TrainRunConfig& c) {
    std::vector<std::string> errs;

    require_finite(errs, c.loss_weights.lambda_d, "loss_weights.lambda_d");
    require_finite(errs, c.loss_weights.lambda_p, "loss_weights.lambda_p");
    require_finite(errs, c.loss_weights.lambda_c, "loss_weights.lambda_c");
    require_finite(errs, c.loss_weights.lambda_tv, "loss_weights.lambda_tv");
    if (c.loss_weights.lambda_d < 0) errs.push_back("loss_weights.lambda_d must be non-negative");
    if (c.loss_weights.lambda_p < 0) errs.push_back("loss_weights.lambda_p must be non-negative");
    if (c.loss_weights.lambda_c < 0) errs.push_back("loss_weights.lambda_c must be non-negative");
    if (c.loss_weights.lambda_tv < 0) errs.push_back("loss_weights.lambda_tv must be non-negative");

    require_finite(errs, c.thresholds.tau_portrait, "thresholds.tau_portrait");
    require_finite(errs, c.thresholds.tau_back, "thresholds.tau_back");
    if (!(c.thresholds.tau_portrait >= 0.0 && c.thresholds.tau_portrait <= 2.0))
        errs.push_back("thresholds.tau_portrait must lie in [0,2]");
    if (!(c.thresholds.tau_back >= 0.0 && c.thresholds.tau_back <= 2.0))
        errs.push_back("thresholds.tau_back must lie in [0,2]");
    if (c.thresholds.tau_portrait < c.thresholds.tau_back)
        errs.push_back("thresholds.tau_portrait must be >= thresholds.tau_back");

    require_finite(errs, c.penalties.alpha_portrait, "penalties.alpha_portrait");
    require_finite(errs, c.penalties.alpha_back, "penalties.alpha_back");
    if (c.penalties.alpha_portrait < 0) errs.push_back("penalties.alpha_portrait must be non-negative");
    if (c.penalties.alpha_back < 0) errs.push_back("penalties.alpha_back must be non-negative");
    if (c.penalties.alpha_portrait > c.penalties.alpha_back)
        errs.push_back("penalties.alpha_portrait must be <= penalties.alpha_back");

    if (c.sampler.n_patches < 1) errs.push_back("sampler.n_patches must be positive");
    if (c.sampler.patch_size < 1) errs.push_back("sampler.patch_size must be positive");
    if (c.sampler.portrait_quota < 0) errs.push_back("sampler.portrait_quota must be non-negative");
    if (c.sampler.portrait_quota > c.sampler.n_patches)
        errs.push_back("sampler.portrait_quota must be <= sampler.n_patches");
    if (c.sampler.membership_region < 1) errs.push_back("sampler.membership_region must be positive");
    if (c.sampler.membership_region > c.sampler.patch_size)
        errs.push_back("sampler.membership_region must be <= sampler.patch_size");
    require_finite(errs, c.sampler.membership_threshold, "sampler.membership_threshold");
    if (!(c.sampler.membership_threshold >= 0.0 && c.sampler.membership_threshold <= 1.0))
        errs.push_back("sampler.membership_threshold must lie in [0,1]");

    if (c.iterations < 1) errs.push_back("iterations must be positive");
    require_finite(errs, c.initial_lr, "initial_lr");
    if (!(c.initial_lr > 0.0)) errs.push_back("initial_lr must be positive");
    if (c.lr_halving_period < 1) errs.push_back("lr_halving_period must be positive");
    require_finite(errs, c.distortion_degree, "distortion_degree");
    if (!(c.distortion_degree >= 0.0 && c.distortion_degree <= 1.0))
        errs.push_back("distortion_degree must lie in [0,1]");
    require_finite(errs, c.contrast_factor, "contrast_factor");
    if (!(c.contrast_factor > 0.0)) errs.push_back("contrast_factor must be positive");

    return errs;
}

}  // namespace semstyle
