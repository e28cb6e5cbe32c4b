#pragma once

#include <utility>
#include <vector>

#include "semstyle/autodiff.hpp"
#include "semstyle/encoders.hpp"
#include "semstyle/rng.hpp"
#include "semstyle/tensor.hpp"
#include "semstyle/types.hpp"

namespace semstyle {

struct LossBreakdown {
    double dir = 0.0;
    double patch = 0.0;
    double content = 0.0;
    double tv = 0.0;
    double total = 0.0;
};

/// 0 if s <= tau, else s. A rejected patch also contributes zero gradient:
/// callers drop the term from the graph instead of multiplying by zero.
double threshold_reject(double s, double tau);

/// alpha_portrait for Portrait patches, alpha_back for Background.
double weight_penalty(PatchLabel label, const WeightPenaltyConfig& cfg);

/// One minus the cosine of the angle between the image direction and the
/// text direction, in [0,2]. A near-zero image direction (norm < 1e-8) is
/// degenerate: the loss is the constant 1 and carries no gradient.
/// Throws when the text direction norm is below 1e-8.
ad::Var cosine_direction_loss(const ad::Var& image_direction, const Tensor& text_direction);
double cosine_direction_loss_value(const Tensor& image_direction, const Tensor& text_direction);

// ---------------------------------------------------------------------------
// graph-building forms used by the trainer; `stylized` stays differentiable
// ---------------------------------------------------------------------------

ad::Var directional_clip_loss(const ad::Var& stylized, const Tensor& content_embedding, const Tensor& text_direction,
                              const IImageEncoder& enc);

/// Directional loss on mask-multiplied images, Portrait pixels zeroed on
/// both sides; their gradient is exactly zero. `masked_content_embedding`
/// is the encoding of the already-masked content image.
ad::Var background_global_clip_loss(const ad::Var& stylized, const Tensor& mask, const Tensor& masked_content_embedding,
                                    const Tensor& text_direction, const IImageEncoder& enc);

/// Mean over patches of the thresholded per-patch direction loss. Patch i is
/// cropped from `stylized`, warped with stream rng.child(i), encoded, and
/// rejected (dropped from the graph) when its loss value is <= tau.
ad::Var patchwise_clip_loss(const ad::Var& stylized, const std::vector<Patch>& patches,
                            const Tensor& content_embedding, const Tensor& text_direction, const IImageEncoder& enc,
                            double tau, double distortion, const RandomSource& rng);

/// Patchwise loss with label-dependent thresholds and weight penalties:
/// mean over patches of alpha(label) * reject(l_i, tau(label)).
ad::Var semantic_patchwise_clip_loss(const ad::Var& stylized, const std::vector<Patch>& patches,
                                     const Tensor& content_embedding, const Tensor& text_direction,
                                     const IImageEncoder& enc, const ThresholdConfig& thresholds,
                                     const WeightPenaltyConfig& penalties, double distortion,
                                     const RandomSource& rng);

/// Sum over the two feature maps of the mean squared error against the
/// precomputed content maps (matched by name).
ad::Var content_loss(const ad::Var& stylized, const std::vector<std::pair<std::string, Tensor>>& content_features,
                     const IFeatureExtractor& fx);

/// Mean squared horizontal adjacent difference plus mean squared vertical
/// adjacent difference. Requires height and width >= 2.
ad::Var tv_loss(const ad::Var& image);

ad::Var weighted_total(const ad::Var& dir, const ad::Var& patch, const ad::Var& content, const ad::Var& tv,
                       const LossWeights& weights);

// ---------------------------------------------------------------------------
// value-level forms (whole computation on constant inputs)
// ---------------------------------------------------------------------------

double directional_clip_loss(const ImageTensor& content, const ImageTensor& stylized, const Tensor& text_direction,
                             const IImageEncoder& enc);
double background_global_clip_loss(const ImageTensor& content, const ImageTensor& stylized, const SemanticMask& mask,
                                   const Tensor& text_direction, const IImageEncoder& enc);
double patchwise_clip_loss(const ImageTensor& content, const ImageTensor& stylized, const std::vector<Patch>& patches,
                           const Tensor& text_direction, const IImageEncoder& enc, double tau, double distortion,
                           const RandomSource& rng);
double semantic_patchwise_clip_loss(const ImageTensor& content, const ImageTensor& stylized,
                                    const std::vector<Patch>& patches, const Tensor& text_direction,
                                    const IImageEncoder& enc, const ThresholdConfig& thresholds,
                                    const WeightPenaltyConfig& penalties, double distortion,
                                    const RandomSource& rng);
double content_loss(const ImageTensor& content, const ImageTensor& stylized, const IFeatureExtractor& fx);
double tv_loss(const ImageTensor& image);

/// Weighted combination of the four raw components. Throws on non-finite
/// components.
LossBreakdown total_loss(double dir, double patch, double content, double tv, const LossWeights& weights);

/// Encoding of an image with no gradient tracking.
Tensor encode_image_value(const IImageEncoder& enc, const ImageTensor& image);

}  // namespace semstyle
