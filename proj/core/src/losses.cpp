#include "semstyle/losses.hpp"

#include <cmath>
#include <stdexcept>

#include "semstyle/patch_sampler.hpp"
#include "semstyle/segmentation.hpp"

namespace semstyle {

namespace {
constexpr double kDirectionEps = 1e-8;

double vec_norm(const Tensor& v) {
    double s = 0.0;
    for (std::int64_t i = 0; i < v.numel(); ++i) s += v[i] * v[i];
    return std::sqrt(s);
}
}  // namespace

double threshold_reject(double s, double tau) { return s <= tau ? 0.0 : s; }

double weight_penalty(PatchLabel label, const WeightPenaltyConfig& cfg) {
    return label == PatchLabel::Portrait ? cfg.alpha_portrait : cfg.alpha_back;
}

ad::Var cosine_direction_loss(const ad::Var& image_direction, const Tensor& text_direction) {
    if (vec_norm(text_direction) < kDirectionEps)
        throw std::invalid_argument("cosine_direction_loss: zero text direction");
    if (vec_norm(image_direction.value()) < kDirectionEps) return ad::Var::constant(Tensor::scalar(1.0));
    ad::Var cos = ad::cosine_similarity(image_direction, ad::Var::constant(text_direction));
    return ad::add_scalar(ad::scale(cos, -1.0), 1.0);
}

double cosine_direction_loss_value(const Tensor& image_direction, const Tensor& text_direction) {
    return cosine_direction_loss(ad::Var::constant(image_direction), text_direction).scalar();
}

Tensor encode_image_value(const IImageEncoder& enc, const ImageTensor& image) {
    return enc.encode(ad::Var::constant(image.data)).value();
}

// ---------------------------------------------------------------------------
// graph forms
// ---------------------------------------------------------------------------

ad::Var directional_clip_loss(const ad::Var& stylized, const Tensor& content_embedding, const Tensor& text_direction,
                              const IImageEncoder& enc) {
    ad::Var emb = enc.encode(stylized);
    ad::Var di = ad::sub(emb, ad::Var::constant(content_embedding));
    return cosine_direction_loss(di, text_direction);
}

ad::Var background_global_clip_loss(const ad::Var& stylized, const Tensor& mask, const Tensor& masked_content_embedding,
                                    const Tensor& text_direction, const IImageEncoder& enc) {
    ad::Var masked = ad::mask_channels(stylized, mask);
    ad::Var emb = enc.encode(masked);
    ad::Var di = ad::sub(emb, ad::Var::constant(masked_content_embedding));
    return cosine_direction_loss(di, text_direction);
}

namespace {

/// Shared per-patch term: crop, warp with the patch's own stream, encode,
/// and compute the direction loss node.
ad::Var patch_direction_loss(const ad::Var& stylized, const Patch& p, const Tensor& content_embedding,
                             const Tensor& text_direction, const IImageEncoder& enc, double distortion,
                             RandomSource patch_rng) {
    ad::Var cropped = ad::crop(stylized, p.y, p.x, p.size, p.size);
    ad::Var warped = augment_patch(cropped, distortion, patch_rng);
    ad::Var emb = enc.encode(warped);
    ad::Var di = ad::sub(emb, ad::Var::constant(content_embedding));
    return cosine_direction_loss(di, text_direction);
}

}  // namespace

ad::Var patchwise_clip_loss(const ad::Var& stylized, const std::vector<Patch>& patches,
                            const Tensor& content_embedding, const Tensor& text_direction, const IImageEncoder& enc,
                            double tau, double distortion, const RandomSource& rng) {
    if (patches.empty()) throw std::invalid_argument("patchwise_clip_loss: empty patch list");
    ad::Var acc;
    for (size_t i = 0; i < patches.size(); ++i) {
        ad::Var term =
            patch_direction_loss(stylized, patches[i], content_embedding, text_direction, enc, distortion,
                                 rng.child(static_cast<std::uint64_t>(i)));
        if (term.scalar() <= tau) continue;  // rejected: no value, no gradient
        acc = acc.defined() ? ad::add(acc, term) : term;
    }
    if (!acc.defined()) return ad::Var::constant(Tensor::scalar(0.0));
    return ad::scale(acc, 1.0 / static_cast<double>(patches.size()));
}

ad::Var semantic_patchwise_clip_loss(const ad::Var& stylized, const std::vector<Patch>& patches,
                                     const Tensor& content_embedding, const Tensor& text_direction,
                                     const IImageEncoder& enc, const ThresholdConfig& thresholds,
                                     const WeightPenaltyConfig& penalties, double distortion,
                                     const RandomSource& rng) {
    if (patches.empty()) throw std::invalid_argument("semantic_patchwise_clip_loss: empty patch list");
    ad::Var acc;
    for (size_t i = 0; i < patches.size(); ++i) {
        const Patch& p = patches[i];
        ad::Var term = patch_direction_loss(stylized, p, content_embedding, text_direction, enc, distortion,
                                            rng.child(static_cast<std::uint64_t>(i)));
        double tau = p.label == PatchLabel::Portrait ? thresholds.tau_portrait : thresholds.tau_back;
        if (term.scalar() <= tau) continue;
        ad::Var weighted = ad::scale(term, weight_penalty(p.label, penalties));
        acc = acc.defined() ? ad::add(acc, weighted) : weighted;
    }
    if (!acc.defined()) return ad::Var::constant(Tensor::scalar(0.0));
    return ad::scale(acc, 1.0 / static_cast<double>(patches.size()));
}

ad::Var content_loss(const ad::Var& stylized, const std::vector<std::pair<std::string, Tensor>>& content_features,
                     const IFeatureExtractor& fx) {
    if (content_features.size() != 2) throw std::invalid_argument("content_loss: expected exactly two feature maps");
    auto stylized_maps = fx.extract(stylized);
    ad::Var acc;
    for (const auto& [name, ref] : content_features) {
        ad::Var found;
        for (const auto& [sname, smap] : stylized_maps)
            if (sname == name) found = smap;
        if (!found.defined()) throw std::invalid_argument("content_loss: missing feature map '" + name + "'");
        ad::Var term = ad::mse(found, ad::Var::constant(ref));
        acc = acc.defined() ? ad::add(acc, term) : term;
    }
    return acc;
}

ad::Var tv_loss(const ad::Var& image) {
    if (image.value().rank() != 3 || image.value().dim(1) < 2 || image.value().dim(2) < 2)
        throw std::invalid_argument("tv_loss: image must be at least 2x2");
    return ad::tv_mean_sq(image);
}

ad::Var weighted_total(const ad::Var& dir, const ad::Var& patch, const ad::Var& content, const ad::Var& tv,
                       const LossWeights& w) {
    ad::Var t = ad::add(ad::scale(dir, w.lambda_d), ad::scale(patch, w.lambda_p));
    t = ad::add(t, ad::scale(content, w.lambda_c));
    return ad::add(t, ad::scale(tv, w.lambda_tv));
}

// ---------------------------------------------------------------------------
// value forms
// ---------------------------------------------------------------------------

double directional_clip_loss(const ImageTensor& content, const ImageTensor& stylized, const Tensor& text_direction,
                             const IImageEncoder& enc) {
    if (content.height != stylized.height || content.width != stylized.width)
        throw std::invalid_argument("directional_clip_loss: image dimensions differ");
    Tensor ce = encode_image_value(enc, content);
    return directional_clip_loss(ad::Var::constant(stylized.data), ce, text_direction, enc).scalar();
}

double background_global_clip_loss(const ImageTensor& content, const ImageTensor& stylized, const SemanticMask& mask,
                                   const Tensor& text_direction, const IImageEncoder& enc) {
    if (content.height != stylized.height || content.width != stylized.width)
        throw std::invalid_argument("background_global_clip_loss: image dimensions differ");
    if (mask.height != content.height || mask.width != content.width)
        throw std::invalid_argument("background_global_clip_loss: mask dimensions differ");
    Tensor mce = encode_image_value(enc, apply_mask(content, mask));
    return background_global_clip_loss(ad::Var::constant(stylized.data), mask.as_tensor(), mce, text_direction, enc)
        .scalar();
}

double patchwise_clip_loss(const ImageTensor& content, const ImageTensor& stylized, const std::vector<Patch>& patches,
                           const Tensor& text_direction, const IImageEncoder& enc, double tau, double distortion,
                           const RandomSource& rng) {
    Tensor ce = encode_image_value(enc, content);
    return patchwise_clip_loss(ad::Var::constant(stylized.data), patches, ce, text_direction, enc, tau, distortion,
                               rng)
        .scalar();
}

double semantic_patchwise_clip_loss(const ImageTensor& content, const ImageTensor& stylized,
                                    const std::vector<Patch>& patches, const Tensor& text_direction,
                                    const IImageEncoder& enc, const ThresholdConfig& thresholds,
                                    const WeightPenaltyConfig& penalties, double distortion,
                                    const RandomSource& rng) {
    Tensor ce = encode_image_value(enc, content);
    return semantic_patchwise_clip_loss(ad::Var::constant(stylized.data), patches, ce, text_direction, enc,
                                        thresholds, penalties, distortion, rng)
        .scalar();
}

double content_loss(const ImageTensor& content, const ImageTensor& stylized, const IFeatureExtractor& fx) {
    if (content.height != stylized.height || content.width != stylized.width)
        throw std::invalid_argument("content_loss: image dimensions differ");
    auto ref = extract_content_features(fx, content);
    std::vector<std::pair<std::string, Tensor>> consts;
    for (const auto& [name, v] : ref.maps) consts.emplace_back(name, v.value());
    return content_loss(ad::Var::constant(stylized.data), consts, fx).scalar();
}

double tv_loss(const ImageTensor& image) { return tv_loss(ad::Var::constant(image.data)).scalar(); }

LossBreakdown total_loss(double dir, double patch, double content, double tv, const LossWeights& w) {
    if (!std::isfinite(dir) || !std::isfinite(patch) || !std::isfinite(content) || !std::isfinite(tv))
        throw std::invalid_argument("total_loss: non-finite component");
    LossBreakdown b;
    b.dir = dir;
    b.patch = patch;
    b.content = content;
    b.tv = tv;
    b.total = w.lambda_d * dir + w.lambda_p * patch + w.lambda_c * content + w.lambda_tv * tv;
    return b;
}

}  // namespace semstyle
