#include "semstyle/patch_sampler.hpp"

#include "semstyle/segmentation.hpp"

namespace semstyle {

std::vector<Patch> sample_patches(int height, int width, const SemanticMask& mask, const SamplerConfig& cfg,
                                  RandomSource& rng) {
    if (cfg.patch_size > height || cfg.patch_size > width)
        throw std::invalid_argument("sample_patches: patch_size exceeds image dimensions");
    if (mask.height != height || mask.width != width)
        throw std::invalid_argument("sample_patches: mask dimensions do not match image");

    const int max_x = width - cfg.patch_size;
    const int max_y = height - cfg.patch_size;
    const std::int64_t budget = 50ll * cfg.n_patches;

    std::vector<Patch> patches;
    patches.reserve(static_cast<size_t>(cfg.n_patches));
    int portrait_count = 0;
    std::int64_t draws = 0;
    while (static_cast<int>(patches.size()) < cfg.n_patches) {
        if (draws >= budget)
            throw SamplerExhausted("sample_patches: retry budget exhausted (portrait quota " +
                                   std::to_string(cfg.portrait_quota) + " unreachable for this mask)");
        ++draws;
        int x = static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(max_x) + 1));
        int y = static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(max_y) + 1));
        auto [label, fraction] = label_patch(x, y, cfg.patch_size, mask, cfg);
        if (label == PatchLabel::Portrait && portrait_count >= cfg.portrait_quota) continue;
        if (label == PatchLabel::Portrait) ++portrait_count;
        patches.push_back(Patch{x, y, cfg.patch_size, label, fraction});
    }
    return patches;
}

std::vector<Patch> sample_patches(const ImageTensor& stylized, const SemanticMask& mask, const SamplerConfig& cfg,
                                  RandomSource& rng) {
    return sample_patches(stylized.height, stylized.width, mask, cfg, rng);
}

ad::Var augment_patch(const ad::Var& patch, double distortion, RandomSource& rng) {
    if (patch.value().rank() != 3 || patch.value().dim(1) != patch.value().dim(2))
        throw std::invalid_argument("augment_patch: expected a square (C,S,S) patch");
    if (!(distortion >= 0.0 && distortion <= 1.0))
        throw std::invalid_argument("augment_patch: distortion must lie in [0,1]");
    int size = patch.value().dim(1);
    double r = distortion * size / 2.0;
    std::array<std::array<double, 2>, 4> corners = {{{0.0, 0.0},
                                                     {static_cast<double>(size - 1), 0.0},
                                                     {0.0, static_cast<double>(size - 1)},
                                                     {static_cast<double>(size - 1), static_cast<double>(size - 1)}}};
    std::array<std::array<double, 2>, 4> displaced = corners;
    for (auto& c : displaced) {
        c[0] += rng.uniform(-r, r);
        c[1] += rng.uniform(-r, r);
    }
    if (size < 2) return patch;  // a single pixel cannot be warped
    auto hm = ad::homography_from_points(corners, displaced);
    return ad::warp_perspective(patch, hm);
}

ImageTensor augment_patch(const ImageTensor& patch, double distortion, RandomSource& rng) {
    if (patch.height != patch.width) throw std::invalid_argument("augment_patch: expected a square patch");
    ad::Var out = augment_patch(ad::Var::constant(patch.data), distortion, rng);
    return ImageTensor(patch.height, patch.width, out.value());
}

}  // namespace semstyle
