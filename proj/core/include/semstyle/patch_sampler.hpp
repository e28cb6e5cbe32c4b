#pragma once

#include <stdexcept>
#include <vector>

#include "semstyle/autodiff.hpp"
#include "semstyle/rng.hpp"
#include "semstyle/types.hpp"

namespace semstyle {

struct SamplerExhausted : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Draws exactly n_patches in-bounds square crops, labeled against the mask.
/// Offsets are uniform over valid positions, x drawn before y. Once the
/// portrait quota is filled, a draw that labels Portrait is discarded and
/// redrawn. Throws SamplerExhausted after 50 * n_patches total draws.
std::vector<Patch> sample_patches(int height, int width, const SemanticMask& mask, const SamplerConfig& cfg,
                                  RandomSource& rng);

std::vector<Patch> sample_patches(const ImageTensor& stylized, const SemanticMask& mask, const SamplerConfig& cfg,
                                  RandomSource& rng);

/// Random perspective warp of a square patch. The four output corners
/// (TL, TR, BL, BR order) map to input positions displaced by uniform draws
/// in [-distortion*size/2, distortion*size/2] (dx before dy per corner,
/// eight draws total); pixels are inverse-warped with bilinear sampling and
/// edge-clamped reads. distortion 0 reproduces the input exactly.
ad::Var augment_patch(const ad::Var& patch, double distortion, RandomSource& rng);

/// Value-level convenience overload.
ImageTensor augment_patch(const ImageTensor& patch, double distortion, RandomSource& rng);

}  // namespace semstyle
