#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "semstyle/autodiff.hpp"
#include "semstyle/types.hpp"

namespace semstyle {

/// Trainable image-to-image network: a small U-net style encoder-decoder with
/// residual blocks at the bottleneck and a sigmoid output, so every output
/// pixel lies strictly inside (0,1).
///
/// Fixed layout (repo constant):
///   stem  conv3x3  3->16          full res
///   down1 conv3x3 16->32 stride 2  /2
///   down2 conv3x3 32->64 stride 2  /4
///   down3 conv3x3 64->64 stride 2  /8
///   3 residual blocks at 64 channels
///   up path: nearest x2 upsample + skip concat + conv3x3 (64, 32, 16)
///   head  conv3x3 16->3 + sigmoid
/// Every conv except the head is bias-free and followed by instance norm +
/// relu (a bias before the norm would be cancelled and receive no gradient).
///
/// Inputs whose sides are not divisible by 8 are replicate-padded internally
/// and cropped back, so output dimensions always equal input dimensions.
class StyleNet {
public:
    static constexpr int kDownsampleFactor = 8;

    /// Deterministic initialization: conv weights are He-normal draws from
    /// per-layer child streams of RandomSource(seed), in construction order;
    /// instance-norm scales start at 1, offsets and the head bias at 0.
    explicit StyleNet(std::uint64_t seed);

    ad::Var forward(const ad::Var& content) const;
    ImageTensor forward_image(const ImageTensor& content) const;

    std::vector<std::pair<std::string, ad::Var>> named_parameters() const;
    std::vector<ad::Var> parameters() const;
    std::int64_t parameter_count() const;
    std::uint64_t init_seed() const { return seed_; }

    void save_checkpoint(const std::string& path) const;
    static StyleNet load_checkpoint(const std::string& path);

private:
    struct Block {
        ad::Var w, gamma, beta;
    };

    StyleNet() = default;
    ad::Var run_block(const Block& b, const ad::Var& x, int stride) const;

    std::uint64_t seed_ = 0;
    Block stem_, down1_, down2_, down3_;
    std::array<std::pair<Block, Block>, 3> res_;
    Block up2_, up1_, up0_;
    ad::Var head_w_, head_b_;
};

}  // namespace semstyle
