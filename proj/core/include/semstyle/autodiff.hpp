#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <memory>
#include <vector>

#include "semstyle/tensor.hpp"

namespace semstyle::ad {

struct Node;
using NodePtr = std::shared_ptr<Node>;

/// One vertex of a dynamically built computation graph. Children own their
/// parents, so keeping the root handle alive keeps the whole graph alive.
struct Node {
    Tensor value;
    Tensor grad;
    bool requires_grad = false;
    std::uint64_t id = 0;
    std::vector<NodePtr> parents;
    // Distributes this node's grad into its parents' grads.
    std::function<void(Node&)> backprop;
};

/// Value handle over a graph node. Cheap to copy.
class Var {
public:
    Var() = default;

    static Var leaf(Tensor t, bool requires_grad);
    static Var constant(Tensor t) { return leaf(std::move(t), false); }

    bool defined() const { return static_cast<bool>(n_); }
    const Tensor& value() const { return n_->value; }
    Tensor& mutable_value() { return n_->value; }
    const Tensor& grad() const { return n_->grad; }
    bool requires_grad() const { return n_ && n_->requires_grad; }
    NodePtr node() const { return n_; }

    double scalar() const { return n_->value[0]; }

private:
    NodePtr n_;
    friend Var make_op(Tensor value, std::vector<Var> parents, std::function<void(Node&)> backprop);
};

/// Internal: creates a graph node from computed value + parent set.
Var make_op(Tensor value, std::vector<Var> parents, std::function<void(Node&)> backprop);

/// Runs reverse-mode accumulation from a scalar root. Grad buffers of every
/// reachable grad-requiring node are (re)zeroed first, so leaves can be
/// reused across successive graphs.
void backward(const Var& root);

// ---- elementwise ----
Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var scale(const Var& a, double s);
Var add_scalar(const Var& a, double s);
Var relu(const Var& a);
Var sigmoid(const Var& a);
Var gelu(const Var& a);

// ---- reductions / vector ops ----
Var sum(const Var& a);
Var mean(const Var& a);
Var dot(const Var& a, const Var& b);
Var mse(const Var& a, const Var& b);

/// w: (D, K) matrix, x: (K) vector -> (D) vector. Optional bias (D).
Var matvec(const Var& w, const Var& x);
Var matvec(const Var& w, const Var& x, const Var& bias);

/// Cosine similarity of two vectors, clamped into [-1, 1].
Var cosine_similarity(const Var& a, const Var& b);

// ---- image ops (rank-3 tensors, layout C,H,W) ----
Var conv2d(const Var& x, const Var& w, const Var& bias, int stride, int pad);
Var instance_norm(const Var& x, const Var& gamma, const Var& beta, double eps = 1e-5);
Var upsample_nearest2(const Var& x);
Var avgpool2(const Var& x);
Var maxpool2(const Var& x);
Var concat_channels(const Var& a, const Var& b);
Var crop(const Var& x, int y0, int x0, int h, int w);
Var pad_replicate(const Var& x, int top, int bottom, int left, int right);
Var flatten(const Var& x);
Var layer_norm(const Var& x, const Var& gamma, const Var& beta, double eps = 1e-5);
Var l2_normalize(const Var& x, double eps = 1e-12);

/// Bilinear resize with half-pixel mapping: for output x, the source
/// coordinate is (x + 0.5) * in/out - 0.5, clamped to the valid range.
Var resize_bilinear(const Var& x, int out_h, int out_w);

/// Multiplies every channel of x (C,H,W) by a constant mask (H,W).
/// Gradient w.r.t. pixels where the mask is zero is exactly zero.
Var mask_channels(const Var& x, const Tensor& mask);

/// Inverse-warps a square image: out(y,x) samples in at H * (x,y,1) with
/// bilinear weights, reads clamped to the edge. H maps output to input.
Var warp_perspective(const Var& x, const std::array<double, 9>& h_out_to_in);

/// Mean of squared horizontal adjacent differences plus mean of squared
/// vertical adjacent differences over all channels.
Var tv_mean_sq(const Var& x);

/// Solves the 3x3 homography (last entry 1) that maps src[i] -> dst[i] for
/// four point pairs, via an 8x8 Gaussian elimination with partial pivoting.
std::array<double, 9> homography_from_points(const std::array<std::array<double, 2>, 4>& src,
                                             const std::array<std::array<double, 2>, 4>& dst);

}  // namespace semstyle::ad
