#include "semstyle/stylenet.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <stdexcept>

#include "semstyle/rng.hpp"

namespace semstyle {

namespace {

Tensor he_normal(RandomSource rng, int out_ch, int in_ch, int k) {
    Tensor w({out_ch, in_ch, k, k});
    double std = std::sqrt(2.0 / (static_cast<double>(in_ch) * k * k));
    for (std::int64_t i = 0; i < w.numel(); ++i) w[i] = rng.normal() * std;
    return w;
}

constexpr char kMagic[4] = {'S', 'S', 'C', 'K'};
constexpr std::uint32_t kVersion = 1;

}  // namespace

StyleNet::StyleNet(std::uint64_t seed) : seed_(seed) {
    RandomSource root(seed);
    std::uint64_t stream = 0;
    auto make_block = [&](int in_ch, int out_ch) {
        Block b;
        b.w = ad::Var::leaf(he_normal(root.child(stream++), out_ch, in_ch, 3), true);
        b.gamma = ad::Var::leaf(Tensor::full({out_ch}, 1.0), true);
        b.beta = ad::Var::leaf(Tensor::zeros({out_ch}), true);
        return b;
    };
    stem_ = make_block(3, 16);
    down1_ = make_block(16, 32);
    down2_ = make_block(32, 64);
    down3_ = make_block(64, 64);
    for (auto& r : res_) {
        r.first = make_block(64, 64);
        r.second = make_block(64, 64);
    }
    up2_ = make_block(64 + 64, 64);
    up1_ = make_block(64 + 32, 32);
    up0_ = make_block(32 + 16, 16);
    head_w_ = ad::Var::leaf(he_normal(root.child(stream++), 3, 16, 3), true);
    head_b_ = ad::Var::leaf(Tensor::zeros({3}), true);
}

ad::Var StyleNet::run_block(const Block& b, const ad::Var& x, int stride) const {
    return ad::relu(ad::instance_norm(ad::conv2d(x, b.w, ad::Var(), stride, 1), b.gamma, b.beta));
}

ad::Var StyleNet::forward(const ad::Var& content) const {
    if (content.value().rank() != 3 || content.value().dim(0) != 3)
        throw std::invalid_argument("StyleNet: input must be (3,H,W)");
    if (!content.value().all_finite()) throw std::invalid_argument("StyleNet: non-finite input");
    int h = content.value().dim(1), w = content.value().dim(2);
    int ph = (kDownsampleFactor - h % kDownsampleFactor) % kDownsampleFactor;
    int pw = (kDownsampleFactor - w % kDownsampleFactor) % kDownsampleFactor;
    ad::Var x = content;
    if (ph || pw) x = ad::pad_replicate(x, 0, ph, 0, pw);

    ad::Var e0 = run_block(stem_, x, 1);
    ad::Var e1 = run_block(down1_, e0, 2);
    ad::Var e2 = run_block(down2_, e1, 2);
    ad::Var e3 = run_block(down3_, e2, 2);

    ad::Var b = e3;
    for (const auto& r : res_) {
        ad::Var t = ad::relu(ad::instance_norm(ad::conv2d(b, r.first.w, ad::Var(), 1, 1), r.first.gamma, r.first.beta));
        t = ad::instance_norm(ad::conv2d(t, r.second.w, ad::Var(), 1, 1), r.second.gamma, r.second.beta);
        b = ad::add(b, t);
    }

    ad::Var d2 = run_block(up2_, ad::concat_channels(ad::upsample_nearest2(b), e2), 1);
    ad::Var d1 = run_block(up1_, ad::concat_channels(ad::upsample_nearest2(d2), e1), 1);
    ad::Var d0 = run_block(up0_, ad::concat_channels(ad::upsample_nearest2(d1), e0), 1);
    ad::Var y = ad::sigmoid(ad::conv2d(d0, head_w_, head_b_, 1, 1));
    if (ph || pw) y = ad::crop(y, 0, 0, h, w);
    return y;
}

ImageTensor StyleNet::forward_image(const ImageTensor& content) const {
    ad::Var y = forward(ad::Var::constant(content.data));
    return ImageTensor(content.height, content.width, y.value());
}

std::vector<std::pair<std::string, ad::Var>> StyleNet::named_parameters() const {
    std::vector<std::pair<std::string, ad::Var>> out;
    auto add_block = [&](const std::string& name, const Block& b) {
        out.emplace_back(name + ".w", b.w);
        out.emplace_back(name + ".gamma", b.gamma);
        out.emplace_back(name + ".beta", b.beta);
    };
    add_block("stem", stem_);
    add_block("down1", down1_);
    add_block("down2", down2_);
    add_block("down3", down3_);
    for (size_t i = 0; i < res_.size(); ++i) {
        add_block("res" + std::to_string(i) + ".a", res_[i].first);
        add_block("res" + std::to_string(i) + ".b", res_[i].second);
    }
    add_block("up2", up2_);
    add_block("up1", up1_);
    add_block("up0", up0_);
    out.emplace_back("head.w", head_w_);
    out.emplace_back("head.b", head_b_);
    return out;
}

std::vector<ad::Var> StyleNet::parameters() const {
    std::vector<ad::Var> out;
    for (auto& [name, v] : named_parameters()) out.push_back(v);
    return out;
}

std::int64_t StyleNet::parameter_count() const {
    std::int64_t n = 0;
    for (const auto& p : parameters()) n += p.value().numel();
    return n;
}

void StyleNet::save_checkpoint(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write checkpoint '" + path + "'");
    out.write(kMagic, 4);
    out.write(reinterpret_cast<const char*>(&kVersion), 4);
    std::uint64_t seed = seed_;
    out.write(reinterpret_cast<const char*>(&seed), 8);
    auto params = named_parameters();
    std::uint64_t count = params.size();
    out.write(reinterpret_cast<const char*>(&count), 8);
    for (const auto& [name, v] : params) {
        std::uint32_t nlen = static_cast<std::uint32_t>(name.size());
        out.write(reinterpret_cast<const char*>(&nlen), 4);
        out.write(name.data(), nlen);
        std::uint32_t rank = static_cast<std::uint32_t>(v.value().rank());
        out.write(reinterpret_cast<const char*>(&rank), 4);
        for (int i = 0; i < v.value().rank(); ++i) {
            std::int64_t d = v.value().dim(i);
            out.write(reinterpret_cast<const char*>(&d), 8);
        }
        out.write(reinterpret_cast<const char*>(v.value().data()),
                  static_cast<std::streamsize>(v.value().numel() * 8));
    }
    if (!out) throw std::runtime_error("short write on checkpoint '" + path + "'");
}

StyleNet StyleNet::load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open checkpoint '" + path + "'");
    char magic[4];
    in.read(magic, 4);
    std::uint32_t version = 0;
    in.read(reinterpret_cast<char*>(&version), 4);
    if (!in || std::memcmp(magic, kMagic, 4) != 0 || version != kVersion)
        throw std::runtime_error("'" + path + "' is not a StyleNet checkpoint");
    std::uint64_t seed = 0;
    in.read(reinterpret_cast<char*>(&seed), 8);
    std::uint64_t count = 0;
    in.read(reinterpret_cast<char*>(&count), 8);

    std::map<std::string, Tensor> stored;
    for (std::uint64_t i = 0; i < count; ++i) {
        std::uint32_t nlen = 0;
        in.read(reinterpret_cast<char*>(&nlen), 4);
        std::string name(nlen, '\0');
        in.read(name.data(), nlen);
        std::uint32_t rank = 0;
        in.read(reinterpret_cast<char*>(&rank), 4);
        std::vector<int> shape(rank);
        for (std::uint32_t r = 0; r < rank; ++r) {
            std::int64_t d = 0;
            in.read(reinterpret_cast<char*>(&d), 8);
            shape[r] = static_cast<int>(d);
        }
        Tensor t(shape);
        in.read(reinterpret_cast<char*>(t.data()), static_cast<std::streamsize>(t.numel() * 8));
        if (!in) throw std::runtime_error("truncated checkpoint '" + path + "'");
        stored.emplace(std::move(name), std::move(t));
    }

    StyleNet net(seed);
    for (auto& [name, v] : net.named_parameters()) {
        auto it = stored.find(name);
        if (it == stored.end()) throw std::runtime_error("checkpoint is missing parameter '" + name + "'");
        if (!it->second.same_shape(v.value()))
            throw std::runtime_error("checkpoint parameter '" + name + "' has wrong shape");
        v.mutable_value() = it->second;
    }
    return net;
}

}  // namespace semstyle
