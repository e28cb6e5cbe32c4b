#pragma once

#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <string>

#include "semstyle/autodiff.hpp"
#include "semstyle/rng.hpp"
#include "semstyle/tensor.hpp"
#include "semstyle/types.hpp"

namespace testutil {

using semstyle::ImageTensor;
using semstyle::RandomSource;
using semstyle::Tensor;

inline Tensor random_tensor(std::vector<int> shape, std::uint64_t seed, double lo = 0.0, double hi = 1.0) {
    Tensor t(std::move(shape));
    RandomSource rng(seed);
    for (std::int64_t i = 0; i < t.numel(); ++i) t[i] = rng.uniform(lo, hi);
    return t;
}

inline ImageTensor random_image(int h, int w, std::uint64_t seed) {
    return ImageTensor(h, w, random_tensor({3, h, w}, seed));
}

inline ImageTensor constant_image(int h, int w, double v) {
    return ImageTensor(h, w, Tensor::full({3, h, w}, v));
}

/// Central-difference gradient check: rebuilds the scalar graph with fn for
/// every perturbed input and compares against the analytic gradient.
inline void check_gradient(const Tensor& input, const std::function<semstyle::ad::Var(const semstyle::ad::Var&)>& fn,
                           double rel_tol = 1e-4, double step = 1e-5) {
    namespace ad = semstyle::ad;
    ad::Var leaf = ad::Var::leaf(input, true);
    ad::Var out = fn(leaf);
    REQUIRE(out.value().numel() == 1);
    ad::backward(out);
    Tensor analytic = leaf.grad();

    for (std::int64_t i = 0; i < input.numel(); ++i) {
        Tensor plus = input, minus = input;
        plus[i] += step;
        minus[i] -= step;
        double fp = fn(ad::Var::leaf(plus, false)).value()[0];
        double fm = fn(ad::Var::leaf(minus, false)).value()[0];
        double fd = (fp - fm) / (2.0 * step);
        double denom = std::max({1e-6, std::abs(fd), std::abs(analytic[i])});
        INFO("gradient element ", i, ": analytic=", analytic[i], " fd=", fd);
        CHECK(std::abs(analytic[i] - fd) / denom < rel_tol);
    }
}

/// Scratch directory (recreated per call) under the build tree.
inline std::string scratch_dir(const std::string& name) {
    std::filesystem::path base = std::filesystem::temp_directory_path() / "semstyle_tests" / name;
    std::filesystem::remove_all(base);
    std::filesystem::create_directories(base);
    return base.string();
}

inline std::string read_file_bytes(const std::string& path) {
    FILE* f = std::fopen(path.c_str(), "rb");
    REQUIRE(f != nullptr);
    std::string data;
    char buf[65536];
    size_t n;
    while ((n = std::fread(buf, 1, sizeof(buf), f)) > 0) data.append(buf, n);
    std::fclose(f);
    return data;
}

}  // namespace testutil
