#include "testutil.hpp"

#include <opencv2/calib3d.hpp>
#include <opencv2/core.hpp>

using namespace semstyle;
using testutil::check_gradient;
using testutil::random_tensor;

TEST_CASE("elementwise op gradients match central differences") {
    Tensor a = random_tensor({3, 4, 4}, 11, -1.0, 1.0);
    Tensor b = random_tensor({3, 4, 4}, 12, -1.0, 1.0);

    check_gradient(a, [&](const ad::Var& x) { return ad::sum(ad::add(x, ad::Var::constant(b))); });
    check_gradient(a, [&](const ad::Var& x) { return ad::sum(ad::sub(ad::Var::constant(b), x)); });
    check_gradient(a, [&](const ad::Var& x) { return ad::sum(ad::mul(x, ad::Var::constant(b))); });
    check_gradient(a, [&](const ad::Var& x) { return ad::mean(ad::scale(x, -2.5)); });
    check_gradient(a, [&](const ad::Var& x) { return ad::sum(ad::sigmoid(x)); });
    check_gradient(a, [&](const ad::Var& x) { return ad::sum(ad::gelu(x)); });
    check_gradient(a, [&](const ad::Var& x) { return ad::mse(x, ad::Var::constant(b)); });
    // relu kink: keep inputs away from zero
    Tensor shifted = a;
    for (std::int64_t i = 0; i < shifted.numel(); ++i) shifted[i] += shifted[i] >= 0 ? 0.5 : -0.5;
    check_gradient(shifted, [&](const ad::Var& x) { return ad::sum(ad::relu(x)); });
}

TEST_CASE("vector op gradients") {
    Tensor v = random_tensor({12}, 21, -1.0, 1.0);
    Tensor u = random_tensor({12}, 22, -1.0, 1.0);
    Tensor w = random_tensor({5, 12}, 23, -1.0, 1.0);
    Tensor bias = random_tensor({5}, 24, -1.0, 1.0);

    check_gradient(v, [&](const ad::Var& x) { return ad::dot(x, ad::Var::constant(u)); });
    check_gradient(v, [&](const ad::Var& x) { return ad::sum(ad::matvec(ad::Var::constant(w), x)); });
    check_gradient(w, [&](const ad::Var& x) {
        return ad::sum(ad::matvec(x, ad::Var::constant(v), ad::Var::constant(bias)));
    });
    check_gradient(v, [&](const ad::Var& x) { return ad::cosine_similarity(x, ad::Var::constant(u)); });
    check_gradient(v, [&](const ad::Var& x) { return ad::sum(ad::l2_normalize(x)); });
    check_gradient(v, [&](const ad::Var& x) {
        return ad::mean(ad::layer_norm(x, ad::Var::constant(u), ad::Var::constant(v)));
    });
}

TEST_CASE("conv2d forward matches a direct convolution") {
    Tensor x = random_tensor({2, 5, 6}, 31, -1.0, 1.0);
    Tensor w = random_tensor({3, 2, 3, 3}, 32, -1.0, 1.0);
    Tensor b = random_tensor({3}, 33, -1.0, 1.0);
    ad::Var out = ad::conv2d(ad::Var::constant(x), ad::Var::constant(w), ad::Var::constant(b), 1, 1);
    REQUIRE(out.value().shape() == std::vector<int>{3, 5, 6});
    // independent direct evaluation
    auto wat = [&](int o, int i, int ky, int kx) { return w[((o * 2 + i) * 3 + ky) * 3 + kx]; };
    for (int o = 0; o < 3; ++o)
        for (int y = 0; y < 5; ++y)
            for (int xx = 0; xx < 6; ++xx) {
                double s = b[o];
                for (int i = 0; i < 2; ++i)
                    for (int ky = 0; ky < 3; ++ky)
                        for (int kx = 0; kx < 3; ++kx) {
                            int iy = y - 1 + ky, ix = xx - 1 + kx;
                            if (iy < 0 || iy >= 5 || ix < 0 || ix >= 6) continue;
                            s += wat(o, i, ky, kx) * x.at(i, iy, ix);
                        }
                CHECK(out.value().at(o, y, xx) == doctest::Approx(s).epsilon(1e-12));
            }
}

TEST_CASE("conv2d gradients (stride 1 and 2, with and without bias)") {
    Tensor x = random_tensor({2, 6, 6}, 41, -1.0, 1.0);
    Tensor w = random_tensor({3, 2, 3, 3}, 42, -0.5, 0.5);
    Tensor b = random_tensor({3}, 43, -0.5, 0.5);

    for (int stride : {1, 2}) {
        check_gradient(x, [&](const ad::Var& v) {
            return ad::sum(ad::conv2d(v, ad::Var::constant(w), ad::Var::constant(b), stride, 1));
        });
        check_gradient(w, [&](const ad::Var& v) {
            return ad::sum(ad::conv2d(ad::Var::constant(x), v, ad::Var(), stride, 1));
        });
    }
    check_gradient(b, [&](const ad::Var& v) {
        return ad::sum(ad::conv2d(ad::Var::constant(x), ad::Var::constant(w), v, 1, 1));
    });
}

TEST_CASE("instance_norm gradients") {
    Tensor x = random_tensor({2, 4, 4}, 51, -1.0, 1.0);
    Tensor gamma = random_tensor({2}, 52, 0.5, 1.5);
    Tensor beta = random_tensor({2}, 53, -0.5, 0.5);
    check_gradient(x, [&](const ad::Var& v) {
        return ad::sum(ad::instance_norm(v, ad::Var::constant(gamma), ad::Var::constant(beta)));
    });
    // sum of the plain norm kills the gamma/beta signal by symmetry; weight it
    Tensor sel = random_tensor({2, 4, 4}, 54, 0.1, 1.0);
    check_gradient(gamma, [&](const ad::Var& v) {
        return ad::sum(ad::mul(ad::instance_norm(ad::Var::constant(x), v, ad::Var::constant(beta)),
                               ad::Var::constant(sel)));
    });
    check_gradient(beta, [&](const ad::Var& v) {
        return ad::sum(ad::mul(ad::instance_norm(ad::Var::constant(x), ad::Var::constant(gamma), v),
                               ad::Var::constant(sel)));
    });
}

TEST_CASE("spatial op gradients") {
    Tensor x = random_tensor({2, 6, 6}, 61, -1.0, 1.0);
    Tensor sel8 = random_tensor({2, 12, 12}, 62, 0.1, 1.0);
    check_gradient(x, [&](const ad::Var& v) {
        return ad::sum(ad::mul(ad::upsample_nearest2(v), ad::Var::constant(sel8)));
    });
    check_gradient(x, [&](const ad::Var& v) { return ad::sum(ad::avgpool2(v)); });
    check_gradient(x, [&](const ad::Var& v) { return ad::sum(ad::crop(v, 1, 2, 3, 3)); });
    check_gradient(x, [&](const ad::Var& v) { return ad::sum(ad::pad_replicate(v, 1, 2, 0, 3)); });
    check_gradient(x, [&](const ad::Var& v) { return ad::sum(ad::resize_bilinear(v, 9, 5)); });
    check_gradient(x, [&](const ad::Var& v) { return ad::tv_mean_sq(v); });
    Tensor other = random_tensor({1, 6, 6}, 63, -1.0, 1.0);
    check_gradient(x, [&](const ad::Var& v) {
        return ad::sum(ad::concat_channels(v, ad::Var::constant(other)));
    });
    check_gradient(x, [&](const ad::Var& v) { return ad::mean(ad::flatten(v)); });
    // maxpool: unique block maxima so the subgradient is exact
    Tensor mp({1, 4, 4});
    for (std::int64_t i = 0; i < 16; ++i) mp[i] = static_cast<double>((i * 7) % 16) + 0.25 * i;
    check_gradient(mp, [&](const ad::Var& v) { return ad::sum(ad::maxpool2(v)); });
}

TEST_CASE("mask_channels gradient is exactly zero on masked pixels") {
    Tensor x = random_tensor({3, 4, 4}, 71, -1.0, 1.0);
    Tensor mask({4, 4});
    for (int y = 0; y < 4; ++y)
        for (int xx = 0; xx < 4; ++xx) mask.at(y, xx) = xx < 2 ? 0.0 : 1.0;

    ad::Var leaf = ad::Var::leaf(x, true);
    ad::Var out = ad::sum(ad::mask_channels(leaf, mask));
    ad::backward(out);
    for (int c = 0; c < 3; ++c)
        for (int y = 0; y < 4; ++y)
            for (int xx = 0; xx < 4; ++xx) CHECK(leaf.grad().at(c, y, xx) == (xx < 2 ? 0.0 : 1.0));

    check_gradient(x, [&](const ad::Var& v) { return ad::sum(ad::mask_channels(v, mask)); });
}

TEST_CASE("warp_perspective gradient") {
    Tensor x = random_tensor({2, 6, 6}, 81, 0.0, 1.0);
    std::array<std::array<double, 2>, 4> corners = {{{0, 0}, {5, 0}, {0, 5}, {5, 5}}};
    std::array<std::array<double, 2>, 4> displaced = {{{0.4, -0.3}, {5.2, 0.7}, {-0.6, 4.6}, {4.8, 5.3}}};
    auto hm = ad::homography_from_points(corners, displaced);
    check_gradient(x, [&](const ad::Var& v) { return ad::sum(ad::warp_perspective(v, hm)); });
}

TEST_CASE("homography solver agrees with an independent solver") {
    std::array<std::array<double, 2>, 4> src = {{{0, 0}, {7, 0}, {0, 7}, {7, 7}}};
    std::array<std::array<double, 2>, 4> dst = {{{0.5, 0.2}, {6.3, -0.4}, {0.8, 7.5}, {7.9, 6.6}}};
    auto hm = ad::homography_from_points(src, dst);

    std::vector<cv::Point2f> s, d;
    for (int i = 0; i < 4; ++i) {
        s.emplace_back(static_cast<float>(src[i][0]), static_cast<float>(src[i][1]));
        d.emplace_back(static_cast<float>(dst[i][0]), static_cast<float>(dst[i][1]));
    }
    cv::Mat ref = cv::getPerspectiveTransform(s, d);
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c)
            CHECK(hm[static_cast<size_t>(r * 3 + c)] ==
                  doctest::Approx(ref.at<double>(r, c) / ref.at<double>(2, 2)).epsilon(1e-5));

    // mapped points land on the targets
    for (int i = 0; i < 4; ++i) {
        double u = hm[0] * src[i][0] + hm[1] * src[i][1] + hm[2];
        double v = hm[3] * src[i][0] + hm[4] * src[i][1] + hm[5];
        double z = hm[6] * src[i][0] + hm[7] * src[i][1] + hm[8];
        CHECK(u / z == doctest::Approx(dst[i][0]).epsilon(1e-9));
        CHECK(v / z == doctest::Approx(dst[i][1]).epsilon(1e-9));
    }
}

TEST_CASE("backward reuses leaves across graphs without stale gradients") {
    Tensor x = random_tensor({4}, 91, -1.0, 1.0);
    ad::Var leaf = ad::Var::leaf(x, true);
    ad::Var g1 = ad::sum(ad::scale(leaf, 2.0));
    ad::backward(g1);
    Tensor first = leaf.grad();
    ad::Var g2 = ad::sum(ad::scale(leaf, 3.0));
    ad::backward(g2);
    for (int i = 0; i < 4; ++i) {
        CHECK(first[i] == 2.0);
        CHECK(leaf.grad()[i] == 3.0);  // re-zeroed, not accumulated to 5
    }
}

TEST_CASE("cosine similarity clamps into [-1,1] and rejects zero norms") {
    Tensor u({3}, {1.0, 0.0, 0.0});
    Tensor v({3}, {1.0, 0.0, 0.0});
    CHECK(ad::cosine_similarity(ad::Var::constant(u), ad::Var::constant(v)).scalar() == 1.0);
    Tensor z({3});
    CHECK_THROWS_AS((void)ad::cosine_similarity(ad::Var::constant(u), ad::Var::constant(z)), std::domain_error);
}
