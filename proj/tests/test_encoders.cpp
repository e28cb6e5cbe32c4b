#include "testutil.hpp"

#include <cmath>
#include <fstream>

#include "semstyle/encoders.hpp"

using namespace semstyle;
using testutil::random_image;

namespace {

double norm_of(const Tensor& v) {
    double s = 0;
    for (std::int64_t i = 0; i < v.numel(); ++i) s += v[i] * v[i];
    return std::sqrt(s);
}

/// Independent re-derivation of the documented mock text formula.
Tensor mock_text_reference(int dim, std::uint64_t seed, const std::string& text) {
    RandomSource rng(RandomSource::splitmix64(seed ^ fnv1a64(text)));
    Tensor v({dim});
    for (int i = 0; i < dim; ++i) v[i] = rng.normal();
    return v;
}

/// Independent re-derivation of the documented ensembling rule:
/// normalize each filled-template embedding, average, renormalize.
Tensor ensemble_reference(int dim, std::uint64_t seed, const std::string& text, const PromptTemplateSet& set) {
    Tensor acc({dim});
    for (size_t t = 0; t < set.size(); ++t) {
        Tensor e = mock_text_reference(dim, seed, set.fill(t, text));
        double n = norm_of(e);
        for (int i = 0; i < dim; ++i) acc[i] += e[i] / n;
    }
    for (int i = 0; i < dim; ++i) acc[i] /= static_cast<double>(set.size());
    double n = norm_of(acc);
    for (int i = 0; i < dim; ++i) acc[i] /= n;
    return acc;
}

struct FixedTextEncoder final : ITextEncoder {
    // returns +v for strings containing "plus", -v otherwise
    int dim() const override { return 3; }
    Tensor encode_text(const std::string& text) const override {
        Tensor v({3}, {1.0, 2.0, 3.0});
        if (text.find("plus") == std::string::npos)
            for (int i = 0; i < 3; ++i) v[i] = -v[i];
        return v;
    }
    std::string describe() const override { return "fixed"; }
};

}  // namespace

TEST_CASE("mock encoders are deterministic and seed-sensitive") {
    MockTextEncoder text(32, 7);
    Tensor a = text.encode_text("oil painting");
    Tensor b = text.encode_text("oil painting");
    for (int i = 0; i < 32; ++i) CHECK(a[i] == b[i]);
    Tensor c = text.encode_text("watercolor");
    bool differs = false;
    for (int i = 0; i < 32; ++i) differs |= a[i] != c[i];
    CHECK(differs);

    MockImageEncoder img(16, 7);
    ImageTensor im = random_image(8, 8, 99);
    Tensor e1 = img.encode(ad::Var::constant(im.data)).value();
    Tensor e2 = img.encode(ad::Var::constant(im.data)).value();
    for (int i = 0; i < 16; ++i) CHECK(e1[i] == e2[i]);
}

TEST_CASE("ensembled embedding matches the independent recomputation and has unit norm") {
    const int dim = 24;
    const std::uint64_t seed = 5;
    MockTextEncoder enc(dim, seed);
    PromptTemplateSet set;
    set.templates = {"a photo of a {}.", "a painting in the style of {}.", "{} texture.", "artwork of {}."};

    Tensor got = encode_text_ensembled(enc, "oil painting", set);
    Tensor want = ensemble_reference(dim, seed, "oil painting", set);
    REQUIRE(got.numel() == want.numel());
    for (int i = 0; i < dim; ++i) CHECK(got[i] == doctest::Approx(want[i]).epsilon(1e-12));
    CHECK(norm_of(got) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("single-template ensembling is just the normalized encoder output") {
    MockTextEncoder enc(16, 3);
    PromptTemplateSet one;
    one.templates = {"{} style"};
    Tensor got = encode_text_ensembled(enc, "mosaic", one);
    Tensor raw = enc.encode_text("mosaic style");
    double n = norm_of(raw);
    for (int i = 0; i < 16; ++i) CHECK(got[i] == doctest::Approx(raw[i] / n).epsilon(1e-12));
}

TEST_CASE("cancelling template embeddings raise the degenerate-ensemble error") {
    FixedTextEncoder enc;
    PromptTemplateSet two;
    two.templates = {"plus {}", "minus {}"};
    CHECK_THROWS_WITH_AS((void)encode_text_ensembled(enc, "x", two), doctest::Contains("degenerate ensemble"),
                         std::runtime_error);
}

TEST_CASE("ensembling input validation") {
    MockTextEncoder enc(8, 1);
    PromptTemplateSet empty;
    CHECK_THROWS_AS((void)encode_text_ensembled(enc, "x", empty), std::invalid_argument);
    CHECK_THROWS_AS((void)encode_text_ensembled(enc, "", PromptTemplateSet::identity()), std::invalid_argument);
}

TEST_CASE("text_direction subtracts the two ensembles and is antisymmetric") {
    MockTextEncoder enc(24, 11);
    PromptTemplateSet set;
    set.templates = {"a photo of a {}.", "{} art."};
    TextCondition cond{"Starry Night by Vincent van Gogh", "a Photo"};

    Tensor d = text_direction(enc, cond, set);
    Tensor sty = encode_text_ensembled(enc, cond.style_text, set);
    Tensor src = encode_text_ensembled(enc, cond.source_text, set);
    for (int i = 0; i < 24; ++i) CHECK(d[i] == doctest::Approx(sty[i] - src[i]).epsilon(1e-12));

    Tensor rev = text_direction(enc, TextCondition{cond.source_text, cond.style_text}, set);
    for (int i = 0; i < 24; ++i) CHECK(rev[i] == -d[i]);

    CHECK_THROWS_WITH_AS((void)text_direction(enc, TextCondition{"same", "same"}, set),
                         doctest::Contains("zero text direction"), std::runtime_error);
}

TEST_CASE("mock image embedding of a constant image equals the projected constant") {
    const int dim = 12;
    MockImageEncoder enc(dim, 4);
    double c = 0.35;
    ImageTensor img = testutil::constant_image(4, 4, c);
    auto emb = encode_image_differentiable(enc, img);

    // bilinear resize of a constant image is that constant; the embedding is
    // W * (c * ones), evaluated here from the documented weight matrix
    const Tensor& w = enc.projection();
    for (int dcomp = 0; dcomp < dim; ++dcomp) {
        double s = 0;
        for (int k = 0; k < 768; ++k) s += w.at(dcomp, k) * c;
        CHECK(emb.embedding.value()[dcomp] == doctest::Approx(s).epsilon(1e-9));
    }
}

TEST_CASE("mock image encoder input gradient matches finite differences") {
    MockImageEncoder enc(6, 9);
    Tensor probe = testutil::random_tensor({6}, 123, -1.0, 1.0);
    Tensor img = testutil::random_tensor({3, 8, 8}, 77, 0.0, 1.0);
    testutil::check_gradient(img, [&](const ad::Var& v) {
        return ad::dot(enc.encode(v), ad::Var::constant(probe));
    });
}

TEST_CASE("mock feature extractor: maps, determinism, hand evaluation") {
    MockFeatureExtractor fx;
    ImageTensor img = random_image(4, 4, 31);
    auto a = extract_content_features(fx, img);
    auto b = extract_content_features(fx, img);
    REQUIRE(a.maps.size() == 2);
    CHECK(a.maps[0].first == "raw");
    CHECK(a.maps[1].first == "half");
    for (int i = 0; i < 2; ++i)
        for (std::int64_t k = 0; k < a.maps[i].second.value().numel(); ++k)
            CHECK(a.maps[i].second.value()[k] == b.maps[i].second.value()[k]);

    // hand evaluation: raw is the image, half is the 2x2 block mean
    for (std::int64_t k = 0; k < img.data.numel(); ++k) CHECK(a.maps[0].second.value()[k] == img.data[k]);
    for (int c = 0; c < 3; ++c)
        for (int y = 0; y < 2; ++y)
            for (int x = 0; x < 2; ++x) {
                double m = 0.25 * (img.at(c, 2 * y, 2 * x) + img.at(c, 2 * y, 2 * x + 1) +
                                   img.at(c, 2 * y + 1, 2 * x) + img.at(c, 2 * y + 1, 2 * x + 1));
                CHECK(a.maps[1].second.value().at(c, y, x) == doctest::Approx(m).epsilon(1e-15));
            }

    // feature maps have positive extent on a 64x64 input
    auto big = extract_content_features(fx, random_image(64, 64, 5));
    CHECK(big.maps[0].second.value().dim(1) == 64);
    CHECK(big.maps[1].second.value().dim(1) == 32);

    // too-small input
    ImageTensor tiny(1, 1);
    CHECK_THROWS_AS((void)extract_content_features(fx, tiny), std::invalid_argument);
}

TEST_CASE("mock feature extractor input gradient matches finite differences") {
    MockFeatureExtractor fx;
    Tensor img = testutil::random_tensor({3, 8, 8}, 78, 0.0, 1.0);
    testutil::check_gradient(img, [&](const ad::Var& v) {
        auto maps = fx.extract(v);
        return ad::add(ad::mean(maps[0].second), ad::mean(maps[1].second));
    });
}

TEST_CASE("encode_image_differentiable rejects non-finite pixels") {
    MockImageEncoder enc(8, 2);
    ImageTensor img = testutil::constant_image(4, 4, 0.5);
    img.at(1, 2, 3) = std::nan("");
    CHECK_THROWS_AS((void)encode_image_differentiable(enc, img), std::invalid_argument);
}

TEST_CASE("the shipped template file has 79 single-slot templates") {
    PromptTemplateSet set = PromptTemplateSet::load(std::string(SEMSTYLE_ASSET_DIR) + "/prompt_templates.txt");
    CHECK(set.size() == 79);
    for (const std::string& t : set.templates) {
        size_t slot = t.find("{}");
        CHECK(slot != std::string::npos);
        CHECK(t.find("{}", slot + 1) == std::string::npos);
    }
}
