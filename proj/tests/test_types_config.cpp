#include "testutil.hpp"

#include "semstyle/config_io.hpp"

using namespace semstyle;

TEST_CASE("section 5.1 defaults validate cleanly") {
    CHECK(validate_config(TrainRunConfig::defaults(RunMode::SemanticAware)).empty());
    TrainRunConfig base = TrainRunConfig::defaults(RunMode::Baseline);
    CHECK(validate_config(base).empty());
    CHECK(base.thresholds.tau_back == 0.7);
    CHECK(base.thresholds.tau_portrait == 0.7);
}

TEST_CASE("validate_config reports each violation with the field name") {
    TrainRunConfig c = TrainRunConfig::defaults(RunMode::SemanticAware);
    c.iterations = 0;
    auto errs = validate_config(c);
    REQUIRE(errs.size() == 1);
    CHECK(errs[0] == "iterations must be positive");

    c = TrainRunConfig::defaults(RunMode::SemanticAware);
    c.sampler.portrait_quota = 100;
    c.sampler.n_patches = 64;
    errs = validate_config(c);
    REQUIRE(errs.size() == 1);
    CHECK(errs[0].find("portrait_quota") != std::string::npos);

    c = TrainRunConfig::defaults(RunMode::SemanticAware);
    c.thresholds.tau_portrait = 0.3;
    c.thresholds.tau_back = 0.6;
    errs = validate_config(c);
    REQUIRE(errs.size() == 1);
    CHECK(errs[0].find("tau_portrait") != std::string::npos);

    c = TrainRunConfig::defaults(RunMode::SemanticAware);
    c.penalties.alpha_portrait = 2.0;  // above alpha_back
    c.loss_weights.lambda_d = -1.0;
    c.distortion_degree = 1.5;
    errs = validate_config(c);
    CHECK(errs.size() == 3);
}

namespace {
TrainRunConfig random_valid_config(RandomSource& rng) {
    TrainRunConfig c = TrainRunConfig::defaults(rng.uniform() < 0.5 ? RunMode::Baseline : RunMode::SemanticAware);
    c.loss_weights.lambda_d = rng.uniform(0.0, 100.0);
    c.loss_weights.lambda_p = rng.uniform(0.0, 100.0);
    c.loss_weights.lambda_c = rng.uniform(0.0, 100.0);
    c.loss_weights.lambda_tv = rng.uniform(0.0, 1.0);
    c.thresholds.tau_back = rng.uniform(0.0, 1.0);
    c.thresholds.tau_portrait = rng.uniform(c.thresholds.tau_back, 2.0);
    c.penalties.alpha_portrait = rng.uniform(0.0, 1.0);
    c.penalties.alpha_back = rng.uniform(c.penalties.alpha_portrait, 2.0);
    c.sampler.n_patches = 1 + static_cast<int>(rng.uniform_int(64));
    c.sampler.patch_size = 1 + static_cast<int>(rng.uniform_int(128));
    c.sampler.portrait_quota = static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(c.sampler.n_patches) + 1));
    c.sampler.membership_region = 1 + static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(c.sampler.patch_size)));
    c.sampler.membership_threshold = rng.uniform();
    c.iterations = 1 + static_cast<int>(rng.uniform_int(500));
    c.initial_lr = rng.uniform(1e-6, 1e-1);
    c.lr_halving_period = 1 + static_cast<int>(rng.uniform_int(200));
    c.distortion_degree = rng.uniform();
    c.seed = static_cast<std::int64_t>(rng.uniform_int(1u << 30));
    c.contrast_factor = rng.uniform(0.1, 3.0);
    return c;
}
}  // namespace

TEST_CASE("every randomized in-invariant config is accepted, every mutation is caught") {
    RandomSource rng(2024);
    for (int trial = 0; trial < 200; ++trial) {
        TrainRunConfig c = random_valid_config(rng);
        CAPTURE(trial);
        CHECK(validate_config(c).empty());

        TrainRunConfig bad = c;
        switch (rng.uniform_int(6)) {
            case 0: bad.sampler.portrait_quota = bad.sampler.n_patches + 1; break;
            case 1: bad.sampler.membership_region = bad.sampler.patch_size + 1; break;
            case 2: bad.thresholds.tau_back = bad.thresholds.tau_portrait + 0.1; break;
            case 3: bad.iterations = -static_cast<int>(rng.uniform_int(10)); break;
            case 4: bad.initial_lr = 0.0; break;
            default: bad.penalties.alpha_portrait = bad.penalties.alpha_back + 0.5; break;
        }
        if (bad.thresholds.tau_back > 2.0) bad.thresholds.tau_back = 2.0;  // keep exactly one violation class
        CHECK(!validate_config(bad).empty());
    }
}

TEST_CASE("config text round trip preserves every field") {
    TrainRunConfig c = TrainRunConfig::defaults(RunMode::SemanticAware);
    c.seed = 1234;
    c.iterations = 77;
    c.initial_lr = 3.25e-4;
    c.sampler.patch_size = 96;
    c.thresholds.tau_portrait = 1.1;
    c.penalties.alpha_portrait = 0.125;

    TrainRunConfig parsed = parse_config_text(config_to_text(c), TrainRunConfig::defaults(RunMode::Baseline));
    CHECK(parsed.mode == c.mode);
    CHECK(parsed.seed == c.seed);
    CHECK(parsed.iterations == c.iterations);
    CHECK(parsed.initial_lr == c.initial_lr);
    CHECK(parsed.sampler.patch_size == c.sampler.patch_size);
    CHECK(parsed.thresholds.tau_portrait == c.thresholds.tau_portrait);
    CHECK(parsed.penalties.alpha_portrait == c.penalties.alpha_portrait);
    CHECK(config_to_text(parsed) == config_to_text(c));
}

TEST_CASE("config parser rejects unknown keys and malformed lines") {
    TrainRunConfig base = TrainRunConfig::defaults(RunMode::Baseline);
    CHECK_THROWS_WITH_AS(parse_config_text("sampler.unknown = 3\n", base),
                         doctest::Contains("unknown key"), std::invalid_argument);
    CHECK_THROWS_AS(parse_config_text("iterations 400\n", base), std::invalid_argument);
    CHECK_THROWS_AS(parse_config_text("iterations = abc\n", base), std::invalid_argument);
    // comments and blanks are fine
    TrainRunConfig c = parse_config_text("# comment\n\niterations = 12\n", base);
    CHECK(c.iterations == 12);
}

TEST_CASE("image tensor validates shape and range helpers work") {
    CHECK_THROWS_AS(ImageTensor(4, 4, Tensor({3, 4, 5})), std::invalid_argument);
    ImageTensor ok = testutil::constant_image(2, 2, 0.5);
    CHECK(ok.in_unit_range());
    ok.at(0, 0, 0) = 1.5;
    CHECK(!ok.in_unit_range());
}
