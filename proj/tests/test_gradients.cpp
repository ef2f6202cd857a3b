#include <doctest.h>

#include <cmath>

#include "geo_helpers.hpp"
#include "oracles/finite_difference.hpp"
#include "urbancast/errors.hpp"
#include "urbancast/geotransformer/mlp.hpp"
#include "urbancast/geotransformer/training.hpp"

using namespace urbancast;

namespace {

struct GradientCheck {
    double max_relative = 0.0;
    double max_absolute = 0.0;
};

// Compares analytic gradients against central differences of either the
// 64-bit public forward pass or the extended-precision scalar oracle.
GradientCheck check_gradients(const AttentionConfig& cfg, unsigned seed, bool extended, double floor) {
    const ModelParams params = init_params(cfg, seed);
    const auto batch = testutil::random_examples(4, cfg, seed + 100);
    const auto analytic = oracle::flatten(gradients(params, batch, cfg).gradient);
    const auto numeric =
        extended ? oracle::central_differences(
                       params, [&](const ModelParams& p) { return oracle::batch_mse_extended(p, batch, cfg); })
                 : oracle::central_differences(
                       params, [&](const ModelParams& p) { return oracle::batch_mse(p, batch, cfg); });
    REQUIRE(analytic.size() == numeric.size());
    GradientCheck out;
    for (std::size_t i = 0; i < analytic.size(); ++i) {
        out.max_relative = std::max(out.max_relative, oracle::relative_error(analytic[i], numeric[i], floor));
        out.max_absolute = std::max(out.max_absolute, std::abs(analytic[i] - numeric[i]));
    }
    return out;
}

double max_gradient_error(const AttentionConfig& cfg, unsigned seed) {
    return check_gradients(cfg, seed, false, 1e-3).max_relative;
}

double max_gradient_error_extended(const AttentionConfig& cfg, unsigned seed) {
    return check_gradients(cfg, seed, true, 1e-9).max_relative;
}

}  // namespace

TEST_CASE("analytic gradients match central differences for every weighting mode") {
    for (Weighting w : {Weighting::full, Weighting::spatial_only, Weighting::entropy_only, Weighting::none,
                        Weighting::bypass}) {
        for (unsigned seed : {1u, 2u, 3u}) {
            CAPTURE(to_string(w));
            CAPTURE(seed);
            CHECK(max_gradient_error(testutil::tiny_config(w), seed) <= 1e-5);
        }
    }
}

TEST_CASE("gradients match extended-precision differences down to tiny components") {
    for (Weighting w : {Weighting::full, Weighting::bypass}) {
        for (unsigned seed : {1u, 2u, 3u}) CHECK(max_gradient_error_extended(testutil::tiny_config(w), seed) <= 1e-5);
    }
    auto renorm = testutil::tiny_config();
    renorm.renormalize = true;
    CHECK(max_gradient_error_extended(renorm, 4) <= 1e-5);
    auto pre_norm = testutil::tiny_config();
    pre_norm.block = BlockStyle::pre_norm_ffn;
    pre_norm.d_ff = 12;
    CHECK(max_gradient_error_extended(pre_norm, 7) <= 1e-5);
}

TEST_CASE("gradients stay exact with renormalized scores") {
    auto cfg = testutil::tiny_config();
    cfg.renormalize = true;
    for (unsigned seed : {4u, 5u, 6u}) CHECK(max_gradient_error(cfg, seed) <= 1e-5);
}

TEST_CASE("gradients stay exact in pre-norm blocks with a feed-forward layer") {
    auto cfg = testutil::tiny_config();
    cfg.block = BlockStyle::pre_norm_ffn;
    cfg.d_ff = 12;
    for (unsigned seed : {7u, 8u, 9u}) CHECK(max_gradient_error(cfg, seed) <= 1e-5);
}

TEST_CASE("gradients with unequal key and value widths") {
    auto cfg = testutil::tiny_config();
    cfg.d_k = 3;
    cfg.d_v = 5;
    CHECK(max_gradient_error(cfg, 10) <= 1e-5);
}

TEST_CASE("zero head at zero labels is stationary for the head bias") {
    const auto cfg = testutil::tiny_config();
    ModelParams params = init_params(cfg, 3);
    params.head_weights.setZero();
    params.head_bias = 0.0;
    auto batch = testutil::random_examples(3, cfg, 4);
    for (auto& ex : batch) ex.label = 0.0;
    const auto g = gradients(params, batch, cfg);
    CHECK(g.loss == 0.0);
    CHECK(g.gradient.head_bias == 0.0);
    CHECK(g.gradient.head_weights.isZero(0.0));
}

TEST_CASE("scaling the loss scales every gradient") {
    const auto cfg = testutil::tiny_config();
    const ModelParams params = init_params(cfg, 11);
    const auto batch = testutil::random_examples(5, cfg, 12);
    const auto one = oracle::flatten(gradients(params, batch, cfg, 1.0).gradient);
    const auto two = oracle::flatten(gradients(params, batch, cfg, 2.0).gradient);
    for (std::size_t i = 0; i < one.size(); ++i) CHECK(two[i] == doctest::Approx(2.0 * one[i]).epsilon(1e-13));
}

TEST_CASE("gradients reject an empty batch") {
    const auto cfg = testutil::tiny_config();
    CHECK_THROWS_AS(gradients(init_params(cfg, 1), {}, cfg), DimensionError);
}

TEST_CASE("MLP gradients match central differences") {
    for (std::vector<std::size_t> hidden : {std::vector<std::size_t>{6}, std::vector<std::size_t>{6, 4}}) {
        MlpConfig cfg{8, hidden};
        const MlpParams params = init_mlp(cfg, 21);
        std::mt19937_64 rng(22);
        std::normal_distribution<double> normal(0.0, 1.0);
        std::vector<MlpExample> batch;
        for (int i = 0; i < 6; ++i) {
            Vector x(8);
            for (auto& v : x) v = normal(rng);
            batch.push_back({x, normal(rng)});
        }
        const auto analytic = oracle::flatten(mlp_gradients(params, batch).gradient);
        const auto numeric =
            oracle::central_differences(params, [&](const MlpParams& p) { return oracle::batch_mse(p, batch); });
        for (std::size_t i = 0; i < analytic.size(); ++i) {
            CHECK(oracle::relative_error(analytic[i], numeric[i]) <= 1e-5);
        }
    }
}
