#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>

#include "geo_helpers.hpp"
#include "helpers.hpp"
#include "oracles/finite_difference.hpp"
#include "urbancast/errors.hpp"
#include "urbancast/geotransformer/checkpoint.hpp"
#include "urbancast/geotransformer/mlp.hpp"
#include "urbancast/geotransformer/training.hpp"

using namespace urbancast;

namespace {

// Labels are a fixed linear function of the target embedding.
std::vector<Example> planted_linear(std::size_t count, const AttentionConfig& cfg, unsigned seed) {
    auto data = testutil::random_examples(count, cfg, seed);
    std::mt19937_64 rng(seed + 1);
    std::normal_distribution<double> normal(0.0, 1.0);
    Vector w(static_cast<Eigen::Index>(cfg.d_model));
    for (auto& x : w) x = normal(rng);
    for (auto& ex : data) ex.label = 3.0 + w.dot(ex.geo.value_embeddings.row(0).transpose());
    return data;
}

bool same_params(const ModelParams& a, const ModelParams& b) {
    const auto fa = oracle::flatten(a);
    const auto fb = oracle::flatten(b);
    return fa == fb;
}

}  // namespace

TEST_CASE("mse_loss examples") {
    const std::vector<double> a{1, 2, 3};
    CHECK(mse_loss(a, a) == 0.0);
    CHECK(mse_loss(std::vector<double>{0, 0}, std::vector<double>{1, 1}) == 1.0);
    CHECK(mse_loss(a, std::vector<double>{2, 2, 2}) == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
    CHECK_THROWS_AS(mse_loss({}, {}), DimensionError);
    CHECK_THROWS_AS(mse_loss(a, std::vector<double>{1}), DimensionError);
}

TEST_CASE("label scaler") {
    const std::vector<double> y{2, 4, 6, 8};
    const LabelScaler s = LabelScaler::fit(y);
    CHECK(s.mean == 5.0);
    CHECK(s.scale == doctest::Approx(std::sqrt(5.0)));
    CHECK(s.invert(s.apply(7.25)) == doctest::Approx(7.25).epsilon(1e-15));
    const LabelScaler flat = LabelScaler::fit(std::vector<double>{3, 3});
    CHECK(flat.scale == 1.0);
}

TEST_CASE("zero learning rate leaves parameters unchanged") {
    const auto cfg = testutil::tiny_config();
    const auto data = planted_linear(20, cfg, 1);
    TrainConfig tc;
    tc.epochs = 1;
    tc.learning_rate = 0.0;
    tc.batch_size = 7;
    const ModelParams init = init_params(cfg, 3);
    for (Optimizer o : {Optimizer::adam, Optimizer::sgd}) {
        tc.optimizer = o;
        const TrainedModel m = train(init, data, tc, cfg);
        CHECK(same_params(m.params, init));
        CHECK(m.history.size() == 1);
    }
}

TEST_CASE("training is deterministic for a seed") {
    const auto cfg = testutil::tiny_config();
    const auto data = planted_linear(30, cfg, 2);
    TrainConfig tc;
    tc.epochs = 5;
    tc.batch_size = 8;
    tc.seed = 42;
    const TrainedModel a = train(data, tc, cfg);
    const TrainedModel b = train(data, tc, cfg);
    CHECK(a.history == b.history);
    CHECK(same_params(a.params, b.params));
    tc.seed = 43;
    CHECK(train(data, tc, cfg).history != a.history);
}

TEST_CASE("planted linear data: loss falls every epoch for the first ten") {
    const auto cfg = testutil::tiny_config();
    const auto data = planted_linear(64, cfg, 3);
    TrainConfig tc;
    tc.epochs = 10;
    const TrainedModel m = train(data, tc, cfg);
    REQUIRE(m.history.size() == 10);
    for (std::size_t e = 1; e < m.history.size(); ++e) {
        CAPTURE(e);
        CHECK(m.history[e] < m.history[e - 1]);
    }
}

TEST_CASE("longer training fits planted linear data") {
    const auto cfg = testutil::tiny_config();
    const auto data = planted_linear(64, cfg, 4);
    TrainConfig tc;
    tc.epochs = 300;
    tc.learning_rate = 1e-2;
    tc.batch_size = 16;
    const TrainedModel m = train(data, tc, cfg);
    CHECK(m.history.back() < 0.05 * m.history.front());
    const auto pred = predict_batch(m.params, m.scaler, data, cfg);
    std::vector<double> labels;
    for (const auto& ex : data) labels.push_back(ex.label);
    const double var = [&] {
        double mean = 0;
        for (double y : labels) mean += y;
        mean /= static_cast<double>(labels.size());
        double v = 0;
        for (double y : labels) v += (y - mean) * (y - mean);
        return v / static_cast<double>(labels.size());
    }();
    CHECK(mse_loss(pred, labels) < 0.05 * var);
}

TEST_CASE("divergence reports the epoch") {
    const auto cfg = testutil::tiny_config();
    auto data = planted_linear(10, cfg, 5);
    data[3].label = NAN;
    TrainConfig tc;
    tc.epochs = 3;
    tc.standardize_labels = false;
    try {
        train(data, tc, cfg);
        FAIL("expected divergence");
    } catch (const DivergenceError& e) {
        CHECK(e.where() == 0);
    }
}

TEST_CASE("train config validation") {
    const auto cfg = testutil::tiny_config();
    const auto data = planted_linear(4, cfg, 6);
    TrainConfig tc;
    tc.epochs = 0;
    CHECK_THROWS_AS(train(data, tc, cfg), InputError);
    tc.epochs = 1;
    tc.learning_rate = -1;
    CHECK_THROWS_AS(train(data, tc, cfg), InputError);
    tc.learning_rate = 1e-3;
    CHECK_THROWS_AS(train(std::span<const Example>{}, tc, cfg), DimensionError);
    CHECK(optimizer_from_string("sgd") == Optimizer::sgd);
    CHECK_THROWS_AS(optimizer_from_string("rmsprop"), InputError);
}

TEST_CASE("predict_batch") {
    const auto cfg = testutil::tiny_config();
    const auto data = planted_linear(12, cfg, 7);
    const ModelParams p = init_params(cfg, 8);
    const LabelScaler s{1.5, 2.0};
    CHECK(predict_batch(p, s, {}, cfg).empty());
    const auto one = predict_batch(p, s, std::span<const Example>(data).first(1), cfg);
    REQUIRE(one.size() == 1);
    CHECK(one[0] == s.invert(forward(p, data[0].geo, cfg)));

    const auto all = predict_batch(p, s, data, cfg);
    auto reversed = data;
    std::reverse(reversed.begin(), reversed.end());
    auto back = predict_batch(p, s, reversed, cfg);
    std::reverse(back.begin(), back.end());
    CHECK(all == back);
}

TEST_CASE("MLP forward") {
    MlpConfig cfg{3, {2}};
    MlpParams p = zero_mlp(cfg);
    p.output_bias = 1.25;
    CHECK(mlp_forward(p, Vector::Ones(3)) == 1.25);

    // h = relu([1,2,-3] . I-like), y = [1, 1] . h + 0.5
    p.hidden[0].weights << 1, 0, 0, 1, 0, 0;
    p.hidden[0].bias << 0, -1;
    p.output_weights << 1, 1;
    p.output_bias = 0.5;
    Vector x(3);
    x << 1, 2, -3;
    CHECK(mlp_forward(p, x) == 1.0 + 1.0 + 0.5);

    x << -4, -2, 9;
    CHECK(mlp_forward(p, x) == 0.5);

    const std::vector<float> f{1.0f, 2.0f, -3.0f};
    CHECK(mlp_forward(p, f) == 2.5);
    CHECK_THROWS_AS(mlp_forward(p, Vector::Ones(2)), DimensionError);
    CHECK_THROWS_AS(zero_mlp(MlpConfig{3, {}}), InputError);
    CHECK_THROWS_AS(zero_mlp(MlpConfig{3, {2, 2, 2}}), InputError);
}

TEST_CASE("MLP trains on planted linear data") {
    std::mt19937_64 rng(9);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<MlpExample> data;
    for (int i = 0; i < 64; ++i) {
        Vector x(8);
        for (auto& v : x) v = normal(rng);
        data.push_back({x, 2.0 * x(0) - x(3) + 0.5});
    }
    TrainConfig tc;
    tc.epochs = 200;
    tc.learning_rate = 1e-2;
    tc.batch_size = 16;
    const TrainedMlp m = train_mlp(data, tc, MlpConfig{8, {16}});
    CHECK(m.history.back() < 0.1 * m.history.front());
    CHECK(m.history == train_mlp(data, tc, MlpConfig{8, {16}}).history);
    CHECK(predict_mlp(m.params, m.scaler, data).size() == data.size());
}

TEST_CASE("checkpoint round trip is exact") {
    const auto dir = testutil::scratch_dir("checkpoint");
    for (BlockStyle block : {BlockStyle::residual, BlockStyle::pre_norm_ffn}) {
        auto cfg = testutil::tiny_config(Weighting::entropy_only);
        cfg.block = block;
        cfg.renormalize = block == BlockStyle::pre_norm_ffn;
        cfg.alpha = 0.1 + 0.2;
        const Checkpoint ck{cfg, init_params(cfg, 17), LabelScaler{-3.25, 0.1}};
        const auto path = dir / (std::string(to_string(block)) + ".bin");
        save_checkpoint(path, ck);
        const Checkpoint back = load_checkpoint(path, cfg);
        CHECK(same_params(back.params, ck.params));
        CHECK(back.scaler.mean == ck.scaler.mean);
        CHECK(back.scaler.scale == ck.scaler.scale);
        CHECK(back.config.alpha == cfg.alpha);
        CHECK(back.config.weighting == cfg.weighting);
        CHECK(back.config.block == block);
        CHECK(back.config.renormalize == cfg.renormalize);

        // Saving the loaded checkpoint reproduces the file byte for byte.
        const auto again = dir / "again.bin";
        save_checkpoint(again, back);
        std::ifstream a(path, std::ios::binary), b(again, std::ios::binary);
        const std::string sa((std::istreambuf_iterator<char>(a)), {});
        const std::string sb((std::istreambuf_iterator<char>(b)), {});
        CHECK(sa == sb);
        CHECK(sa.substr(0, 4) == "UCGT");
        CHECK(sa.size() == 4 + 4 + 6 * 4 + 8 + 4 * 4 + 8 + 8 * parameter_count(ck.params) + 16);
    }
}

TEST_CASE("checkpoint header is validated") {
    const auto dir = testutil::scratch_dir("checkpoint_bad");
    const auto cfg = testutil::tiny_config();
    const auto path = dir / "model.bin";
    save_checkpoint(path, Checkpoint{cfg, init_params(cfg, 1), {}});

    auto other = cfg;
    other.heads = 4;
    CHECK_THROWS_AS(load_checkpoint(path, other), CheckpointError);
    other = cfg;
    other.weighting = Weighting::none;
    CHECK_THROWS_AS(load_checkpoint(path, other), CheckpointError);
    other = cfg;
    other.alpha = 0.5;
    CHECK_THROWS_AS(load_checkpoint(path, other), CheckpointError);

    std::string bytes;
    {
        std::ifstream in(path, std::ios::binary);
        bytes.assign((std::istreambuf_iterator<char>(in)), {});
    }
    auto write = [&](const std::string& s) {
        std::ofstream out(path, std::ios::binary | std::ios::trunc);
        out << s;
    };
    std::string bad = bytes;
    bad[0] = 'X';
    write(bad);
    CHECK_THROWS_AS(load_checkpoint(path), CheckpointError);
    bad = bytes;
    bad[4] = 9;
    write(bad);
    CHECK_THROWS_AS(load_checkpoint(path), CheckpointError);
    write(bytes.substr(0, bytes.size() - 3));
    CHECK_THROWS_AS(load_checkpoint(path), CheckpointError);
    write(bytes + "x");
    CHECK_THROWS_AS(load_checkpoint(path), CheckpointError);
    CHECK_THROWS_AS(load_checkpoint(dir / "missing.bin"), IoError);
    CHECK_THROWS_AS(save_checkpoint(dir / "no" / "such" / "dir.bin", Checkpoint{cfg, init_params(cfg, 1), {}}),
                    IoError);
}
