#include <doctest.h>

#include <cmath>
#include <random>

#include "geo_helpers.hpp"
#include "helpers.hpp"
#include "oracles/attention_oracle.hpp"
#include "oracles/entropy_oracle.hpp"
#include "urbancast/errors.hpp"
#include "urbancast/geotransformer/attention.hpp"
#include "urbancast/geotransformer/weights.hpp"
#include "urbancast/region_store/entropy.hpp"

using namespace urbancast;

namespace {

Vector vec(std::initializer_list<double> xs) {
    Vector v(static_cast<Eigen::Index>(xs.size()));
    Eigen::Index i = 0;
    for (double x : xs) v(i++) = x;
    return v;
}

Matrix random_matrix(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng) {
    std::normal_distribution<double> normal(0.0, 1.0);
    Matrix m(rows, cols);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = normal(rng);
    return m;
}

double oracle_forward(const ModelParams& p, const GeoContext& geo, const AttentionConfig& cfg,
                      bool use_prior = true) {
    return oracle::forward(p, oracle::to_vec(geo.distances), oracle::to_vec(geo.entropies),
                           oracle::to_mat(geo.value_embeddings), cfg, use_prior);
}

}  // namespace

TEST_CASE("spatial weights by substitution") {
    CHECK(spatial_weights(vec({0, 50, 100})) == vec({1.0, 0.5, 0.0}));
    CHECK(spatial_weights(vec({0, 25, 100})) == vec({1.0, 0.75, 0.0}));
    CHECK(spatial_weights(vec({0, 0, 0})) == vec({1, 1, 1}));
    CHECK(spatial_weights(vec({0, 1e-13})) == vec({1, 1}));
    CHECK_THROWS_AS(spatial_weights(vec({0, -1})), InputError);
    CHECK_THROWS_AS(spatial_weights(vec({0, NAN})), InputError);
    CHECK(spatial_weights(Vector()).size() == 0);
}

TEST_CASE("entropy weights by substitution") {
    const double l4 = std::log(4.0);
    CHECK(entropy_weights(vec({l4, l4, l4})) == vec({1, 1, 1}));
    CHECK(entropy_weights(vec({1.0, 0.5})) == vec({1.0, 0.5}));
    CHECK(entropy_weights(vec({0, 0})) == vec({1, 1}));
    CHECK_THROWS_AS(entropy_weights(vec({0.5, -0.1})), InputError);
}

TEST_CASE("a near one-hot slot gets a near-zero entropy weight") {
    std::vector<long double> spike(8, 0.0L);
    spike[0] = 30.0L;
    const std::vector<long double> flat(8, 0.0L);
    const double h_spike = static_cast<double>(oracle::softmax_entropy(spike));
    const double h_flat = static_cast<double>(oracle::softmax_entropy(flat));
    const Vector w = entropy_weights(vec({h_spike, h_flat, h_flat}));
    CHECK(w(0) < 1e-10);
    CHECK(w(1) == 1.0);
    CHECK(w(2) == 1.0);
}

TEST_CASE("combined weights") {
    const Vector ws = vec({1, 0.2, 0.7});
    const Vector we = vec({0.3, 0.9, 0.1});
    CHECK(combined_weights(ws, we, 1.0) == ws);
    CHECK(combined_weights(ws, we, 0.0) == we);
    CHECK(combined_weights(vec({1, 0}), vec({0, 1}), 0.5) == vec({0.5, 0.5}));
    CHECK_THROWS_AS(combined_weights(ws, vec({1}), 0.5), DimensionError);
    CHECK_THROWS_AS(combined_weights(ws, we, 1.5), InputError);

    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int t = 0; t < 1000; ++t) {
        Vector a(6), b(6);
        for (int i = 0; i < 6; ++i) {
            a(i) = u(rng);
            b(i) = u(rng);
        }
        a(t % 6) = 1.0;
        b((t + 1) % 6) = 1.0;
        const Vector c = combined_weights(a, b, u(rng));
        CHECK(c.minCoeff() >= 0.0);
        CHECK(c.maxCoeff() <= 1.0);
    }
}

TEST_CASE("geo_attention with equal logits averages the values") {
    std::mt19937_64 rng(1);
    const Matrix values = random_matrix(4, 3, rng);
    const Matrix keys = Matrix::Ones(4, 2);
    const Vector out = geo_attention(Vector::Zero(2), keys, values, Vector::Ones(4));
    const Vector mean = values.colwise().mean().transpose();
    CHECK((out - mean).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("geo_attention hand example does not renormalise") {
    Matrix values(2, 2);
    values << 1, 0, 0, 1;
    const Vector out = geo_attention(Vector::Zero(2), Matrix::Zero(2, 2), values, vec({1, 0}));
    CHECK(out == vec({0.5, 0.0}));
}

TEST_CASE("geo_attention matches the scalar oracle") {
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int t = 0; t < 20; ++t) {
        const Vector q = random_matrix(3, 1, rng);
        const Matrix keys = random_matrix(4, 3, rng);
        const Matrix values = random_matrix(4, 5, rng);
        Vector w(4);
        for (int j = 0; j < 4; ++j) w(j) = u(rng);
        const Vector got = geo_attention(q, keys, values, w);
        const auto ow = oracle::to_vec(w);
        const auto want = oracle::attention_head(oracle::to_vec(q), oracle::to_mat(keys), oracle::to_mat(values), &ow);
        for (int c = 0; c < 5; ++c) CHECK(std::abs(got(c) - want[static_cast<std::size_t>(c)]) <= 1e-12);
    }
}

TEST_CASE("geo_attention rejects bad shapes and values") {
    const Matrix keys = Matrix::Zero(3, 2);
    const Matrix values = Matrix::Zero(3, 4);
    CHECK_THROWS_AS(geo_attention(Vector::Zero(3), keys, values, Vector::Ones(3)), DimensionError);
    CHECK_THROWS_AS(geo_attention(Vector::Zero(2), keys, Matrix::Zero(2, 4), Vector::Ones(3)), DimensionError);
    CHECK_THROWS_AS(geo_attention(Vector::Zero(2), keys, values, Vector::Ones(2)), DimensionError);
    CHECK_THROWS_AS(geo_attention(vec({NAN, 0}), keys, values, Vector::Ones(3)), InputError);
}

TEST_CASE("one head with an identity output projection is a single geo_attention") {
    AttentionConfig cfg;
    cfg.d_model = 4;
    cfg.heads = 1;
    cfg.layers = 1;
    cfg.context_slots = 3;
    std::mt19937_64 rng(3);
    const GeoContext geo = testutil::random_geo(3, 4, rng);
    LayerParams p = init_params(cfg, 9).layers[0];
    p.output = Matrix::Identity(4, 4);
    const Vector s = random_matrix(4, 1, rng);

    const Vector got = multi_head_layer(s, geo, p, cfg);
    const Vector q = p.query[0].transpose() * s;
    const Matrix keys = p.key_base * p.key[0];
    const Matrix vals = geo.value_embeddings * p.value[0];
    const Vector want = geo_attention(q, keys, vals, slot_weights(geo, cfg));
    CHECK((got - want).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("multi_head_layer matches per-head oracle, with and without the prior") {
    for (Weighting w : {Weighting::full, Weighting::spatial_only, Weighting::entropy_only, Weighting::bypass}) {
        auto cfg = testutil::tiny_config(w);
        std::mt19937_64 rng(4);
        const GeoContext geo = testutil::random_geo(cfg.context_slots, cfg.d_model, rng);
        const LayerParams p = init_params(cfg, 12).layers[0];
        const Vector s = random_matrix(static_cast<Eigen::Index>(cfg.d_model), 1, rng);
        const Vector got = multi_head_layer(s, geo, p, cfg);
        const auto prior =
            oracle::prior(oracle::to_vec(geo.distances), oracle::to_vec(geo.entropies), cfg.weighting, cfg.alpha);
        const auto want = oracle::multi_head(oracle::to_vec(s), oracle::to_mat(geo.value_embeddings), p,
                                             w == Weighting::bypass ? nullptr : &prior, false);
        for (std::size_t i = 0; i < want.size(); ++i) {
            CHECK(std::abs(got(static_cast<Eigen::Index>(i)) - want[i]) <= 1e-12);
        }
    }
}

TEST_CASE("forward with zero projections is the linear head on the target") {
    AttentionConfig cfg;
    cfg.d_model = 6;
    cfg.heads = 1;
    cfg.layers = 1;
    cfg.context_slots = 4;
    ModelParams p = zero_params(cfg);
    std::mt19937_64 rng(6);
    p.head_weights = random_matrix(6, 1, rng);
    p.head_bias = 0.75;
    const GeoContext geo = testutil::random_geo(4, 6, rng);
    const Vector z = geo.value_embeddings.row(0).transpose();
    CHECK(forward(p, geo, cfg) == doctest::Approx(p.head_weights.dot(z) + 0.75).epsilon(1e-15));
}

TEST_CASE("alpha is unused without weighting") {
    auto cfg = testutil::tiny_config(Weighting::none);
    const ModelParams p = init_params(cfg, 1);
    std::mt19937_64 rng(7);
    const GeoContext geo = testutil::random_geo(cfg.context_slots, cfg.d_model, rng);
    const double a = forward(p, geo, cfg);
    cfg.alpha *= 2.0;
    CHECK(forward(p, geo, cfg) == a);
}

TEST_CASE("forward matches the straight-line oracle in every configuration") {
    std::mt19937_64 rng(8);
    for (Weighting w : {Weighting::full, Weighting::spatial_only, Weighting::entropy_only, Weighting::none,
                        Weighting::bypass}) {
        for (bool renorm : {false, true}) {
            for (BlockStyle block : {BlockStyle::residual, BlockStyle::pre_norm_ffn}) {
                auto cfg = testutil::tiny_config(w);
                cfg.renormalize = renorm;
                cfg.block = block;
                for (unsigned seed = 0; seed < 4; ++seed) {
                    const ModelParams p = init_params(cfg, seed);
                    const GeoContext geo = testutil::random_geo(cfg.context_slots, cfg.d_model, rng);
                    CHECK(std::abs(forward(p, geo, cfg) - oracle_forward(p, geo, cfg)) <= 1e-10);
                }
            }
        }
    }
}

TEST_CASE("bypass reduces the forward pass to plain cross-attention") {
    std::mt19937_64 rng(9);
    for (unsigned t = 0; t < 100; ++t) {
        auto cfg = testutil::tiny_config(Weighting::bypass);
        const ModelParams p = init_params(cfg, t);
        const GeoContext geo = testutil::random_geo(cfg.context_slots, cfg.d_model, rng);
        CHECK(std::abs(forward(p, geo, cfg) - oracle_forward(p, geo, cfg, false)) <= 1e-12);
        cfg.weighting = Weighting::none;
        CHECK(std::abs(forward(p, geo, cfg) - oracle_forward(p, geo, cfg, false)) <= 1e-12);
    }
}

TEST_CASE("softmax scores sum to one in every head and layer") {
    for (BlockStyle block : {BlockStyle::residual, BlockStyle::pre_norm_ffn}) {
        auto cfg = testutil::tiny_config();
        cfg.block = block;
        cfg.layers = 3;
        std::mt19937_64 rng(10);
        const GeoContext geo = testutil::random_geo(cfg.context_slots, cfg.d_model, rng);
        ForwardTrace trace;
        forward(init_params(cfg, 2), geo, cfg, &trace);
        REQUIRE(trace.layers.size() == 3);
        for (const auto& layer : trace.layers) {
            REQUIRE(layer.scores.size() == cfg.heads);
            for (const Vector& a : layer.scores) {
                CHECK(std::abs(a.sum() - 1.0) <= 1e-12);
                CHECK(a.minCoeff() >= 0.0);
            }
        }
    }
}

TEST_CASE("value tokens stay the original embeddings at every depth") {
    auto cfg = testutil::tiny_config();
    cfg.layers = 4;
    std::mt19937_64 rng(11);
    const GeoContext geo = testutil::random_geo(cfg.context_slots, cfg.d_model, rng);
    const Matrix before = geo.value_embeddings;
    ForwardTrace trace;
    forward(init_params(cfg, 3), geo, cfg, &trace);
    for (const auto& layer : trace.layers) CHECK(layer.values == &geo.value_embeddings);
    CHECK(geo.value_embeddings == before);

    // Changing the query state changes the layer output only through queries.
    const LayerParams p = init_params(cfg, 4).layers[1];
    LayerTrace a;
    LayerTrace b;
    multi_head_layer(trace.layers[1].query_state, geo, p, cfg, &a);
    multi_head_layer(trace.layers[1].query_state * 1.5, geo, p, cfg, &b);
    CHECK(a.values == b.values);
    CHECK(a.values == &geo.value_embeddings);
}

TEST_CASE("translating every centroid leaves weights and predictions unchanged") {
    const auto db = testutil::grid_db(6, 6, 8, 3, 100.0);
    std::vector<RegionRecord> shifted;
    for (const auto& r : db.records()) {
        shifted.push_back(RegionRecord::make(r.id, {r.centroid.x + 5000.0, r.centroid.y - 1250.0}, r.embedding,
                                             r.description));
    }
    const RegionDatabase moved(db.dim(), std::move(shifted));
    auto cfg = testutil::tiny_config();
    const ModelParams p = init_params(cfg, 5);
    RetrievalConfig rc;
    rc.k = 10;
    rc.n = 4;
    for (RegionId target : {0, 14, 35}) {
        const auto ca = retrieve_latent_similarity(db, target, rc);
        const auto cb = retrieve_latent_similarity(moved, target, rc);
        const GeoContext ga = make_geo_context(db.at(target).embedding, ca);
        const GeoContext gb = make_geo_context(moved.at(target).embedding, cb);
        CHECK(spatial_weights(ga.distances) == spatial_weights(gb.distances));
        CHECK(forward(p, ga, cfg) == forward(p, gb, cfg));
    }
}

TEST_CASE("make_geo_context lays out the target first") {
    const auto db = testutil::grid_db(4, 4, 8, 2, 10.0);
    RetrievalConfig rc;
    rc.k = 6;
    rc.n = 3;
    const auto ctx = retrieve_latent_similarity(db, 5, rc);
    const GeoContext geo = make_geo_context(db.at(5).embedding, ctx);
    REQUIRE(geo.value_embeddings.rows() == 4);
    CHECK(geo.distances(0) == 0.0);
    CHECK(geo.entropies(0) == doctest::Approx(region_entropy(db.at(5).embedding)).epsilon(1e-15));
    for (Eigen::Index j = 1; j < 4; ++j) {
        const auto& e = ctx.entries[static_cast<std::size_t>(j - 1)];
        CHECK(geo.distances(j) == e.distance);
        CHECK(geo.entropies(j) == e.entropy);
        CHECK(geo.value_embeddings(j, 0) == static_cast<double>(e.embedding[0]));
    }

    AttentionConfig cfg = testutil::tiny_config();
    cfg.context_slots = 4;
    CHECK(std::isfinite(forward(init_params(cfg, 1), db.at(5).embedding, ctx, cfg)));
    cfg.context_slots = 5;
    CHECK_THROWS_AS(forward(init_params(cfg, 1), db.at(5).embedding, ctx, cfg), DimensionError);

    auto bad = ctx;
    bad.entries[0].embedding.pop_back();
    CHECK_THROWS_AS(make_geo_context(db.at(5).embedding, bad), DimensionError);
    bad = ctx;
    bad.entries[1].distance = -1.0;
    CHECK_THROWS_AS(make_geo_context(db.at(5).embedding, bad), InputError);
}

TEST_CASE("a non-finite activation names the layer") {
    const auto cfg = testutil::tiny_config();
    ModelParams p = init_params(cfg, 1);
    p.layers[1].output(0, 0) = INFINITY;
    std::mt19937_64 rng(12);
    const GeoContext geo = testutil::random_geo(cfg.context_slots, cfg.d_model, rng);
    try {
        forward(p, geo, cfg);
        FAIL("expected a divergence error");
    } catch (const DivergenceError& e) {
        CHECK(e.where() == 1);
        CHECK(std::string(e.what()).find("layer 1") != std::string::npos);
    }
    std::vector<Example> batch{{geo, 0.0}};
    CHECK_THROWS_AS(gradients(p, batch, cfg), DivergenceError);
}

TEST_CASE("config validation and shape checks") {
    AttentionConfig cfg;
    cfg.d_model = 10;
    cfg.heads = 4;
    CHECK_THROWS_AS(cfg.validate(), InputError);
    cfg.d_k = 3;
    cfg.d_v = 2;
    CHECK_NOTHROW(cfg.validate());
    cfg.alpha = -0.1;
    CHECK_THROWS_AS(cfg.validate(), InputError);

    const auto tiny = testutil::tiny_config();
    ModelParams p = init_params(tiny, 1);
    CHECK_NOTHROW(check_shapes(p, tiny));
    p.layers[0].key_base.resize(4, 8);
    CHECK_THROWS_AS(check_shapes(p, tiny), DimensionError);
    CHECK(parameter_count(init_params(tiny, 1)) ==
          2 * (2 * (3 * 8 * 4) + 5 * 8 + 8 * 8) + 8 + 1);
    CHECK(weighting_from_string("entropy_only") == Weighting::entropy_only);
    CHECK_THROWS_AS(weighting_from_string("half"), InputError);
}

TEST_CASE("initialisation is seeded and bounded by the fan-in") {
    const auto cfg = testutil::tiny_config();
    const ModelParams a = init_params(cfg, 7);
    const ModelParams b = init_params(cfg, 7);
    const ModelParams c = init_params(cfg, 8);
    CHECK(a.layers[0].query[0] == b.layers[0].query[0]);
    CHECK(a.head_bias == b.head_bias);
    CHECK(a.layers[0].query[0] != c.layers[0].query[0]);
    const double bound = 1.0 / std::sqrt(8.0);
    visit_params(
        [&](auto block) {
            for (double x : block) CHECK(std::abs(x) <= bound);
        },
        a);
}
