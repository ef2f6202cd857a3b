#include "urbancast/geotransformer/model.hpp"

#include <cmath>
#include <random>
#include <string>

#include "urbancast/errors.hpp"

namespace urbancast {

const char* to_string(Weighting w) {
    switch (w) {
        case Weighting::full: return "full";
        case Weighting::spatial_only: return "spatial_only";
        case Weighting::entropy_only: return "entropy_only";
        case Weighting::none: return "none";
        case Weighting::bypass: return "bypass";
    }
    return "unknown";
}

Weighting weighting_from_string(std::string_view name) {
    for (auto w : {Weighting::full, Weighting::spatial_only, Weighting::entropy_only, Weighting::none,
                   Weighting::bypass}) {
        if (name == to_string(w)) return w;
    }
    throw InputError("unknown weighting mode \"" + std::string(name) + "\"");
}

const char* to_string(BlockStyle b) {
    switch (b) {
        case BlockStyle::residual: return "residual";
        case BlockStyle::pre_norm_ffn: return "pre_norm_ffn";
    }
    return "unknown";
}

BlockStyle block_style_from_string(std::string_view name) {
    for (auto b : {BlockStyle::residual, BlockStyle::pre_norm_ffn}) {
        if (name == to_string(b)) return b;
    }
    throw InputError("unknown block style \"" + std::string(name) + "\"");
}

void AttentionConfig::validate() const {
    if (d_model == 0) throw InputError("d_model must be positive");
    if (heads == 0) throw InputError("heads must be positive");
    if (layers == 0) throw InputError("layers must be positive");
    if (context_slots == 0) throw InputError("context_slots must be positive");
    if ((d_k == 0 || d_v == 0) && d_model % heads != 0) {
        throw InputError("d_model " + std::to_string(d_model) + " is not divisible by " + std::to_string(heads) +
                         " heads");
    }
    if (key_dim() == 0 || value_dim() == 0) throw InputError("per-head dimensions must be positive");
    if (!(alpha >= 0.0 && alpha <= 1.0)) throw InputError("alpha must lie in [0, 1]");
}

namespace {

LayerParams zero_layer(const AttentionConfig& cfg) {
    const auto D = static_cast<Eigen::Index>(cfg.d_model);
    const auto dk = static_cast<Eigen::Index>(cfg.key_dim());
    const auto dv = static_cast<Eigen::Index>(cfg.value_dim());
    const auto m = static_cast<Eigen::Index>(cfg.context_slots);
    const auto h = static_cast<Eigen::Index>(cfg.heads);
    LayerParams p;
    for (Eigen::Index i = 0; i < h; ++i) {
        p.query.push_back(Matrix::Zero(D, dk));
        p.key.push_back(Matrix::Zero(D, dk));
        p.value.push_back(Matrix::Zero(D, dv));
    }
    p.key_base = Matrix::Zero(m, D);
    p.output = Matrix::Zero(h * dv, D);
    if (cfg.block == BlockStyle::pre_norm_ffn) {
        const auto ff = static_cast<Eigen::Index>(cfg.ffn_dim());
        p.norm1_gain = Vector::Zero(D);
        p.norm1_bias = Vector::Zero(D);
        p.norm2_gain = Vector::Zero(D);
        p.norm2_bias = Vector::Zero(D);
        p.ffn_in = Matrix::Zero(D, ff);
        p.ffn_in_bias = Vector::Zero(ff);
        p.ffn_out = Matrix::Zero(ff, D);
        p.ffn_out_bias = Vector::Zero(D);
    }
    return p;
}

class UniformInit {
public:
    explicit UniformInit(std::uint64_t seed) : rng_(seed) {}

    template <typename T>
    void fill(T& x, std::size_t fan_in) {
        const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
        for (Eigen::Index i = 0; i < x.size(); ++i) {
            // 53 random bits mapped to [-bound, bound).
            const double u = static_cast<double>(rng_() >> 11) * 0x1.0p-53;
            x.data()[i] = (2.0 * u - 1.0) * bound;
        }
    }

    double scalar(std::size_t fan_in) {
        Vector v(1);
        fill(v, fan_in);
        return v(0);
    }

private:
    std::mt19937_64 rng_;
};

template <typename T>
void expect_shape(const T& x, Eigen::Index rows, Eigen::Index cols, const std::string& what) {
    if (x.rows() != rows || x.cols() != cols) {
        throw DimensionError(what + " is " + std::to_string(x.rows()) + "x" + std::to_string(x.cols()) +
                             ", expected " + std::to_string(rows) + "x" + std::to_string(cols));
    }
}

}  // namespace

ModelParams zero_params(const AttentionConfig& cfg) {
    cfg.validate();
    ModelParams p;
    for (std::size_t l = 0; l < cfg.layers; ++l) p.layers.push_back(zero_layer(cfg));
    p.head_weights = Vector::Zero(static_cast<Eigen::Index>(cfg.d_model));
    return p;
}

ModelParams init_params(const AttentionConfig& cfg, std::uint64_t seed) {
    ModelParams p = zero_params(cfg);
    UniformInit init(seed);
    const std::size_t D = cfg.d_model;
    for (auto& layer : p.layers) {
        for (std::size_t i = 0; i < cfg.heads; ++i) {
            init.fill(layer.query[i], D);
            init.fill(layer.key[i], D);
            init.fill(layer.value[i], D);
        }
        init.fill(layer.key_base, D);
        init.fill(layer.output, cfg.heads * cfg.value_dim());
        if (cfg.block == BlockStyle::pre_norm_ffn) {
            layer.norm1_gain.setOnes();
            layer.norm2_gain.setOnes();
            init.fill(layer.ffn_in, D);
            init.fill(layer.ffn_in_bias, D);
            init.fill(layer.ffn_out, cfg.ffn_dim());
            init.fill(layer.ffn_out_bias, cfg.ffn_dim());
        }
    }
    init.fill(p.head_weights, D);
    p.head_bias = init.scalar(D);
    return p;
}

void check_shapes(const ModelParams& params, const AttentionConfig& cfg) {
    cfg.validate();
    const auto D = static_cast<Eigen::Index>(cfg.d_model);
    const auto dk = static_cast<Eigen::Index>(cfg.key_dim());
    const auto dv = static_cast<Eigen::Index>(cfg.value_dim());
    const auto m = static_cast<Eigen::Index>(cfg.context_slots);
    const auto h = static_cast<Eigen::Index>(cfg.heads);
    if (params.layers.size() != cfg.layers) {
        throw DimensionError("model has " + std::to_string(params.layers.size()) + " layers, expected " +
                             std::to_string(cfg.layers));
    }
    for (std::size_t l = 0; l < params.layers.size(); ++l) {
        const auto& p = params.layers[l];
        const std::string at = "layer " + std::to_string(l) + " ";
        if (p.query.size() != cfg.heads || p.key.size() != cfg.heads || p.value.size() != cfg.heads) {
            throw DimensionError(at + "head count does not match the config");
        }
        for (std::size_t i = 0; i < cfg.heads; ++i) {
            expect_shape(p.query[i], D, dk, at + "W_Q");
            expect_shape(p.key[i], D, dk, at + "W_K");
            expect_shape(p.value[i], D, dv, at + "W_V");
        }
        expect_shape(p.key_base, m, D, at + "K_base");
        expect_shape(p.output, h * dv, D, at + "W_O");
        if (cfg.block == BlockStyle::pre_norm_ffn) {
            const auto ff = static_cast<Eigen::Index>(cfg.ffn_dim());
            expect_shape(p.norm1_gain, D, 1, at + "norm1 gain");
            expect_shape(p.norm1_bias, D, 1, at + "norm1 bias");
            expect_shape(p.norm2_gain, D, 1, at + "norm2 gain");
            expect_shape(p.norm2_bias, D, 1, at + "norm2 bias");
            expect_shape(p.ffn_in, D, ff, at + "FFN W1");
            expect_shape(p.ffn_in_bias, ff, 1, at + "FFN b1");
            expect_shape(p.ffn_out, ff, D, at + "FFN W2");
            expect_shape(p.ffn_out_bias, D, 1, at + "FFN b2");
        } else if (p.norm1_gain.size() != 0) {
            throw DimensionError(at + "has pre-norm parameters but the config uses residual blocks");
        }
    }
    expect_shape(params.head_weights, D, 1, "head weights");
}

std::size_t parameter_count(const ModelParams& params) {
    std::size_t n = 0;
    visit_params([&](auto block) { n += block.size(); }, params);
    return n;
}

}  // namespace urbancast
