#include "urbancast/geotransformer/attention.hpp"

#include <cmath>
#include <string>

#include "forward_pass.hpp"
#include "urbancast/errors.hpp"
#include "urbancast/geotransformer/weights.hpp"
#include "urbancast/region_store/entropy.hpp"

namespace urbancast {

namespace {

bool all_finite(const Vector& v) { return v.allFinite(); }

// One head of weighted cross-attention. `weights` is null in bypass mode.
Vector attend(const Vector& query, const Matrix& keys, const Matrix& values, const Vector* weights,
              bool renormalize, detail::HeadCache* cache) {
    Vector scores = attention_scores(query, keys);
    Vector coeffs = weights != nullptr ? Vector(weights->cwiseProduct(scores)) : scores;
    double sum = 1.0;
    if (renormalize) {
        sum = coeffs.sum();
        if (sum > 0.0) coeffs /= sum;
    }
    Vector out = values.transpose() * coeffs;
    if (cache != nullptr) {
        cache->scores = std::move(scores);
        cache->coeffs = std::move(coeffs);
        cache->coeff_sum = sum;
    }
    return out;
}

Vector layer_attention(const Vector& attn_input, const GeoContext& geo, const LayerParams& p,
                       const std::vector<Matrix>& keys, const Vector* weights, const AttentionConfig& cfg,
                       detail::LayerCache* cache, LayerTrace* trace) {
    const auto dv = static_cast<Eigen::Index>(cfg.value_dim());
    Vector concat(static_cast<Eigen::Index>(cfg.heads) * dv);
    if (cache != nullptr) cache->heads.resize(cfg.heads);
    if (trace != nullptr) {
        trace->values = &geo.value_embeddings;
        trace->scores.resize(cfg.heads);
    }
    detail::HeadCache scratch;
    for (std::size_t i = 0; i < cfg.heads; ++i) {
        detail::HeadCache& hc = cache != nullptr ? cache->heads[i] : scratch;
        hc.query = p.query[i].transpose() * attn_input;
        hc.values = geo.value_embeddings * p.value[i];
        concat.segment(static_cast<Eigen::Index>(i) * dv, dv) =
            attend(hc.query, keys[i], hc.values, weights, cfg.renormalize, &hc);
        if (trace != nullptr) trace->scores[i] = hc.scores;
    }
    Vector out = p.output.transpose() * concat;
    if (cache != nullptr) cache->concat = std::move(concat);
    return out;
}

void check_geo(const GeoContext& geo, const AttentionConfig& cfg) {
    const auto m = static_cast<Eigen::Index>(cfg.context_slots);
    if (geo.value_embeddings.rows() != m || geo.distances.size() != m || geo.entropies.size() != m) {
        throw DimensionError("context has " + std::to_string(geo.value_embeddings.rows()) + " slots, model expects " +
                             std::to_string(m));
    }
    if (geo.value_embeddings.cols() != static_cast<Eigen::Index>(cfg.d_model)) {
        throw DimensionError("context embeddings have dimension " + std::to_string(geo.value_embeddings.cols()) +
                             ", model expects " + std::to_string(cfg.d_model));
    }
}

}  // namespace

GeoContext make_geo_context(std::span<const float> target_embedding, const ContextSet& context) {
    const auto D = static_cast<Eigen::Index>(target_embedding.size());
    const auto m = static_cast<Eigen::Index>(context.entries.size() + 1);
    GeoContext geo{Vector::Zero(m), Vector::Zero(m), Matrix::Zero(m, D)};
    for (Eigen::Index c = 0; c < D; ++c) geo.value_embeddings(0, c) = target_embedding[static_cast<std::size_t>(c)];
    geo.entropies(0) = region_entropy(target_embedding);
    for (Eigen::Index j = 1; j < m; ++j) {
        const ContextEntry& e = context.entries[static_cast<std::size_t>(j - 1)];
        if (static_cast<Eigen::Index>(e.embedding.size()) != D) {
            throw DimensionError("context region " + std::to_string(e.id) + " has dimension " +
                                 std::to_string(e.embedding.size()) + ", target has " + std::to_string(D));
        }
        if (!std::isfinite(e.distance) || e.distance < 0.0) {
            throw InputError("context region " + std::to_string(e.id) + " has an invalid distance");
        }
        geo.distances(j) = e.distance;
        geo.entropies(j) = std::isfinite(e.entropy) ? e.entropy : region_entropy(e.embedding);
        for (Eigen::Index c = 0; c < D; ++c) geo.value_embeddings(j, c) = e.embedding[static_cast<std::size_t>(c)];
    }
    return geo;
}

Vector slot_weights(const GeoContext& geo, const AttentionConfig& cfg) {
    switch (cfg.weighting) {
        case Weighting::full:
            return combined_weights(spatial_weights(geo.distances), entropy_weights(geo.entropies), cfg.alpha);
        case Weighting::spatial_only: return spatial_weights(geo.distances);
        case Weighting::entropy_only: return entropy_weights(geo.entropies);
        case Weighting::none:
        case Weighting::bypass: return Vector::Ones(geo.distances.size());
    }
    throw InputError("unknown weighting mode");
}

Vector attention_scores(const Vector& query, const Matrix& keys) {
    if (keys.cols() != query.size()) {
        throw DimensionError("keys have " + std::to_string(keys.cols()) + " columns, query has " +
                             std::to_string(query.size()) + " entries");
    }
    if (keys.rows() == 0) throw DimensionError("attention over zero slots");
    Vector logits = keys * query / std::sqrt(static_cast<double>(query.size()));
    if (!all_finite(logits)) throw InputError("non-finite attention logits");
    const double top = logits.maxCoeff();
    Vector e = (logits.array() - top).exp().matrix();
    return e / e.sum();
}

Vector geo_attention(const Vector& query, const Matrix& keys, const Matrix& values, const Vector& weights) {
    if (values.rows() != keys.rows() || weights.size() != keys.rows()) {
        throw DimensionError("geo_attention: keys, values and weights disagree on the slot count");
    }
    if (!all_finite(weights) || !values.allFinite()) throw InputError("geo_attention: non-finite input");
    return attend(query, keys, values, &weights, false, nullptr);
}

namespace detail {

ProjectedKeys project_keys(const ModelParams& params) {
    ProjectedKeys keys(params.layers.size());
    for (std::size_t l = 0; l < params.layers.size(); ++l) {
        const LayerParams& p = params.layers[l];
        keys[l].reserve(p.key.size());
        for (const Matrix& wk : p.key) keys[l].push_back(p.key_base * wk);
    }
    return keys;
}

Vector layer_norm(const Vector& x, const Vector& gain, const Vector& bias, NormCache* cache) {
    const double mean = x.mean();
    const Vector centered = (x.array() - mean).matrix();
    const double var = centered.squaredNorm() / static_cast<double>(x.size());
    const double inv_std = 1.0 / std::sqrt(var + kLayerNormEpsilon);
    Vector normalized = centered * inv_std;
    Vector out = gain.cwiseProduct(normalized) + bias;
    if (cache != nullptr) {
        cache->normalized = std::move(normalized);
        cache->inv_std = inv_std;
    }
    return out;
}

Vector layer_norm_backward(const Vector& grad_out, const NormCache& cache, const Vector& gain, Vector& grad_gain,
                           Vector& grad_bias) {
    grad_gain += grad_out.cwiseProduct(cache.normalized);
    grad_bias += grad_out;
    const Vector g = grad_out.cwiseProduct(gain);
    const double n = static_cast<double>(g.size());
    const double mean_g = g.sum() / n;
    const double mean_gx = g.dot(cache.normalized) / n;
    return cache.inv_std * (g.array() - mean_g - cache.normalized.array() * mean_gx).matrix();
}

double run_forward(const ModelParams& params, const GeoContext& geo, const AttentionConfig& cfg,
                   const ProjectedKeys& keys, ForwardCache* cache, ForwardTrace* trace) {
    check_geo(geo, cfg);
    if (params.layers.size() != cfg.layers) throw DimensionError("model layer count does not match the config");

    Vector weights = slot_weights(geo, cfg);
    const Vector* w = cfg.weighting == Weighting::bypass ? nullptr : &weights;
    const bool pre_norm = cfg.block == BlockStyle::pre_norm_ffn;

    if (cache != nullptr) cache->layers.resize(cfg.layers);
    if (trace != nullptr) trace->layers.resize(cfg.layers);

    Vector state = geo.value_embeddings.row(0).transpose();
    LayerCache scratch;
    for (std::size_t l = 0; l < cfg.layers; ++l) {
        const LayerParams& p = params.layers[l];
        LayerCache& lc = cache != nullptr ? cache->layers[l] : scratch;
        LayerTrace* lt = trace != nullptr ? &trace->layers[l] : nullptr;
        if (lt != nullptr) lt->query_state = state;
        lc.input = state;
        lc.attn_input = pre_norm ? layer_norm(state, p.norm1_gain, p.norm1_bias, &lc.norm1) : state;
        state += layer_attention(lc.attn_input, geo, p, keys[l], w, cfg, &lc, lt);
        if (pre_norm) {
            lc.mid = state;
            lc.ffn_input = layer_norm(state, p.norm2_gain, p.norm2_bias, &lc.norm2);
            lc.ffn_pre = p.ffn_in.transpose() * lc.ffn_input + p.ffn_in_bias;
            lc.ffn_hidden = lc.ffn_pre.cwiseMax(0.0);
            state += p.ffn_out.transpose() * lc.ffn_hidden + p.ffn_out_bias;
        }
        if (!all_finite(state)) {
            throw DivergenceError("non-finite query state after layer " + std::to_string(l),
                                  static_cast<std::int64_t>(l));
        }
    }
    const double y = params.head_weights.dot(state) + params.head_bias;
    if (!std::isfinite(y)) {
        throw DivergenceError("non-finite prediction at the output head (layer " + std::to_string(cfg.layers) + ")",
                              static_cast<std::int64_t>(cfg.layers));
    }
    if (trace != nullptr) {
        trace->weights = weights;
        trace->final_state = state;
    }
    if (cache != nullptr) {
        cache->weights = std::move(weights);
        cache->final_state = std::move(state);
        cache->prediction = y;
    }
    return y;
}

}  // namespace detail

Vector multi_head_layer(const Vector& query_state, const GeoContext& geo, const LayerParams& params,
                        const AttentionConfig& cfg, LayerTrace* trace) {
    check_geo(geo, cfg);
    if (query_state.size() != static_cast<Eigen::Index>(cfg.d_model)) {
        throw DimensionError("query state has " + std::to_string(query_state.size()) + " entries, expected " +
                             std::to_string(cfg.d_model));
    }
    std::vector<Matrix> keys;
    for (const Matrix& wk : params.key) keys.push_back(params.key_base * wk);
    const Vector weights = slot_weights(geo, cfg);
    const Vector* w = cfg.weighting == Weighting::bypass ? nullptr : &weights;
    if (trace != nullptr) trace->query_state = query_state;
    return layer_attention(query_state, geo, params, keys, w, cfg, nullptr, trace);
}

double forward(const ModelParams& params, const GeoContext& geo, const AttentionConfig& cfg, ForwardTrace* trace) {
    return detail::run_forward(params, geo, cfg, detail::project_keys(params), nullptr, trace);
}

double forward(const ModelParams& params, std::span<const float> target_embedding, const ContextSet& context,
               const AttentionConfig& cfg) {
    return forward(params, make_geo_context(target_embedding, context), cfg);
}

}  // namespace urbancast
