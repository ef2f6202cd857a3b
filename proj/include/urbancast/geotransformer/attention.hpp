#pragma once

#include <span>
#include <vector>

#include "urbancast/geotransformer/model.hpp"
#include "urbancast/retrieval/retrieval.hpp"

namespace urbancast {

// Everything the decoder sees about one target: slot 0 is the target itself,
// slots 1..m-1 the retrieved regions in retrieval order.
struct GeoContext {
    Vector distances;         // m, slot 0 is exactly 0
    Vector entropies;         // m
    Matrix value_embeddings;  // m x D
};

// Throws DimensionError when a context embedding's length differs from the
// target's, InputError on a negative or non-finite distance.
GeoContext make_geo_context(std::span<const float> target_embedding, const ContextSet& context);

// The per-slot prior applied to the attention scores. All ones for
// Weighting::none and Weighting::bypass.
Vector slot_weights(const GeoContext& geo, const AttentionConfig& cfg);

// softmax(keys * query / sqrt(d_k)).
Vector attention_scores(const Vector& query, const Matrix& keys);

// sum_j weights_j * a_j * values_j with a = attention_scores(query, keys).
// Throws DimensionError on shape mismatch, InputError on non-finite input.
Vector geo_attention(const Vector& query, const Matrix& keys, const Matrix& values, const Vector& weights);

struct LayerTrace {
    Vector query_state;             // layer input
    const Matrix* values = nullptr;  // matrix every head projected as values
    std::vector<Vector> scores;     // per head, before weighting
};

struct ForwardTrace {
    Vector weights;  // slot_weights(geo, cfg)
    std::vector<LayerTrace> layers;
    Vector final_state;
};

// Multi-head geospatial attention for one layer. The value tokens are always
// geo.value_embeddings, whatever the depth. Returns concat(heads) * W_O.
Vector multi_head_layer(const Vector& query_state, const GeoContext& geo, const LayerParams& params,
                        const AttentionConfig& cfg, LayerTrace* trace = nullptr);

// Runs all layers from query_state = target embedding (slot 0 of
// geo.value_embeddings) and applies the linear head. Throws DimensionError
// when geo does not have cfg.context_slots slots and DivergenceError, naming
// the layer, on a non-finite activation.
double forward(const ModelParams& params, const GeoContext& geo, const AttentionConfig& cfg,
               ForwardTrace* trace = nullptr);

double forward(const ModelParams& params, std::span<const float> target_embedding, const ContextSet& context,
               const AttentionConfig& cfg);

}  // namespace urbancast
