#pragma once

#include <vector>

#include "urbancast/geotransformer/attention.hpp"

namespace urbancast::detail {

struct HeadCache {
    Vector query;   // d_k
    Vector scores;  // softmax, m
    Vector coeffs;  // weighted (and possibly renormalized) scores, m
    double coeff_sum = 1.0;
    Matrix values;  // projected values, m x d_v
};

struct NormCache {
    Vector normalized;
    double inv_std = 1.0;
};

struct LayerCache {
    Vector input;
    Vector attn_input;  // input, or its layer norm in pre-norm blocks
    NormCache norm1;
    std::vector<HeadCache> heads;
    Vector concat;
    Vector mid;  // pre-norm blocks: input + attention output
    NormCache norm2;
    Vector ffn_input;
    Vector ffn_pre;
    Vector ffn_hidden;
};

struct ForwardCache {
    Vector weights;
    std::vector<LayerCache> layers;
    Vector final_state;
    double prediction = 0.0;
};

// keys[l][i] = K_base(l) * W_K_i(l).
using ProjectedKeys = std::vector<std::vector<Matrix>>;

ProjectedKeys project_keys(const ModelParams& params);

inline constexpr double kLayerNormEpsilon = 1e-5;

Vector layer_norm(const Vector& x, const Vector& gain, const Vector& bias, NormCache* cache);

// Backward of layer_norm: accumulates into gain/bias gradients and returns
// the gradient with respect to x.
Vector layer_norm_backward(const Vector& grad_out, const NormCache& cache, const Vector& gain, Vector& grad_gain,
                           Vector& grad_bias);

double run_forward(const ModelParams& params, const GeoContext& geo, const AttentionConfig& cfg,
                   const ProjectedKeys& keys, ForwardCache* cache, ForwardTrace* trace);

}  // namespace urbancast::detail
