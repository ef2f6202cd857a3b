#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <type_traits>
#include <vector>

#include <Eigen/Dense>

namespace urbancast {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

// Which prior multiplies the post-softmax attention scores.
//   full          alpha * W_S + (1 - alpha) * W_E
//   spatial_only  W_S
//   entropy_only  W_E
//   none          a vector of ones (the ablation baseline)
//   bypass        no multiplication at all: plain cross-attention
enum class Weighting { full, spatial_only, entropy_only, none, bypass };

// residual:     state += MultiHead(state)
// pre_norm_ffn: state += MultiHead(LN(state)); state += FFN(LN(state))
enum class BlockStyle { residual, pre_norm_ffn };

const char* to_string(Weighting w);
Weighting weighting_from_string(std::string_view name);
const char* to_string(BlockStyle b);
BlockStyle block_style_from_string(std::string_view name);

struct AttentionConfig {
    std::size_t d_model = 64;
    std::size_t heads = 4;
    std::size_t layers = 2;
    std::size_t context_slots = 17;  // target + retrieved regions
    std::size_t d_k = 0;             // 0 means d_model / heads
    std::size_t d_v = 0;             // 0 means d_model / heads
    double alpha = 0.5;
    Weighting weighting = Weighting::full;
    bool renormalize = false;  // divide weighted scores by their sum
    BlockStyle block = BlockStyle::residual;
    std::size_t d_ff = 0;  // 0 means 2 * d_model; pre_norm_ffn only

    std::size_t key_dim() const { return d_k != 0 ? d_k : d_model / heads; }
    std::size_t value_dim() const { return d_v != 0 ? d_v : d_model / heads; }
    std::size_t ffn_dim() const { return d_ff != 0 ? d_ff : 2 * d_model; }

    // Throws InputError on inconsistent settings.
    void validate() const;
};

struct LayerParams {
    std::vector<Matrix> query;  // per head, D x d_k
    std::vector<Matrix> key;    // per head, D x d_k
    std::vector<Matrix> value;  // per head, D x d_v
    Matrix key_base;            // m x D, trainable keys shared by the heads
    Matrix output;              // (heads * d_v) x D

    // pre_norm_ffn only; empty otherwise.
    Vector norm1_gain, norm1_bias;
    Vector norm2_gain, norm2_bias;
    Matrix ffn_in;  // D x d_ff
    Vector ffn_in_bias;
    Matrix ffn_out;  // d_ff x D
    Vector ffn_out_bias;
};

struct ModelParams {
    std::vector<LayerParams> layers;
    Vector head_weights;  // D
    double head_bias = 0.0;
};

// Correctly shaped parameters filled with zeros.
ModelParams zero_params(const AttentionConfig& cfg);

// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) for every weight and bias; layer
// norm gains start at 1 and their biases at 0.
ModelParams init_params(const AttentionConfig& cfg, std::uint64_t seed);

// Throws DimensionError when `params` does not have the shapes `cfg` implies.
void check_shapes(const ModelParams& params, const AttentionConfig& cfg);

namespace detail {

template <typename T>
auto flat(T& x) {
    using Scalar = std::remove_pointer_t<decltype(x.data())>;
    return std::span<Scalar>(x.data(), static_cast<std::size_t>(x.size()));
}

inline std::span<double> flat(double& x) { return {&x, 1}; }
inline std::span<const double> flat(const double& x) { return {&x, 1}; }

}  // namespace detail

// Calls f(span, span, ...) once per parameter block, walking any number of
// identically shaped parameter sets in lockstep. The order is the
// serialization order: per layer, per head (query, key, value), then
// key_base, output, then the pre-norm extras when present; finally
// head_weights and head_bias.
template <typename F, typename First, typename... Rest>
    requires std::is_same_v<std::remove_const_t<First>, ModelParams>
void visit_params(F&& f, First& first, Rest&... rest) {
    using detail::flat;
    for (std::size_t l = 0; l < first.layers.size(); ++l) {
        auto& a = first.layers[l];
        for (std::size_t h = 0; h < a.query.size(); ++h) {
            f(flat(a.query[h]), flat(rest.layers[l].query[h])...);
            f(flat(a.key[h]), flat(rest.layers[l].key[h])...);
            f(flat(a.value[h]), flat(rest.layers[l].value[h])...);
        }
        f(flat(a.key_base), flat(rest.layers[l].key_base)...);
        f(flat(a.output), flat(rest.layers[l].output)...);
        if (a.norm1_gain.size() != 0) {
            f(flat(a.norm1_gain), flat(rest.layers[l].norm1_gain)...);
            f(flat(a.norm1_bias), flat(rest.layers[l].norm1_bias)...);
            f(flat(a.norm2_gain), flat(rest.layers[l].norm2_gain)...);
            f(flat(a.norm2_bias), flat(rest.layers[l].norm2_bias)...);
            f(flat(a.ffn_in), flat(rest.layers[l].ffn_in)...);
            f(flat(a.ffn_in_bias), flat(rest.layers[l].ffn_in_bias)...);
            f(flat(a.ffn_out), flat(rest.layers[l].ffn_out)...);
            f(flat(a.ffn_out_bias), flat(rest.layers[l].ffn_out_bias)...);
        }
    }
    f(flat(first.head_weights), flat(rest.head_weights)...);
    f(flat(first.head_bias), flat(rest.head_bias)...);
}

std::size_t parameter_count(const ModelParams& params);

}  // namespace urbancast
