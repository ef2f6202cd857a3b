#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <type_traits>
#include <vector>

#include "urbancast/geotransformer/model.hpp"
#include "urbancast/geotransformer/training.hpp"

namespace urbancast {

// Baseline decoder that sees only the target embedding: one or two ReLU
// hidden layers and a linear scalar output.
struct MlpConfig {
    std::size_t input_dim = 64;
    std::vector<std::size_t> hidden = {64};

    // Throws InputError unless there are 1 or 2 non-empty hidden layers.
    void validate() const;
};

struct DenseLayer {
    Matrix weights;  // in x out
    Vector bias;     // out
};

struct MlpParams {
    std::vector<DenseLayer> hidden;
    Vector output_weights;
    double output_bias = 0.0;
};

MlpParams zero_mlp(const MlpConfig& cfg);
// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) for every weight and bias.
MlpParams init_mlp(const MlpConfig& cfg, std::uint64_t seed);

template <typename F, typename First, typename... Rest>
    requires std::is_same_v<std::remove_const_t<First>, MlpParams>
void visit_params(F&& f, First& first, Rest&... rest) {
    using detail::flat;
    for (std::size_t l = 0; l < first.hidden.size(); ++l) {
        f(flat(first.hidden[l].weights), flat(rest.hidden[l].weights)...);
        f(flat(first.hidden[l].bias), flat(rest.hidden[l].bias)...);
    }
    f(flat(first.output_weights), flat(rest.output_weights)...);
    f(flat(first.output_bias), flat(rest.output_bias)...);
}

// Throws DimensionError when the input length does not match the first layer.
double mlp_forward(const MlpParams& params, const Vector& input);
double mlp_forward(const MlpParams& params, std::span<const float> target_embedding);

struct MlpExample {
    Vector input;
    double label = 0.0;
};

struct MlpGradientResult {
    MlpParams gradient;
    double loss = 0.0;
};

MlpGradientResult mlp_gradients(const MlpParams& params, std::span<const MlpExample> batch,
                                double loss_scale = 1.0);

struct TrainedMlp {
    MlpParams params;
    LabelScaler scaler;
    std::vector<double> history;
};

TrainedMlp train_mlp(std::span<const MlpExample> dataset, const TrainConfig& train_cfg, const MlpConfig& cfg);

std::vector<double> predict_mlp(const MlpParams& params, const LabelScaler& scaler,
                                std::span<const MlpExample> dataset);

}  // namespace urbancast
