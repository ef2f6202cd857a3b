#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "urbancast/geotransformer/attention.hpp"
#include "urbancast/geotransformer/model.hpp"

namespace urbancast {

// Mean of squared differences. Throws DimensionError on empty or unequal input.
double mse_loss(std::span<const double> predictions, std::span<const double> labels);

struct Example {
    GeoContext geo;
    double label = 0.0;
};

enum class Optimizer { sgd, adam };

const char* to_string(Optimizer o);
Optimizer optimizer_from_string(std::string_view name);

struct TrainConfig {
    double learning_rate = 1e-3;
    std::size_t epochs = 100;
    std::size_t batch_size = 32;
    std::uint64_t seed = 0;
    Optimizer optimizer = Optimizer::adam;
    bool standardize_labels = true;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    double weight_decay = 0.0;  // decoupled, as in AdamW

    // Throws InputError unless learning_rate >= 0, weight_decay >= 0,
    // learning_rate * weight_decay < 1, epochs >= 1 and batch_size >= 1.
    void validate() const;
};

// z-score transform fitted on training labels.
struct LabelScaler {
    double mean = 0.0;
    double scale = 1.0;

    static LabelScaler fit(std::span<const double> labels);
    double apply(double y) const { return (y - mean) / scale; }
    double invert(double z) const { return z * scale + mean; }
};

// Gradient of loss_scale * MSE over the batch with respect to every
// parameter, together with the unscaled batch MSE.
struct GradientResult {
    ModelParams gradient;
    double loss = 0.0;
};

// Throws DimensionError on an empty batch and DivergenceError when a forward
// value is non-finite.
GradientResult gradients(const ModelParams& params, std::span<const Example> batch, const AttentionConfig& cfg,
                         double loss_scale = 1.0);

struct TrainedModel {
    ModelParams params;
    LabelScaler scaler;
    std::vector<double> history;  // mean minibatch loss per epoch
};

// Trains from `initial`; labels are standardized when the config asks for it.
// Throws DivergenceError carrying the epoch index on a non-finite loss.
TrainedModel train(ModelParams initial, std::span<const Example> dataset, const TrainConfig& train_cfg,
                   const AttentionConfig& cfg);

// Same, starting from init_params(cfg, train_cfg.seed).
TrainedModel train(std::span<const Example> dataset, const TrainConfig& train_cfg, const AttentionConfig& cfg);

// forward() per example in the label scale the scaler inverts to. Labels are
// ignored.
std::vector<double> predict_batch(const ModelParams& params, const LabelScaler& scaler,
                                  std::span<const Example> dataset, const AttentionConfig& cfg);

}  // namespace urbancast
