#include "urbancast/geotransformer/mlp.hpp"

#include <cmath>
#include <random>
#include <string>

#include "urbancast/errors.hpp"
#include "urbancast/geotransformer/optimizer.hpp"

namespace urbancast {

void MlpConfig::validate() const {
    if (input_dim == 0) throw InputError("MLP input_dim must be positive");
    if (hidden.empty() || hidden.size() > 2) throw InputError("MLP takes one or two hidden layers");
    for (std::size_t w : hidden) {
        if (w == 0) throw InputError("MLP hidden layers must be non-empty");
    }
}

MlpParams zero_mlp(const MlpConfig& cfg) {
    cfg.validate();
    MlpParams p;
    std::size_t in = cfg.input_dim;
    for (std::size_t w : cfg.hidden) {
        p.hidden.push_back({Matrix::Zero(static_cast<Eigen::Index>(in), static_cast<Eigen::Index>(w)),
                            Vector::Zero(static_cast<Eigen::Index>(w))});
        in = w;
    }
    p.output_weights = Vector::Zero(static_cast<Eigen::Index>(in));
    return p;
}

MlpParams init_mlp(const MlpConfig& cfg, std::uint64_t seed) {
    MlpParams p = zero_mlp(cfg);
    std::mt19937_64 rng(seed);
    auto fill = [&](std::span<double> block, std::size_t fan_in) {
        const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
        for (double& x : block) x = (2.0 * (static_cast<double>(rng() >> 11) * 0x1.0p-53) - 1.0) * bound;
    };
    std::size_t in = cfg.input_dim;
    for (auto& layer : p.hidden) {
        fill(detail::flat(layer.weights), in);
        fill(detail::flat(layer.bias), in);
        in = static_cast<std::size_t>(layer.bias.size());
    }
    fill(detail::flat(p.output_weights), in);
    fill(detail::flat(p.output_bias), in);
    return p;
}

namespace {

struct MlpCache {
    std::vector<Vector> inputs;  // input to each hidden layer
    std::vector<Vector> pre;     // pre-activations
    Vector last;                 // final hidden activation
};

double run_mlp(const MlpParams& params, const Vector& input, MlpCache* cache) {
    if (params.hidden.empty()) throw DimensionError("MLP has no hidden layers");
    if (input.size() != params.hidden.front().weights.rows()) {
        throw DimensionError("MLP expects " + std::to_string(params.hidden.front().weights.rows()) +
                             " inputs, got " + std::to_string(input.size()));
    }
    Vector x = input;
    for (const DenseLayer& layer : params.hidden) {
        Vector pre = layer.weights.transpose() * x + layer.bias;
        if (cache != nullptr) {
            cache->inputs.push_back(x);
            cache->pre.push_back(pre);
        }
        x = pre.cwiseMax(0.0);
    }
    const double y = params.output_weights.dot(x) + params.output_bias;
    if (!std::isfinite(y)) throw DivergenceError("non-finite MLP output");
    if (cache != nullptr) cache->last = std::move(x);
    return y;
}

}  // namespace

double mlp_forward(const MlpParams& params, const Vector& input) { return run_mlp(params, input, nullptr); }

double mlp_forward(const MlpParams& params, std::span<const float> target_embedding) {
    Vector x(static_cast<Eigen::Index>(target_embedding.size()));
    for (std::size_t i = 0; i < target_embedding.size(); ++i) x(static_cast<Eigen::Index>(i)) = target_embedding[i];
    return run_mlp(params, x, nullptr);
}

MlpGradientResult mlp_gradients(const MlpParams& params, std::span<const MlpExample> batch, double loss_scale) {
    if (batch.empty()) throw DimensionError("mlp_gradients: empty batch");
    MlpGradientResult out{params, 0.0};
    visit_params([](auto g) { std::fill(g.begin(), g.end(), 0.0); }, out.gradient);
    const double n = static_cast<double>(batch.size());
    for (const MlpExample& ex : batch) {
        MlpCache cache;
        const double r = run_mlp(params, ex.input, &cache) - ex.label;
        out.loss += r * r;
        const double g_y = loss_scale * 2.0 * r / n;
        out.gradient.output_weights += g_y * cache.last;
        out.gradient.output_bias += g_y;
        Vector g = g_y * params.output_weights;
        for (std::size_t l = params.hidden.size(); l-- > 0;) {
            for (Eigen::Index i = 0; i < g.size(); ++i) {
                if (!(cache.pre[l](i) > 0.0)) g(i) = 0.0;
            }
            out.gradient.hidden[l].weights += cache.inputs[l] * g.transpose();
            out.gradient.hidden[l].bias += g;
            g = params.hidden[l].weights * g;
        }
    }
    out.loss /= n;
    return out;
}

TrainedMlp train_mlp(std::span<const MlpExample> dataset, const TrainConfig& train_cfg, const MlpConfig& cfg) {
    train_cfg.validate();
    if (dataset.empty()) throw DimensionError("train_mlp: empty dataset");
    TrainedMlp model{init_mlp(cfg, train_cfg.seed), {}, {}};
    std::vector<double> labels;
    for (const MlpExample& ex : dataset) labels.push_back(ex.label);
    if (train_cfg.standardize_labels) model.scaler = LabelScaler::fit(labels);
    std::vector<MlpExample> scaled(dataset.begin(), dataset.end());
    for (MlpExample& ex : scaled) ex.label = model.scaler.apply(ex.label);
    model.history = run_minibatches(model.params, std::span<const MlpExample>(scaled), train_cfg,
                                    [](const MlpParams& p, std::span<const MlpExample> batch) {
                                        return mlp_gradients(p, batch);
                                    });
    return model;
}

std::vector<double> predict_mlp(const MlpParams& params, const LabelScaler& scaler,
                                std::span<const MlpExample> dataset) {
    std::vector<double> out;
    out.reserve(dataset.size());
    for (const MlpExample& ex : dataset) out.push_back(scaler.invert(run_mlp(params, ex.input, nullptr)));
    return out;
}

}  // namespace urbancast
