#include "urbancast/geotransformer/training.hpp"

#include <cmath>
#include <string>

#include "forward_pass.hpp"
#include "urbancast/errors.hpp"
#include "urbancast/geotransformer/optimizer.hpp"

namespace urbancast {

const char* to_string(Optimizer o) {
    switch (o) {
        case Optimizer::sgd: return "sgd";
        case Optimizer::adam: return "adam";
    }
    return "unknown";
}

Optimizer optimizer_from_string(std::string_view name) {
    if (name == "sgd") return Optimizer::sgd;
    if (name == "adam") return Optimizer::adam;
    throw InputError("unknown optimizer \"" + std::string(name) + "\"");
}

void TrainConfig::validate() const {
    if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) throw InputError("learning_rate must be >= 0");
    if (!(weight_decay >= 0.0) || !(learning_rate * weight_decay < 1.0)) {
        throw InputError("weight_decay must be >= 0 with learning_rate * weight_decay < 1");
    }
    if (epochs == 0) throw InputError("epochs must be >= 1");
    if (batch_size == 0) throw InputError("batch_size must be >= 1");
}

double mse_loss(std::span<const double> predictions, std::span<const double> labels) {
    if (predictions.size() != labels.size()) {
        throw DimensionError("mse_loss: " + std::to_string(predictions.size()) + " predictions for " +
                             std::to_string(labels.size()) + " labels");
    }
    if (predictions.empty()) throw DimensionError("mse_loss: empty input");
    double s = 0.0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const double d = predictions[i] - labels[i];
        s += d * d;
    }
    return s / static_cast<double>(labels.size());
}

LabelScaler LabelScaler::fit(std::span<const double> labels) {
    if (labels.empty()) throw DimensionError("cannot fit a label scaler to no labels");
    double mean = 0.0;
    for (double y : labels) mean += y;
    mean /= static_cast<double>(labels.size());
    double var = 0.0;
    for (double y : labels) var += (y - mean) * (y - mean);
    var /= static_cast<double>(labels.size());
    const double sd = std::sqrt(var);
    return {mean, sd > 1e-12 ? sd : 1.0};
}

namespace {

// Backward pass for one example. `g_pred` is dLoss/dPrediction. Key
// gradients are accumulated into `g_keys` (the projected keys) and folded
// into K_base and W_K once per batch.
void backward(const ModelParams& params, const GeoContext& geo, const AttentionConfig& cfg,
              const detail::ProjectedKeys& keys, const detail::ForwardCache& fc, double g_pred, ModelParams& grad,
              detail::ProjectedKeys& g_keys) {
    const bool pre_norm = cfg.block == BlockStyle::pre_norm_ffn;
    const bool bypass = cfg.weighting == Weighting::bypass;
    const auto dv = static_cast<Eigen::Index>(cfg.value_dim());
    const double inv_sqrt_dk = 1.0 / std::sqrt(static_cast<double>(cfg.key_dim()));

    grad.head_weights += g_pred * fc.final_state;
    grad.head_bias += g_pred;
    Vector g_state = g_pred * params.head_weights;

    for (std::size_t l = cfg.layers; l-- > 0;) {
        const LayerParams& p = params.layers[l];
        LayerParams& gp = grad.layers[l];
        const detail::LayerCache& lc = fc.layers[l];

        Vector g_mid = g_state;
        if (pre_norm) {
            gp.ffn_out += lc.ffn_hidden * g_state.transpose();
            gp.ffn_out_bias += g_state;
            Vector g_pre = p.ffn_out * g_state;
            for (Eigen::Index i = 0; i < g_pre.size(); ++i) {
                if (!(lc.ffn_pre(i) > 0.0)) g_pre(i) = 0.0;
            }
            gp.ffn_in += lc.ffn_input * g_pre.transpose();
            gp.ffn_in_bias += g_pre;
            const Vector g_ffn_input = p.ffn_in * g_pre;
            g_mid += detail::layer_norm_backward(g_ffn_input, lc.norm2, p.norm2_gain, gp.norm2_gain, gp.norm2_bias);
        }

        // Residual path plus the attention branch.
        Vector g_input = g_mid;
        gp.output += lc.concat * g_mid.transpose();
        const Vector g_concat = p.output * g_mid;

        Vector g_attn_input = Vector::Zero(static_cast<Eigen::Index>(cfg.d_model));
        for (std::size_t i = 0; i < cfg.heads; ++i) {
            const detail::HeadCache& hc = lc.heads[i];
            const auto g_head = g_concat.segment(static_cast<Eigen::Index>(i) * dv, dv);

            // head = values^T coeffs
            gp.value[i] += geo.value_embeddings.transpose() * (hc.coeffs * g_head.transpose());
            Vector g_coeffs = hc.values * g_head;

            if (cfg.renormalize && hc.coeff_sum > 0.0) {
                g_coeffs = ((g_coeffs.array() - hc.coeffs.dot(g_coeffs)) / hc.coeff_sum).matrix();
            }
            const Vector g_scores = bypass ? g_coeffs : Vector(fc.weights.cwiseProduct(g_coeffs));
            const Vector g_logits = hc.scores.cwiseProduct((g_scores.array() - hc.scores.dot(g_scores)).matrix());

            const Vector g_query = keys[l][i].transpose() * g_logits * inv_sqrt_dk;
            g_keys[l][i] += g_logits * hc.query.transpose() * inv_sqrt_dk;

            gp.query[i] += lc.attn_input * g_query.transpose();
            g_attn_input += p.query[i] * g_query;
        }

        if (pre_norm) {
            g_input += detail::layer_norm_backward(g_attn_input, lc.norm1, p.norm1_gain, gp.norm1_gain, gp.norm1_bias);
        } else {
            g_input += g_attn_input;
        }
        g_state = std::move(g_input);
    }
}

}  // namespace

GradientResult gradients(const ModelParams& params, std::span<const Example> batch, const AttentionConfig& cfg,
                         double loss_scale) {
    if (batch.empty()) throw DimensionError("gradients: empty batch");
    check_shapes(params, cfg);
    const detail::ProjectedKeys keys = detail::project_keys(params);

    GradientResult out{zero_params(cfg), 0.0};
    detail::ProjectedKeys g_keys(cfg.layers);
    for (std::size_t l = 0; l < cfg.layers; ++l) {
        for (const Matrix& k : keys[l]) g_keys[l].push_back(Matrix::Zero(k.rows(), k.cols()));
    }

    const double n = static_cast<double>(batch.size());
    detail::ForwardCache fc;
    for (const Example& ex : batch) {
        const double y = detail::run_forward(params, ex.geo, cfg, keys, &fc, nullptr);
        const double r = y - ex.label;
        out.loss += r * r;
        backward(params, ex.geo, cfg, keys, fc, loss_scale * 2.0 * r / n, out.gradient, g_keys);
    }
    out.loss /= n;

    for (std::size_t l = 0; l < cfg.layers; ++l) {
        const LayerParams& p = params.layers[l];
        LayerParams& gp = out.gradient.layers[l];
        for (std::size_t i = 0; i < cfg.heads; ++i) {
            gp.key[i] += p.key_base.transpose() * g_keys[l][i];
            gp.key_base += g_keys[l][i] * p.key[i].transpose();
        }
    }
    return out;
}

TrainedModel train(ModelParams initial, std::span<const Example> dataset, const TrainConfig& train_cfg,
                   const AttentionConfig& cfg) {
    train_cfg.validate();
    if (dataset.empty()) throw DimensionError("train: empty dataset");
    check_shapes(initial, cfg);

    TrainedModel model{std::move(initial), {}, {}};
    std::vector<double> labels;
    labels.reserve(dataset.size());
    for (const Example& ex : dataset) labels.push_back(ex.label);
    if (train_cfg.standardize_labels) model.scaler = LabelScaler::fit(labels);

    std::vector<Example> scaled(dataset.begin(), dataset.end());
    for (Example& ex : scaled) ex.label = model.scaler.apply(ex.label);

    model.history = run_minibatches(model.params, std::span<const Example>(scaled), train_cfg,
                                    [&](const ModelParams& p, std::span<const Example> batch) {
                                        return gradients(p, batch, cfg);
                                    });
    return model;
}

TrainedModel train(std::span<const Example> dataset, const TrainConfig& train_cfg, const AttentionConfig& cfg) {
    return train(init_params(cfg, train_cfg.seed), dataset, train_cfg, cfg);
}

std::vector<double> predict_batch(const ModelParams& params, const LabelScaler& scaler,
                                  std::span<const Example> dataset, const AttentionConfig& cfg) {
    std::vector<double> out;
    out.reserve(dataset.size());
    if (dataset.empty()) return out;
    const detail::ProjectedKeys keys = detail::project_keys(params);
    for (const Example& ex : dataset) {
        out.push_back(scaler.invert(detail::run_forward(params, ex.geo, cfg, keys, nullptr, nullptr)));
    }
    return out;
}

}  // namespace urbancast
