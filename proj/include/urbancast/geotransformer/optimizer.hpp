#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "urbancast/errors.hpp"
#include "urbancast/geotransformer/training.hpp"

namespace urbancast {

// Adam or plain SGD over any parameter set that visit_params understands.
// Weight decay is decoupled: every step also scales each parameter by
// 1 - learning_rate * weight_decay.
template <typename Params>
class ParamOptimizer {
public:
    ParamOptimizer(const Params& shape, const TrainConfig& cfg) : cfg_(cfg), m_(shape), v_(shape) {
        auto zero = [](auto a, auto b) {
            std::fill(a.begin(), a.end(), 0.0);
            std::fill(b.begin(), b.end(), 0.0);
        };
        visit_params(zero, m_, v_);
    }

    void step(Params& params, const Params& grad) {
        ++t_;
        const double shrink = 1.0 - cfg_.learning_rate * cfg_.weight_decay;
        if (cfg_.optimizer == Optimizer::sgd) {
            const double lr = cfg_.learning_rate;
            visit_params(
                [lr, shrink](auto p, auto g) {
                    for (std::size_t i = 0; i < p.size(); ++i) p[i] = shrink * p[i] - lr * g[i];
                },
                params, grad);
            return;
        }
        const double b1 = cfg_.beta1;
        const double b2 = cfg_.beta2;
        const double c1 = 1.0 - std::pow(b1, static_cast<double>(t_));
        const double c2 = 1.0 - std::pow(b2, static_cast<double>(t_));
        const double lr = cfg_.learning_rate;
        const double eps = cfg_.epsilon;
        visit_params(
            [&](auto p, auto g, auto m, auto v) {
                for (std::size_t i = 0; i < p.size(); ++i) {
                    m[i] = b1 * m[i] + (1.0 - b1) * g[i];
                    v[i] = b2 * v[i] + (1.0 - b2) * g[i] * g[i];
                    p[i] = shrink * p[i] - lr * (m[i] / c1) / (std::sqrt(v[i] / c2) + eps);
                }
            },
            params, grad, m_, v_);
    }

private:
    TrainConfig cfg_;
    Params m_;
    Params v_;
    std::uint64_t t_ = 0;
};

// Shared minibatch loop: shuffles with the config seed each epoch, calls
// grad_fn(params, batch) -> {gradient, loss} and records the mean minibatch
// loss per epoch.
template <typename Params, typename Sample, typename GradFn>
std::vector<double> run_minibatches(Params& params, std::span<const Sample> data, const TrainConfig& cfg,
                                    GradFn&& grad_fn) {
    cfg.validate();
    if (data.empty()) throw DimensionError("training set is empty");
    ParamOptimizer<Params> opt(params, cfg);
    std::vector<std::size_t> order(data.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::mt19937_64 rng(cfg.seed ^ 0x5851f42d4c957f2dull);
    std::vector<double> history;
    history.reserve(cfg.epochs);
    std::vector<Sample> batch;
    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        // Fisher-Yates with explicit index draws so the order does not depend
        // on the standard library's shuffle.
        for (std::size_t i = order.size(); i > 1; --i) {
            std::swap(order[i - 1], order[static_cast<std::size_t>(rng() % i)]);
        }
        double total = 0.0;
        std::size_t batches = 0;
        for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
            const std::size_t end = std::min(order.size(), start + cfg.batch_size);
            batch.clear();
            for (std::size_t i = start; i < end; ++i) batch.push_back(data[order[i]]);
            auto [grad, loss] = [&] {
                try {
                    return grad_fn(params, std::span<const Sample>(batch));
                } catch (const DivergenceError& e) {
                    throw DivergenceError("epoch " + std::to_string(epoch) + ": " + e.what(),
                                          static_cast<std::int64_t>(epoch));
                }
            }();
            if (!std::isfinite(loss)) {
                throw DivergenceError("non-finite training loss in epoch " + std::to_string(epoch),
                                      static_cast<std::int64_t>(epoch));
            }
            opt.step(params, grad);
            total += loss;
            ++batches;
        }
        history.push_back(total / static_cast<double>(batches));
    }
    return history;
}

}  // namespace urbancast
