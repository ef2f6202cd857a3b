#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "urbancast/geotransformer/attention.hpp"
#include "urbancast/geotransformer/mlp.hpp"
#include "urbancast/geotransformer/training.hpp"
#include "oracles/attention_oracle.hpp"

namespace oracle {

// Batch MSE computed through the public forward pass only.
inline double batch_mse(const urbancast::ModelParams& p, std::span<const urbancast::Example> batch,
                        const urbancast::AttentionConfig& cfg) {
    long double s = 0.0L;
    for (const auto& ex : batch) {
        const double r = urbancast::forward(p, ex.geo, cfg) - ex.label;
        s += static_cast<long double>(r) * r;
    }
    return static_cast<double>(s / static_cast<long double>(batch.size()));
}

// Batch MSE through the extended-precision scalar oracle: far less rounding
// noise than the 64-bit path, so tiny gradient components can be checked.
inline long double batch_mse_extended(const urbancast::ModelParams& p, std::span<const urbancast::Example> batch,
                                      const urbancast::AttentionConfig& cfg) {
    long double s = 0.0L;
    for (const auto& ex : batch) {
        const long double r = oracle::forward<long double>(p, to_vec(ex.geo.distances), to_vec(ex.geo.entropies),
                                                          to_mat(ex.geo.value_embeddings), cfg) -
                              ex.label;
        s += r * r;
    }
    return s / static_cast<long double>(batch.size());
}

inline double batch_mse(const urbancast::MlpParams& p, std::span<const urbancast::MlpExample> batch) {
    long double s = 0.0L;
    for (const auto& ex : batch) {
        const double r = urbancast::mlp_forward(p, ex.input) - ex.label;
        s += static_cast<long double>(r) * r;
    }
    return static_cast<double>(s / static_cast<long double>(batch.size()));
}

// Central differences of `loss(params)` for every parameter, in visit order.
template <typename Params, typename Loss>
std::vector<double> central_differences(Params params, Loss&& loss, double step = 1e-6) {
    std::vector<double> out;
    std::vector<std::span<double>> blocks;
    urbancast::visit_params([&](std::span<double> b) { blocks.push_back(b); }, params);
    for (auto block : blocks) {
        for (double& x : block) {
            const double saved = x;
            x = saved + step;
            const auto up = loss(params);
            x = saved - step;
            const auto down = loss(params);
            x = saved;
            // Divide by the step actually taken after rounding.
            using R = decltype(up);
            out.push_back(static_cast<double>((up - down) / (static_cast<R>(saved + step) - static_cast<R>(saved - step))));
        }
    }
    return out;
}

template <typename Params>
std::vector<double> flatten(const Params& p) {
    std::vector<double> out;
    urbancast::visit_params([&](std::span<const double> b) { out.insert(out.end(), b.begin(), b.end()); }, p);
    return out;
}

// |a - n| / max(|a|, |n|, floor). The floor keeps components that are zero
// up to rounding from dividing by nothing.
inline double relative_error(double analytic, double numeric, double floor = 1e-6) {
    return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), floor});
}

}  // namespace oracle
