#pragma once

#include <random>
#include <span>
#include <vector>

#include "urbancast/geotransformer/attention.hpp"
#include "urbancast/geotransformer/training.hpp"
#include "urbancast/region_store/entropy.hpp"

namespace testutil {

inline urbancast::AttentionConfig tiny_config(urbancast::Weighting w = urbancast::Weighting::full) {
    urbancast::AttentionConfig cfg;
    cfg.d_model = 8;
    cfg.heads = 2;
    cfg.layers = 2;
    cfg.context_slots = 5;
    cfg.weighting = w;
    cfg.alpha = 0.3;
    return cfg;
}

// Slot 0 at distance 0, the rest up to 1 km away; entropies from the rows.
inline urbancast::GeoContext random_geo(std::size_t m, std::size_t dim, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> dist(1.0, 1000.0);
    std::normal_distribution<double> normal(0.0, 1.0);
    urbancast::GeoContext geo{urbancast::Vector::Zero(static_cast<long>(m)),
                              urbancast::Vector::Zero(static_cast<long>(m)),
                              urbancast::Matrix(static_cast<long>(m), static_cast<long>(dim))};
    for (long j = 0; j < static_cast<long>(m); ++j) {
        if (j > 0) geo.distances(j) = dist(rng);
        std::vector<double> row(dim);
        for (std::size_t c = 0; c < dim; ++c) {
            row[c] = normal(rng);
            geo.value_embeddings(j, static_cast<long>(c)) = row[c];
        }
        geo.entropies(j) = urbancast::region_entropy(std::span<const double>(row));
    }
    return geo;
}

inline std::vector<urbancast::Example> random_examples(std::size_t count, const urbancast::AttentionConfig& cfg,
                                                       unsigned seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<urbancast::Example> out;
    for (std::size_t i = 0; i < count; ++i) {
        out.push_back({random_geo(cfg.context_slots, cfg.d_model, rng), normal(rng)});
    }
    return out;
}

}  // namespace testutil
