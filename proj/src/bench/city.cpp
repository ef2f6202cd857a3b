#include "urbancast/bench/city.hpp"

#include <cmath>
#include <random>

#include "urbancast/errors.hpp"

namespace urbancast {

std::vector<CategorySpec> default_categories() {
    return {
        {"residential", 101, "quiet residential blocks of detached houses, townhomes and apartment buildings", 0.40},
        {"park", 102, "open green park land with trees, lawns, playgrounds and walking trails", 0.30},
        {"transit", 103, "bus transit stops next to a rail station and commuter parking", 0.15},
        {"commercial", 104, "commercial corridor lined with retail shops, restaurants and offices", 0.10},
        {"industrial", 105, "industrial warehouses, freight yards and manufacturing plants", 0.05},
    };
}

void SyntheticCityConfig::validate() const {
    if (rows == 0 || cols == 0 || rows * cols < 2) throw InputError("a city needs at least two regions");
    if (!(spacing > 0.0) || !std::isfinite(spacing)) throw InputError("spacing must be positive");
    if (dim == 0) throw InputError("embedding dimension must be positive");
    if (categories.empty()) throw InputError("a city needs at least one category");
    double total = 0.0;
    for (const auto& c : categories) {
        if (!(c.frequency >= 0.0) || !std::isfinite(c.frequency)) {
            throw InputError("category " + c.name + " has an invalid frequency");
        }
        if (c.description.empty()) throw InputError("category " + c.name + " has no description");
        total += c.frequency;
    }
    if (std::abs(total - 1.0) > 1e-9) throw InputError("category frequencies sum to " + std::to_string(total));
    if (!(noise_sigma >= 0.0)) throw InputError("noise_sigma must be non-negative");
    if (!(low_information_fraction >= 0.0 && low_information_fraction <= 1.0)) {
        throw InputError("low_information_fraction must lie in [0, 1]");
    }
}

SyntheticCity generate_city(const SyntheticCityConfig& cfg) {
    cfg.validate();

    std::vector<std::vector<double>> prototypes;
    for (const auto& c : cfg.categories) {
        std::mt19937_64 rng(c.prototype_seed);
        std::normal_distribution<double> normal(0.0, 1.0);
        std::vector<double> p(cfg.dim);
        for (double& x : p) x = normal(rng);
        prototypes.push_back(std::move(p));
    }

    std::vector<double> weights;
    for (const auto& c : cfg.categories) weights.push_back(c.frequency);
    std::discrete_distribution<std::size_t> pick(weights.begin(), weights.end());
    std::normal_distribution<double> noise(0.0, cfg.noise_sigma);
    std::bernoulli_distribution low_info(cfg.low_information_fraction);
    std::uniform_int_distribution<std::size_t> coordinate(0, cfg.dim - 1);
    std::mt19937_64 rng(cfg.seed);

    SyntheticCity city{RegionDatabase(cfg.dim, {}), {}, {}, {}};
    for (const auto& c : cfg.categories) city.category_names.push_back(c.name);

    std::vector<RegionRecord> records;
    const std::size_t n = cfg.rows * cfg.cols;
    records.reserve(n);
    for (std::size_t id = 0; id < n; ++id) {
        const std::size_t cat = pick(rng);
        std::vector<double> x(cfg.dim);
        for (std::size_t d = 0; d < cfg.dim; ++d) x[d] = prototypes[cat][d] + noise(rng);
        const bool poor = low_info(rng);
        if (poor) {
            const std::size_t k = coordinate(rng);
            const double rest = cfg.dim > 1 ? cfg.spike / static_cast<double>(cfg.dim - 1) : 0.0;
            for (std::size_t d = 0; d < cfg.dim; ++d) x[d] += d == k ? cfg.spike : -rest;
        }
        std::vector<float> z(x.begin(), x.end());
        const GeoPoint at{static_cast<double>(id % cfg.cols) * cfg.spacing,
                          static_cast<double>(id / cfg.cols) * cfg.spacing};
        records.push_back(RegionRecord::make(static_cast<RegionId>(id), at, std::move(z),
                                             cfg.categories[cat].description));
        city.category.push_back(cat);
        city.low_information.push_back(poor);
    }
    city.db = RegionDatabase(cfg.dim, std::move(records));
    return city;
}

}  // namespace urbancast
