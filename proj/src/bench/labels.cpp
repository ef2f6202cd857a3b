#include "urbancast/bench/labels.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "urbancast/errors.hpp"

namespace urbancast {

const char* to_string(Split s) { return s == Split::train ? "train" : "test"; }

std::vector<std::size_t> LabeledDataset::indices(Split s) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < split.size(); ++i) {
        if (split[i] == s) out.push_back(i);
    }
    return out;
}

LabeledDataset plant_labels(const SyntheticCity& city, const SyntheticCityConfig& city_cfg, const PlantedTask& task,
                            std::uint64_t seed) {
    if (!(task.radius >= city_cfg.spacing)) throw InputError("planted radius must be at least the grid spacing");
    std::vector<bool> relevant_category(city.category_names.size(), false);
    bool any = false;
    for (const auto& name : task.relevant_categories) {
        const auto it = std::find(city.category_names.begin(), city.category_names.end(), name);
        if (it == city.category_names.end()) throw InputError("unknown relevant category " + name);
        relevant_category[static_cast<std::size_t>(it - city.category_names.begin())] = true;
        any = true;
    }
    if (!any) throw InputError("a planted task needs at least one relevant category");

    const auto records = city.db.records();
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> noise(0.0, task.noise_sigma);

    LabeledDataset out;
    for (const RegionRecord& target : records) {
        const auto i = static_cast<std::size_t>(target.id);
        const auto base = task.base.find(city.category_names[city.category[i]]);
        double y = base != task.base.end() ? base->second : 0.0;
        std::vector<RegionId> contributors;
        for (const RegionRecord& other : records) {
            const auto j = static_cast<std::size_t>(other.id);
            if (j == i || !relevant_category[city.category[j]]) continue;
            const double d = euclidean_distance(target.centroid, other.centroid);
            if (d > task.radius) continue;
            const double value = city.low_information[j] ? task.low_information_value : 1.0;
            y += task.weight * value * (1.0 - d / task.radius);
            contributors.push_back(other.id);
        }
        y += task.noise_sigma > 0.0 ? noise(rng) : 0.0;
        out.ids.push_back(target.id);
        out.labels.push_back(y);
        out.split.push_back(Split::train);
        out.relevant.push_back(std::move(contributors));
    }
    return out;
}

LabeledDataset split(LabeledDataset dataset, double fraction, std::uint64_t seed) {
    const std::size_t n = dataset.ids.size();
    if (n < 2) throw DimensionError("cannot split fewer than two records");
    if (!(fraction > 0.0 && fraction < 1.0)) throw InputError("split fraction must lie in (0, 1)");
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::mt19937_64 rng(seed);
    for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[static_cast<std::size_t>(rng() % i)]);
    const auto train = static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(n) - 1e-9));
    for (std::size_t r = 0; r < n; ++r) dataset.split[order[r]] = r < train ? Split::train : Split::test;
    return dataset;
}

}  // namespace urbancast
