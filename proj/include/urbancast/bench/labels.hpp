#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "urbancast/bench/city.hpp"
#include "urbancast/retrieval/prompt.hpp"

namespace urbancast {

// label_i = base(category_i)
//         + sum over j != i of a relevant category with d_ij <= radius of
//               weight * value_j * (1 - d_ij / radius)
//         + N(0, noise_sigma^2)
// where value_j is 1, or low_information_value for low-information regions.
struct PlantedTask {
    TaskSpec spec{"ride_share_demand", "ride-share demand"};
    std::vector<std::string> relevant_categories{"transit", "commercial"};
    std::map<std::string, double> base{
        {"residential", 1.0}, {"park", 0.0}, {"transit", 2.0}, {"commercial", 1.5}, {"industrial", 0.5}};
    double weight = 1.0;
    double radius = 1500.0;
    double low_information_value = 0.2;
    double noise_sigma = 0.1;
    // What an ideal language model would answer for this task: the text the
    // offline mock returns.
    std::string prototype = "busy bus transit stops and a station, a commercial corridor with retail shops, "
                            "restaurants and offices";
};

enum class Split { train, test };

const char* to_string(Split s);

struct LabeledDataset {
    std::vector<RegionId> ids;
    std::vector<double> labels;
    std::vector<Split> split;                    // all train until split() runs
    std::vector<std::vector<RegionId>> relevant;  // ground-truth contributors per record, ascending

    std::vector<std::size_t> indices(Split s) const;
};

// Throws InputError when the radius is below the grid spacing or a relevant
// category is not in the city.
LabeledDataset plant_labels(const SyntheticCity& city, const SyntheticCityConfig& city_cfg, const PlantedTask& task,
                            std::uint64_t seed);

// Seeded permutation; the first ceil(fraction * N) records become train.
// Throws DimensionError for fewer than two records and InputError for a
// fraction outside (0, 1).
LabeledDataset split(LabeledDataset dataset, double fraction, std::uint64_t seed);

}  // namespace urbancast
