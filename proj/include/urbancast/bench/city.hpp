#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "urbancast/region_store/region_database.hpp"

namespace urbancast {

struct CategorySpec {
    std::string name;
    std::uint64_t prototype_seed = 0;  // the category's mean embedding is drawn from this alone
    std::string description;           // every region of the category gets this text
    double frequency = 0.0;
};

// The five-category land-use mix used by the default benchmark.
std::vector<CategorySpec> default_categories();

struct SyntheticCityConfig {
    std::size_t rows = 12;
    std::size_t cols = 12;
    double spacing = 500.0;  // metres between neighbouring centroids
    std::size_t dim = 64;
    std::vector<CategorySpec> categories = default_categories();
    double noise_sigma = 0.3;
    // Share of regions whose embedding is dominated by one large component,
    // which gives them near-zero entropy. They stand in for tiles the encoder
    // captured poorly (cloud cover, water, blank roofs).
    double low_information_fraction = 0.3;
    double spike = 8.0;
    std::uint64_t seed = 0;

    // Throws InputError on an empty grid, fewer than two regions, negative or
    // non-summing frequencies, or non-positive spacing.
    void validate() const;
};

struct SyntheticCity {
    RegionDatabase db;
    std::vector<std::string> category_names;
    // Indexed by region id, which runs 0..rows*cols-1 in row-major order.
    std::vector<std::size_t> category;
    std::vector<bool> low_information;
};

// Grid of rows x cols regions. Each region draws a category, then its
// embedding is the category prototype plus N(0, noise_sigma^2) noise. A
// low-information region additionally gets +spike on one random component and
// -spike / (dim - 1) on every other one, so its coordinate sum is unchanged.
SyntheticCity generate_city(const SyntheticCityConfig& cfg);

}  // namespace urbancast
