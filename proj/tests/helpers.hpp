#pragma once

#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "urbancast/region_store/region_database.hpp"

namespace testutil {

// rows x cols grid with the given spacing; ids row-major from 0.
inline urbancast::RegionDatabase grid_db(int rows, int cols, std::size_t dim, unsigned seed = 1,
                                         double spacing = 1.0) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<float> normal(0.0f, 1.0f);
    std::vector<urbancast::RegionRecord> records;
    for (int r = 0; r < rows; ++r) {
        for (int c = 0; c < cols; ++c) {
            std::vector<float> z(dim);
            for (auto& v : z) v = normal(rng);
            records.push_back(urbancast::RegionRecord::make(
                r * cols + c, {c * spacing, r * spacing}, std::move(z),
                "region " + std::to_string(r * cols + c)));
        }
    }
    return urbancast::RegionDatabase(dim, std::move(records));
}

// Regions scattered uniformly over a square; coordinates are snapped to a
// coarse lattice so that distance ties occur.
inline urbancast::RegionDatabase random_db(std::size_t count, std::size_t dim, unsigned seed,
                                           bool lattice = true) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> coord(0.0, 1000.0);
    std::uniform_int_distribution<int> cell(0, 20);
    std::normal_distribution<float> normal(0.0f, 1.0f);
    std::vector<urbancast::RegionRecord> records;
    for (std::size_t i = 0; i < count; ++i) {
        urbancast::GeoPoint p = lattice ? urbancast::GeoPoint{cell(rng) * 50.0, cell(rng) * 50.0}
                                        : urbancast::GeoPoint{coord(rng), coord(rng)};
        std::vector<float> z(dim);
        for (auto& v : z) v = normal(rng);
        records.push_back(urbancast::RegionRecord::make(static_cast<urbancast::RegionId>(i * 3 + 1), p,
                                                        std::move(z), "r" + std::to_string(i)));
    }
    return urbancast::RegionDatabase(dim, std::move(records));
}

// Fresh scratch directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / ("urbancast_test_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

}  // namespace testutil
