#pragma once

#include <filesystem>

#include "urbancast/region_store/region_database.hpp"

namespace urbancast {

// On-disk region bundle: a directory holding
//   manifest.json   {"dim", "count", "coordinate_unit": "meters", "entropy_cached"}
//   embeddings.f32  count x dim little-endian float32, rows in ascending id order
//   regions.jsonl   {"id", "x", "y", "description", "entropy"?} per line
//
// load_bundle validates every invariant and throws BundleError with a kind
// per failure; entropies are computed when the bundle does not carry them.
RegionDatabase load_bundle(const std::filesystem::path& dir);

// Writes the bundle (creating the directory if needed). Throws IoError.
void save_bundle(const RegionDatabase& db, const std::filesystem::path& dir);

}  // namespace urbancast
