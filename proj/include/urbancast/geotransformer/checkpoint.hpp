#pragma once

#include <cstdint>
#include <filesystem>

#include "urbancast/geotransformer/model.hpp"
#include "urbancast/geotransformer/training.hpp"

namespace urbancast {

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
    AttentionConfig config;
    ModelParams params;
    LabelScaler scaler;
};

// Layout, all little-endian: "UCGT", u32 version, u32 D, h, L, m, d_k, d_v,
// f64 alpha, u32 weighting, u32 block style, u32 renormalize, u32 d_ff,
// u64 parameter count, the parameters as f64 in visit_params order, then
// f64 label mean and f64 label scale.
// Throws IoError when the file cannot be written.
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint);

// Throws IoError when the file cannot be read and CheckpointError on a bad
// magic, version, truncated payload or trailing bytes.
Checkpoint load_checkpoint(const std::filesystem::path& path);

// Also throws CheckpointError when the header disagrees with `expected`.
Checkpoint load_checkpoint(const std::filesystem::path& path, const AttentionConfig& expected);

}  // namespace urbancast
