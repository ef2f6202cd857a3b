#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "urbancast/bench/experiment.hpp"

namespace urbancast {

// Reports. Non-finite R^2 values are written as the strings "-inf", "inf"
// or "nan" since JSON has no literal for them.
std::string report_json(const MetricsReport& report);
std::string table_json(const AblationTable& table);

// One row per (variant, seed) followed by one "mean" row per variant.
// Numbers use %.17g so they round-trip exactly.
std::string table_csv(const AblationTable& table);

// Labels file: {"task", "records": [{"id", "label", "split", "relevant"}]}.
std::string labels_json(const LabeledDataset& dataset, const TaskSpec& task);
// Throws InputError on malformed input.
LabeledDataset labels_from_json(std::string_view text);

// One ContextSet per line.
std::string contexts_jsonl(std::span<const ContextSet> contexts);
std::vector<ContextSet> contexts_from_jsonl(std::string_view text);

// Applies the keys present in a JSON object on top of `base`. Recognised:
// seed, train_fraction, decoder, city.{rows, cols, spacing, dim, noise_sigma,
// low_information_fraction, spike}, retrieval.{k, n, mechanism, lasso_lambda},
// model.{heads, layers, d_k, d_v, alpha, weighting, renormalize, block, d_ff},
// train.{learning_rate, epochs, batch_size, optimizer, standardize,
// weight_decay}, mlp.hidden. The model's width and slot count follow the city and retrieval.
// Throws InputError on unknown keys or wrong types.
ExperimentConfig experiment_config_from_json(std::string_view text, ExperimentConfig base = default_experiment());

// Throw IoError on failure.
std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view content);

}  // namespace urbancast
