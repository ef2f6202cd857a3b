#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "urbancast/bench/city.hpp"
#include "urbancast/bench/labels.hpp"
#include "urbancast/bench/metrics.hpp"
#include "urbancast/geotransformer/attention.hpp"
#include "urbancast/geotransformer/mlp.hpp"
#include "urbancast/geotransformer/training.hpp"
#include "urbancast/retrieval/retrieval.hpp"

namespace urbancast {

// Every random stream of one experiment, derived from a single base seed.
struct SeedBundle {
    std::uint64_t city = 0;
    std::uint64_t labels = 0;
    std::uint64_t split = 0;
    std::uint64_t retrieval = 0;
    std::uint64_t train = 0;

    static SeedBundle derive(std::uint64_t base);
};

enum class Decoder { geotransformer, mlp };

const char* to_string(Decoder d);
Decoder decoder_from_string(std::string_view name);

struct ExperimentConfig {
    SyntheticCityConfig city;
    PlantedTask task;
    RetrievalConfig retrieval;
    AttentionConfig model;
    TrainConfig train;
    Decoder decoder = Decoder::geotransformer;
    MlpConfig mlp;
    double train_fraction = 0.8;
    std::uint64_t seed = 0;
    std::size_t max_in_flight = 4;  // concurrent retrieval requests

    // Throws InputError when the model's slot count is not n + 1 or its
    // width differs from the city's embedding dimension.
    void validate() const;
};

// The desk-scale benchmark: 12 x 12 city, k = 24, n = 8, D = 64, h = 4, L = 2.
ExperimentConfig default_experiment();

struct MetricsReport {
    std::string decoder;
    std::string mechanism;
    std::string weighting;
    std::uint64_t seed = 0;
    Metrics train;
    Metrics test;
    std::size_t train_size = 0;
    std::size_t test_size = 0;
    double precision_at_n = 0.0;  // mean over all targets
    std::string fingerprint;      // SHA-256 of city, labels and split
    std::vector<double> loss_history;
};

// City, labels and split for a config: the part every ablation row shares.
struct ExperimentData {
    SyntheticCity city;
    LabeledDataset dataset;
    std::string fingerprint;
};

ExperimentData prepare_data(const ExperimentConfig& cfg);

// Lowercase hex SHA-256 over a canonical byte encoding of the database,
// labels, split assignment and relevant sets.
std::string dataset_fingerprint(const SyntheticCity& city, const LabeledDataset& dataset);

// Mean over targets of |Z_i ∩ G_i| / |Z_i|, where G_i are the planted
// contributors of record i. Contexts must follow dataset order.
double retrieval_precision(std::span<const ContextSet> contexts, const LabeledDataset& dataset);

// generate -> plant -> split -> retrieve for every record -> train on the
// train split -> metrics on both splits. Null clients select the offline
// mock language model (answering the task's prototype) and the hashing
// embedder.
MetricsReport run_experiment(const ExperimentConfig& cfg, const LanguageModelClient* client = nullptr,
                             const TextEmbedder* embedder = nullptr);

struct AblationRow {
    std::string variant;
    double train_r2 = 0.0;
    double test_r2 = 0.0;
    double test_mse = 0.0;
    double test_mae = 0.0;
    double precision_at_n = 0.0;
};

struct AblationTable {
    std::string suite;  // "retrieval" or "weighting"
    std::vector<std::string> variants;
    std::vector<std::uint64_t> seeds;
    std::vector<MetricsReport> runs;  // variant-major: runs[v * seeds.size() + s]

    const MetricsReport& run(std::size_t variant, std::size_t seed) const {
        return runs[variant * seeds.size() + seed];
    }
    // Per-variant means over seeds, in variant order.
    std::vector<AblationRow> summary() const;
};

// One run per (mechanism, seed) over {random, latent_similarity, sparse,
// task_aware}. Throws Error if rows of one seed do not share a fingerprint.
AblationTable ablate_retrieval(const ExperimentConfig& base, std::span<const std::uint64_t> seeds,
                               const LanguageModelClient* client = nullptr, const TextEmbedder* embedder = nullptr,
                               std::size_t parallelism = 1);

// One run per (weighting, seed) over {full, spatial_only, entropy_only, none}
// with task-aware retrieval.
AblationTable ablate_weighting(const ExperimentConfig& base, std::span<const std::uint64_t> seeds,
                               const LanguageModelClient* client = nullptr, const TextEmbedder* embedder = nullptr,
                               std::size_t parallelism = 1);

}  // namespace urbancast
