#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "urbancast/region_store/region_database.hpp"
#include "urbancast/retrieval/language_model.hpp"
#include "urbancast/retrieval/prompt.hpp"
#include "urbancast/retrieval/text_embedder.hpp"

namespace urbancast {

enum class RetrievalMechanism { task_aware, random, latent_similarity, sparse };

const char* to_string(RetrievalMechanism m);
// Throws InputError for an unknown name.
RetrievalMechanism retrieval_mechanism_from_string(std::string_view name);

struct RetrievalConfig {
    std::size_t k = 121;  // k-NN candidate pool
    std::size_t n = 81;   // context regions returned (target not counted)
    RetrievalMechanism mechanism = RetrievalMechanism::task_aware;
    double lasso_lambda = 0.01;
    std::uint64_t seed = 0;
};

struct ContextEntry {
    RegionId id = 0;
    std::vector<float> embedding;
    double distance = 0.0;  // to the target centroid
    double entropy = 0.0;
    // Ranking score: cosine similarity, |lasso coefficient|, or NaN for
    // random picks and distance padding.
    double score = 0.0;
};

// Retrieved context Z_i of one target, in the order the mechanism ranked it.
struct ContextSet {
    RegionId target_id = 0;
    RetrievalMechanism mechanism = RetrievalMechanism::task_aware;
    std::vector<ContextEntry> entries;

    std::vector<RegionId> ids() const;
};

// Task-aware retrieval: prompt -> prototype -> cosine similarity between the
// prototype and each k-NN candidate's description; top n by (score desc, id asc).
ContextSet retrieve_task_aware(const RegionDatabase& db, RegionId target, const TaskSpec& task,
                               const RetrievalConfig& cfg, const LanguageModelClient& client,
                               const TextEmbedder& embedder);

// Same, with an already-inferred prototype text.
ContextSet retrieve_with_prototype(const RegionDatabase& db, RegionId target,
                                   std::string_view prototype, const RetrievalConfig& cfg,
                                   const TextEmbedder& embedder);

// Uniform sample of n distinct k-NN candidates, reproducible from
// (cfg.seed, target); entries sorted by id.
ContextSet retrieve_random(const RegionDatabase& db, RegionId target, const RetrievalConfig& cfg);

// Top n candidates by cosine similarity of latent embeddings to the target's.
ContextSet retrieve_latent_similarity(const RegionDatabase& db, RegionId target,
                                      const RetrievalConfig& cfg);

// Lasso of the target embedding on candidate embeddings; the n largest
// |coefficients| (nonzero only), padded in distance order when short.
ContextSet retrieve_sparse(const RegionDatabase& db, RegionId target, const RetrievalConfig& cfg);

// Dispatches on cfg.mechanism. `client` and `embedder` are only used by the
// task-aware mechanism and may be null otherwise.
ContextSet retrieve(const RegionDatabase& db, RegionId target, const TaskSpec& task,
                    const RetrievalConfig& cfg, const LanguageModelClient* client,
                    const TextEmbedder* embedder);

// Retrieves context for many targets with at most `max_in_flight` concurrent
// workers. Results follow the order of `targets` regardless of completion
// order; the first failure is rethrown after all workers stop.
std::vector<ContextSet> retrieve_many(const RegionDatabase& db, std::span<const RegionId> targets,
                                      const TaskSpec& task, const RetrievalConfig& cfg,
                                      const LanguageModelClient* client, const TextEmbedder* embedder,
                                      std::size_t max_in_flight = 4);

}  // namespace urbancast
