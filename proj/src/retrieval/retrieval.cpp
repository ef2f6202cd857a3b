#include "urbancast/retrieval/retrieval.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <numeric>
#include <random>
#include <thread>

#include "urbancast/errors.hpp"
#include "urbancast/retrieval/lasso.hpp"

namespace urbancast {

const char* to_string(RetrievalMechanism m) {
    switch (m) {
        case RetrievalMechanism::task_aware: return "task_aware";
        case RetrievalMechanism::random: return "random";
        case RetrievalMechanism::latent_similarity: return "latent_similarity";
        case RetrievalMechanism::sparse: return "sparse";
    }
    return "unknown";
}

RetrievalMechanism retrieval_mechanism_from_string(std::string_view name) {
    for (auto m : {RetrievalMechanism::task_aware, RetrievalMechanism::random,
                   RetrievalMechanism::latent_similarity, RetrievalMechanism::sparse}) {
        if (name == to_string(m)) return m;
    }
    throw InputError("unknown retrieval mechanism \"" + std::string(name) + "\"");
}

std::vector<RegionId> ContextSet::ids() const {
    std::vector<RegionId> out;
    out.reserve(entries.size());
    for (const auto& e : entries) out.push_back(e.id);
    return out;
}

namespace {

struct Scored {
    Neighbor neighbor;
    double score;
};

ContextEntry make_entry(const RegionDatabase& db, const Neighbor& n, double score) {
    const RegionRecord& r = db.at(n.id);
    return {r.id, r.embedding, n.distance, r.entropy, score};
}

// Keeps the n best by (score desc, id asc).
ContextSet top_by_score(const RegionDatabase& db, RegionId target, RetrievalMechanism mechanism,
                        std::vector<Scored> scored, std::size_t n) {
    std::sort(scored.begin(), scored.end(), [](const Scored& a, const Scored& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.neighbor.id < b.neighbor.id;
    });
    ContextSet out{target, mechanism, {}};
    const std::size_t take = std::min(n, scored.size());
    out.entries.reserve(take);
    for (std::size_t i = 0; i < take; ++i) {
        out.entries.push_back(make_entry(db, scored[i].neighbor, scored[i].score));
    }
    return out;
}

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

}  // namespace

ContextSet retrieve_with_prototype(const RegionDatabase& db, RegionId target,
                                   std::string_view prototype, const RetrievalConfig& cfg,
                                   const TextEmbedder& embedder) {
    const auto candidates = db.nearest(target, cfg.k);
    const std::vector<double> query = embed_text(embedder, prototype);
    std::vector<Scored> scored;
    scored.reserve(candidates.size());
    for (const Neighbor& c : candidates) {
        const std::vector<double> doc = embed_text(embedder, db.at(c.id).description);
        scored.push_back({c, cosine_similarity(query, doc)});
    }
    return top_by_score(db, target, RetrievalMechanism::task_aware, std::move(scored), cfg.n);
}

ContextSet retrieve_task_aware(const RegionDatabase& db, RegionId target, const TaskSpec& task,
                               const RetrievalConfig& cfg, const LanguageModelClient& client,
                               const TextEmbedder& embedder) {
    const RegionRecord& origin = db.at(target);
    const PrototypeQuery prototype = infer_prototype(client, build_prompt(task, origin.description));
    return retrieve_with_prototype(db, target, prototype.text, cfg, embedder);
}

ContextSet retrieve_random(const RegionDatabase& db, RegionId target, const RetrievalConfig& cfg) {
    auto candidates = db.nearest(target, cfg.k);
    std::mt19937_64 rng(splitmix64(cfg.seed ^ splitmix64(static_cast<std::uint64_t>(target))));
    const std::size_t take = std::min(cfg.n, candidates.size());
    // Partial Fisher-Yates: the first `take` slots become a uniform sample.
    for (std::size_t i = 0; i < take; ++i) {
        std::uniform_int_distribution<std::size_t> pick(i, candidates.size() - 1);
        std::swap(candidates[i], candidates[pick(rng)]);
    }
    candidates.resize(take);
    std::sort(candidates.begin(), candidates.end(),
              [](const Neighbor& a, const Neighbor& b) { return a.id < b.id; });
    ContextSet out{target, RetrievalMechanism::random, {}};
    for (const Neighbor& c : candidates) out.entries.push_back(make_entry(db, c, NAN));
    return out;
}

ContextSet retrieve_latent_similarity(const RegionDatabase& db, RegionId target,
                                      const RetrievalConfig& cfg) {
    const RegionRecord& origin = db.at(target);
    const auto candidates = db.nearest(target, cfg.k);
    std::vector<Scored> scored;
    scored.reserve(candidates.size());
    for (const Neighbor& c : candidates) {
        scored.push_back({c, cosine_similarity(origin.embedding, db.at(c.id).embedding)});
    }
    return top_by_score(db, target, RetrievalMechanism::latent_similarity, std::move(scored), cfg.n);
}

ContextSet retrieve_sparse(const RegionDatabase& db, RegionId target, const RetrievalConfig& cfg) {
    const RegionRecord& origin = db.at(target);
    const auto candidates = db.nearest(target, cfg.k);
    const auto dim = static_cast<Eigen::Index>(db.dim());

    Eigen::MatrixXd design(dim, static_cast<Eigen::Index>(candidates.size()));
    for (std::size_t j = 0; j < candidates.size(); ++j) {
        const auto& z = db.at(candidates[j].id).embedding;
        for (Eigen::Index i = 0; i < dim; ++i) design(i, static_cast<Eigen::Index>(j)) = z[i];
    }
    Eigen::VectorXd response(dim);
    for (Eigen::Index i = 0; i < dim; ++i) response(i) = origin.embedding[i];

    const LassoResult fit = lasso_fit(design, response, cfg.lasso_lambda);

    std::vector<Scored> nonzero;
    std::vector<Neighbor> rest;  // stays in distance order
    for (std::size_t j = 0; j < candidates.size(); ++j) {
        const double c = fit.coefficients(static_cast<Eigen::Index>(j));
        if (c != 0.0) {
            nonzero.push_back({candidates[j], std::abs(c)});
        } else {
            rest.push_back(candidates[j]);
        }
    }
    ContextSet out = top_by_score(db, target, RetrievalMechanism::sparse, std::move(nonzero), cfg.n);
    for (const Neighbor& c : rest) {
        if (out.entries.size() >= cfg.n) break;
        out.entries.push_back(make_entry(db, c, NAN));
    }
    return out;
}

ContextSet retrieve(const RegionDatabase& db, RegionId target, const TaskSpec& task,
                    const RetrievalConfig& cfg, const LanguageModelClient* client,
                    const TextEmbedder* embedder) {
    switch (cfg.mechanism) {
        case RetrievalMechanism::task_aware:
            if (client == nullptr || embedder == nullptr) {
                throw InputError("task-aware retrieval needs a language model and a text embedder");
            }
            return retrieve_task_aware(db, target, task, cfg, *client, *embedder);
        case RetrievalMechanism::random: return retrieve_random(db, target, cfg);
        case RetrievalMechanism::latent_similarity: return retrieve_latent_similarity(db, target, cfg);
        case RetrievalMechanism::sparse: return retrieve_sparse(db, target, cfg);
    }
    throw InputError("unknown retrieval mechanism");
}

std::vector<ContextSet> retrieve_many(const RegionDatabase& db, std::span<const RegionId> targets,
                                      const TaskSpec& task, const RetrievalConfig& cfg,
                                      const LanguageModelClient* client, const TextEmbedder* embedder,
                                      std::size_t max_in_flight) {
    std::vector<ContextSet> out(targets.size());
    const std::size_t workers = std::clamp<std::size_t>(max_in_flight, 1, std::max<std::size_t>(targets.size(), 1));

    std::atomic<std::size_t> next{0};
    std::atomic<bool> failed{false};
    std::exception_ptr first_error;
    std::mutex error_mutex;

    auto work = [&] {
        while (!failed.load()) {
            const std::size_t i = next.fetch_add(1);
            if (i >= targets.size()) return;
            try {
                out[i] = retrieve(db, targets[i], task, cfg, client, embedder);
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (!first_error) first_error = std::current_exception();
                failed.store(true);
            }
        }
    };

    if (workers == 1) {
        work();
    } else {
        std::vector<std::jthread> pool;
        pool.reserve(workers);
        for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
    }
    if (first_error) std::rethrow_exception(first_error);
    return out;
}

}  // namespace urbancast
