#include "urbancast/bench/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <exception>
#include <mutex>
#include <thread>

#include "urbancast/errors.hpp"
#include "urbancast/retrieval/language_model.hpp"
#include "urbancast/retrieval/text_embedder.hpp"

namespace urbancast {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

class ByteSink {
public:
    void u64(std::uint64_t v) {
        for (int i = 0; i < 8; ++i) bytes_.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
    }
    void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
    void f32(float v) {
        const auto bits = std::bit_cast<std::uint32_t>(v);
        for (int i = 0; i < 4; ++i) bytes_.push_back(static_cast<char>((bits >> (8 * i)) & 0xff));
    }
    void text(const std::string& s) {
        u64(s.size());
        bytes_ += s;
    }
    const std::string& bytes() const { return bytes_; }

private:
    std::string bytes_;
};

std::vector<Example> examples_for(const SyntheticCity& city, const LabeledDataset& data,
                                  std::span<const ContextSet> contexts, const std::vector<std::size_t>& rows) {
    std::vector<Example> out;
    out.reserve(rows.size());
    for (std::size_t r : rows) {
        out.push_back({make_geo_context(city.db.at(data.ids[r]).embedding, contexts[r]), data.labels[r]});
    }
    return out;
}

std::vector<MlpExample> mlp_examples_for(const SyntheticCity& city, const LabeledDataset& data,
                                         const std::vector<std::size_t>& rows) {
    std::vector<MlpExample> out;
    out.reserve(rows.size());
    for (std::size_t r : rows) {
        const auto& z = city.db.at(data.ids[r]).embedding;
        Vector x(static_cast<Eigen::Index>(z.size()));
        for (std::size_t i = 0; i < z.size(); ++i) x(static_cast<Eigen::Index>(i)) = z[i];
        out.push_back({std::move(x), data.labels[r]});
    }
    return out;
}

std::vector<double> labels_of(const LabeledDataset& data, const std::vector<std::size_t>& rows) {
    std::vector<double> out;
    for (std::size_t r : rows) out.push_back(data.labels[r]);
    return out;
}

// Runs jobs 0..count-1 on up to `parallelism` threads; the first failure is
// rethrown once all workers stop.
template <typename Job>
void run_jobs(std::size_t count, std::size_t parallelism, Job&& job) {
    std::atomic<std::size_t> next{0};
    std::atomic<bool> failed{false};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto work = [&] {
        while (!failed.load()) {
            const std::size_t i = next.fetch_add(1);
            if (i >= count) return;
            try {
                job(i);
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (!error) error = std::current_exception();
                failed.store(true);
            }
        }
    };
    const std::size_t workers = std::clamp<std::size_t>(parallelism, 1, std::max<std::size_t>(count, 1));
    if (workers == 1) {
        work();
    } else {
        std::vector<std::jthread> pool;
        for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
    }
    if (error) std::rethrow_exception(error);
}

template <typename Variant, typename Apply>
AblationTable ablate(const std::string& suite, const std::vector<Variant>& variants,
                     const std::vector<std::string>& names, const ExperimentConfig& base,
                     std::span<const std::uint64_t> seeds, const LanguageModelClient* client,
                     const TextEmbedder* embedder, std::size_t parallelism, Apply&& apply) {
    if (seeds.empty()) throw InputError("an ablation needs at least one seed");
    AblationTable table{suite, names, std::vector<std::uint64_t>(seeds.begin(), seeds.end()), {}};
    table.runs.resize(variants.size() * seeds.size());
    run_jobs(table.runs.size(), parallelism, [&](std::size_t job) {
        ExperimentConfig cfg = base;
        cfg.seed = seeds[job % seeds.size()];
        apply(cfg, variants[job / seeds.size()]);
        table.runs[job] = run_experiment(cfg, client, embedder);
    });
    for (std::size_t s = 0; s < seeds.size(); ++s) {
        for (std::size_t v = 1; v < variants.size(); ++v) {
            if (table.run(v, s).fingerprint != table.run(0, s).fingerprint) {
                throw Error(suite + " ablation: rows for seed " + std::to_string(seeds[s]) +
                            " were run on different data");
            }
        }
    }
    return table;
}

}  // namespace

SeedBundle SeedBundle::derive(std::uint64_t base) {
    const std::uint64_t root = splitmix64(base);
    return {splitmix64(root ^ 1), splitmix64(root ^ 2), splitmix64(root ^ 3), splitmix64(root ^ 4),
            splitmix64(root ^ 5)};
}

const char* to_string(Decoder d) { return d == Decoder::geotransformer ? "geotransformer" : "mlp"; }

Decoder decoder_from_string(std::string_view name) {
    if (name == "geotransformer") return Decoder::geotransformer;
    if (name == "mlp") return Decoder::mlp;
    throw InputError("unknown decoder \"" + std::string(name) + "\"");
}

void ExperimentConfig::validate() const {
    city.validate();
    if (model.context_slots != retrieval.n + 1) {
        throw InputError("model expects " + std::to_string(model.context_slots) + " slots but retrieval returns n = " +
                         std::to_string(retrieval.n) + " regions plus the target");
    }
    if (retrieval.n > retrieval.k) throw InputError("retrieval n must not exceed k");
    if (retrieval.k + 1 > city.rows * city.cols) throw InputError("retrieval k exceeds the number of other regions");
    if (model.d_model != city.dim) throw InputError("model width differs from the city's embedding dimension");
    if (decoder == Decoder::mlp && mlp.input_dim != city.dim) {
        throw InputError("MLP input width differs from the city's embedding dimension");
    }
    model.validate();
    train.validate();
}

ExperimentConfig default_experiment() {
    ExperimentConfig cfg;
    cfg.retrieval.k = 24;
    cfg.retrieval.n = 8;
    cfg.retrieval.mechanism = RetrievalMechanism::task_aware;
    cfg.model.d_model = cfg.city.dim;
    cfg.model.heads = 4;
    cfg.model.layers = 2;
    cfg.model.context_slots = cfg.retrieval.n + 1;
    cfg.train.learning_rate = 1e-3;
    cfg.train.epochs = 40;
    cfg.train.batch_size = 16;
    cfg.train.weight_decay = 3.0;
    cfg.mlp.input_dim = cfg.city.dim;
    return cfg;
}

std::string dataset_fingerprint(const SyntheticCity& city, const LabeledDataset& dataset) {
    ByteSink sink;
    sink.u64(city.db.dim());
    for (const RegionRecord& r : city.db.records()) {
        sink.u64(static_cast<std::uint64_t>(r.id));
        sink.f64(r.centroid.x);
        sink.f64(r.centroid.y);
        for (float v : r.embedding) sink.f32(v);
        sink.text(r.description);
        sink.f64(r.entropy);
    }
    for (std::size_t i = 0; i < dataset.ids.size(); ++i) {
        sink.u64(static_cast<std::uint64_t>(dataset.ids[i]));
        sink.f64(dataset.labels[i]);
        sink.u64(dataset.split[i] == Split::train ? 0 : 1);
        sink.u64(dataset.relevant[i].size());
        for (RegionId id : dataset.relevant[i]) sink.u64(static_cast<std::uint64_t>(id));
    }
    return sha256_hex(sink.bytes());
}

ExperimentData prepare_data(const ExperimentConfig& cfg) {
    cfg.validate();
    const SeedBundle seeds = SeedBundle::derive(cfg.seed);
    SyntheticCityConfig city_cfg = cfg.city;
    city_cfg.seed = seeds.city;
    ExperimentData out{generate_city(city_cfg), {}, {}};
    out.dataset = split(plant_labels(out.city, city_cfg, cfg.task, seeds.labels), cfg.train_fraction, seeds.split);
    out.fingerprint = dataset_fingerprint(out.city, out.dataset);
    return out;
}

double retrieval_precision(std::span<const ContextSet> contexts, const LabeledDataset& dataset) {
    if (contexts.size() != dataset.ids.size()) throw DimensionError("one context set per record expected");
    if (contexts.empty()) throw DimensionError("retrieval_precision: no records");
    double total = 0.0;
    for (std::size_t i = 0; i < contexts.size(); ++i) {
        const auto& truth = dataset.relevant[i];
        const auto& entries = contexts[i].entries;
        if (entries.empty()) continue;
        std::size_t hits = 0;
        for (const auto& e : entries) hits += std::binary_search(truth.begin(), truth.end(), e.id) ? 1 : 0;
        total += static_cast<double>(hits) / static_cast<double>(entries.size());
    }
    return total / static_cast<double>(contexts.size());
}

MetricsReport run_experiment(const ExperimentConfig& cfg, const LanguageModelClient* client,
                             const TextEmbedder* embedder) {
    const ExperimentData data = prepare_data(cfg);
    const SeedBundle seeds = SeedBundle::derive(cfg.seed);

    const MockLanguageModel mock(CannedResponses{{cfg.task.spec.task_text, cfg.task.prototype}});
    const HashingEmbedder hashing;
    RetrievalConfig rc = cfg.retrieval;
    rc.seed = seeds.retrieval;
    const std::vector<ContextSet> contexts =
        retrieve_many(data.city.db, data.dataset.ids, cfg.task.spec, rc, client != nullptr ? client : &mock,
                      embedder != nullptr ? embedder : &hashing, cfg.max_in_flight);

    const auto train_rows = data.dataset.indices(Split::train);
    const auto test_rows = data.dataset.indices(Split::test);
    TrainConfig tc = cfg.train;
    tc.seed = seeds.train;

    MetricsReport report;
    report.decoder = to_string(cfg.decoder);
    report.mechanism = to_string(cfg.retrieval.mechanism);
    report.weighting = cfg.decoder == Decoder::geotransformer ? to_string(cfg.model.weighting) : "n/a";
    report.seed = cfg.seed;
    report.train_size = train_rows.size();
    report.test_size = test_rows.size();
    report.precision_at_n = retrieval_precision(contexts, data.dataset);
    report.fingerprint = data.fingerprint;

    std::vector<double> train_pred;
    std::vector<double> test_pred;
    if (cfg.decoder == Decoder::geotransformer) {
        const auto train_set = examples_for(data.city, data.dataset, contexts, train_rows);
        const auto test_set = examples_for(data.city, data.dataset, contexts, test_rows);
        const TrainedModel model = train(train_set, tc, cfg.model);
        train_pred = predict_batch(model.params, model.scaler, train_set, cfg.model);
        test_pred = predict_batch(model.params, model.scaler, test_set, cfg.model);
        report.loss_history = model.history;
    } else {
        const auto train_set = mlp_examples_for(data.city, data.dataset, train_rows);
        const auto test_set = mlp_examples_for(data.city, data.dataset, test_rows);
        const TrainedMlp model = train_mlp(train_set, tc, cfg.mlp);
        train_pred = predict_mlp(model.params, model.scaler, train_set);
        test_pred = predict_mlp(model.params, model.scaler, test_set);
        report.loss_history = model.history;
    }
    report.train = compute_metrics(train_pred, labels_of(data.dataset, train_rows));
    report.test = compute_metrics(test_pred, labels_of(data.dataset, test_rows));
    return report;
}

std::vector<AblationRow> AblationTable::summary() const {
    std::vector<AblationRow> rows;
    const double n = static_cast<double>(seeds.size());
    for (std::size_t v = 0; v < variants.size(); ++v) {
        AblationRow row{variants[v]};
        for (std::size_t s = 0; s < seeds.size(); ++s) {
            const MetricsReport& r = run(v, s);
            row.train_r2 += r.train.r2 / n;
            row.test_r2 += r.test.r2 / n;
            row.test_mse += r.test.mse / n;
            row.test_mae += r.test.mae / n;
            row.precision_at_n += r.precision_at_n / n;
        }
        rows.push_back(row);
    }
    return rows;
}

AblationTable ablate_retrieval(const ExperimentConfig& base, std::span<const std::uint64_t> seeds,
                               const LanguageModelClient* client, const TextEmbedder* embedder,
                               std::size_t parallelism) {
    const std::vector<RetrievalMechanism> variants{RetrievalMechanism::random, RetrievalMechanism::latent_similarity,
                                                   RetrievalMechanism::sparse, RetrievalMechanism::task_aware};
    std::vector<std::string> names;
    for (auto m : variants) names.emplace_back(to_string(m));
    return ablate("retrieval", variants, names, base, seeds, client, embedder, parallelism,
                  [](ExperimentConfig& cfg, RetrievalMechanism m) { cfg.retrieval.mechanism = m; });
}

AblationTable ablate_weighting(const ExperimentConfig& base, std::span<const std::uint64_t> seeds,
                               const LanguageModelClient* client, const TextEmbedder* embedder,
                               std::size_t parallelism) {
    const std::vector<Weighting> variants{Weighting::full, Weighting::spatial_only, Weighting::entropy_only,
                                          Weighting::none};
    std::vector<std::string> names;
    for (auto w : variants) names.emplace_back(to_string(w));
    ExperimentConfig fixed = base;
    fixed.retrieval.mechanism = RetrievalMechanism::task_aware;
    fixed.decoder = Decoder::geotransformer;
    return ablate("weighting", variants, names, fixed, seeds, client, embedder, parallelism,
                  [](ExperimentConfig& cfg, Weighting w) { cfg.model.weighting = w; });
}

}  // namespace urbancast
