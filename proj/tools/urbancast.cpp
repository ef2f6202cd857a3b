#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "urbancast/bench/experiment.hpp"
#include "urbancast/bench/report.hpp"
#include "urbancast/errors.hpp"
#include "urbancast/geotransformer/checkpoint.hpp"
#include "urbancast/region_store/bundle.hpp"
#include "urbancast/retrieval/language_model.hpp"
#include "urbancast/retrieval/text_embedder.hpp"

namespace fs = std::filesystem;
using namespace urbancast;

namespace {

std::string env_or(const char* name, std::string fallback = {}) {
    const char* v = std::getenv(name);
    return v != nullptr && *v != '\0' ? std::string(v) : fallback;
}

ExperimentConfig load_config(const std::string& path) {
    return path.empty() ? default_experiment() : experiment_config_from_json(read_text_file(path));
}

// URBANCAST_LLM_URL selects a chat-completions endpoint; otherwise the mock
// answers `prototype` for the task phrase.
struct Clients {
    std::unique_ptr<LanguageModelClient> remote;
    std::unique_ptr<MockLanguageModel> mock;
    std::unique_ptr<PrototypeCache> cache;
    std::unique_ptr<CachingLanguageModel> cached;
    HashingEmbedder embedder;

    const LanguageModelClient* client() const {
        if (cached) return cached.get();
        if (remote) return remote.get();
        return mock.get();
    }
};

std::unique_ptr<Clients> make_clients(const TaskSpec& task, const std::string& prototype,
                                      const std::string& cache_path) {
    auto c = std::make_unique<Clients>();
    const std::string url = env_or("URBANCAST_LLM_URL");
    if (!url.empty()) {
        ChatEndpoint ep;
        ep.base_url = url;
        ep.api_key = env_or("URBANCAST_API_KEY");
        ep.model = env_or("URBANCAST_LLM_MODEL", "default");
        c->remote = std::make_unique<ChatCompletionClient>(ep);
    } else {
        c->mock = std::make_unique<MockLanguageModel>(CannedResponses{{task.task_text, prototype}});
    }
    if (!cache_path.empty()) {
        c->cache = std::make_unique<PrototypeCache>(cache_path);
        const LanguageModelClient& inner = c->remote ? *c->remote : static_cast<const LanguageModelClient&>(*c->mock);
        c->cached = std::make_unique<CachingLanguageModel>(inner, *c->cache);
    }
    return c;
}

struct TaskFile {
    TaskSpec spec;
    std::string prototype;
};

// {"name", "task_text", "prototype"?}; the prototype only feeds the mock.
TaskFile load_task(const std::string& path) {
    TaskFile t{PlantedTask{}.spec, PlantedTask{}.prototype};
    if (path.empty()) return t;
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(read_text_file(path));
        t.spec.name = doc.at("name").get<std::string>();
        t.spec.task_text = doc.at("task_text").get<std::string>();
        if (doc.contains("prototype")) t.prototype = doc["prototype"].get<std::string>();
    } catch (const nlohmann::json::exception& e) {
        throw InputError("task file " + path + ": " + e.what());
    }
    return t;
}

std::map<RegionId, ContextSet> load_contexts(const std::string& path) {
    std::map<RegionId, ContextSet> out;
    for (auto& c : contexts_from_jsonl(read_text_file(path))) {
        const RegionId id = c.target_id;
        out.emplace(id, std::move(c));
    }
    return out;
}

std::vector<Example> examples(const RegionDatabase& db, const LabeledDataset& labels,
                              const std::map<RegionId, ContextSet>& contexts, Split which) {
    std::vector<Example> out;
    for (std::size_t r : labels.indices(which)) {
        const auto it = contexts.find(labels.ids[r]);
        if (it == contexts.end()) throw InputError("no context for region " + std::to_string(labels.ids[r]));
        out.push_back({make_geo_context(db.at(labels.ids[r]).embedding, it->second), labels.labels[r]});
    }
    return out;
}

void ensure_parent(const fs::path& file) {
    if (file.has_parent_path()) fs::create_directories(file.parent_path());
}

int gen_city(const std::string& config_path, const fs::path& out, std::string labels_out) {
    const ExperimentConfig cfg = load_config(config_path);
    const ExperimentData data = prepare_data(cfg);
    save_bundle(data.city.db, out);
    if (labels_out.empty()) labels_out = (out / "labels.json").string();
    ensure_parent(labels_out);
    write_text_file(labels_out, labels_json(data.dataset, cfg.task.spec));
    std::cout << "wrote " << data.city.db.size() << " regions to " << out.string() << " and labels to "
              << labels_out << "\n";
    return 0;
}

int retrieve_cmd(const fs::path& bundle, const std::string& task_path, const std::string& mechanism,
                 std::size_t k, std::size_t n, std::uint64_t seed, std::size_t in_flight, const std::string& cache,
                 const fs::path& out) {
    const RegionDatabase db = load_bundle(bundle);
    const TaskFile task = load_task(task_path);
    RetrievalConfig rc;
    rc.k = k;
    rc.n = n;
    rc.mechanism = retrieval_mechanism_from_string(mechanism);
    rc.seed = seed;
    std::vector<RegionId> targets;
    for (const auto& r : db.records()) targets.push_back(r.id);
    const auto clients = make_clients(task.spec, task.prototype, cache);
    const auto contexts = retrieve_many(db, targets, task.spec, rc, clients->client(), &clients->embedder, in_flight);
    ensure_parent(out);
    write_text_file(out, contexts_jsonl(contexts));
    std::cout << "wrote " << contexts.size() << " context sets to " << out.string() << "\n";
    return 0;
}

int train_cmd(const fs::path& bundle, const std::string& labels_path, const std::string& ctx_path,
              const std::string& config_path, const fs::path& model_out) {
    const RegionDatabase db = load_bundle(bundle);
    const LabeledDataset labels = labels_from_json(read_text_file(labels_path));
    const auto contexts = load_contexts(ctx_path);
    ExperimentConfig cfg = load_config(config_path);
    cfg.model.d_model = db.dim();
    if (!contexts.empty()) cfg.model.context_slots = contexts.begin()->second.entries.size() + 1;
    cfg.model.validate();
    const auto train_set = examples(db, labels, contexts, Split::train);
    TrainConfig tc = cfg.train;
    tc.seed = SeedBundle::derive(cfg.seed).train;
    const TrainedModel model = train(train_set, tc, cfg.model);
    ensure_parent(model_out);
    save_checkpoint(model_out, {cfg.model, model.params, model.scaler});
    std::cout << "trained on " << train_set.size() << " regions; final loss " << model.history.back() << "; wrote "
              << model_out.string() << "\n";
    return 0;
}

int eval_cmd(const fs::path& model_path, const fs::path& bundle, const std::string& labels_path,
             const std::string& ctx_path, const fs::path& report_path) {
    const Checkpoint ck = load_checkpoint(model_path);
    const RegionDatabase db = load_bundle(bundle);
    const LabeledDataset labels = labels_from_json(read_text_file(labels_path));
    const auto contexts = load_contexts(ctx_path);

    MetricsReport report;
    report.decoder = to_string(Decoder::geotransformer);
    report.weighting = to_string(ck.config.weighting);
    std::vector<ContextSet> ordered;
    for (RegionId id : labels.ids) {
        const auto it = contexts.find(id);
        if (it == contexts.end()) throw InputError("no context for region " + std::to_string(id));
        ordered.push_back(it->second);
    }
    report.mechanism = ordered.empty() ? "" : to_string(ordered.front().mechanism);
    report.precision_at_n = retrieval_precision(ordered, labels);
    for (Split s : {Split::train, Split::test}) {
        const auto set = examples(db, labels, contexts, s);
        if (set.empty()) continue;
        const auto pred = predict_batch(ck.params, ck.scaler, set, ck.config);
        std::vector<double> y;
        for (const auto& e : set) y.push_back(e.label);
        (s == Split::train ? report.train : report.test) = compute_metrics(pred, y);
        (s == Split::train ? report.train_size : report.test_size) = set.size();
    }
    ensure_parent(report_path);
    write_text_file(report_path, report_json(report));
    std::cout << "test R2 " << report.test.r2 << ", MSE " << report.test.mse << "; wrote " << report_path.string()
              << "\n";
    return 0;
}

int ablate_cmd(const std::string& suite, std::size_t seed_count, const std::string& config_path,
               std::size_t parallel, const fs::path& report_path) {
    const ExperimentConfig cfg = load_config(config_path);
    std::vector<std::uint64_t> seeds;
    for (std::size_t s = 1; s <= seed_count; ++s) seeds.push_back(s);
    const auto clients = make_clients(cfg.task.spec, cfg.task.prototype, "");
    AblationTable table;
    if (suite == "retrieval") {
        table = ablate_retrieval(cfg, seeds, clients->client(), &clients->embedder, parallel);
    } else if (suite == "weighting") {
        table = ablate_weighting(cfg, seeds, clients->client(), &clients->embedder, parallel);
    } else {
        throw InputError("unknown suite \"" + suite + "\"; expected retrieval or weighting");
    }
    ensure_parent(report_path);
    const bool json = report_path.extension() == ".json";
    write_text_file(report_path, json ? table_json(table) : table_csv(table));
    for (const auto& row : table.summary()) {
        std::cout << row.variant << ": test R2 " << row.test_r2 << ", precision@n " << row.precision_at_n << "\n";
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Task-aware retrieval and geospatial attention for urban region prediction"};
    app.require_subcommand(1);

    std::string config;
    std::string out;
    std::string labels_out;
    auto* gen = app.add_subcommand("gen-city", "Generate a synthetic city bundle and planted labels");
    gen->add_option("--config", config, "Experiment config JSON (defaults apply when omitted)");
    gen->add_option("--out", out, "Bundle directory")->required();
    gen->add_option("--labels-out", labels_out, "Labels JSON (default: <out>/labels.json)");

    std::string bundle;
    std::string task;
    std::string mechanism = "task_aware";
    std::size_t k = 24;
    std::size_t n = 8;
    std::uint64_t seed = 0;
    std::size_t in_flight = 4;
    std::string cache;
    auto* ret = app.add_subcommand("retrieve", "Retrieve a context set for every region of a bundle");
    ret->add_option("--bundle", bundle, "Bundle directory")->required();
    ret->add_option("--task", task, "Task JSON {name, task_text, prototype?}");
    ret->add_option("--mechanism", mechanism, "task_aware | random | latent_similarity | sparse");
    ret->add_option("--k", k, "k-NN candidate pool");
    ret->add_option("--n", n, "Context regions per target");
    ret->add_option("--seed", seed, "Seed for random retrieval");
    ret->add_option("--max-in-flight", in_flight, "Concurrent language-model requests");
    ret->add_option("--prototype-cache", cache, "JSONL cache of language-model replies");
    ret->add_option("--out", out, "Context JSONL")->required();

    std::string labels;
    std::string ctx;
    std::string model;
    auto* tr = app.add_subcommand("train", "Train the attention decoder on the train split");
    tr->add_option("--bundle", bundle)->required();
    tr->add_option("--labels", labels)->required();
    tr->add_option("--ctx", ctx)->required();
    tr->add_option("--config", config, "Experiment config JSON for model and training settings");
    tr->add_option("--model-out", model)->required();

    std::string report;
    auto* ev = app.add_subcommand("eval", "Evaluate a checkpoint on both splits");
    ev->add_option("--model", model)->required();
    ev->add_option("--bundle", bundle)->required();
    ev->add_option("--labels", labels)->required();
    ev->add_option("--ctx", ctx)->required();
    ev->add_option("--report", report, "Report JSON")->required();

    std::string suite;
    std::size_t seeds = 5;
    std::size_t parallel = 1;
    auto* ab = app.add_subcommand("ablate", "Run a retrieval or weighting ablation over seeds 1..N");
    ab->add_option("--suite", suite, "retrieval | weighting")->required();
    ab->add_option("--seeds", seeds, "Number of seeds");
    ab->add_option("--config", config, "Experiment config JSON");
    ab->add_option("--parallel", parallel, "Runs in flight");
    ab->add_option("--report", report, "CSV table, or JSON when the name ends in .json")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (*gen) return gen_city(config, out, labels_out);
        if (*ret) return retrieve_cmd(bundle, task, mechanism, k, n, seed, in_flight, cache, out);
        if (*tr) return train_cmd(bundle, labels, ctx, config, model);
        if (*ev) return eval_cmd(model, bundle, labels, ctx, report);
        if (*ab) return ablate_cmd(suite, seeds, config, parallel, report);
    } catch (const std::exception& e) {
        std::cerr << "urbancast: " << e.what() << "\n";
        return 1;
    }
    return 2;
}
