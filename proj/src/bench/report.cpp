#include "urbancast/bench/report.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "urbancast/errors.hpp"

namespace urbancast {

using nlohmann::json;

namespace {

json number(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    return v;
}

double to_double(const json& j) {
    if (j.is_null()) return std::numeric_limits<double>::quiet_NaN();
    if (j.is_number()) return j.get<double>();
    if (j.is_string()) {
        const auto s = j.get<std::string>();
        if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
        if (s == "inf") return std::numeric_limits<double>::infinity();
        if (s == "-inf") return -std::numeric_limits<double>::infinity();
    }
    throw InputError("expected a number, got " + j.dump());
}

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

json metrics_json(const Metrics& m) { return {{"mse", number(m.mse)}, {"mae", number(m.mae)}, {"r2", number(m.r2)}}; }

json report_object(const MetricsReport& r) {
    return {{"decoder", r.decoder},
            {"mechanism", r.mechanism},
            {"weighting", r.weighting},
            {"seed", r.seed},
            {"train", metrics_json(r.train)},
            {"test", metrics_json(r.test)},
            {"train_size", r.train_size},
            {"test_size", r.test_size},
            {"precision_at_n", number(r.precision_at_n)},
            {"fingerprint", r.fingerprint},
            {"loss_history", r.loss_history}};
}

json parse(std::string_view text, const char* what) {
    try {
        return json::parse(text);
    } catch (const json::exception& e) {
        throw InputError(std::string(what) + ": " + e.what());
    }
}

template <typename T>
void take(const json& obj, const char* key, T& out) {
    if (!obj.contains(key)) return;
    try {
        out = obj.at(key).get<T>();
    } catch (const json::exception&) {
        throw InputError(std::string("config key \"") + key + "\" has the wrong type");
    }
}

void reject_unknown(const json& obj, std::initializer_list<const char*> known, const std::string& where) {
    if (!obj.is_object()) throw InputError("config section \"" + where + "\" must be an object");
    for (const auto& [key, _] : obj.items()) {
        bool ok = false;
        for (const char* k : known) ok = ok || key == k;
        if (!ok) throw InputError("unknown config key \"" + where + key + "\"");
    }
}

}  // namespace

std::string report_json(const MetricsReport& report) { return report_object(report).dump(2) + "\n"; }

std::string table_json(const AblationTable& table) {
    json runs = json::array();
    for (const auto& r : table.runs) runs.push_back(report_object(r));
    json summary = json::array();
    for (const auto& row : table.summary()) {
        summary.push_back({{"variant", row.variant},
                           {"train_r2", number(row.train_r2)},
                           {"test_r2", number(row.test_r2)},
                           {"test_mse", number(row.test_mse)},
                           {"test_mae", number(row.test_mae)},
                           {"precision_at_n", number(row.precision_at_n)}});
    }
    return json{{"suite", table.suite}, {"variants", table.variants}, {"seeds", table.seeds},
                {"runs", runs}, {"summary", summary}}
               .dump(2) +
           "\n";
}

std::string table_csv(const AblationTable& table) {
    std::ostringstream out;
    out << "suite,variant,seed,train_r2,test_r2,test_mse,test_mae,precision_at_n\n";
    for (std::size_t v = 0; v < table.variants.size(); ++v) {
        for (std::size_t s = 0; s < table.seeds.size(); ++s) {
            const auto& r = table.run(v, s);
            out << table.suite << ',' << table.variants[v] << ',' << table.seeds[s] << ',' << fmt(r.train.r2) << ','
                << fmt(r.test.r2) << ',' << fmt(r.test.mse) << ',' << fmt(r.test.mae) << ','
                << fmt(r.precision_at_n) << '\n';
        }
    }
    for (const auto& row : table.summary()) {
        out << table.suite << ',' << row.variant << ",mean," << fmt(row.train_r2) << ',' << fmt(row.test_r2) << ','
            << fmt(row.test_mse) << ',' << fmt(row.test_mae) << ',' << fmt(row.precision_at_n) << '\n';
    }
    return out.str();
}

std::string labels_json(const LabeledDataset& dataset, const TaskSpec& task) {
    json records = json::array();
    for (std::size_t i = 0; i < dataset.ids.size(); ++i) {
        records.push_back({{"id", dataset.ids[i]},
                           {"label", dataset.labels[i]},
                           {"split", to_string(dataset.split[i])},
                           {"relevant", dataset.relevant[i]}});
    }
    return json{{"task", {{"name", task.name}, {"task_text", task.task_text}}}, {"records", records}}.dump() + "\n";
}

LabeledDataset labels_from_json(std::string_view text) {
    const json doc = parse(text, "labels file");
    LabeledDataset out;
    try {
        for (const auto& r : doc.at("records")) {
            out.ids.push_back(r.at("id").get<RegionId>());
            out.labels.push_back(r.at("label").get<double>());
            const auto s = r.at("split").get<std::string>();
            if (s != "train" && s != "test") throw InputError("labels file: unknown split \"" + s + "\"");
            out.split.push_back(s == "train" ? Split::train : Split::test);
            out.relevant.push_back(r.at("relevant").get<std::vector<RegionId>>());
        }
    } catch (const json::exception& e) {
        throw InputError(std::string("labels file: ") + e.what());
    }
    return out;
}

std::string contexts_jsonl(std::span<const ContextSet> contexts) {
    std::string out;
    for (const auto& c : contexts) {
        json entries = json::array();
        for (const auto& e : c.entries) {
            entries.push_back({{"id", e.id},
                               {"embedding", e.embedding},
                               {"distance", e.distance},
                               {"entropy", e.entropy},
                               {"score", std::isfinite(e.score) ? json(e.score) : json(nullptr)}});
        }
        out += json{{"target_id", c.target_id}, {"mechanism", to_string(c.mechanism)}, {"entries", entries}}.dump();
        out += '\n';
    }
    return out;
}

std::vector<ContextSet> contexts_from_jsonl(std::string_view text) {
    std::vector<ContextSet> out;
    std::istringstream in{std::string(text)};
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const json doc = parse(line, ("context line " + std::to_string(line_no)).c_str());
        try {
            ContextSet c;
            c.target_id = doc.at("target_id").get<RegionId>();
            c.mechanism = retrieval_mechanism_from_string(doc.at("mechanism").get<std::string>());
            for (const auto& e : doc.at("entries")) {
                c.entries.push_back({e.at("id").get<RegionId>(), e.at("embedding").get<std::vector<float>>(),
                                     e.at("distance").get<double>(), e.at("entropy").get<double>(),
                                     to_double(e.at("score"))});
            }
            out.push_back(std::move(c));
        } catch (const json::exception& e) {
            throw InputError("context line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return out;
}

ExperimentConfig experiment_config_from_json(std::string_view text, ExperimentConfig cfg) {
    const json doc = parse(text, "config");
    reject_unknown(doc, {"seed", "train_fraction", "decoder", "city", "retrieval", "model", "train", "mlp"}, "");
    take(doc, "seed", cfg.seed);
    take(doc, "train_fraction", cfg.train_fraction);
    if (doc.contains("decoder")) cfg.decoder = decoder_from_string(doc["decoder"].get<std::string>());
    std::string name;
    if (doc.contains("city")) {
        const json& c = doc["city"];
        reject_unknown(c, {"rows", "cols", "spacing", "dim", "noise_sigma", "low_information_fraction", "spike"},
                       "city.");
        take(c, "rows", cfg.city.rows);
        take(c, "cols", cfg.city.cols);
        take(c, "spacing", cfg.city.spacing);
        take(c, "dim", cfg.city.dim);
        take(c, "noise_sigma", cfg.city.noise_sigma);
        take(c, "low_information_fraction", cfg.city.low_information_fraction);
        take(c, "spike", cfg.city.spike);
    }
    if (doc.contains("retrieval")) {
        const json& r = doc["retrieval"];
        reject_unknown(r, {"k", "n", "mechanism", "lasso_lambda"}, "retrieval.");
        take(r, "k", cfg.retrieval.k);
        take(r, "n", cfg.retrieval.n);
        take(r, "lasso_lambda", cfg.retrieval.lasso_lambda);
        name.clear();
        take(r, "mechanism", name);
        if (!name.empty()) cfg.retrieval.mechanism = retrieval_mechanism_from_string(name);
    }
    if (doc.contains("model")) {
        const json& m = doc["model"];
        reject_unknown(m, {"heads", "layers", "d_k", "d_v", "alpha", "weighting", "renormalize", "block", "d_ff"},
                       "model.");
        take(m, "heads", cfg.model.heads);
        take(m, "layers", cfg.model.layers);
        take(m, "d_k", cfg.model.d_k);
        take(m, "d_v", cfg.model.d_v);
        take(m, "alpha", cfg.model.alpha);
        take(m, "renormalize", cfg.model.renormalize);
        take(m, "d_ff", cfg.model.d_ff);
        name.clear();
        take(m, "weighting", name);
        if (!name.empty()) cfg.model.weighting = weighting_from_string(name);
        name.clear();
        take(m, "block", name);
        if (!name.empty()) cfg.model.block = block_style_from_string(name);
    }
    if (doc.contains("train")) {
        const json& t = doc["train"];
        reject_unknown(t, {"learning_rate", "epochs", "batch_size", "optimizer", "standardize", "weight_decay"}, "train.");
        take(t, "learning_rate", cfg.train.learning_rate);
        take(t, "epochs", cfg.train.epochs);
        take(t, "batch_size", cfg.train.batch_size);
        take(t, "standardize", cfg.train.standardize_labels);
        take(t, "weight_decay", cfg.train.weight_decay);
        name.clear();
        take(t, "optimizer", name);
        if (!name.empty()) cfg.train.optimizer = optimizer_from_string(name);
    }
    if (doc.contains("mlp")) {
        reject_unknown(doc["mlp"], {"hidden"}, "mlp.");
        take(doc["mlp"], "hidden", cfg.mlp.hidden);
    }
    cfg.model.d_model = cfg.city.dim;
    cfg.model.context_slots = cfg.retrieval.n + 1;
    cfg.mlp.input_dim = cfg.city.dim;
    cfg.validate();
    return cfg;
}

std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    if (in.bad()) throw IoError("failed reading " + path.string());
    return buf.str();
}

void write_text_file(const std::filesystem::path& path, std::string_view content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) throw IoError("failed writing " + path.string());
}

}  // namespace urbancast
