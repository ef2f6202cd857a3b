#include "urbancast/region_store/bundle.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>
#include <unordered_set>
#include <vector>

#include <json.hpp>

#include "urbancast/errors.hpp"
#include "urbancast/region_store/entropy.hpp"

namespace urbancast {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kManifest = "manifest.json";
constexpr const char* kEmbeddings = "embeddings.f32";
constexpr const char* kRegions = "regions.jsonl";

std::uint32_t to_little_endian(std::uint32_t v) {
    if constexpr (std::endian::native == std::endian::big) {
        return ((v & 0xffu) << 24) | ((v & 0xff00u) << 8) | ((v >> 8) & 0xff00u) | (v >> 24);
    }
    return v;
}

std::ifstream open_input(const fs::path& p, std::ios::openmode mode = std::ios::in) {
    if (!fs::exists(p)) throw BundleError(BundleErrorKind::missing_file, p.string());
    std::ifstream in(p, mode);
    if (!in) throw BundleError(BundleErrorKind::missing_file, "cannot open " + p.string());
    return in;
}

template <typename T>
T require(const json& obj, const char* key, const std::string& where) {
    if (!obj.contains(key)) {
        throw BundleError(BundleErrorKind::malformed, where + ": missing \"" + key + "\"");
    }
    try {
        return obj.at(key).get<T>();
    } catch (const json::exception& e) {
        throw BundleError(BundleErrorKind::malformed, where + ": field \"" + key + "\": " + e.what());
    }
}

struct RegionLine {
    RegionId id;
    GeoPoint centroid;
    std::string description;
    double entropy;  // NaN when absent
};

}  // namespace

RegionDatabase load_bundle(const fs::path& dir) {
    json manifest;
    {
        auto in = open_input(dir / kManifest);
        try {
            in >> manifest;
        } catch (const json::exception& e) {
            throw BundleError(BundleErrorKind::malformed, std::string("manifest.json: ") + e.what());
        }
    }
    const auto dim = require<std::int64_t>(manifest, "dim", "manifest.json");
    const auto count = require<std::int64_t>(manifest, "count", "manifest.json");
    if (dim <= 0 || count < 0) {
        throw BundleError(BundleErrorKind::malformed, "manifest.json: dim must be > 0 and count >= 0");
    }
    if (manifest.contains("coordinate_unit") && manifest["coordinate_unit"] != "meters") {
        throw BundleError(BundleErrorKind::malformed, "manifest.json: coordinate_unit must be \"meters\"");
    }
    const bool entropy_cached = manifest.value("entropy_cached", false);

    std::vector<RegionLine> lines;
    {
        auto in = open_input(dir / kRegions);
        std::string text;
        std::size_t lineno = 0;
        while (std::getline(in, text)) {
            ++lineno;
            if (text.find_first_not_of(" \t\r") == std::string::npos) continue;
            const std::string where = "regions.jsonl:" + std::to_string(lineno);
            json obj;
            try {
                obj = json::parse(text);
            } catch (const json::exception& e) {
                throw BundleError(BundleErrorKind::malformed, where + ": " + e.what());
            }
            RegionLine line;
            line.id = require<RegionId>(obj, "id", where);
            if (line.id < 0) throw BundleError(BundleErrorKind::invalid_record, where + ": negative id");
            // nlohmann stores NaN/inf as null, so a non-number here means non-finite.
            for (const char* key : {"x", "y"}) {
                if (obj.contains(key) && !obj[key].is_number()) {
                    throw BundleError(BundleErrorKind::non_finite,
                                      where + ": coordinate \"" + key + "\" of region " +
                                          std::to_string(line.id) + " is not a finite number");
                }
            }
            line.centroid = {require<double>(obj, "x", where), require<double>(obj, "y", where)};
            if (!std::isfinite(line.centroid.x) || !std::isfinite(line.centroid.y)) {
                throw BundleError(BundleErrorKind::non_finite,
                                  where + ": centroid of region " + std::to_string(line.id));
            }
            line.description = require<std::string>(obj, "description", where);
            if (line.description.empty()) {
                throw BundleError(BundleErrorKind::invalid_record,
                                  where + ": empty description for region " + std::to_string(line.id));
            }
            line.entropy = NAN;
            if (entropy_cached && obj.contains("entropy")) {
                if (!obj["entropy"].is_number()) {
                    throw BundleError(BundleErrorKind::non_finite, where + ": entropy of region " +
                                                                       std::to_string(line.id));
                }
                line.entropy = obj["entropy"].get<double>();
            }
            lines.push_back(std::move(line));
        }
    }
    if (static_cast<std::int64_t>(lines.size()) != count) {
        throw BundleError(BundleErrorKind::count_mismatch,
                          "manifest count " + std::to_string(count) + " but regions.jsonl has " +
                              std::to_string(lines.size()) + " records");
    }
    std::sort(lines.begin(), lines.end(),
              [](const RegionLine& a, const RegionLine& b) { return a.id < b.id; });
    for (std::size_t i = 1; i < lines.size(); ++i) {
        if (lines[i].id == lines[i - 1].id) {
            throw BundleError(BundleErrorKind::duplicate_id,
                              "region id " + std::to_string(lines[i].id) + " appears more than once");
        }
    }

    const auto values = static_cast<std::uintmax_t>(count) * static_cast<std::uintmax_t>(dim);
    const fs::path payload_path = dir / kEmbeddings;
    auto payload = open_input(payload_path, std::ios::in | std::ios::binary);
    const auto bytes = fs::file_size(payload_path);
    if (bytes != values * 4) {
        throw BundleError(BundleErrorKind::payload_size,
                          "embeddings.f32 has " + std::to_string(bytes) + " bytes, expected " +
                              std::to_string(values * 4) + " (count " + std::to_string(count) +
                              " x dim " + std::to_string(dim) + " x 4)");
    }
    std::vector<std::uint32_t> raw(static_cast<std::size_t>(values));
    if (!payload.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(bytes))) {
        throw BundleError(BundleErrorKind::payload_size, "short read on embeddings.f32");
    }

    std::vector<RegionRecord> records;
    records.reserve(lines.size());
    const auto d = static_cast<std::size_t>(dim);
    for (std::size_t i = 0; i < lines.size(); ++i) {
        RegionRecord r;
        r.id = lines[i].id;
        r.centroid = lines[i].centroid;
        r.description = std::move(lines[i].description);
        r.embedding.resize(d);
        for (std::size_t j = 0; j < d; ++j) {
            r.embedding[j] = std::bit_cast<float>(to_little_endian(raw[i * d + j]));
            if (!std::isfinite(r.embedding[j])) {
                throw BundleError(BundleErrorKind::non_finite,
                                  "embedding of region " + std::to_string(r.id) + " component " +
                                      std::to_string(j));
            }
        }
        const double h = region_entropy(std::span<const float>(r.embedding));
        if (!std::isnan(lines[i].entropy) && !(std::abs(lines[i].entropy - h) <= kEntropyTolerance)) {
            std::ostringstream msg;
            msg.precision(17);
            msg << "region " << r.id << " cached entropy " << lines[i].entropy << " vs recomputed " << h;
            throw BundleError(BundleErrorKind::entropy_mismatch, msg.str());
        }
        r.entropy = std::isnan(lines[i].entropy) ? h : lines[i].entropy;
        records.push_back(std::move(r));
    }
    return RegionDatabase(d, std::move(records));
}

void save_bundle(const RegionDatabase& db, const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create bundle directory " + dir.string() + ": " + ec.message());

    auto open_output = [](const fs::path& p, std::ios::openmode mode) {
        std::ofstream out(p, mode | std::ios::trunc);
        if (!out) throw IoError("cannot write " + p.string());
        return out;
    };

    {
        json manifest = {{"dim", db.dim()},
                         {"count", db.size()},
                         {"coordinate_unit", "meters"},
                         {"entropy_cached", true}};
        auto out = open_output(dir / kManifest, std::ios::out);
        out << manifest.dump(2) << '\n';
        if (!out) throw IoError("write failed: " + (dir / kManifest).string());
    }
    {
        auto out = open_output(dir / kRegions, std::ios::out | std::ios::binary);
        for (const RegionRecord& r : db.records()) {
            json obj = {{"id", r.id},
                        {"x", r.centroid.x},
                        {"y", r.centroid.y},
                        {"description", r.description},
                        {"entropy", r.entropy}};
            try {
                out << obj.dump() << '\n';
            } catch (const json::exception& e) {
                throw IoError("region " + std::to_string(r.id) + ": " + e.what());
            }
        }
        if (!out) throw IoError("write failed: " + (dir / kRegions).string());
    }
    {
        auto out = open_output(dir / kEmbeddings, std::ios::out | std::ios::binary);
        std::vector<std::uint32_t> row;
        for (const RegionRecord& r : db.records()) {
            row.resize(r.embedding.size());
            for (std::size_t j = 0; j < r.embedding.size(); ++j) {
                row[j] = to_little_endian(std::bit_cast<std::uint32_t>(r.embedding[j]));
            }
            out.write(reinterpret_cast<const char*>(row.data()),
                      static_cast<std::streamsize>(row.size() * sizeof(std::uint32_t)));
        }
        if (!out) throw IoError("write failed: " + (dir / kEmbeddings).string());
    }
}

}  // namespace urbancast
