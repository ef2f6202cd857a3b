#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace urbancast {

using RegionId = std::int64_t;

// Planar centroid in meters (x east, y north).
struct GeoPoint {
    double x = 0.0;
    double y = 0.0;

    bool operator==(const GeoPoint&) const = default;
};

double euclidean_distance(const GeoPoint& a, const GeoPoint& b);

// One urban region: latent embedding z_i, text description d_i and the
// cached softmax entropy of the embedding.
struct RegionRecord {
    RegionId id = 0;
    GeoPoint centroid;
    std::vector<float> embedding;
    std::string description;
    double entropy = 0.0;

    // Builds a record and fills `entropy` from the embedding.
    static RegionRecord make(RegionId id, GeoPoint centroid, std::vector<float> embedding,
                             std::string description);

    bool operator==(const RegionRecord&) const = default;
};

struct Neighbor {
    RegionId id;
    double distance;
};

// Immutable, id-ordered collection of regions with a k-d tree over centroids.
// Safe for concurrent readers.
class RegionDatabase {
public:
    RegionDatabase() = default;

    // Records are sorted by id. Throws DimensionError when an embedding length
    // differs from `dim` and InputError on duplicate or negative ids. A record
    // whose entropy is NaN gets it computed; any other cached value is kept
    // as-is (validate() reports stale ones).
    RegionDatabase(std::size_t dim, std::vector<RegionRecord> records);

    std::size_t dim() const noexcept { return dim_; }
    std::size_t size() const noexcept { return records_.size(); }
    bool empty() const noexcept { return records_.empty(); }

    // Records in ascending id order.
    std::span<const RegionRecord> records() const noexcept { return records_; }

    bool contains(RegionId id) const { return index_of_.count(id) != 0; }
    const RegionRecord* find(RegionId id) const;
    // Throws LookupError for an unknown id.
    const RegionRecord& at(RegionId id) const;

    // The k regions closest to `target` (target excluded), ascending by
    // (distance, id). Regions with non-finite centroids are not indexed.
    std::vector<Neighbor> nearest(RegionId target, std::size_t k) const;

    bool operator==(const RegionDatabase& other) const {
        return dim_ == other.dim_ && records_ == other.records_;
    }

private:
    struct KdNode {
        std::size_t record;  // index into records_
        int axis;
        std::int32_t left = -1;
        std::int32_t right = -1;
    };

    std::int32_t build(std::vector<std::size_t>& items, std::size_t lo, std::size_t hi, int depth);

    std::size_t dim_ = 0;
    std::vector<RegionRecord> records_;
    std::unordered_map<RegionId, std::size_t> index_of_;
    std::vector<KdNode> nodes_;
    std::int32_t root_ = -1;
};

// Ids of the k nearest regions to `target`, excluding it, sorted by
// (distance, id). Throws LookupError for an unknown target.
std::vector<RegionId> knn(const RegionDatabase& db, RegionId target, std::size_t k);

enum class ViolationKind {
    dimension_mismatch,
    non_finite_coordinate,
    non_finite_embedding,
    entropy_mismatch,
    empty_description,
    duplicate_id,
    negative_id,
};

const char* to_string(ViolationKind kind);

struct Violation {
    RegionId id;
    ViolationKind kind;
    std::string reason;
};

// One entry per broken invariant; empty when the database is consistent.
std::vector<Violation> validate(const RegionDatabase& db);

}  // namespace urbancast
