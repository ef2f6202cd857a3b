#include "urbancast/region_store/region_database.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <utility>

#include "urbancast/errors.hpp"
#include "urbancast/region_store/entropy.hpp"

namespace urbancast {

double euclidean_distance(const GeoPoint& a, const GeoPoint& b) {
    const double dx = a.x - b.x;
    const double dy = a.y - b.y;
    return std::sqrt(dx * dx + dy * dy);
}

RegionRecord RegionRecord::make(RegionId id, GeoPoint centroid, std::vector<float> embedding,
                                std::string description) {
    RegionRecord r;
    r.id = id;
    r.centroid = centroid;
    r.entropy = region_entropy(std::span<const float>(embedding));
    r.embedding = std::move(embedding);
    r.description = std::move(description);
    return r;
}

namespace {

bool finite_point(const GeoPoint& p) { return std::isfinite(p.x) && std::isfinite(p.y); }

double coord(const GeoPoint& p, int axis) { return axis == 0 ? p.x : p.y; }

// Orders candidates by (distance, id); the heap top is the worst kept entry.
struct NeighborLess {
    bool operator()(const Neighbor& a, const Neighbor& b) const {
        if (a.distance != b.distance) return a.distance < b.distance;
        return a.id < b.id;
    }
};

}  // namespace

RegionDatabase::RegionDatabase(std::size_t dim, std::vector<RegionRecord> records)
    : dim_(dim), records_(std::move(records)) {
    std::sort(records_.begin(), records_.end(),
              [](const RegionRecord& a, const RegionRecord& b) { return a.id < b.id; });
    index_of_.reserve(records_.size());
    for (std::size_t i = 0; i < records_.size(); ++i) {
        auto& r = records_[i];
        if (r.id < 0) throw InputError("region id " + std::to_string(r.id) + " is negative");
        if (r.embedding.size() != dim_) {
            throw DimensionError("region " + std::to_string(r.id) + " has embedding length " +
                                 std::to_string(r.embedding.size()) + ", database dim is " +
                                 std::to_string(dim_));
        }
        if (!index_of_.emplace(r.id, i).second) {
            throw InputError("duplicate region id " + std::to_string(r.id));
        }
        const bool finite = std::all_of(r.embedding.begin(), r.embedding.end(),
                                        [](float v) { return std::isfinite(v); });
        if (std::isnan(r.entropy) && finite && dim_ > 0) {
            r.entropy = region_entropy(std::span<const float>(r.embedding));
        }
    }

    std::vector<std::size_t> items;
    items.reserve(records_.size());
    for (std::size_t i = 0; i < records_.size(); ++i) {
        if (finite_point(records_[i].centroid)) items.push_back(i);
    }
    nodes_.reserve(items.size());
    root_ = build(items, 0, items.size(), 0);
}

std::int32_t RegionDatabase::build(std::vector<std::size_t>& items, std::size_t lo, std::size_t hi,
                                   int depth) {
    if (lo >= hi) return -1;
    const int axis = depth % 2;
    const std::size_t mid = lo + (hi - lo) / 2;
    std::nth_element(items.begin() + lo, items.begin() + mid, items.begin() + hi,
                     [&](std::size_t a, std::size_t b) {
                         const double ca = coord(records_[a].centroid, axis);
                         const double cb = coord(records_[b].centroid, axis);
                         if (ca != cb) return ca < cb;
                         return a < b;
                     });
    const auto self = static_cast<std::int32_t>(nodes_.size());
    nodes_.push_back(KdNode{items[mid], axis});
    const std::int32_t left = build(items, lo, mid, depth + 1);
    const std::int32_t right = build(items, mid + 1, hi, depth + 1);
    nodes_[self].left = left;
    nodes_[self].right = right;
    return self;
}

const RegionRecord* RegionDatabase::find(RegionId id) const {
    const auto it = index_of_.find(id);
    return it == index_of_.end() ? nullptr : &records_[it->second];
}

const RegionRecord& RegionDatabase::at(RegionId id) const {
    const RegionRecord* r = find(id);
    if (r == nullptr) throw LookupError("unknown region id " + std::to_string(id));
    return *r;
}

std::vector<Neighbor> RegionDatabase::nearest(RegionId target, std::size_t k) const {
    const RegionRecord& origin = at(target);
    if (!finite_point(origin.centroid)) {
        throw InputError("region " + std::to_string(target) + " has a non-finite centroid");
    }
    std::vector<Neighbor> out;
    if (k == 0 || root_ < 0) return out;

    std::priority_queue<Neighbor, std::vector<Neighbor>, NeighborLess> best;
    const GeoPoint q = origin.centroid;

    // Iterative depth-first search; far subtrees are re-checked against the
    // current worst distance when popped.
    struct Frame {
        std::int32_t node;
        double bound;
    };
    std::vector<Frame> stack{{root_, 0.0}};
    while (!stack.empty()) {
        const Frame f = stack.back();
        stack.pop_back();
        if (f.node < 0) continue;
        // Ties on the splitting plane must still be explored: an equal
        // distance with a smaller id would displace the current worst.
        if (best.size() == k && f.bound > best.top().distance) continue;

        const KdNode& node = nodes_[static_cast<std::size_t>(f.node)];
        const RegionRecord& r = records_[node.record];
        if (r.id != target) {
            const Neighbor cand{r.id, euclidean_distance(q, r.centroid)};
            if (best.size() < k) {
                best.push(cand);
            } else if (NeighborLess{}(cand, best.top())) {
                best.pop();
                best.push(cand);
            }
        }
        const double diff = coord(q, node.axis) - coord(r.centroid, node.axis);
        // sqrt(diff^2) never exceeds the full distance as computed above.
        const double plane = std::sqrt(diff * diff);
        const std::int32_t near = diff < 0 ? node.left : node.right;
        const std::int32_t far = diff < 0 ? node.right : node.left;
        stack.push_back({far, std::max(f.bound, plane)});
        stack.push_back({near, f.bound});
    }

    out.reserve(best.size());
    while (!best.empty()) {
        out.push_back(best.top());
        best.pop();
    }
    std::reverse(out.begin(), out.end());
    return out;
}

std::vector<RegionId> knn(const RegionDatabase& db, RegionId target, std::size_t k) {
    std::vector<RegionId> ids;
    for (const Neighbor& n : db.nearest(target, k)) ids.push_back(n.id);
    return ids;
}

const char* to_string(ViolationKind kind) {
    switch (kind) {
        case ViolationKind::dimension_mismatch: return "dimension mismatch";
        case ViolationKind::non_finite_coordinate: return "non-finite coordinate";
        case ViolationKind::non_finite_embedding: return "non-finite embedding";
        case ViolationKind::entropy_mismatch: return "entropy mismatch";
        case ViolationKind::empty_description: return "empty description";
        case ViolationKind::duplicate_id: return "duplicate id";
        case ViolationKind::negative_id: return "negative id";
    }
    return "violation";
}

std::vector<Violation> validate(const RegionDatabase& db) {
    std::vector<Violation> out;
    const auto records = db.records();
    for (std::size_t i = 0; i < records.size(); ++i) {
        const RegionRecord& r = records[i];
        if (r.id < 0) out.push_back({r.id, ViolationKind::negative_id, "id is negative"});
        if (i > 0 && records[i - 1].id == r.id) {
            out.push_back({r.id, ViolationKind::duplicate_id, "id appears more than once"});
        }
        if (!finite_point(r.centroid)) {
            out.push_back({r.id, ViolationKind::non_finite_coordinate, "centroid is not finite"});
        }
        if (r.embedding.size() != db.dim()) {
            out.push_back({r.id, ViolationKind::dimension_mismatch,
                           "embedding length " + std::to_string(r.embedding.size()) +
                               " != " + std::to_string(db.dim())});
            continue;
        }
        const bool finite = std::all_of(r.embedding.begin(), r.embedding.end(),
                                        [](float v) { return std::isfinite(v); });
        if (!finite) {
            out.push_back({r.id, ViolationKind::non_finite_embedding, "embedding has NaN/inf"});
        } else if (!r.embedding.empty()) {
            const double expected = region_entropy(std::span<const float>(r.embedding));
            if (!(std::abs(expected - r.entropy) <= kEntropyTolerance)) {
                out.push_back({r.id, ViolationKind::entropy_mismatch,
                               "cached entropy " + std::to_string(r.entropy) +
                                   " != recomputed " + std::to_string(expected)});
            }
        }
        if (r.description.empty()) {
            out.push_back({r.id, ViolationKind::empty_description, "description is empty"});
        }
    }
    return out;
}

}  // namespace urbancast
