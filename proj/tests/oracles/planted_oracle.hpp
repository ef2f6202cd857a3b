#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "urbancast/bench/city.hpp"
#include "urbancast/bench/labels.hpp"

namespace oracle {

struct PlantedValues {
    std::vector<double> noiseless;             // label minus its noise term
    std::vector<std::vector<std::int64_t>> relevant;// contributor ids, ascending
};

// Every ordered pair of regions, straight from the rule.
inline PlantedValues planted(const urbancast::SyntheticCity& city, const urbancast::PlantedTask& task) {
    const auto recs = city.db.records();
    PlantedValues out;
    for (const auto& t : recs) {
        const std::string& cat = city.category_names[city.category[static_cast<std::size_t>(t.id)]];
        double y = task.base.count(cat) != 0 ? task.base.at(cat) : 0.0;
        std::vector<std::int64_t> ids;
        for (const auto& o : recs) {
            if (o.id == t.id) continue;
            const std::string& oc = city.category_names[city.category[static_cast<std::size_t>(o.id)]];
            bool rel = false;
            for (const auto& r : task.relevant_categories) rel = rel || r == oc;
            if (!rel) continue;
            const double d = std::hypot(t.centroid.x - o.centroid.x, t.centroid.y - o.centroid.y);
            if (d > task.radius) continue;
            const double info = city.low_information[static_cast<std::size_t>(o.id)] ? task.low_information_value : 1.0;
            y += task.weight * info * (1.0 - d / task.radius);
            ids.push_back(o.id);
        }
        out.noiseless.push_back(y);
        out.relevant.push_back(ids);
    }
    return out;
}

}  // namespace oracle
