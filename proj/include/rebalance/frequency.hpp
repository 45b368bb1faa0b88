#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "rebalance/dataset.hpp"
#include "rebalance/errors.hpp"
#include "rebalance/text.hpp"

namespace rebalance {

struct ClassFrequency {
    std::int32_t category_id = 0;
    std::string name;
    std::int64_t image_count = 0;     // n_{i,c}: images containing at least one instance
    std::int64_t instance_count = 0;  // n_{b,c}: bounding boxes belonging to the class
    double image_fraction = 0.0;      // f_{i,c} = n_{i,c} / N   (f_c is an alias for this)
    double instance_fraction = 0.0;   // f_{b,c} = n_{b,c} / B
};

/// Per-class frequency quantities. Exact integer counts are kept alongside
/// the 64-bit fractions so downstream math can re-derive at full precision.
struct FrequencyTable {
    std::int64_t total_images = 0;     // N
    std::int64_t total_instances = 0;  // B
    std::vector<ClassFrequency> classes;  // category order of the source index

    const ClassFrequency* find(std::int32_t category_id) const {
        for (const auto& c : classes)
            if (c.category_id == category_id) return &c;
        return nullptr;
    }
};

inline FrequencyTable compute_frequencies(const DatasetIndex& index) {
    if (index.total_images <= 0)
        throw domain_error("compute_frequencies: dataset has no images");

    FrequencyTable table;
    table.total_images = index.total_images;
    table.total_instances = index.total_instances;

    std::unordered_map<std::int32_t, std::size_t> pos;
    table.classes.reserve(index.categories.size());
    for (const auto& cat : index.categories) {
        pos.emplace(cat.id, table.classes.size());
        table.classes.push_back({cat.id, cat.name, 0, 0, 0.0, 0.0});
    }

    for (const auto& img : index.images) {
        for (const auto& [cat, count] : img.instance_counts) {
            auto& cls = table.classes[pos.at(cat)];
            cls.image_count += 1;
            cls.instance_count += count;
        }
    }

    auto n = static_cast<double>(table.total_images);
    auto b = static_cast<double>(table.total_instances);
    for (auto& cls : table.classes) {
        cls.image_fraction = static_cast<double>(cls.image_count) / n;
        cls.instance_fraction = b > 0 ? static_cast<double>(cls.instance_count) / b : 0.0;
    }
    return table;
}

/// Tab-separated frequency report, one row per category.
inline std::string write_frequency_report(const FrequencyTable& table,
                                          std::string_view dataset_id = {}) {
    std::string out = "#rebalance-frequency\tv1\n";
    if (!dataset_id.empty()) {
        out += "dataset\t";
        out += dataset_id;
        out += '\n';
    }
    out += "totals\tN\t" + std::to_string(table.total_images) + "\tB\t" +
           std::to_string(table.total_instances) + "\n";
    out += "id\tname\tn_i\tn_b\tf_i\tf_b\n";
    for (const auto& c : table.classes) {
        out += std::to_string(c.category_id) + "\t" + c.name + "\t" +
               std::to_string(c.image_count) + "\t" + std::to_string(c.instance_count) + "\t" +
               format_double(c.image_fraction) + "\t" + format_double(c.instance_fraction) + "\n";
    }
    return out;
}

} // namespace rebalance
