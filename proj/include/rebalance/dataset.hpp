#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "rebalance/errors.hpp"
#include "rebalance/text.hpp"

namespace rebalance {

struct CategoryInfo {
    std::int32_t id = 0;
    std::string name;

    friend bool operator==(const CategoryInfo&, const CategoryInfo&) = default;
};

struct ImageRecord {
    std::string id;
    std::string source_path;
    /// Per-class instance counts, sorted by category id. Counts are >= 1;
    /// categories absent from the image are absent from the list.
    std::vector<std::pair<std::int32_t, std::int32_t>> instance_counts;

    std::int32_t count_of(std::int32_t category_id) const {
        auto it = std::lower_bound(instance_counts.begin(), instance_counts.end(),
                                   category_id,
                                   [](const auto& e, std::int32_t c) { return e.first < c; });
        return (it != instance_counts.end() && it->first == category_id) ? it->second : 0;
    }

    std::int64_t total_instances() const {
        std::int64_t n = 0;
        for (const auto& [c, k] : instance_counts) n += k;
        return n;
    }

    friend bool operator==(const ImageRecord&, const ImageRecord&) = default;
};

/// Canonical in-memory model of an annotated detection dataset.
/// Immutable after finalize(); all downstream computation reads it only.
struct DatasetIndex {
    std::string dataset_id;
    std::vector<CategoryInfo> categories;
    std::vector<ImageRecord> images;
    std::int64_t total_images = 0;
    std::int64_t total_instances = 0;

    const CategoryInfo* find_category(std::int32_t id) const {
        for (const auto& c : categories)
            if (c.id == id) return &c;
        return nullptr;
    }

    friend bool operator==(const DatasetIndex&, const DatasetIndex&) = default;
};

struct ValidationIssue {
    enum class Severity { error, warning };
    Severity severity = Severity::error;
    std::string locator;  // image id, category id, or field that triggered the issue
    std::string message;
};

/// Checks every DatasetIndex invariant. Issues are data, not failures:
/// an empty list means the index is sound. Categories with zero instances
/// across the whole dataset yield a warning (they are excluded from
/// repeat-factor computation downstream).
inline std::vector<ValidationIssue> validate(const DatasetIndex& index) {
    std::vector<ValidationIssue> issues;
    auto error = [&](std::string locator, std::string message) {
        issues.push_back({ValidationIssue::Severity::error, std::move(locator), std::move(message)});
    };

    std::unordered_set<std::int32_t> category_ids;
    for (const auto& cat : index.categories) {
        if (!category_ids.insert(cat.id).second)
            error("category " + std::to_string(cat.id), "duplicate category id");
        if (cat.name.empty())
            error("category " + std::to_string(cat.id), "empty category name");
    }

    std::unordered_set<std::string_view> image_ids;
    std::unordered_map<std::int32_t, std::int64_t> per_class_instances;
    std::int64_t instance_sum = 0;
    for (const auto& img : index.images) {
        if (!image_ids.insert(img.id).second)
            error("image " + img.id, "duplicate image id");
        std::int32_t prev = 0;
        bool first = true;
        for (const auto& [cat, count] : img.instance_counts) {
            if (!first && cat <= prev)
                error("image " + img.id, "instance counts not sorted by category id");
            first = false;
            prev = cat;
            if (count <= 0)
                error("image " + img.id,
                      "non-positive count for category " + std::to_string(cat));
            if (!category_ids.contains(cat))
                error("image " + img.id,
                      "reference to unknown category " + std::to_string(cat));
            per_class_instances[cat] += count;
            instance_sum += count;
        }
    }

    if (index.total_images != static_cast<std::int64_t>(index.images.size()))
        error("total_images", "stored total " + std::to_string(index.total_images) +
                                  " != image count " + std::to_string(index.images.size()));
    if (index.total_instances != instance_sum)
        error("total_instances", "stored total " + std::to_string(index.total_instances) +
                                     " != instance sum " + std::to_string(instance_sum));

    for (const auto& cat : index.categories) {
        if (per_class_instances.find(cat.id) == per_class_instances.end())
            issues.push_back({ValidationIssue::Severity::warning,
                              "category " + std::to_string(cat.id),
                              "category '" + cat.name + "' has zero instances"});
    }
    return issues;
}

inline bool has_errors(const std::vector<ValidationIssue>& issues) {
    return std::any_of(issues.begin(), issues.end(), [](const ValidationIssue& i) {
        return i.severity == ValidationIssue::Severity::error;
    });
}

inline std::string describe(const std::vector<ValidationIssue>& issues) {
    std::string out;
    for (const auto& i : issues) {
        out += (i.severity == ValidationIssue::Severity::error ? "error" : "warning");
        out += " [" + i.locator + "]: " + i.message + "\n";
    }
    return out;
}

/// Sorts per-image counts, computes totals, and throws validation_error if
/// any hard invariant is violated. Parsers call this once after ingestion.
inline void finalize(DatasetIndex& index) {
    for (auto& img : index.images)
        std::sort(img.instance_counts.begin(), img.instance_counts.end());
    index.total_images = static_cast<std::int64_t>(index.images.size());
    index.total_instances = 0;
    for (const auto& img : index.images) index.total_instances += img.total_instances();

    auto issues = validate(index);
    if (has_errors(issues))
        throw validation_error("invalid dataset index:\n" + describe(issues));
}

// ---------------------------------------------------------------------------
// Canonical manifest format: line-delimited, tab-separated, one record per
// image. Round-trips bit-exactly: write_canonical(read_canonical(s)) == s.
//
//   #rebalance-dataset<TAB>v1
//   dataset<TAB><dataset_id>
//   category<TAB><id><TAB><name>
//   image<TAB><image_id><TAB><source_path>[<TAB><category_id>:<count>]...
// ---------------------------------------------------------------------------

inline constexpr std::string_view kDatasetMagic = "#rebalance-dataset\tv1";

inline std::string write_canonical(const DatasetIndex& index) {
    require_plain_text(index.dataset_id, "dataset id");
    std::string out;
    out.reserve(64 + index.images.size() * 32);
    out += kDatasetMagic;
    out += '\n';
    out += "dataset\t";
    out += index.dataset_id;
    out += '\n';
    for (const auto& cat : index.categories) {
        require_plain_text(cat.name, "category name");
        out += "category\t";
        out += std::to_string(cat.id);
        out += '\t';
        out += cat.name;
        out += '\n';
    }
    for (const auto& img : index.images) {
        require_plain_text(img.id, "image id");
        require_plain_text(img.source_path, "source path");
        out += "image\t";
        out += img.id;
        out += '\t';
        out += img.source_path;
        for (const auto& [cat, count] : img.instance_counts) {
            out += '\t';
            out += std::to_string(cat);
            out += ':';
            out += std::to_string(count);
        }
        out += '\n';
    }
    return out;
}

inline DatasetIndex read_canonical(std::string_view text) {
    auto lines = split_lines(text);
    if (lines.empty() || lines[0] != kDatasetMagic)
        throw parse_error("canonical manifest: missing '#rebalance-dataset\tv1' header");

    DatasetIndex index;
    bool saw_dataset = false;
    for (std::size_t ln = 1; ln < lines.size(); ++ln) {
        auto context = "line " + std::to_string(ln + 1);
        auto fields = split(lines[ln], '\t');
        if (fields.empty() || fields[0].empty()) continue;
        if (fields[0] == "dataset") {
            if (fields.size() != 2)
                throw parse_error("canonical manifest: malformed dataset record at " + context);
            index.dataset_id = std::string(fields[1]);
            saw_dataset = true;
        } else if (fields[0] == "category") {
            if (fields.size() != 3)
                throw parse_error("canonical manifest: malformed category record at " + context);
            index.categories.push_back(
                {static_cast<std::int32_t>(parse_int(fields[1], context)), std::string(fields[2])});
        } else if (fields[0] == "image") {
            if (fields.size() < 3)
                throw parse_error("canonical manifest: malformed image record at " + context);
            ImageRecord img;
            img.id = std::string(fields[1]);
            img.source_path = std::string(fields[2]);
            for (std::size_t i = 3; i < fields.size(); ++i) {
                auto kv = split(fields[i], ':');
                if (kv.size() != 2)
                    throw parse_error("canonical manifest: malformed count '" +
                                      std::string(fields[i]) + "' at " + context);
                img.instance_counts.emplace_back(
                    static_cast<std::int32_t>(parse_int(kv[0], context)),
                    static_cast<std::int32_t>(parse_int(kv[1], context)));
            }
            index.images.push_back(std::move(img));
        } else {
            throw parse_error("canonical manifest: unknown record '" + std::string(fields[0]) +
                              "' at " + context);
        }
    }
    if (!saw_dataset)
        throw parse_error("canonical manifest: missing dataset record");
    finalize(index);
    return index;
}

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw io_error("cannot open '" + path.string() + "' for reading");
    std::ostringstream ss;
    ss << in.rdbuf();
    if (in.bad()) throw io_error("failed reading '" + path.string() + "'");
    return std::move(ss).str();
}

inline void write_file(const std::filesystem::path& path, std::string_view content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw io_error("cannot open '" + path.string() + "' for writing");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw io_error("failed writing '" + path.string() + "'");
}

inline void save_canonical(const DatasetIndex& index, const std::filesystem::path& path) {
    write_file(path, write_canonical(index));
}

inline DatasetIndex load_canonical(const std::filesystem::path& path) {
    return read_canonical(read_file(path));
}

} // namespace rebalance
