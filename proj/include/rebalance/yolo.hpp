#pragma once

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "rebalance/dataset.hpp"
#include "rebalance/errors.hpp"
#include "rebalance/text.hpp"

namespace rebalance {

/// Reads a class-names file: one name per line, 0-based order.
inline std::vector<std::string> read_class_names(const std::filesystem::path& path) {
    auto text = read_file(path);
    std::vector<std::string> names;
    for (auto line : split_lines(text)) {
        while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.remove_suffix(1);
        if (!line.empty()) names.emplace_back(line);
    }
    return names;
}

namespace detail {

inline std::vector<std::string_view> yolo_tokens(std::string_view line) {
    std::vector<std::string_view> tokens;
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
        std::size_t start = i;
        while (i < line.size() && line[i] != ' ' && line[i] != '\t' && line[i] != '\r') ++i;
        if (i > start) tokens.push_back(line.substr(start, i - start));
    }
    return tokens;
}

} // namespace detail

/// Parses a YOLO label directory: one `.txt` file per image, each line
/// `class_index cx cy w h`. Geometry fields must be valid numbers but are
/// not used beyond that. Empty files are images with no annotations.
inline DatasetIndex parse_yolo(const std::filesystem::path& labels_root,
                               const std::vector<std::string>& class_names) {
    namespace fs = std::filesystem;
    std::error_code ec;
    if (!fs::is_directory(labels_root, ec))
        throw io_error("yolo: labels root '" + labels_root.string() + "' is not a readable directory");

    DatasetIndex index;
    index.dataset_id = labels_root.filename().string();
    if (index.dataset_id.empty()) index.dataset_id = "yolo";
    for (std::size_t i = 0; i < class_names.size(); ++i)
        index.categories.push_back({static_cast<std::int32_t>(i), class_names[i]});

    std::vector<fs::path> files;
    for (const auto& entry : fs::recursive_directory_iterator(labels_root, ec)) {
        if (entry.is_regular_file() && entry.path().extension() == ".txt")
            files.push_back(entry.path());
    }
    if (ec) throw io_error("yolo: failed to list '" + labels_root.string() + "': " + ec.message());
    std::sort(files.begin(), files.end());  // deterministic image order

    auto num_classes = static_cast<std::int64_t>(class_names.size());
    for (const auto& file : files) {
        std::string text;
        try {
            text = read_file(file);
        } catch (const io_error&) {
            throw io_error("yolo: cannot read label file '" + file.string() + "'");
        }
        auto rel = fs::relative(file, labels_root);
        ImageRecord img;
        img.source_path = rel.generic_string();
        img.id = (rel.parent_path() / rel.stem()).generic_string();

        std::map<std::int32_t, std::int32_t> counts;
        auto lines = split_lines(text);
        for (std::size_t ln = 0; ln < lines.size(); ++ln) {
            auto tokens = detail::yolo_tokens(lines[ln]);
            if (tokens.empty()) continue;
            auto where = file.string() + ":" + std::to_string(ln + 1);
            if (tokens.size() != 5)
                throw parse_error("yolo: expected 5 fields (class cx cy w h), got " +
                                  std::to_string(tokens.size()) + " at " + where);
            auto cls = parse_int(tokens[0], where);
            if (cls < 0 || cls >= num_classes)
                throw validation_error("yolo: class index " + std::to_string(cls) +
                                       " out of range [0, " + std::to_string(num_classes) +
                                       ") at " + where);
            for (int g = 1; g < 5; ++g) parse_double(tokens[static_cast<std::size_t>(g)], where);
            ++counts[static_cast<std::int32_t>(cls)];
        }
        img.instance_counts.assign(counts.begin(), counts.end());
        index.images.push_back(std::move(img));
    }

    finalize(index);
    return index;
}

} // namespace rebalance
