#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "rebalance/dataset.hpp"
#include "rebalance/errors.hpp"

namespace rebalance {

namespace detail {

inline std::string coco_id_string(const nlohmann::json& v, const char* where) {
    if (v.is_number_integer()) return std::to_string(v.get<std::int64_t>());
    if (v.is_string()) return v.get<std::string>();
    throw parse_error(std::string("coco: ") + where + " id must be an integer or string");
}

inline const nlohmann::json& coco_field(const nlohmann::json& obj, const char* key,
                                        const char* where) {
    auto it = obj.find(key);
    if (it == obj.end())
        throw parse_error(std::string("coco: missing field '") + key + "' in " + where);
    return *it;
}

} // namespace detail

/// Parses a COCO-style annotation document (subset: images / categories /
/// annotations). Bounding-box geometry, if present, is checked for shape and
/// otherwise ignored: the sampling math depends only on counts.
inline DatasetIndex parse_coco(std::string_view json_text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(json_text);
    } catch (const nlohmann::json::parse_error& e) {
        throw parse_error(std::string("coco: ") + e.what());
    }
    if (!doc.is_object())
        throw parse_error("coco: top-level value must be an object");

    DatasetIndex index;
    index.dataset_id = "coco";
    if (auto info = doc.find("info"); info != doc.end() && info->is_object()) {
        auto desc = info->find("description");
        if (desc != info->end() && desc->is_string() && !desc->get<std::string>().empty())
            index.dataset_id = desc->get<std::string>();
    }

    const auto& images = detail::coco_field(doc, "images", "document");
    const auto& categories = detail::coco_field(doc, "categories", "document");
    const auto& annotations = detail::coco_field(doc, "annotations", "document");
    if (!images.is_array() || !categories.is_array() || !annotations.is_array())
        throw parse_error("coco: images, categories, and annotations must be arrays");

    std::vector<std::string> duplicate_ids;

    std::unordered_map<std::int32_t, std::size_t> category_pos;
    for (const auto& cat : categories) {
        if (!cat.is_object()) throw parse_error("coco: category entries must be objects");
        const auto& idv = detail::coco_field(cat, "id", "category");
        if (!idv.is_number_integer())
            throw parse_error("coco: category id must be an integer");
        auto id = idv.get<std::int32_t>();
        const auto& namev = detail::coco_field(cat, "name", "category");
        if (!namev.is_string())
            throw parse_error("coco: category name must be a string");
        if (!category_pos.emplace(id, index.categories.size()).second)
            duplicate_ids.push_back("category " + std::to_string(id));
        index.categories.push_back({id, namev.get<std::string>()});
    }

    std::unordered_map<std::string, std::size_t> image_pos;
    for (const auto& img : images) {
        if (!img.is_object()) throw parse_error("coco: image entries must be objects");
        auto id = detail::coco_id_string(detail::coco_field(img, "id", "image"), "image");
        const auto& file_name = detail::coco_field(img, "file_name", "image");
        if (!file_name.is_string())
            throw parse_error("coco: image file_name must be a string");
        if (!image_pos.emplace(id, index.images.size()).second)
            duplicate_ids.push_back("image " + id);
        index.images.push_back({id, file_name.get<std::string>(), {}});
    }
    if (!duplicate_ids.empty()) {
        std::string msg = "coco: duplicate ids:";
        for (const auto& d : duplicate_ids) msg += " " + d;
        throw validation_error(msg);
    }

    // Tally instances; collect every dangling reference before failing.
    std::vector<std::unordered_map<std::int32_t, std::int32_t>> counts(index.images.size());
    std::vector<std::string> unknown_refs;
    std::size_t ann_no = 0;
    for (const auto& ann : annotations) {
        ++ann_no;
        if (!ann.is_object()) throw parse_error("coco: annotation entries must be objects");
        auto where = "annotation #" + std::to_string(ann_no);
        auto image_id =
            detail::coco_id_string(detail::coco_field(ann, "image_id", where.c_str()), "annotation image");
        const auto& catv = detail::coco_field(ann, "category_id", where.c_str());
        if (!catv.is_number_integer())
            throw parse_error("coco: category_id must be an integer in " + where);
        auto category_id = catv.get<std::int32_t>();
        if (auto bbox = ann.find("bbox"); bbox != ann.end()) {
            if (!bbox->is_array() || bbox->size() != 4)
                throw parse_error("coco: bbox must be a 4-element array in " + where);
            for (const auto& v : *bbox)
                if (!v.is_number())
                    throw parse_error("coco: bbox values must be numbers in " + where);
        }

        auto img_it = image_pos.find(image_id);
        bool img_ok = img_it != image_pos.end();
        bool cat_ok = category_pos.contains(category_id);
        if (!img_ok) unknown_refs.push_back(where + ": unknown image " + image_id);
        if (!cat_ok)
            unknown_refs.push_back(where + ": unknown category " + std::to_string(category_id));
        if (img_ok && cat_ok) ++counts[img_it->second][category_id];
    }
    if (!unknown_refs.empty()) {
        std::string msg = "coco: annotations reference unknown ids:";
        for (const auto& r : unknown_refs) msg += "\n  " + r;
        throw validation_error(msg);
    }

    for (std::size_t i = 0; i < index.images.size(); ++i)
        for (const auto& [cat, n] : counts[i])
            index.images[i].instance_counts.emplace_back(cat, n);

    finalize(index);
    return index;
}

inline DatasetIndex load_coco(const std::filesystem::path& path) {
    return parse_coco(read_file(path));
}

} // namespace rebalance
