#pragma once

// Shared fixtures for the test binaries. Header-only, no framework includes:
// the acceptance runner uses these too.

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <unistd.h>

#include "rebalance/rebalance.hpp"

namespace testsupport {

using namespace rebalance;

// ---------------------------------------------------------------------------
// Four-class wildfire-detection fixture: 40,384 images, 146,949 boxes.
// Marginals: Fire 16,915 images / 33,773 boxes; Smoke 28,769 / 32,538;
// Human 18,525 / 67,992; Lake 12,646 / 12,646.
//
// Image groups, in index order:
//   {Fire,Smoke} x 5,300   {Fire,Human} x 11,615   {Smoke,Human} x 6,910
//   {Smoke,Lake} x 12,646  {Smoke} x 3,913
// Extra instances go to the first images of each class so the per-class box
// totals land exactly on the marginals above.
// ---------------------------------------------------------------------------

inline constexpr std::int64_t kWildfireImages = 40384;
inline constexpr std::int64_t kWildfireInstances = 146949;

inline constexpr std::int32_t kFire = 1;
inline constexpr std::int32_t kSmoke = 2;
inline constexpr std::int32_t kHuman = 3;
inline constexpr std::int32_t kLake = 4;

inline std::vector<std::pair<std::int32_t, std::int32_t>> wildfire_counts(std::int64_t i) {
    constexpr std::int64_t kFS = 5300, kFH = 11615, kSH = 6910, kSL = 12646;
    if (i < kFS) return {{kFire, 2}, {kSmoke, i < 3769 ? 2 : 1}};
    i -= kFS;
    if (i < kFH) return {{kFire, i < 11558 ? 2 : 1}, {kHuman, 4}};
    i -= kFH;
    if (i < kSH) return {{kSmoke, 1}, {kHuman, i < 802 ? 4 : 3}};
    i -= kSH;
    if (i < kSL) return {{kSmoke, 1}, {kLake, 1}};
    return {{kSmoke, 1}};
}

inline DatasetIndex wildfire_index() {
    DatasetIndex index;
    index.dataset_id = "wildfire";
    index.categories = {{kFire, "Fire"}, {kSmoke, "Smoke"}, {kHuman, "Human"}, {kLake, "Lake"}};
    index.images.reserve(static_cast<std::size_t>(kWildfireImages));
    for (std::int64_t i = 0; i < kWildfireImages; ++i) {
        ImageRecord img;
        img.id = std::to_string(i + 1);
        img.source_path = "img" + std::to_string(i + 1) + ".jpg";
        img.instance_counts = wildfire_counts(i);
        index.images.push_back(std::move(img));
    }
    finalize(index);
    return index;
}

/// The same dataset as a COCO document, for exercising the JSON path.
inline std::string wildfire_coco_json() {
    std::string out;
    out.reserve(16u << 20);
    out += R"({"info":{"description":"wildfire"},"categories":[)";
    out += R"({"id":1,"name":"Fire"},{"id":2,"name":"Smoke"},)";
    out += R"({"id":3,"name":"Human"},{"id":4,"name":"Lake"}],"images":[)";
    for (std::int64_t i = 0; i < kWildfireImages; ++i) {
        if (i) out += ',';
        out += "{\"id\":" + std::to_string(i + 1) + ",\"file_name\":\"img" +
               std::to_string(i + 1) + ".jpg\"}";
    }
    out += "],\"annotations\":[";
    std::int64_t ann = 0;
    for (std::int64_t i = 0; i < kWildfireImages; ++i) {
        for (auto [cat, count] : wildfire_counts(i))
            for (std::int32_t k = 0; k < count; ++k) {
                if (ann) out += ',';
                ++ann;
                out += "{\"id\":" + std::to_string(ann) + ",\"image_id\":" +
                       std::to_string(i + 1) + ",\"category_id\":" + std::to_string(cat) + "}";
            }
    }
    out += "]}";
    return out;
}

// ---------------------------------------------------------------------------
// Tiered fixture: class k gets images_per_class[k] images, each holding
// instances of that one class only. Single-class images make the sampled
// training distribution match the r_c * P_data prediction exactly.
// ---------------------------------------------------------------------------
inline DatasetIndex single_class_index(const std::vector<std::int64_t>& images_per_class,
                                       std::int32_t instances_per_image = 1) {
    DatasetIndex index;
    index.dataset_id = "tiers";
    for (std::size_t c = 0; c < images_per_class.size(); ++c)
        index.categories.push_back(
            {static_cast<std::int32_t>(c + 1), "class_" + std::to_string(c + 1)});
    for (std::size_t c = 0; c < images_per_class.size(); ++c)
        for (std::int64_t k = 0; k < images_per_class[c]; ++k) {
            ImageRecord img;
            img.id = "c" + std::to_string(c + 1) + "_" + std::to_string(k);
            img.source_path = img.id + ".jpg";
            img.instance_counts = {{static_cast<std::int32_t>(c + 1), instances_per_image}};
            index.images.push_back(std::move(img));
        }
    finalize(index);
    return index;
}

/// Seeded arbitrary dataset for property tests: images carry 1..3 distinct
/// classes with skew toward low ids, so frequencies spread over a wide range.
inline DatasetIndex random_index(std::uint64_t seed, int num_classes = 6, int num_images = 300) {
    SplitMix64 rng(seed);
    DatasetIndex index;
    index.dataset_id = "random_" + std::to_string(seed);
    for (int c = 0; c < num_classes; ++c)
        index.categories.push_back({c, "class_" + std::to_string(c)});
    for (int i = 0; i < num_images; ++i) {
        ImageRecord img;
        img.id = "img_" + std::to_string(i);
        img.source_path = img.id + ".jpg";
        int distinct = 1 + static_cast<int>(rng.next_below(3));
        std::set<std::int32_t> chosen;
        for (int d = 0; d < distinct; ++d) {
            double u = rng.next_double();
            auto c = static_cast<std::int32_t>(u * u * num_classes);
            chosen.insert(std::min(c, num_classes - 1));
        }
        for (auto c : chosen)
            img.instance_counts.emplace_back(c, 1 + static_cast<std::int32_t>(rng.next_below(4)));
        index.images.push_back(std::move(img));
    }
    finalize(index);
    return index;
}

struct TempDir {
    std::filesystem::path path;

    TempDir() {
        static std::atomic<int> counter{0};
        path = std::filesystem::temp_directory_path() /
               ("rebalance_test_" + std::to_string(::getpid()) + "_" +
                std::to_string(counter.fetch_add(1)));
        std::filesystem::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    std::filesystem::path file(const std::string& name) const { return path / name; }
};

} // namespace testsupport
