#pragma once

#include <string>

#include "rebalance/analysis.hpp"
#include "rebalance/frequency.hpp"
#include "rebalance/repeat_factor.hpp"

#include <json.hpp>

namespace rebalance {

using ordered_json = nlohmann::ordered_json;

inline ordered_json config_json(const RebalanceConfig& config) {
    ordered_json j;
    j["method"] = std::string(method_name(config.method));
    j["threshold"] = config.threshold;
    if (config.alpha) j["alpha"] = *config.alpha;
    return j;
}

inline ordered_json frequency_json(const FrequencyTable& table, const std::string& dataset_id) {
    ordered_json j;
    j["dataset"] = dataset_id;
    j["total_images"] = table.total_images;
    j["total_instances"] = table.total_instances;
    j["classes"] = ordered_json::array();
    for (const auto& c : table.classes) {
        ordered_json row;
        row["id"] = c.category_id;
        row["name"] = c.name;
        row["image_count"] = c.image_count;
        row["instance_count"] = c.instance_count;
        row["image_fraction"] = c.image_fraction;
        row["instance_fraction"] = c.instance_fraction;
        j["classes"].push_back(std::move(row));
    }
    return j;
}

inline ordered_json distribution_report_json(const DistributionReport& report) {
    ordered_json j;
    j["dataset"] = report.dataset_id;
    j["config"] = config_json(report.config);
    j["mode"] = std::string(mode_name(report.mode));
    j["epochs"] = report.epochs;
    j["size"] = report.epoch_size;
    j["seed"] = report.seed;
    j["samples"] = report.samples;
    j["regime"] = report.single_class_regime ? "single_class" : "multi_class";
    j["l1_deviation"] = report.l1_deviation;
    if (report.fit) {
        j["power_law_fit"] = {{"c0", report.fit->c0},
                              {"gamma", report.fit->gamma},
                              {"residual_norm", report.fit->residual_norm}};
    }
    j["classes"] = ordered_json::array();
    for (const auto& row : report.rows) {
        ordered_json r;
        r["id"] = row.category_id;
        r["name"] = row.name;
        r["p_data"] = row.p_data;
        r["p_data_images"] = row.p_data_images;
        r["p_train_theory"] = row.p_train_theory;
        r["p_train_empirical"] = row.p_train_empirical;
        j["classes"].push_back(std::move(r));
    }
    return j;
}

inline ordered_json sweep_json(const SweepGrid& grid) {
    ordered_json j;
    j["dataset"] = grid.dataset_id;
    j["method"] = std::string(method_name(grid.method));
    j["alphas"] = grid.alphas;
    j["thresholds"] = grid.thresholds;
    j["cells"] = ordered_json::array();
    for (const auto& cell : grid.cells) {
        ordered_json c;
        c["alpha"] = cell.alpha;
        c["threshold"] = cell.threshold;
        c["ok"] = cell.ok;
        if (cell.ok) {
            c["max_factor"] = cell.max_factor;
            c["max_factor_category"] = cell.max_factor_category;
            c["rare_share_data"] = cell.rare_share_data;
            c["rare_share_train"] = cell.rare_share_train;
            c["epoch_inflation"] = cell.epoch_inflation;
            c["l1_shift"] = cell.l1_shift;
        } else {
            c["error"] = cell.error;
        }
        j["cells"].push_back(std::move(c));
    }
    return j;
}

} // namespace rebalance
