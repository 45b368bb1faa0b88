#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "rebalance/dataset.hpp"
#include "rebalance/errors.hpp"
#include "rebalance/frequency.hpp"
#include "rebalance/parallel.hpp"
#include "rebalance/repeat_factor.hpp"
#include "rebalance/rng.hpp"
#include "rebalance/sampling.hpp"
#include "rebalance/text.hpp"

namespace rebalance {

/// Exact sampled class distribution implied by a factor table: class c is
/// trained on in proportion to r_c times its share of the data, so the
/// normalized weights are r_c * P_data(c) with P_data the instance
/// distribution. Returned aligned with table.classes.
inline std::vector<double> theoretical_train_distribution(const FrequencyTable& freqs,
                                                          const RepeatFactorTable& table) {
    std::vector<double> weights;
    weights.reserve(table.classes.size());
    double sum = 0.0;
    for (const auto& cls : table.classes) {
        const auto* f = freqs.find(cls.category_id);
        if (!f)
            throw validation_error("theoretical_train_distribution: category " +
                                   std::to_string(cls.category_id) +
                                   " missing from the frequency table");
        double w = cls.factor * f->instance_fraction;
        weights.push_back(w);
        sum += w;
    }
    if (!(sum > 0.0))
        throw domain_error("theoretical_train_distribution: no class carries instance mass");
    for (auto& w : weights) w /= sum;
    return weights;
}

struct PowerLawFit {
    double c0 = 0.0;
    double gamma = 0.0;
    double residual_norm = 0.0;  // root of summed squared residuals in log space

    friend bool operator==(const PowerLawFit&, const PowerLawFit&) = default;
};

/// Least-squares fit of ln P_data(c) against ln f_{i,c}, modeling
/// P_data(c) = c0 * f_{i,c}^(-gamma). When every class has the same image
/// frequency the regressor is degenerate; the fit is then gamma = 0 with
/// c0 the geometric mean of P_data.
inline PowerLawFit fit_power_law(const FrequencyTable& freqs) {
    std::vector<double> xs, ys;
    for (const auto& cls : freqs.classes) {
        if (cls.image_count == 0) continue;
        xs.push_back(std::log(cls.image_fraction));
        ys.push_back(std::log(cls.instance_fraction));
    }
    if (xs.size() < 3)
        throw diagnostic_error("fit_power_law: need at least 3 classes with nonzero frequency, got " +
                               std::to_string(xs.size()));

    auto n = static_cast<double>(xs.size());
    double xm = 0.0, ym = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        xm += xs[i];
        ym += ys[i];
    }
    xm /= n;
    ym /= n;
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sxx += (xs[i] - xm) * (xs[i] - xm);
        sxy += (xs[i] - xm) * (ys[i] - ym);
    }
    double slope = sxx > 0.0 ? sxy / sxx : 0.0;
    double intercept = ym - slope * xm;

    PowerLawFit fit;
    fit.gamma = -slope;
    fit.c0 = std::exp(intercept);
    double rss = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        double e = ys[i] - intercept - slope * xs[i];
        rss += e * e;
    }
    fit.residual_norm = std::sqrt(rss);
    return fit;
}

struct GrowthDiagnostic {
    Method method = Method::rfs;
    double slope = 0.0;
    double intercept = 0.0;
    double residual_norm = 0.0;
    std::size_t points = 0;
};

/// Expected regression slope for each method's growth law:
/// sqrt oversampling decays as f^(-1/2), the two-frequency inner value as
/// (f_i*f_b)^(-1/4), and the exponential factor has ln r growing linearly
/// in (f_i*f_b)^(-1/4) with slope alpha*sqrt(t).
inline double expected_growth_slope(const RebalanceConfig& config) {
    config.check();
    switch (config.method) {
        case Method::rfs: return -0.5;
        case Method::irfs: return -0.25;
        case Method::eirfs: return *config.alpha * std::sqrt(config.threshold);
        case Method::baseline: break;
    }
    throw diagnostic_error("expected_growth_slope: baseline has no growth law");
}

/// Fits the configured method's growth law over a probe grid of
/// (f_i, f_b) pairs and reports the regression. The clamped methods are
/// only meaningful where the clamp is inactive, so probe points inside the
/// clamp region fail the diagnostic by name.
inline GrowthDiagnostic growth_diagnostic(const RebalanceConfig& config,
                                          const std::vector<std::pair<double, double>>& probe) {
    config.check();
    if (config.method == Method::baseline)
        throw diagnostic_error("growth_diagnostic: baseline has no growth law");
    if (probe.size() < 2)
        throw diagnostic_error("growth_diagnostic: need at least 2 probe points");

    std::string clamped;
    std::size_t clamped_count = 0;
    if (config.method != Method::eirfs) {
        for (const auto& [f_i, f_b] : probe) {
            if (irfs_inner_value(f_i, f_b, config.threshold) <= 1.0) {
                ++clamped_count;
                if (clamped_count <= 8) {
                    clamped += clamped.empty() ? "" : ", ";
                    clamped += "(" + format_double(f_i) + ", " + format_double(f_b) + ")";
                }
            }
        }
        if (clamped_count > 0)
            throw diagnostic_error("growth_diagnostic: " + std::to_string(clamped_count) +
                                   " probe point(s) inside the clamp region: " + clamped +
                                   (clamped_count > 8 ? ", ..." : ""));
    }

    std::vector<double> xs, ys;
    xs.reserve(probe.size());
    ys.reserve(probe.size());
    for (const auto& [f_i, f_b] : probe) {
        switch (config.method) {
            case Method::rfs:
                xs.push_back(std::log(f_i));
                ys.push_back(std::log(rfs_factor(f_i, config.threshold)));
                break;
            case Method::irfs:
                xs.push_back(std::log(f_i * f_b));
                ys.push_back(std::log(irfs_factor(f_i, f_b, config.threshold)));
                break;
            case Method::eirfs:
                xs.push_back(std::pow(f_i * f_b, -0.25));
                ys.push_back(std::log(eirfs_factor(f_i, f_b, config.threshold, *config.alpha)));
                break;
            case Method::baseline: break;
        }
    }

    auto n = static_cast<double>(xs.size());
    double xm = 0.0, ym = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        xm += xs[i];
        ym += ys[i];
    }
    xm /= n;
    ym /= n;
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sxx += (xs[i] - xm) * (xs[i] - xm);
        sxy += (xs[i] - xm) * (ys[i] - ym);
    }
    if (!(sxx > 0.0))
        throw diagnostic_error("growth_diagnostic: probe grid has no spread in the regressor");

    GrowthDiagnostic d;
    d.method = config.method;
    d.points = xs.size();
    d.slope = sxy / sxx;
    d.intercept = ym - d.slope * xm;
    double rss = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        double e = ys[i] - d.intercept - d.slope * xs[i];
        rss += e * e;
    }
    d.residual_norm = std::sqrt(rss);
    return d;
}

/// Convenience probe grid: `count` (f, f) pairs geometric between lo and hi.
inline std::vector<std::pair<double, double>> geometric_probe_grid(double lo, double hi,
                                                                   std::size_t count) {
    if (!(lo > 0.0) || !(hi > lo) || count < 2)
        throw domain_error("geometric_probe_grid: need 0 < lo < hi and count >= 2");
    std::vector<std::pair<double, double>> grid;
    grid.reserve(count);
    double step = std::pow(hi / lo, 1.0 / static_cast<double>(count - 1));
    double f = lo;
    for (std::size_t i = 0; i < count; ++i, f *= step) grid.emplace_back(f, f);
    return grid;
}

struct ClassDistributionRow {
    std::int32_t category_id = 0;
    std::string name;
    double p_data = 0.0;             // instance share
    double p_data_images = 0.0;      // image share, normalized over included classes
    double p_train_theory = 0.0;
    double p_train_empirical = 0.0;
};

struct DistributionReport {
    std::string dataset_id;
    RebalanceConfig config;
    SampleMode mode = SampleMode::draw;
    std::uint64_t epochs = 0;
    std::uint64_t epoch_size = 0;  // draw mode request; 0 in expand mode
    std::uint64_t seed = 0;
    std::uint64_t samples = 0;     // manifest entries counted
    bool single_class_regime = false;
    double l1_deviation = 0.0;     // |theory - empirical|, summed over classes
    std::optional<PowerLawFit> fit;  // absent when fewer than 3 classes
    std::vector<ClassDistributionRow> rows;
};

/// Monte Carlo check of the training-distribution claim: generates epochs,
/// counts per-class instance exposure over the sampled images, and compares
/// the empirical distribution with the exact one. The comparison is sharp
/// only when every image holds a single class (the report carries the
/// regime flag); multi-class datasets get the deviation published as data.
inline DistributionReport simulate_training_distribution(const DatasetIndex& index,
                                                         const RepeatFactorTable& table,
                                                         SampleMode mode, std::uint64_t epochs,
                                                         std::uint64_t size, std::uint64_t seed,
                                                         std::size_t jobs = 1) {
    auto freqs = compute_frequencies(index);
    auto theory = theoretical_train_distribution(freqs, table);

    DistributionReport report;
    report.dataset_id = index.dataset_id;
    report.config = table.config;
    report.mode = mode;
    report.epochs = epochs;
    report.epoch_size = mode == SampleMode::draw ? size : 0;
    report.seed = seed;
    report.single_class_regime = true;
    for (const auto& img : index.images) {
        if (img.instance_counts.size() > 1) {
            report.single_class_regime = false;
            break;
        }
    }

    std::unordered_map<std::string_view, const ImageRecord*> by_id;
    by_id.reserve(index.images.size());
    for (const auto& img : index.images) by_id.emplace(img.id, &img);

    std::unordered_map<std::int32_t, std::int64_t> exposure;
    for (const auto& cls : table.classes) exposure.emplace(cls.category_id, 0);

    auto manifests = plan_epochs(table, mode, epochs, size, seed, jobs);
    std::int64_t total = 0;
    for (const auto& manifest : manifests) {
        report.samples += manifest.entries.size();
        for (const auto& id : manifest.entries) {
            auto it = by_id.find(std::string_view(id));
            if (it == by_id.end())
                throw validation_error("simulate: manifest entry '" + id +
                                       "' does not name a dataset image");
            for (const auto& [cat, count] : it->second->instance_counts) {
                auto slot = exposure.find(cat);
                if (slot != exposure.end()) {
                    slot->second += count;
                    total += count;
                }
            }
        }
    }
    if (total == 0)
        throw domain_error("simulate: sampled epochs contain no class instances");

    double image_share_sum = 0.0;
    for (const auto& cls : table.classes) image_share_sum += cls.image_fraction;

    report.l1_deviation = 0.0;
    report.rows.reserve(table.classes.size());
    for (std::size_t k = 0; k < table.classes.size(); ++k) {
        const auto& cls = table.classes[k];
        ClassDistributionRow row;
        row.category_id = cls.category_id;
        row.name = cls.name;
        row.p_data = cls.instance_fraction;
        row.p_data_images = cls.image_fraction / image_share_sum;
        row.p_train_theory = theory[k];
        row.p_train_empirical =
            static_cast<double>(exposure.at(cls.category_id)) / static_cast<double>(total);
        report.l1_deviation += std::abs(row.p_train_theory - row.p_train_empirical);
        report.rows.push_back(std::move(row));
    }
    if (table.classes.size() >= 3) report.fit = fit_power_law(freqs);
    return report;
}

// ---------------------------------------------------------------------------
// Parameter sweeps
// ---------------------------------------------------------------------------

inline const std::vector<double>& default_sweep_alphas() {
    static const std::vector<double> v{0.5, 1.0, 2.0};
    return v;
}

inline const std::vector<double>& default_sweep_thresholds() {
    static const std::vector<double> v{0.1, 0.01, 0.001, 0.0001};
    return v;
}

struct SweepCell {
    double alpha = 0.0;
    double threshold = 0.0;
    bool ok = false;
    std::string error;             // set when the cell failed (e.g. exp overflow)
    double max_factor = 0.0;       // largest class factor
    std::int32_t max_factor_category = 0;
    double rare_share_data = 0.0;  // P_data mass of the rarest class
    double rare_share_train = 0.0; // exact train mass of the rarest class
    double epoch_inflation = 0.0;  // sum of r_i over N
    double l1_shift = 0.0;         // |P_train - P_data|, summed over classes
};

struct SweepGrid {
    std::string dataset_id;
    Method method = Method::eirfs;
    std::vector<double> alphas;
    std::vector<double> thresholds;
    std::vector<SweepCell> cells;  // row-major, alphas x thresholds

    const SweepCell& cell(std::size_t alpha_idx, std::size_t threshold_idx) const {
        return cells[alpha_idx * thresholds.size() + threshold_idx];
    }
};

/// The rarest class by instance count; ties go to the smallest category id.
inline const ClassFrequency* rarest_class(const FrequencyTable& freqs) {
    const ClassFrequency* rare = nullptr;
    for (const auto& cls : freqs.classes) {
        if (cls.image_count == 0) continue;
        if (!rare || cls.instance_count < rare->instance_count ||
            (cls.instance_count == rare->instance_count && cls.category_id < rare->category_id))
            rare = &cls;
    }
    return rare;
}

/// One factor table per (alpha, threshold) cell, summarized. Factor overflow
/// in a cell is recorded in that cell rather than aborting the grid (the
/// point of a sweep is to map out where configurations blow up).
inline SweepGrid sweep(const DatasetIndex& index, const std::vector<double>& alphas,
                       const std::vector<double>& thresholds, Method method = Method::eirfs,
                       std::size_t jobs = 1) {
    if (alphas.empty() || thresholds.empty())
        throw domain_error("sweep: alpha and threshold lists must be non-empty");
    for (double a : alphas)
        if (!(a > 0.0) || !std::isfinite(a))
            throw domain_error("sweep: alpha values must be positive and finite");
    for (double t : thresholds)
        if (!(t > 0.0) || !(t <= 1.0))
            throw domain_error("sweep: threshold values must lie in (0, 1]");

    auto freqs = compute_frequencies(index);
    const auto* rare = rarest_class(freqs);
    if (!rare) throw domain_error("sweep: dataset has no class with instances");

    SweepGrid grid;
    grid.dataset_id = index.dataset_id;
    grid.method = method;
    grid.alphas = alphas;
    grid.thresholds = thresholds;
    grid.cells.resize(alphas.size() * thresholds.size());

    parallel_for(jobs, grid.cells.size(), [&](std::size_t k) {
        SweepCell cell;
        cell.alpha = alphas[k / thresholds.size()];
        cell.threshold = thresholds[k % thresholds.size()];
        RebalanceConfig config{method, cell.threshold,
                               method == Method::eirfs ? std::optional<double>(cell.alpha)
                                                       : std::nullopt};
        try {
            auto table = build_table(freqs, index, config);
            auto train = theoretical_train_distribution(freqs, table);
            cell.ok = true;
            for (std::size_t c = 0; c < table.classes.size(); ++c) {
                const auto& cls = table.classes[c];
                if (cls.factor > cell.max_factor) {
                    cell.max_factor = cls.factor;
                    cell.max_factor_category = cls.category_id;
                }
                if (cls.category_id == rare->category_id) {
                    cell.rare_share_data = cls.instance_fraction;
                    cell.rare_share_train = train[c];
                }
                cell.l1_shift += std::abs(train[c] - cls.instance_fraction);
            }
            cell.epoch_inflation =
                table.factor_sum / static_cast<double>(index.total_images);
        } catch (const overflow_error& e) {
            cell.ok = false;
            cell.error = e.what();
        }
        grid.cells[k] = std::move(cell);
    });
    return grid;
}

// ---------------------------------------------------------------------------
// Synthetic datasets
// ---------------------------------------------------------------------------

enum class InstanceLaw { one, power_matched };

inline std::string_view instance_law_name(InstanceLaw law) {
    return law == InstanceLaw::one ? "one" : "power_matched";
}

inline InstanceLaw parse_instance_law(std::string_view name) {
    if (name == "one") return InstanceLaw::one;
    if (name == "power_matched") return InstanceLaw::power_matched;
    throw parse_error("unknown instance law '" + std::string(name) +
                      "' (expected one or power_matched)");
}

/// Deterministic long-tailed dataset. Class k (rank k+1) gets an image count
/// proportional to rank^(-gamma), every class occurring at least once.
///
/// Instance law `one` gives each image a single instance of its class: the
/// regime where the sampled class distribution matches r_c * P_data(c)
/// exactly. Law `power_matched` instead sizes per-class instance totals so
/// that the instance distribution follows c0 * f_i^(-gamma), the shape the
/// power-law fit recovers. With multi_class set, a seeded coin flip gives
/// half the images one extra instance of a second class.
inline DatasetIndex generate_synthetic(std::int64_t num_classes, double gamma,
                                       std::int64_t num_images, InstanceLaw law,
                                       bool multi_class, std::uint64_t seed) {
    if (num_classes < 2)
        throw diagnostic_error("generate_synthetic: need at least 2 classes");
    if (num_images < num_classes)
        throw diagnostic_error("generate_synthetic: need at least one image per class");
    if (!std::isfinite(gamma))
        throw diagnostic_error("generate_synthetic: gamma must be finite");

    auto k = static_cast<std::size_t>(num_classes);
    std::vector<double> weights(k);
    double weight_sum = 0.0;
    for (std::size_t c = 0; c < k; ++c) {
        weights[c] = std::pow(static_cast<double>(c + 1), -gamma);
        if (!std::isfinite(weights[c]) || !(weights[c] > 0.0))
            throw diagnostic_error("generate_synthetic: rank weights overflow for gamma = " +
                                   format_double(gamma));
        weight_sum += weights[c];
    }

    std::vector<std::int64_t> image_count(k);
    std::int64_t assigned = 0;
    std::size_t heaviest = 0;
    for (std::size_t c = 0; c < k; ++c) {
        auto share = static_cast<double>(num_images) * weights[c] / weight_sum;
        image_count[c] = std::max<std::int64_t>(1, std::llround(share));
        assigned += image_count[c];
        if (weights[c] > weights[heaviest]) heaviest = c;
    }
    image_count[heaviest] += num_images - assigned;  // absorb rounding drift
    if (image_count[heaviest] < 1)
        throw diagnostic_error("generate_synthetic: parameters leave no images for the head class");

    std::vector<std::int64_t> instance_total(k);
    if (law == InstanceLaw::one) {
        instance_total = image_count;
    } else {
        // Choose per-class instance totals m_c = A * f_c^(-gamma), with A the
        // smallest scale keeping m_c >= image_count (one instance per image).
        double scale = 0.0;
        for (std::size_t c = 0; c < k; ++c) {
            double f = static_cast<double>(image_count[c]) / static_cast<double>(num_images);
            scale = std::max(scale, static_cast<double>(image_count[c]) * std::pow(f, gamma));
        }
        for (std::size_t c = 0; c < k; ++c) {
            double f = static_cast<double>(image_count[c]) / static_cast<double>(num_images);
            double m = scale * std::pow(f, -gamma);
            if (!std::isfinite(m) || m > 1e15)
                throw diagnostic_error("generate_synthetic: instance law overflows for gamma = " +
                                       format_double(gamma));
            instance_total[c] =
                std::max(image_count[c], static_cast<std::int64_t>(std::llround(m)));
        }
    }

    DatasetIndex index;
    index.dataset_id = "synthetic";
    index.categories.reserve(k);
    for (std::size_t c = 0; c < k; ++c)
        index.categories.push_back({static_cast<std::int32_t>(c), "class_" + std::to_string(c)});

    SplitMix64 rng(seed);
    index.images.reserve(static_cast<std::size_t>(num_images));
    std::int64_t next_image = 0;
    for (std::size_t c = 0; c < k; ++c) {
        std::int64_t base = instance_total[c] / image_count[c];
        std::int64_t extra = instance_total[c] % image_count[c];
        for (std::int64_t j = 0; j < image_count[c]; ++j, ++next_image) {
            ImageRecord img;
            img.id = "img_" + std::to_string(next_image);
            img.source_path = "synthetic";
            auto count = static_cast<std::int32_t>(base + (j < extra ? 1 : 0));
            img.instance_counts.emplace_back(static_cast<std::int32_t>(c), count);
            if (multi_class && rng.next_double() < 0.5) {
                auto other = static_cast<std::int32_t>(rng.next_below(static_cast<std::uint64_t>(k)));
                if (other != static_cast<std::int32_t>(c))
                    img.instance_counts.emplace_back(other, 1);
            }
            index.images.push_back(std::move(img));
        }
    }
    finalize(index);
    return index;
}

// ---------------------------------------------------------------------------
// Report rendering (tab-separated; the machine-readable JSON mirror lives in
// report_json.hpp)
// ---------------------------------------------------------------------------

inline void append_config_records(std::string& out, const RebalanceConfig& config) {
    out += "method\t";
    out += method_name(config.method);
    out += '\n';
    out += "threshold\t";
    out += format_double(config.threshold);
    out += '\n';
    if (config.alpha) {
        out += "alpha\t";
        out += format_double(*config.alpha);
        out += '\n';
    }
}

inline std::string write_distribution_report(const DistributionReport& report) {
    std::string out = "#rebalance-report\tv1\n";
    out += "dataset\t";
    out += report.dataset_id;
    out += '\n';
    append_config_records(out, report.config);
    out += "mode\t";
    out += mode_name(report.mode);
    out += '\n';
    out += "epochs\t" + std::to_string(report.epochs) + '\n';
    out += "size\t" + std::to_string(report.epoch_size) + '\n';
    out += "seed\t" + std::to_string(report.seed) + '\n';
    out += "samples\t" + std::to_string(report.samples) + '\n';
    out += "regime\t";
    out += report.single_class_regime ? "single_class" : "multi_class";
    out += '\n';
    out += "l1\t" + format_double(report.l1_deviation) + '\n';
    if (report.fit) {
        out += "fit\t" + format_double(report.fit->c0) + '\t' + format_double(report.fit->gamma) +
               '\t' + format_double(report.fit->residual_norm) + '\n';
    }
    out += "columns\tid\tname\tp_data\tp_data_images\tp_train_theory\tp_train_empirical\n";
    for (const auto& row : report.rows) {
        out += "class\t" + std::to_string(row.category_id) + '\t' + row.name + '\t' +
               format_double(row.p_data) + '\t' + format_double(row.p_data_images) + '\t' +
               format_double(row.p_train_theory) + '\t' + format_double(row.p_train_empirical) +
               '\n';
    }
    return out;
}

inline std::string write_sweep_report(const SweepGrid& grid) {
    std::string out = "#rebalance-sweep\tv1\n";
    out += "dataset\t";
    out += grid.dataset_id;
    out += '\n';
    out += "method\t";
    out += method_name(grid.method);
    out += '\n';
    out += "columns\talpha\tthreshold\tstatus\tmax_factor\tmax_factor_category\trare_share_data"
           "\trare_share_train\tepoch_inflation\tl1_shift\n";
    for (const auto& cell : grid.cells) {
        out += "cell\t" + format_double(cell.alpha) + '\t' + format_double(cell.threshold) + '\t';
        if (cell.ok) {
            out += "ok\t" + format_double(cell.max_factor) + '\t' +
                   std::to_string(cell.max_factor_category) + '\t' +
                   format_double(cell.rare_share_data) + '\t' +
                   format_double(cell.rare_share_train) + '\t' +
                   format_double(cell.epoch_inflation) + '\t' + format_double(cell.l1_shift);
        } else {
            out += "error\t" + cell.error;
        }
        out += '\n';
    }

    // Matrix blocks, one per metric: alpha rows, threshold columns.
    struct MetricView {
        const char* name;
        double SweepCell::* field;
    };
    const MetricView metrics[] = {{"max_factor", &SweepCell::max_factor},
                                  {"rare_share_train", &SweepCell::rare_share_train},
                                  {"epoch_inflation", &SweepCell::epoch_inflation},
                                  {"l1_shift", &SweepCell::l1_shift}};
    for (const auto& metric : metrics) {
        out += "matrix\t";
        out += metric.name;
        out += '\n';
        out += "header\talpha/threshold";
        for (double t : grid.thresholds) out += '\t' + format_double(t);
        out += '\n';
        for (std::size_t a = 0; a < grid.alphas.size(); ++a) {
            out += "row\t" + format_double(grid.alphas[a]);
            for (std::size_t t = 0; t < grid.thresholds.size(); ++t) {
                const auto& cell = grid.cell(a, t);
                out += '\t';
                out += cell.ok ? format_double(cell.*(metric.field)) : "error";
            }
            out += '\n';
        }
    }
    return out;
}

} // namespace rebalance
