#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "rebalance/dataset.hpp"
#include "rebalance/errors.hpp"
#include "rebalance/frequency.hpp"
#include "rebalance/rng.hpp"
#include "rebalance/text.hpp"

namespace rebalance {

enum class Method { baseline, rfs, irfs, eirfs };

inline std::string_view method_name(Method m) {
    switch (m) {
        case Method::baseline: return "baseline";
        case Method::rfs: return "rfs";
        case Method::irfs: return "irfs";
        case Method::eirfs: return "eirfs";
    }
    throw domain_error("method_name: unknown method value");
}

inline Method parse_method(std::string_view name) {
    if (name == "baseline") return Method::baseline;
    if (name == "rfs") return Method::rfs;
    if (name == "irfs") return Method::irfs;
    if (name == "eirfs") return Method::eirfs;
    throw parse_error("unknown method '" + std::string(name) +
                      "' (expected baseline, rfs, irfs or eirfs)");
}

struct RebalanceConfig {
    Method method = Method::eirfs;
    double threshold = 0.0001;
    std::optional<double> alpha = 2.0;

    void check() const {
        if (!(threshold > 0.0) || !(threshold <= 1.0))
            throw domain_error("config: threshold must lie in (0, 1], got " +
                               format_double(threshold));
        if (alpha && (!(*alpha > 0.0) || !std::isfinite(*alpha)))
            throw domain_error("config: alpha must be positive and finite, got " +
                               format_double(*alpha));
        if (method == Method::eirfs && !alpha)
            throw domain_error("config: the eirfs method requires alpha");
    }

    /// Copy with alpha dropped when the method ignores it, so that configs
    /// differing only in an unused alpha serialize and digest identically.
    RebalanceConfig normalized() const {
        RebalanceConfig c = *this;
        if (method != Method::eirfs) c.alpha.reset();
        return c;
    }

    friend bool operator==(const RebalanceConfig&, const RebalanceConfig&) = default;
};

/// Canonical one-line rendering of the effective configuration.
inline std::string config_summary(const RebalanceConfig& config) {
    auto c = config.normalized();
    std::string s = "method=";
    s += method_name(c.method);
    s += " threshold=";
    s += format_double(c.threshold);
    if (c.alpha) {
        s += " alpha=";
        s += format_double(*c.alpha);
    }
    return s;
}

inline std::uint64_t config_digest(const RebalanceConfig& config) {
    return fnv1a64(config_summary(config));
}

namespace detail {

inline void check_fraction(double f, const char* name) {
    if (!(f > 0.0) || !(f <= 1.0))
        throw domain_error(std::string(name) + " must lie in (0, 1], got " + format_double(f));
}

inline void check_threshold(double t) {
    if (!(t > 0.0) || !(t <= 1.0))
        throw domain_error("threshold must lie in (0, 1], got " + format_double(t));
}

inline void check_alpha(double alpha) {
    if (!(alpha > 0.0) || !std::isfinite(alpha))
        throw domain_error("alpha must be positive and finite, got " + format_double(alpha));
}

/// Equal inputs short-circuit so the two-frequency factor collapses to the
/// one-frequency factor bit-exactly (sqrt(f*f) may be an ulp off f).
inline double geometric_mean(double a, double b) { return a == b ? a : std::sqrt(a * b); }

} // namespace detail

/// max(1, sqrt(t/f)): square-root oversampling driven by image frequency.
inline double rfs_factor(double f_c, double t) {
    detail::check_fraction(f_c, "image frequency");
    detail::check_threshold(t);
    return std::max(1.0, std::sqrt(t / f_c));
}

/// The unclamped inner value s = sqrt(t / sqrt(f_i*f_b)). Shared by the
/// clamped two-frequency factor, its exponential variant, and the growth
/// diagnostics, so identities between them hold bitwise.
inline double irfs_inner_value(double f_i, double f_b, double t) {
    detail::check_fraction(f_i, "image frequency");
    detail::check_fraction(f_b, "instance frequency");
    detail::check_threshold(t);
    return std::sqrt(t / detail::geometric_mean(f_i, f_b));
}

/// max(1, s): oversampling driven by the geometric mean of image and
/// instance frequency.
inline double irfs_factor(double f_i, double f_b, double t) {
    return std::max(1.0, irfs_inner_value(f_i, f_b, t));
}

/// exp(alpha*s), deliberately unclamped: the exponential of a positive
/// argument already exceeds 1, and stays strictly ordered where the
/// clamped factors saturate at 1.
inline double eirfs_factor(double f_i, double f_b, double t, double alpha) {
    detail::check_alpha(alpha);
    double r = std::exp(alpha * irfs_inner_value(f_i, f_b, t));
    if (!std::isfinite(r))
        throw overflow_error("eirfs factor overflows double range (alpha*s = " +
                             format_double(alpha * irfs_inner_value(f_i, f_b, t)) + ")");
    return r;
}

/// d/df_i of exp(alpha*s). With s = sqrt(t)*(f_i*f_b)^(-1/4),
/// ds/df_i = -s/(4*f_i), so the derivative is -alpha*exp(alpha*s)*s/(4*f_i).
/// Strictly negative: the factor falls as the class becomes more frequent.
inline double eirfs_first_derivative(double f_i, double f_b, double t, double alpha) {
    detail::check_alpha(alpha);
    double s = irfs_inner_value(f_i, f_b, t);
    double r = std::exp(alpha * s);
    if (!std::isfinite(r))
        throw overflow_error("eirfs derivative overflows double range (alpha*s = " +
                             format_double(alpha * s) + ")");
    return -alpha * r * s / (4.0 * f_i);
}

/// d2/df_i2 of exp(alpha*s). Differentiating again, s'' = (5/16)*s/f_i^2 and
/// r'' = alpha*r*(s'' + alpha*s'^2) = alpha*r*s*(5 + alpha*s)/(16*f_i^2).
/// Strictly positive: the factor is convex in the image frequency.
inline double eirfs_second_derivative(double f_i, double f_b, double t, double alpha) {
    detail::check_alpha(alpha);
    double s = irfs_inner_value(f_i, f_b, t);
    double r = std::exp(alpha * s);
    if (!std::isfinite(r))
        throw overflow_error("eirfs derivative overflows double range (alpha*s = " +
                             format_double(alpha * s) + ")");
    return alpha * r * s * (5.0 + alpha * s) / (16.0 * f_i * f_i);
}

/// Per-image factor: the maximum class factor over the categories present.
/// Images with no categories (or only excluded ones) get the neutral 1.0.
inline double image_repeat(const ImageRecord& image,
                           const std::unordered_map<std::int32_t, double>& class_factors) {
    double r = 1.0;
    for (const auto& [cat, count] : image.instance_counts) {
        auto it = class_factors.find(cat);
        if (it != class_factors.end()) r = std::max(r, it->second);
    }
    return r;
}

/// Normalizes per-image factors into selection probabilities. The sum is
/// accumulated in index order so results are bit-stable.
inline std::vector<double> selection_probabilities(const std::vector<double>& image_factors) {
    if (image_factors.empty())
        throw domain_error("selection_probabilities: empty factor list");
    double sum = 0.0;
    for (double r : image_factors) {
        if (!(r > 0.0) || !std::isfinite(r))
            throw domain_error("selection_probabilities: factors must be positive and finite");
        sum += r;
    }
    std::vector<double> p(image_factors.size());
    for (std::size_t i = 0; i < p.size(); ++i) p[i] = image_factors[i] / sum;
    return p;
}

struct ClassFactor {
    std::int32_t category_id = 0;
    std::string name;
    double image_fraction = 0.0;
    double instance_fraction = 0.0;
    double factor = 1.0;

    friend bool operator==(const ClassFactor&, const ClassFactor&) = default;
};

struct RepeatFactorTable {
    std::string dataset_id;
    RebalanceConfig config;
    std::vector<ClassFactor> classes;    // categories with nonzero frequency, source order
    std::vector<CategoryInfo> excluded;  // zero-frequency categories, skipped by the formulas
    std::vector<std::string> image_ids;  // image order of the source dataset
    std::vector<double> image_factor;    // r_i per image
    std::vector<double> probability;     // p_i per image
    double factor_sum = 0.0;             // sum of r_i, accumulated in image order

    const ClassFactor* find(std::int32_t category_id) const {
        for (const auto& c : classes)
            if (c.category_id == category_id) return &c;
        return nullptr;
    }

    friend bool operator==(const RepeatFactorTable&, const RepeatFactorTable&) = default;
};

inline double class_factor_for(Method method, double f_i, double f_b, double t,
                               const std::optional<double>& alpha) {
    switch (method) {
        case Method::baseline: return 1.0;
        case Method::rfs: return rfs_factor(f_i, t);
        case Method::irfs: return irfs_factor(f_i, f_b, t);
        case Method::eirfs:
            if (!alpha) throw domain_error("class_factor_for: eirfs requires alpha");
            return eirfs_factor(f_i, f_b, t, *alpha);
    }
    throw domain_error("class_factor_for: unknown method value");
}

inline RepeatFactorTable build_table(const FrequencyTable& freqs, const DatasetIndex& index,
                                     const RebalanceConfig& config) {
    config.check();
    if (freqs.total_images != index.total_images ||
        freqs.total_instances != index.total_instances)
        throw validation_error("build_table: frequency table totals do not match the dataset");
    if (index.total_images <= 0) throw domain_error("build_table: dataset has no images");

    RepeatFactorTable table;
    table.dataset_id = index.dataset_id;
    table.config = config.normalized();

    std::unordered_map<std::int32_t, double> by_category;
    by_category.reserve(freqs.classes.size());
    for (const auto& cls : freqs.classes) {
        if (cls.image_count == 0) {
            table.excluded.push_back({cls.category_id, cls.name});
            continue;
        }
        double factor;
        try {
            factor = class_factor_for(config.method, cls.image_fraction, cls.instance_fraction,
                                      config.threshold, config.alpha);
        } catch (const overflow_error& e) {
            throw overflow_error("class " + std::to_string(cls.category_id) + " '" + cls.name +
                                 "': " + e.what());
        }
        table.classes.push_back(
            {cls.category_id, cls.name, cls.image_fraction, cls.instance_fraction, factor});
        by_category.emplace(cls.category_id, factor);
    }

    table.image_ids.reserve(index.images.size());
    table.image_factor.reserve(index.images.size());
    for (std::size_t i = 0; i < index.images.size(); ++i) {
        if (i + 8 < index.images.size())
            prefetch_read(index.images[i + 8].instance_counts.data());
        table.image_ids.push_back(index.images[i].id);
        table.image_factor.push_back(image_repeat(index.images[i], by_category));
    }
    for (double r : table.image_factor) table.factor_sum += r;
    table.probability = selection_probabilities(table.image_factor);
    return table;
}

// ---------------------------------------------------------------------------
// Factor table file format: tab-separated, bit-exact round-trip.
//
//   #rebalance-factors<TAB>v1
//   dataset<TAB><dataset_id>
//   method<TAB><name>
//   threshold<TAB><t>
//   alpha<TAB><alpha>                      (only when the method uses it)
//   class<TAB><id><TAB><name><TAB><f_i><TAB><f_b><TAB><r_c>
//   excluded<TAB><id><TAB><name>
//   image<TAB><image_id><TAB><r_i><TAB><p_i>
// ---------------------------------------------------------------------------

inline constexpr std::string_view kFactorMagic = "#rebalance-factors\tv1";

inline std::string write_factor_table(const RepeatFactorTable& table) {
    require_plain_text(table.dataset_id, "dataset id");
    std::string out;
    out.reserve(128 + table.image_ids.size() * 48);
    out += kFactorMagic;
    out += '\n';
    out += "dataset\t";
    out += table.dataset_id;
    out += '\n';
    out += "method\t";
    out += method_name(table.config.method);
    out += '\n';
    out += "threshold\t";
    out += format_double(table.config.threshold);
    out += '\n';
    if (table.config.alpha) {
        out += "alpha\t";
        out += format_double(*table.config.alpha);
        out += '\n';
    }
    for (const auto& c : table.classes) {
        require_plain_text(c.name, "category name");
        out += "class\t";
        out += std::to_string(c.category_id);
        out += '\t';
        out += c.name;
        out += '\t';
        out += format_double(c.image_fraction);
        out += '\t';
        out += format_double(c.instance_fraction);
        out += '\t';
        out += format_double(c.factor);
        out += '\n';
    }
    for (const auto& c : table.excluded) {
        require_plain_text(c.name, "category name");
        out += "excluded\t";
        out += std::to_string(c.id);
        out += '\t';
        out += c.name;
        out += '\n';
    }
    for (std::size_t i = 0; i < table.image_ids.size(); ++i) {
        require_plain_text(table.image_ids[i], "image id");
        out += "image\t";
        out += table.image_ids[i];
        out += '\t';
        out += format_double(table.image_factor[i]);
        out += '\t';
        out += format_double(table.probability[i]);
        out += '\n';
    }
    return out;
}

inline RepeatFactorTable read_factor_table(std::string_view text) {
    auto lines = split_lines(text);
    if (lines.empty() || lines[0] != kFactorMagic)
        throw parse_error("factor table: missing '#rebalance-factors\tv1' header");

    RepeatFactorTable table;
    table.config.alpha.reset();
    bool saw_method = false, saw_threshold = false;
    for (std::size_t ln = 1; ln < lines.size(); ++ln) {
        auto context = "line " + std::to_string(ln + 1);
        auto fields = split(lines[ln], '\t');
        if (fields.empty() || fields[0].empty()) continue;
        if (fields[0] == "dataset" && fields.size() == 2) {
            table.dataset_id = std::string(fields[1]);
        } else if (fields[0] == "method" && fields.size() == 2) {
            table.config.method = parse_method(fields[1]);
            saw_method = true;
        } else if (fields[0] == "threshold" && fields.size() == 2) {
            table.config.threshold = parse_double(fields[1], context);
            saw_threshold = true;
        } else if (fields[0] == "alpha" && fields.size() == 2) {
            table.config.alpha = parse_double(fields[1], context);
        } else if (fields[0] == "class" && fields.size() == 6) {
            table.classes.push_back({static_cast<std::int32_t>(parse_int(fields[1], context)),
                                     std::string(fields[2]), parse_double(fields[3], context),
                                     parse_double(fields[4], context),
                                     parse_double(fields[5], context)});
        } else if (fields[0] == "excluded" && fields.size() == 3) {
            table.excluded.push_back(
                {static_cast<std::int32_t>(parse_int(fields[1], context)), std::string(fields[2])});
        } else if (fields[0] == "image" && fields.size() == 4) {
            table.image_ids.push_back(std::string(fields[1]));
            table.image_factor.push_back(parse_double(fields[2], context));
            table.probability.push_back(parse_double(fields[3], context));
        } else {
            throw parse_error("factor table: malformed record '" + std::string(fields[0]) +
                              "' at " + context);
        }
    }
    if (!saw_method || !saw_threshold)
        throw parse_error("factor table: missing method or threshold record");
    table.config.check();
    for (double r : table.image_factor) table.factor_sum += r;
    return table;
}

inline void save_factor_table(const RepeatFactorTable& table, const std::filesystem::path& path) {
    write_file(path, write_factor_table(table));
}

inline RepeatFactorTable load_factor_table(const std::filesystem::path& path) {
    return read_factor_table(read_file(path));
}

} // namespace rebalance
