#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "rebalance/errors.hpp"
#include "rebalance/parallel.hpp"
#include "rebalance/repeat_factor.hpp"
#include "rebalance/rng.hpp"
#include "rebalance/text.hpp"

namespace rebalance {

enum class SampleMode { expand, draw };

inline std::string_view mode_name(SampleMode m) {
    return m == SampleMode::expand ? "expand" : "draw";
}

inline SampleMode parse_mode(std::string_view name) {
    if (name == "expand") return SampleMode::expand;
    if (name == "draw") return SampleMode::draw;
    throw parse_error("unknown mode '" + std::string(name) + "' (expected expand or draw)");
}

struct EpochManifest {
    std::string dataset_id;
    std::uint64_t seed = 0;
    std::uint64_t epoch_index = 0;
    SampleMode mode = SampleMode::draw;
    RebalanceConfig source_config;
    std::vector<std::string> entries;  // image ids in presentation order

    friend bool operator==(const EpochManifest&, const EpochManifest&) = default;
};

/// Ceiling on materialized entries per epoch; a factor table whose expansion
/// exceeds this is almost certainly a configuration mistake, and the draw
/// mode covers such regimes without materializing the blow-up.
inline constexpr std::uint64_t kMaxEpochEntries = 50'000'000;

namespace detail {

inline SplitMix64 epoch_stream(std::uint64_t seed, std::uint64_t epoch_index) {
    return SplitMix64(SplitMix64::derive_stream(seed, epoch_index));
}

inline void check_table_for_sampling(const RepeatFactorTable& table) {
    if (table.image_ids.empty())
        throw domain_error("sampling: factor table covers no images");
    if (table.image_factor.size() != table.image_ids.size() ||
        table.probability.size() != table.image_ids.size())
        throw domain_error("sampling: factor table has inconsistent per-image columns");
}

} // namespace detail

/// One epoch by repeat expansion: image i appears floor(r_i) times plus one
/// extra with probability frac(r_i) (stochastic rounding keeps the expected
/// multiplicity at exactly r_i), then the multiset is shuffled. The Bernoulli
/// draw is consumed only when r_i has a fractional part, so integer factors
/// leave the stream untouched. Deterministic given (seed, epoch_index).
inline EpochManifest expand_epoch(const RepeatFactorTable& table, std::uint64_t epoch_index,
                                  std::uint64_t seed) {
    detail::check_table_for_sampling(table);
    if (table.factor_sum > static_cast<double>(kMaxEpochEntries))
        throw domain_error("expand_epoch: expansion would materialize about " +
                           format_double(table.factor_sum) + " entries (limit " +
                           std::to_string(kMaxEpochEntries) + "); use draw mode");

    auto rng = detail::epoch_stream(seed, epoch_index);
    std::vector<std::uint32_t> expanded;
    expanded.reserve(static_cast<std::size_t>(table.factor_sum) + 1);
    for (std::size_t i = 0; i < table.image_factor.size(); ++i) {
        double r = table.image_factor[i];
        double whole = std::floor(r);
        double frac = r - whole;
        auto count = static_cast<std::uint64_t>(whole);
        if (frac > 0.0 && rng.next_double() < frac) ++count;
        for (std::uint64_t k = 0; k < count; ++k)
            expanded.push_back(static_cast<std::uint32_t>(i));
    }
    for (std::size_t j = expanded.size(); j > 1; --j) {
        auto k = static_cast<std::size_t>(rng.next_below(j));
        std::swap(expanded[j - 1], expanded[k]);
    }

    EpochManifest manifest;
    manifest.dataset_id = table.dataset_id;
    manifest.seed = seed;
    manifest.epoch_index = epoch_index;
    manifest.mode = SampleMode::expand;
    manifest.source_config = table.config;
    manifest.entries.reserve(expanded.size());
    for (std::size_t i = 0; i < expanded.size(); ++i) {
        if (i + 16 < expanded.size()) prefetch_read(&table.image_ids[expanded[i + 16]]);
        manifest.entries.push_back(table.image_ids[expanded[i]]);
    }
    return manifest;
}

/// One epoch of exactly `size` independent draws from the selection
/// distribution p (categorical sampling via the alias table).
/// Deterministic given (seed, epoch_index).
inline EpochManifest draw_epoch(const RepeatFactorTable& table, std::uint64_t size,
                                std::uint64_t epoch_index, std::uint64_t seed) {
    detail::check_table_for_sampling(table);
    if (size == 0) throw domain_error("draw_epoch: size must be positive");
    if (size > kMaxEpochEntries)
        throw domain_error("draw_epoch: size " + std::to_string(size) + " exceeds limit " +
                           std::to_string(kMaxEpochEntries));

    auto rng = detail::epoch_stream(seed, epoch_index);
    AliasTable alias(table.probability);

    std::vector<std::uint32_t> picks(static_cast<std::size_t>(size));
    alias.sample_many(rng, picks.data(), picks.size());

    EpochManifest manifest;
    manifest.dataset_id = table.dataset_id;
    manifest.seed = seed;
    manifest.epoch_index = epoch_index;
    manifest.mode = SampleMode::draw;
    manifest.source_config = table.config;
    manifest.entries.reserve(size);
    for (std::size_t k = 0; k < picks.size(); ++k) {
        if (k + 16 < picks.size()) prefetch_read(&table.image_ids[picks[k + 16]]);
        manifest.entries.push_back(table.image_ids[picks[k]]);
    }
    return manifest;
}

/// Epochs 0..epochs-1. Epoch k runs on the sub-stream derived from (seed, k),
/// so each manifest is independent of how many epochs are requested, of
/// generation order, and of the worker count.
inline std::vector<EpochManifest> plan_epochs(const RepeatFactorTable& table, SampleMode mode,
                                              std::uint64_t epochs, std::uint64_t size,
                                              std::uint64_t seed, std::size_t jobs = 1) {
    if (epochs == 0) throw domain_error("plan_epochs: epochs must be positive");
    std::vector<EpochManifest> out(static_cast<std::size_t>(epochs));
    parallel_for(jobs, static_cast<std::size_t>(epochs), [&](std::size_t k) {
        out[k] = mode == SampleMode::expand
                     ? expand_epoch(table, k, seed)
                     : draw_epoch(table, size, k, seed);
    });
    return out;
}

// ---------------------------------------------------------------------------
// Manifest file format: tab-separated header, one image id per line, sealed
// by a checksum over all preceding bytes. Bit-exact round-trip.
//
//   #rebalance-manifest<TAB>v1
//   dataset<TAB><dataset_id>
//   seed<TAB><u64>
//   epoch<TAB><u64>
//   mode<TAB><expand|draw>
//   method<TAB><name>
//   threshold<TAB><t>
//   alpha<TAB><alpha>                      (only when the method uses it)
//   config_digest<TAB><16 hex digits>
//   entries<TAB><count>
//   <image_id>                             (count lines)
//   digest<TAB><16 hex digits>
// ---------------------------------------------------------------------------

inline constexpr std::string_view kManifestMagic = "#rebalance-manifest\tv1";

inline std::string write_manifest(const EpochManifest& manifest) {
    require_plain_text(manifest.dataset_id, "dataset id");
    std::string out;
    out.reserve(192 + manifest.entries.size() * 16);
    out += kManifestMagic;
    out += '\n';
    out += "dataset\t";
    out += manifest.dataset_id;
    out += '\n';
    out += "seed\t";
    out += std::to_string(manifest.seed);
    out += '\n';
    out += "epoch\t";
    out += std::to_string(manifest.epoch_index);
    out += '\n';
    out += "mode\t";
    out += mode_name(manifest.mode);
    out += '\n';
    out += "method\t";
    out += method_name(manifest.source_config.method);
    out += '\n';
    out += "threshold\t";
    out += format_double(manifest.source_config.threshold);
    out += '\n';
    if (manifest.source_config.alpha) {
        out += "alpha\t";
        out += format_double(*manifest.source_config.alpha);
        out += '\n';
    }
    out += "config_digest\t";
    out += to_hex16(config_digest(manifest.source_config));
    out += '\n';
    out += "entries\t";
    out += std::to_string(manifest.entries.size());
    out += '\n';
    for (const auto& id : manifest.entries) {
        require_plain_text(id, "image id");
        out += id;
        out += '\n';
    }
    auto digest = fnv1a64(out);
    out += "digest\t";
    out += to_hex16(digest);
    out += '\n';
    return out;
}

inline EpochManifest read_manifest(std::string_view text) {
    auto lines = split_lines(text);
    if (lines.empty() || lines[0] != kManifestMagic)
        throw parse_error("manifest: missing '#rebalance-manifest\tv1' header");

    EpochManifest manifest;
    manifest.source_config.alpha.reset();
    std::size_t ln = 1;
    bool saw_entries = false;
    std::uint64_t entry_count = 0;
    std::uint64_t stored_config_digest = 0;
    bool saw_config_digest = false;
    for (; ln < lines.size(); ++ln) {
        auto context = "line " + std::to_string(ln + 1);
        auto fields = split(lines[ln], '\t');
        if (fields.size() != 2)
            throw parse_error("manifest: malformed header record at " + context);
        auto key = fields[0];
        auto value = fields[1];
        if (key == "dataset") manifest.dataset_id = std::string(value);
        else if (key == "seed") manifest.seed = parse_uint(value, context);
        else if (key == "epoch") manifest.epoch_index = parse_uint(value, context);
        else if (key == "mode") manifest.mode = parse_mode(value);
        else if (key == "method") manifest.source_config.method = parse_method(value);
        else if (key == "threshold") manifest.source_config.threshold = parse_double(value, context);
        else if (key == "alpha") manifest.source_config.alpha = parse_double(value, context);
        else if (key == "config_digest") {
            stored_config_digest = parse_hex16(value, context);
            saw_config_digest = true;
        } else if (key == "entries") {
            entry_count = parse_uint(value, context);
            saw_entries = true;
            ++ln;
            break;
        } else {
            throw parse_error("manifest: unknown header record '" + std::string(key) + "' at " +
                              context);
        }
    }
    if (!saw_entries) throw parse_error("manifest: missing entries record");
    manifest.source_config.check();
    if (!saw_config_digest || stored_config_digest != config_digest(manifest.source_config))
        throw parse_error("manifest: config digest missing or inconsistent with header records");

    manifest.entries.reserve(static_cast<std::size_t>(entry_count));
    for (std::uint64_t k = 0; k < entry_count; ++k, ++ln) {
        if (ln >= lines.size()) throw parse_error("manifest: truncated entry list");
        manifest.entries.emplace_back(lines[ln]);
    }
    if (ln >= lines.size()) throw parse_error("manifest: missing digest line");
    auto fields = split(lines[ln], '\t');
    if (fields.size() != 2 || fields[0] != "digest")
        throw parse_error("manifest: missing digest line");
    std::uint64_t declared_digest = parse_hex16(fields[1], "digest line");

    // Everything before the digest line participates in the checksum;
    // split_lines returns views into `text`, so the line's offset is exact.
    auto digest_offset = static_cast<std::size_t>(lines[ln].data() - text.data());
    std::uint64_t actual = fnv1a64(text.substr(0, digest_offset));
    if (actual != declared_digest)
        throw parse_error("manifest: integrity check failed (stored " + to_hex16(declared_digest) +
                          ", computed " + to_hex16(actual) + ")");
    return manifest;
}

inline void save_manifest(const EpochManifest& manifest, const std::filesystem::path& path) {
    write_file(path, write_manifest(manifest));
}

inline EpochManifest load_manifest(const std::filesystem::path& path) {
    return read_manifest(read_file(path));
}

} // namespace rebalance
