// Acceptance suite: exercises the distribution-level guarantees end to end
// and checks the factor formulas against an independent arbitrary-precision
// evaluation. Prints one line per criterion; exit status is the number of
// failed criteria.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <map>
#include <numeric>
#include <string>
#include <vector>

#include <malloc.h>
#include <mpfr.h>

#include "support.hpp"

using namespace rebalance;
using Clock = std::chrono::steady_clock;

namespace {

int failures = 0;

void report(int number, const char* name, bool pass, const std::string& detail) {
    std::printf("criterion %d (%s): %s%s%s\n", number, name, pass ? "PASS" : "FAIL",
                detail.empty() ? "" : " | ", detail.c_str());
    std::fflush(stdout);
    if (!pass) ++failures;
}

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string fmt(const char* pattern, double a, double b = 0.0, double c = 0.0) {
    char buf[256];
    std::snprintf(buf, sizeof buf, pattern, a, b, c);
    return buf;
}

double rel_diff(double got, double want) {
    double scale = std::max(std::abs(want), 1e-300);
    return std::abs(got - want) / scale;
}

// ---------------------------------------------------------------------------
// 256-bit reference evaluation of the three factor formulas.
// ---------------------------------------------------------------------------

constexpr mpfr_prec_t kPrec = 256;

double oracle_rfs(double f, double t) {
    mpfr_t r;
    mpfr_init2(r, kPrec);
    mpfr_set_d(r, t, MPFR_RNDN);
    mpfr_div_d(r, r, f, MPFR_RNDN);
    mpfr_sqrt(r, r, MPFR_RNDN);
    if (mpfr_cmp_ui(r, 1) < 0) mpfr_set_ui(r, 1, MPFR_RNDN);
    double out = mpfr_get_d(r, MPFR_RNDN);
    mpfr_clear(r);
    return out;
}

void oracle_inner(mpfr_t out, double f_i, double f_b, double t) {
    mpfr_t g;
    mpfr_init2(g, kPrec);
    mpfr_set_d(g, f_i, MPFR_RNDN);
    mpfr_mul_d(g, g, f_b, MPFR_RNDN);
    mpfr_sqrt(g, g, MPFR_RNDN);  // geometric mean
    mpfr_set_d(out, t, MPFR_RNDN);
    mpfr_div(out, out, g, MPFR_RNDN);
    mpfr_sqrt(out, out, MPFR_RNDN);
    mpfr_clear(g);
}

double oracle_irfs(double f_i, double f_b, double t) {
    mpfr_t s;
    mpfr_init2(s, kPrec);
    oracle_inner(s, f_i, f_b, t);
    if (mpfr_cmp_ui(s, 1) < 0) mpfr_set_ui(s, 1, MPFR_RNDN);
    double out = mpfr_get_d(s, MPFR_RNDN);
    mpfr_clear(s);
    return out;
}

double oracle_eirfs(double f_i, double f_b, double t, double alpha) {
    mpfr_t s;
    mpfr_init2(s, kPrec);
    oracle_inner(s, f_i, f_b, t);
    mpfr_mul_d(s, s, alpha, MPFR_RNDN);
    mpfr_exp(s, s, MPFR_RNDN);
    double out = mpfr_get_d(s, MPFR_RNDN);
    mpfr_clear(s);
    return out;
}

// ---------------------------------------------------------------------------

void criterion_1_reference_counts() {
    auto doc = testsupport::wildfire_coco_json();  // document assembly is untimed

    auto start = Clock::now();
    auto index = parse_coco(doc);
    auto freqs = compute_frequencies(index);
    double elapsed = seconds_since(start);

    bool pass = index.total_images == 40384 && index.total_instances == 146949;
    const double expected_pct[] = {23.0, 22.1, 46.3, 8.6};
    double worst = 0.0;
    for (std::size_t c = 0; c < 4; ++c) {
        double off = std::abs(100.0 * freqs.classes[c].instance_fraction - expected_pct[c]);
        worst = std::max(worst, off);
    }
    pass = pass && worst <= 0.05 && elapsed < 1.0;
    report(1, "reference dataset counts", pass,
           "N=" + std::to_string(index.total_images) +
               " B=" + std::to_string(index.total_instances) +
               fmt(" max share offset %.4f points, %.3fs", worst, elapsed));
}

void criterion_2_formula_oracles() {
    auto start = Clock::now();
    SplitMix64 rng(20240817);
    double worst = 0.0;
    for (int i = 0; i < 1000; ++i) {
        double f_i = std::pow(10.0, -4.0 * rng.next_double());
        double f_b = std::pow(10.0, -4.0 * rng.next_double());
        double t = std::pow(10.0, -4.0 * rng.next_double());
        double alpha = 0.1 * std::pow(20.0, rng.next_double());

        worst = std::max(worst, rel_diff(rfs_factor(f_i, t), oracle_rfs(f_i, t)));
        worst = std::max(worst, rel_diff(irfs_factor(f_i, f_b, t), oracle_irfs(f_i, f_b, t)));
        worst = std::max(worst,
                         rel_diff(eirfs_factor(f_i, f_b, t, alpha),
                                  oracle_eirfs(f_i, f_b, t, alpha)));
    }
    double elapsed = seconds_since(start);
    bool pass = worst <= 1e-12 && elapsed < 1.0;
    report(2, "arbitrary-precision formula oracle", pass,
           fmt("max relative error %.3e over 3000 evaluations, %.3fs", worst, elapsed));
}

void criterion_3_derivatives() {
    auto start = Clock::now();
    const double t = 0.01, alpha = 2.0;
    const int n = 20;
    double step = std::pow(0.9 / 2e-4, 1.0 / (n - 1));
    bool signs_ok = true;
    double worst1 = 0.0, worst2 = 0.0;

    double f_i = 2e-4;
    for (int i = 0; i < n; ++i, f_i *= step) {
        double f_b = 2e-4;
        for (int j = 0; j < n; ++j, f_b *= step) {
            double d1 = eirfs_first_derivative(f_i, f_b, t, alpha);
            double d2 = eirfs_second_derivative(f_i, f_b, t, alpha);
            signs_ok = signs_ok && d1 < 0.0 && d2 > 0.0;

            double h1 = 1e-6 * f_i;
            double fd1 = (eirfs_factor(f_i + h1, f_b, t, alpha) -
                          eirfs_factor(f_i - h1, f_b, t, alpha)) /
                         (2.0 * h1);
            worst1 = std::max(worst1, rel_diff(d1, fd1));

            double h2 = 1e-4 * f_i;
            double fd2 = (eirfs_factor(f_i + h2, f_b, t, alpha) -
                          2.0 * eirfs_factor(f_i, f_b, t, alpha) +
                          eirfs_factor(f_i - h2, f_b, t, alpha)) /
                         (h2 * h2);
            worst2 = std::max(worst2, rel_diff(d2, fd2));
        }
    }
    double elapsed = seconds_since(start);
    bool pass = signs_ok && worst1 <= 1e-6 && worst2 <= 1e-4 && elapsed < 1.0;
    report(3, "derivative and convexity suite", pass,
           fmt("first %.3e, second %.3e, signs hold, %.3fs",
               worst1, worst2, elapsed) + (signs_ok ? "" : " [sign violation]"));
}

void criterion_4_growth_slopes() {
    auto start = Clock::now();
    auto probes = geometric_probe_grid(1e-6, 1e-3, 30);

    auto rfs = growth_diagnostic({Method::rfs, 0.01, std::nullopt}, probes);
    auto irfs = growth_diagnostic({Method::irfs, 0.01, std::nullopt}, probes);
    auto eirfs = growth_diagnostic({Method::eirfs, 0.01, 2.0}, probes);
    double elapsed = seconds_since(start);

    double off_rfs = std::abs(rfs.slope - -0.5);
    double off_irfs = std::abs(irfs.slope - -0.25);
    double off_eirfs = std::abs(eirfs.slope - 2.0 * std::sqrt(0.01));
    bool pass = off_rfs <= 1e-6 && rfs.residual_norm <= 1e-6 &&
                off_irfs <= 1e-6 && irfs.residual_norm <= 1e-6 &&
                off_eirfs <= 1e-6 && eirfs.residual_norm <= 1e-6 && elapsed < 1.0;
    report(4, "growth-rate slopes", pass,
           fmt("slopes %.6f / %.6f / %.6f vs -0.5 / -0.25 / 0.2",
               rfs.slope, irfs.slope, eirfs.slope) + fmt(", %.3fs", elapsed));
}

void criterion_5_training_distribution() {
    auto start = Clock::now();
    auto index = testsupport::single_class_index({10000, 3000, 1000, 300, 100});
    auto freqs = compute_frequencies(index);

    bool pass = true;
    std::string shares;
    for (auto method : {Method::baseline, Method::rfs, Method::irfs, Method::eirfs}) {
        RebalanceConfig config{method, 0.05,
                               method == Method::eirfs ? std::optional<double>(2.0)
                                                       : std::nullopt};
        auto table = build_table(freqs, index, config);
        auto report_data =
            simulate_training_distribution(index, table, SampleMode::draw, 1, 1000000, 424242);
        pass = pass && report_data.single_class_regime && report_data.l1_deviation <= 0.01;
        if (!shares.empty()) shares += ", ";
        shares += std::string(method_name(method)) + " " +
                  fmt("L1=%.5f", report_data.l1_deviation);
    }
    double elapsed = seconds_since(start);
    pass = pass && elapsed < 30.0;
    report(5, "sampled training distribution", pass, shares + fmt(", %.2fs", elapsed));
}

void criterion_6_expand_expectation() {
    auto start = Clock::now();
    RepeatFactorTable table;
    table.dataset_id = "expand-check";
    table.config = RebalanceConfig{Method::rfs, 0.5, std::nullopt};
    table.image_ids = {"r27", "r10", "r14", "r32"};
    table.image_factor = {2.7, 1.0, 1.4, 3.2};
    table.probability = selection_probabilities(table.image_factor);
    table.factor_sum = std::accumulate(table.image_factor.begin(), table.image_factor.end(), 0.0);

    constexpr int kEpochs = 10000;
    std::map<std::string, std::int64_t> totals;
    for (int epoch = 0; epoch < kEpochs; ++epoch)
        for (const auto& id : expand_epoch(table, static_cast<std::uint64_t>(epoch), 7).entries)
            ++totals[id];

    bool pass = true;
    std::string detail;
    for (std::size_t i = 0; i < table.image_ids.size(); ++i) {
        double r = table.image_factor[i];
        double frac = r - std::floor(r);
        double mean = static_cast<double>(totals[table.image_ids[i]]) / kEpochs;
        if (frac == 0.0) {
            pass = pass && mean == r;
            continue;
        }
        double se = std::sqrt(frac * (1.0 - frac) / kEpochs);
        pass = pass && std::abs(mean - r) <= 3.0 * se;
        if (!detail.empty()) detail += ", ";
        detail += fmt("r=%.1f mean=%.4f (3se=%.4f)", r, mean, 3.0 * se);
    }
    double elapsed = seconds_since(start);
    pass = pass && elapsed < 10.0;
    report(6, "expand-mode expectation", pass, detail + fmt(", %.2fs", elapsed));
}

void criterion_7_saturation_vs_exponential() {
    auto start = Clock::now();
    auto index = testsupport::wildfire_index();
    auto freqs = compute_frequencies(index);

    auto irfs = build_table(freqs, index, {Method::irfs, 0.0001, std::nullopt});
    bool irfs_flat = true;
    for (const auto& cls : irfs.classes) irfs_flat = irfs_flat && cls.factor == 1.0;
    for (double r : irfs.image_factor) irfs_flat = irfs_flat && r == 1.0;
    double p0 = irfs.probability.front();
    for (double p : irfs.probability) irfs_flat = irfs_flat && p == p0;

    auto eirfs = build_table(freqs, index, {Method::eirfs, 0.0001, 2.0});
    const std::map<std::int32_t, double> expected = {{testsupport::kFire, 1.0365581098151313},
                                                     {testsupport::kSmoke, 1.0322444207275643},
                                                     {testsupport::kHuman, 1.029904333923911},
                                                     {testsupport::kLake, 1.0506011547489575}};
    double worst = 0.0;
    for (const auto& cls : eirfs.classes)
        worst = std::max(worst, rel_diff(cls.factor, expected.at(cls.category_id)));

    const auto* fire = eirfs.find(testsupport::kFire);
    const auto* lake = eirfs.find(testsupport::kLake);
    bool ordered = fire && lake && lake->factor > fire->factor && fire->factor > 1.0;
    bool nonuniform = false;
    for (const auto& cls : eirfs.classes)
        nonuniform = nonuniform || cls.factor != eirfs.classes.front().factor;

    double elapsed = seconds_since(start);
    bool pass = irfs_flat && ordered && nonuniform && worst <= 1e-9 && elapsed < 1.0;
    report(7, "saturation versus exponential weighting", pass,
           fmt("irfs uniform, eirfs max rel offset %.2e, Lake > Fire > 1, %.3fs", worst,
               elapsed));
}

// The small working set fits in cache while the large one does not, which
// would skew a warm-cache comparison; sweeping a buffer much larger than the
// last-level cache before each timed phase puts both sizes in the same cold
// state. The buffer is static so the pages stay resident between sweeps.
void displace_cached_state() {
    constexpr std::size_t kBytes = 1024u << 20;
    static std::vector<unsigned char> buf(kBytes, 1);
    for (std::size_t i = 0; i < kBytes; i += 64)
        buf[i] = static_cast<unsigned char>(i >> 6);
}

void criterion_8_linear_scaling() {
    auto start = Clock::now();
    constexpr std::int64_t kSizes[2] = {100000, 1000000};
    DatasetIndex index[2];
    FrequencyTable freqs[2];
    for (int s = 0; s < 2; ++s) {
        index[s] = generate_synthetic(20, 1.0, kSizes[s], InstanceLaw::one, false, 31);
        freqs[s] = compute_frequencies(index[s]);
        // Untimed pass so allocator growth and page faults hit neither size.
        auto table = build_table(freqs[s], index[s], {Method::eirfs, 0.001, 2.0});
        auto manifest = draw_epoch(table, static_cast<std::uint64_t>(kSizes[s]), 0, 77);
        if (manifest.entries.size() != static_cast<std::size_t>(kSizes[s])) {
            report(8, "per-epoch cost scales linearly", false, "warm-up draw came up short");
            return;
        }
        if (write_manifest(manifest).empty()) {
            report(8, "per-epoch cost scales linearly", false, "warm-up serialization failed");
            return;
        }
    }

    // Each phase is clocked separately with a cold cache in front of it, and
    // each size keeps its fastest round. Stray interference from outside the
    // process only ever adds time, so the minimum is the cleanest estimate of
    // the work itself.
    double best[2] = {0.0, 0.0};
    constexpr int kRounds = 13;
    for (int round = 0; round < kRounds; ++round) {
        for (int s = 0; s < 2; ++s) {
            displace_cached_state();
            auto t0 = Clock::now();
            auto table = build_table(freqs[s], index[s], {Method::eirfs, 0.001, 2.0});
            double took = seconds_since(t0);
            displace_cached_state();
            auto t1 = Clock::now();
            auto manifest = draw_epoch(table, static_cast<std::uint64_t>(kSizes[s]), 0, 77);
            took += seconds_since(t1);
            displace_cached_state();
            auto t2 = Clock::now();
            auto text = write_manifest(manifest);
            took += seconds_since(t2);
            if (text.empty()) return;
            if (round == 0 || took < best[s]) best[s] = took;
        }
    }

    double ratio = best[1] / best[0];
    double elapsed = seconds_since(start);
    bool pass = best[0] > 0.0 && ratio >= 8.0 && ratio <= 12.0 && elapsed < 60.0;
    report(8, "per-epoch cost scales linearly", pass,
           fmt("1e5: %.4fs, 1e6: %.4fs", best[0], best[1]) + fmt(", ratio %.2f, %.1fs", ratio,
                                                                 elapsed));
}

void criterion_9_determinism() {
    auto make_table = [] {
        auto index = testsupport::single_class_index({300, 90, 30, 9});
        auto freqs = compute_frequencies(index);
        return build_table(freqs, index, {Method::eirfs, 0.05, 1.5});
    };

    // Fresh pipelines, identical bytes.
    auto draw_a = write_manifest(draw_epoch(make_table(), 5000, 0, 99));
    auto draw_b = write_manifest(draw_epoch(make_table(), 5000, 0, 99));
    auto expand_a = write_manifest(expand_epoch(make_table(), 0, 99));
    auto expand_b = write_manifest(expand_epoch(make_table(), 0, 99));
    bool rerun_ok = draw_a == draw_b && expand_a == expand_b;

    // Single-epoch regeneration out of a planned run.
    auto table = make_table();
    auto planned_draw = plan_epochs(table, SampleMode::draw, 5, 2000, 123);
    auto planned_expand = plan_epochs(table, SampleMode::expand, 5, 0, 123);
    bool regen_ok =
        write_manifest(planned_draw[3]) == write_manifest(draw_epoch(table, 2000, 3, 123)) &&
        write_manifest(planned_expand[3]) == write_manifest(expand_epoch(table, 3, 123));

    // Disk round-trip preserves bytes.
    testsupport::TempDir tmp;
    auto path = tmp.file("epoch.manifest");
    save_manifest(planned_draw[2], path);
    auto reloaded = load_manifest(path);
    bool disk_ok = write_manifest(reloaded) == write_manifest(planned_draw[2]);

    bool pass = rerun_ok && regen_ok && disk_ok;
    report(9, "byte-identical artifacts", pass,
           std::string("rerun ") + (rerun_ok ? "ok" : "mismatch") + ", regeneration " +
               (regen_ok ? "ok" : "mismatch") + ", disk round-trip " +
               (disk_ok ? "ok" : "mismatch"));
}

} // namespace

int main() {
    // Keep large allocations on the heap instead of fresh mmap regions so the
    // timing in criterion 8 measures the pipeline, not kernel page faults.
    mallopt(M_MMAP_THRESHOLD, 1 << 30);
    mallopt(M_TRIM_THRESHOLD, 1 << 30);

    criterion_1_reference_counts();
    criterion_2_formula_oracles();
    criterion_3_derivatives();
    criterion_4_growth_slopes();
    criterion_5_training_distribution();
    criterion_6_expand_expectation();
    criterion_7_saturation_vs_exponential();
    criterion_8_linear_scaling();
    criterion_9_determinism();

    std::printf("%d of 9 criteria passed\n", 9 - failures);
    return failures;
}
