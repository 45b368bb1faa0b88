// Command-line surface for the rebalancing toolkit: dataset inspection,
// factor tables, epoch manifests, parameter sweeps, Monte Carlo simulation,
// synthetic data, and a built-in invariant suite.

#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "rebalance/rebalance.hpp"

namespace fs = std::filesystem;
using namespace rebalance;

namespace {

// Exit codes: 0 success, 2 usage, 3 bad input, 4 failed internal check.
constexpr int kExitUsage = 2;
constexpr int kExitInput = 3;
constexpr int kExitCheck = 4;

struct InputOpts {
    std::string coco_path;
    std::string yolo_root;
    std::string class_names;
    std::string dataset_path;
};

struct ConfigOpts {
    std::string method = "eirfs";
    double threshold = 0.0001;
    double alpha = 2.0;
};

void add_input_options(CLI::App* cmd, InputOpts& in) {
    auto* coco = cmd->add_option("--coco", in.coco_path, "COCO annotation JSON file");
    auto* yolo = cmd->add_option("--yolo", in.yolo_root, "YOLO label directory");
    cmd->add_option("--names", in.class_names, "class-name file for --yolo (one name per line)");
    auto* data = cmd->add_option("--dataset", in.dataset_path, "canonical dataset manifest");
    coco->excludes(yolo);
    coco->excludes(data);
    yolo->excludes(data);
}

void add_config_options(CLI::App* cmd, ConfigOpts& cfg) {
    cmd->add_option("--method", cfg.method, "rebalancing method")
        ->check(CLI::IsMember({"baseline", "rfs", "irfs", "eirfs"}))
        ->capture_default_str();
    cmd->add_option("-t,--threshold", cfg.threshold, "oversampling activation threshold")
        ->capture_default_str();
    cmd->add_option("-a,--alpha", cfg.alpha, "exponential scaling parameter (eirfs)")
        ->capture_default_str();
}

RebalanceConfig make_config(const ConfigOpts& cfg) {
    RebalanceConfig config;
    config.method = parse_method(cfg.method);
    config.threshold = cfg.threshold;
    config.alpha = cfg.alpha;
    config = config.normalized();
    config.check();
    return config;
}

DatasetIndex load_input(const InputOpts& in) {
    if (!in.coco_path.empty()) return load_coco(in.coco_path);
    if (!in.yolo_root.empty()) {
        if (in.class_names.empty())
            throw CLI::ValidationError("--yolo requires --names");
        return parse_yolo(in.yolo_root, read_class_names(in.class_names));
    }
    if (!in.dataset_path.empty()) return load_canonical(in.dataset_path);
    throw CLI::ValidationError("one of --coco, --yolo or --dataset is required");
}

/// Output files land in REBALANCE_OUTPUT_DIR unless an explicit path is given.
fs::path resolve_output(const std::string& explicit_path, const std::string& default_name) {
    if (!explicit_path.empty()) return fs::path(explicit_path);
    const char* dir = std::getenv("REBALANCE_OUTPUT_DIR");
    return (dir && *dir) ? fs::path(dir) / default_name : fs::path(default_name);
}

void report_issues(const std::vector<ValidationIssue>& issues) {
    for (const auto& issue : issues) {
        std::cerr << (issue.severity == ValidationIssue::Severity::error ? "error[input]: "
                                                                         : "warning[input]: ")
                  << issue.locator << ": " << issue.message << '\n';
    }
}

int run_inspect(const InputOpts& in, const std::string& output, bool json_out) {
    auto index = load_input(in);
    auto issues = validate(index);
    report_issues(issues);
    if (has_errors(issues)) return kExitInput;

    auto freqs = compute_frequencies(index);
    auto text = write_frequency_report(freqs, index.dataset_id);
    if (output.empty() && !json_out) {
        std::cout << text;
    } else if (json_out) {
        auto path = resolve_output(output, "frequency.json");
        write_file(path, frequency_json(freqs, index.dataset_id).dump(2) + "\n");
        std::cout << "wrote " << path.string() << '\n';
    } else {
        auto path = resolve_output(output, "frequency.tsv");
        write_file(path, text);
        std::cout << "wrote " << path.string() << '\n';
    }
    return 0;
}

int run_factors(const InputOpts& in, const ConfigOpts& cfg, const std::string& output) {
    auto index = load_input(in);
    auto config = make_config(cfg);
    auto table = build_table(compute_frequencies(index), index, config);

    auto path = resolve_output(output, "factors.tsv");
    save_factor_table(table, path);

    std::cout << "dataset " << table.dataset_id << ": " << table.image_ids.size() << " images, "
              << config_summary(config) << '\n';
    for (const auto& c : table.classes)
        std::cout << "class " << c.category_id << " " << c.name << ": r=" << format_double(c.factor)
                  << '\n';
    for (const auto& c : table.excluded)
        std::cout << "class " << c.id << " " << c.name << ": excluded (no instances)\n";
    std::cout << "wrote " << path.string() << '\n';
    return 0;
}

int run_sample(const InputOpts& in, const ConfigOpts& cfg, const std::string& mode_name_arg,
               std::uint64_t epochs, std::uint64_t epoch_start, std::uint64_t size,
               std::uint64_t seed, std::size_t jobs, const std::string& output_dir) {
    auto index = load_input(in);
    auto config = make_config(cfg);
    auto table = build_table(compute_frequencies(index), index, config);
    auto mode = parse_mode(mode_name_arg);
    if (epochs == 0) throw domain_error("sample: --epochs must be positive");
    std::uint64_t effective_size = size == 0 ? static_cast<std::uint64_t>(index.total_images) : size;

    fs::path dir = output_dir.empty() ? resolve_output("", ".") : fs::path(output_dir);
    fs::create_directories(dir);

    std::vector<EpochManifest> manifests(epochs);
    parallel_for(jobs, static_cast<std::size_t>(epochs), [&](std::size_t k) {
        std::uint64_t epoch = epoch_start + k;
        manifests[k] = mode == SampleMode::expand
                           ? expand_epoch(table, epoch, seed)
                           : draw_epoch(table, effective_size, epoch, seed);
    });
    for (const auto& manifest : manifests) {
        auto text = write_manifest(manifest);
        auto path = dir / ("epoch-" + std::to_string(manifest.epoch_index) + ".manifest");
        write_file(path, text);
        std::cout << "wrote " << path.string() << " (" << manifest.entries.size() << " entries)\n";
    }
    return 0;
}

int run_sweep(const InputOpts& in, const std::string& method_arg, std::vector<double> alphas,
              std::vector<double> thresholds, std::size_t jobs, const std::string& output) {
    auto index = load_input(in);
    if (alphas.empty()) alphas = default_sweep_alphas();
    if (thresholds.empty()) thresholds = default_sweep_thresholds();
    auto grid = sweep(index, alphas, thresholds, parse_method(method_arg), jobs);

    auto text = write_sweep_report(grid);
    auto tsv_path = resolve_output(output, "sweep.tsv");
    write_file(tsv_path, text);
    auto json_path = tsv_path;
    json_path.replace_extension(".json");
    write_file(json_path, sweep_json(grid).dump(2) + "\n");

    std::cout << text;
    std::cout << "wrote " << tsv_path.string() << " and " << json_path.string() << '\n';
    return 0;
}

int run_simulate(const InputOpts& in, const ConfigOpts& cfg, const std::string& mode_name_arg,
                 std::uint64_t epochs, std::uint64_t size, std::uint64_t seed, std::size_t jobs,
                 const std::string& output) {
    auto index = load_input(in);
    auto config = make_config(cfg);
    auto table = build_table(compute_frequencies(index), index, config);
    auto mode = parse_mode(mode_name_arg);
    std::uint64_t effective_size = size == 0 ? static_cast<std::uint64_t>(index.total_images) : size;

    auto report = simulate_training_distribution(index, table, mode, epochs, effective_size, seed,
                                                 jobs);
    auto text = write_distribution_report(report);
    auto tsv_path = resolve_output(output, "report.tsv");
    write_file(tsv_path, text);
    auto json_path = tsv_path;
    json_path.replace_extension(".json");
    write_file(json_path, distribution_report_json(report).dump(2) + "\n");

    std::cout << text;
    std::cout << "wrote " << tsv_path.string() << " and " << json_path.string() << '\n';
    return 0;
}

int run_synth(std::int64_t classes, double gamma, std::int64_t images, const std::string& law_arg,
              bool multi_class, std::uint64_t seed, const std::string& output) {
    auto index = generate_synthetic(classes, gamma, images, parse_instance_law(law_arg),
                                    multi_class, seed);
    auto path = resolve_output(output, "synthetic.dataset");
    save_canonical(index, path);
    std::cout << "wrote " << path.string() << " (" << index.total_images << " images, "
              << index.total_instances << " instances, " << index.categories.size()
              << " classes)\n";
    return 0;
}

// Built-in invariant suite: the library's mathematical claims, checked on
// the spot so an installed binary can prove itself sane.
int run_verify() {
    int failures = 0;
    auto check = [&](const std::string& name, bool ok) {
        std::cout << "check " << name << ": " << (ok ? "pass" : "FAIL") << '\n';
        if (!ok) ++failures;
    };

    const double t = 0.01, alpha = 2.0;
    auto grid = geometric_probe_grid(2e-4, 0.9, 24);

    bool signs = true, convex = true, fd_first = true, fd_second = true;
    for (const auto& [f, fb] : grid) {
        double d1 = eirfs_first_derivative(f, fb, t, alpha);
        double d2 = eirfs_second_derivative(f, fb, t, alpha);
        if (!(d1 < 0.0) || !(d2 > 0.0)) signs = false;

        double h = 0.3 * f;
        if (f - h > 0.0 && f + h <= 1.0) {
            double mid = 2.0 * eirfs_factor(f, fb, t, alpha);
            if (eirfs_factor(f - h, fb, t, alpha) + eirfs_factor(f + h, fb, t, alpha) < mid)
                convex = false;
        }

        double h1 = 1e-6 * f;
        double fd1 = (eirfs_factor(f + h1, fb, t, alpha) - eirfs_factor(f - h1, fb, t, alpha)) /
                     (2.0 * h1);
        if (std::abs(fd1 - d1) > 1e-6 * std::abs(d1)) fd_first = false;

        double h2 = 1e-4 * f;
        double fd2 = (eirfs_factor(f + h2, fb, t, alpha) - 2.0 * eirfs_factor(f, fb, t, alpha) +
                      eirfs_factor(f - h2, fb, t, alpha)) /
                     (h2 * h2);
        if (std::abs(fd2 - d2) > 1e-4 * std::abs(d2)) fd_second = false;
    }
    check("first derivative negative, second positive", signs);
    check("factor convex in image frequency", convex);
    check("first derivative matches finite differences", fd_first);
    check("second derivative matches finite differences", fd_second);

    bool collapse = true;
    bool linkage = true;
    for (const auto& [f, fb] : grid) {
        if (irfs_factor(f, fb, t) != rfs_factor(f, t)) collapse = false;
        if (irfs_inner_value(f, fb, t) >= 1.0 &&
            eirfs_factor(f, fb, t, alpha) != std::exp(alpha * irfs_factor(f, fb, t)))
            linkage = false;
    }
    check("two-frequency factor collapses to one-frequency form", collapse);
    check("exponential factor equals exp(alpha * clamped factor) when unclamped", linkage);

    auto synth = generate_synthetic(5, 1.5, 2000, InstanceLaw::one, false, 7);
    auto freqs = compute_frequencies(synth);
    bool normalized = true;
    for (auto method : {Method::baseline, Method::rfs, Method::irfs, Method::eirfs}) {
        RebalanceConfig config{method, 0.01,
                               method == Method::eirfs ? std::optional<double>(2.0) : std::nullopt};
        auto table = build_table(freqs, synth, config);
        double sum = 0.0;
        for (double p : table.probability) sum += p;
        if (std::abs(sum - 1.0) > 1e-9) normalized = false;
    }
    check("selection probabilities sum to 1", normalized);

    bool slopes = true;
    auto tight = geometric_probe_grid(1e-6, 1e-3, 16);  // inside the unclamped region for t=0.01
    for (auto method : {Method::rfs, Method::irfs, Method::eirfs}) {
        RebalanceConfig config{method, t,
                               method == Method::eirfs ? std::optional<double>(alpha)
                                                       : std::nullopt};
        auto diag = growth_diagnostic(config, tight);
        if (std::abs(diag.slope - expected_growth_slope(config)) > 1e-6) slopes = false;
    }
    check("growth-law slopes match the closed forms", slopes);

    auto table = build_table(freqs, synth, RebalanceConfig{});
    bool deterministic = draw_epoch(table, 500, 0, 42) == draw_epoch(table, 500, 0, 42) &&
                         expand_epoch(table, 3, 42) == expand_epoch(table, 3, 42);
    check("epoch generation is deterministic", deterministic);

    if (failures > 0) {
        std::cerr << "error[check]: " << failures << " check(s) failed\n";
        return kExitCheck;
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"dataset rebalancing for long-tailed detection: repeat factors, "
                 "sampling manifests, distribution analysis"};
    app.require_subcommand(1);

    InputOpts in;
    ConfigOpts cfg;
    std::string output;
    std::string output_dir;
    std::string mode = "draw";
    std::string law = "one";
    std::string sweep_method = "eirfs";
    std::vector<double> alphas;
    std::vector<double> thresholds;
    std::uint64_t epochs = 1;
    std::uint64_t epoch_start = 0;
    std::uint64_t size = 0;
    std::uint64_t seed = 42;
    std::size_t jobs = 1;
    std::int64_t synth_classes = 5;
    double synth_gamma = 1.5;
    std::int64_t synth_images = 14400;
    bool multi_class = false;
    bool json_out = false;

    auto* inspect = app.add_subcommand("inspect", "class frequencies of a dataset");
    add_input_options(inspect, in);
    inspect->add_option("-o,--output", output, "write the report here instead of stdout");
    inspect->add_flag("--json", json_out, "write the machine-readable report");

    auto* factors = app.add_subcommand("factors", "compute the repeat-factor table");
    add_input_options(factors, in);
    add_config_options(factors, cfg);
    factors->add_option("-o,--output", output, "factor table path (default factors.tsv)");

    auto* sample = app.add_subcommand("sample", "generate epoch manifests");
    add_input_options(sample, in);
    add_config_options(sample, cfg);
    sample->add_option("--mode", mode, "expand or draw")->check(CLI::IsMember({"expand", "draw"}))
        ->capture_default_str();
    sample->add_option("--epochs", epochs, "number of epochs")->capture_default_str();
    sample->add_option("--epoch-start", epoch_start, "first epoch index")->capture_default_str();
    sample->add_option("--size", size, "draws per epoch (0 = dataset size)")->capture_default_str();
    sample->add_option("--seed", seed, "sampling seed")->capture_default_str();
    sample->add_option("--jobs", jobs, "worker threads")->capture_default_str();
    sample->add_option("-o,--output-dir", output_dir, "manifest directory");

    auto* sweep_cmd = app.add_subcommand("sweep", "factor statistics over an alpha x threshold grid");
    add_input_options(sweep_cmd, in);
    sweep_cmd->add_option("--method", sweep_method, "rebalancing method")
        ->check(CLI::IsMember({"baseline", "rfs", "irfs", "eirfs"}))->capture_default_str();
    sweep_cmd->add_option("--alphas", alphas, "alpha values (default 0.5 1 2)");
    sweep_cmd->add_option("--thresholds", thresholds, "threshold values (default 0.1 0.01 0.001 0.0001)");
    sweep_cmd->add_option("--jobs", jobs, "worker threads")->capture_default_str();
    sweep_cmd->add_option("-o,--output", output, "report path (default sweep.tsv, plus .json)");

    auto* simulate = app.add_subcommand("simulate", "compare sampled exposure with the exact distribution");
    add_input_options(simulate, in);
    add_config_options(simulate, cfg);
    simulate->add_option("--mode", mode, "expand or draw")->check(CLI::IsMember({"expand", "draw"}))
        ->capture_default_str();
    simulate->add_option("--epochs", epochs, "number of epochs")->capture_default_str();
    simulate->add_option("--size", size, "draws per epoch (0 = dataset size)")->capture_default_str();
    simulate->add_option("--seed", seed, "sampling seed")->capture_default_str();
    simulate->add_option("--jobs", jobs, "worker threads")->capture_default_str();
    simulate->add_option("-o,--output", output, "report path (default report.tsv, plus .json)");

    auto* synth = app.add_subcommand("synth", "generate a synthetic long-tailed dataset");
    synth->add_option("--classes", synth_classes, "number of classes")->capture_default_str();
    synth->add_option("--gamma", synth_gamma, "rank power-law exponent")->capture_default_str();
    synth->add_option("--images", synth_images, "number of images")->capture_default_str();
    synth->add_option("--law", law, "instances per image: one or power_matched")
        ->check(CLI::IsMember({"one", "power_matched"}))->capture_default_str();
    synth->add_flag("--multi-class", multi_class, "give some images a second class");
    synth->add_option("--seed", seed, "generator seed")->capture_default_str();
    synth->add_option("-o,--output", output, "dataset path (default synthetic.dataset)");

    auto* verify = app.add_subcommand("verify", "run the built-in invariant suite");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);  // --help and friends
        std::cerr << "error[usage]: " << e.what() << '\n';
        return kExitUsage;
    }

    try {
        if (inspect->parsed()) return run_inspect(in, output, json_out);
        if (factors->parsed()) return run_factors(in, cfg, output);
        if (sample->parsed())
            return run_sample(in, cfg, mode, epochs, epoch_start, size, seed, jobs, output_dir);
        if (sweep_cmd->parsed()) return run_sweep(in, sweep_method, alphas, thresholds, jobs, output);
        if (simulate->parsed()) return run_simulate(in, cfg, mode, epochs, size, seed, jobs, output);
        if (synth->parsed())
            return run_synth(synth_classes, synth_gamma, synth_images, law, multi_class, seed, output);
        if (verify->parsed()) return run_verify();
    } catch (const CLI::ValidationError& e) {
        std::cerr << "error[usage]: " << e.what() << '\n';
        return kExitUsage;
    } catch (const parse_error& e) {
        std::cerr << "error[input]: " << e.what() << '\n';
        return kExitInput;
    } catch (const validation_error& e) {
        std::cerr << "error[input]: " << e.what() << '\n';
        return kExitInput;
    } catch (const io_error& e) {
        std::cerr << "error[input]: " << e.what() << '\n';
        return kExitInput;
    } catch (const domain_error& e) {
        std::cerr << "error[input]: " << e.what() << '\n';
        return kExitInput;
    } catch (const diagnostic_error& e) {
        std::cerr << "error[input]: " << e.what() << '\n';
        return kExitInput;
    } catch (const overflow_error& e) {
        std::cerr << "error[input]: " << e.what() << '\n';
        return kExitInput;
    } catch (const std::exception& e) {
        std::cerr << "error[internal]: " << e.what() << '\n';
        return kExitCheck;
    }
    return 0;
}
