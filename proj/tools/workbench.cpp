#include "workbench.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <optional>

#include "onebit/binary_io.hpp"
#include "onebit/config.hpp"
#include "onebit/errors.hpp"
#include "onebit/evaluation.hpp"
#include "onebit/learning.hpp"
#include "onebit/pilot_design.hpp"
#include "onebit/quantized_frontend.hpp"
#include "onebit/sweep.hpp"

namespace onebit::cli {

namespace {

namespace fs = std::filesystem;

struct Options {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> output_dir;
    std::optional<unsigned> threads;
    std::optional<std::string> precision;
};

WorkbenchConfig effective_config(const Options& opt) {
    auto c = load_config(opt.config_path);
    if (opt.seed) c.master_seed = *opt.seed;
    if (opt.output_dir) c.paths.output_dir = *opt.output_dir;
    if (opt.threads) c.threads = *opt.threads;
    if (opt.precision) c.training.precision = parse_precision(*opt.precision);
    return c;
}

void write_manifest(const WorkbenchConfig& c, const std::string& command) {
    io::write_json_file(fs::path(c.paths.output_dir) / "run_manifest.json",
                        {{"tool", "onebit"}, {"tool_version", kToolVersion}, {"command", command}, {"config", to_json(c)}});
}

ChannelSet dataset_channels(const WorkbenchConfig& c) {
    if (c.paths.dataset) return load_channels(*c.paths.dataset);
    return generate_scenario(c.geometry, c.scenario, plan_seeds(c.master_seed).scenario);
}

NoiseSpec seeded_noise(const WorkbenchConfig& c, std::size_t M) {
    NoiseSpec n = c.noise;
    n.seed = plan_seeds(c.master_seed).noise(M, c.pilot.length, 0);
    return n;
}

struct Prepared {
    ChannelSet set;
    PilotSequence pilot;
    std::vector<QuantizedMeasurement> measurements;
    SupervisedDataset data;
};

Prepared prepare_supervised(const WorkbenchConfig& c) {
    auto set = dataset_channels(c);
    auto pilot = design_pilot(c.pilot.length, c.pilot.power);
    auto meas = simulate_dataset(set, pilot, seeded_noise(c, set.geometry().num_antennas), c.threads);
    auto data = build_dataset(set.channels(), meas, plan_seeds(c.master_seed).split, c.sweep.train_fraction);
    return {std::move(set), std::move(pilot), std::move(meas), std::move(data)};
}

int cmd_generate(const WorkbenchConfig& c, std::ostream& out) {
    const auto set = dataset_channels(c);
    const auto pilot = design_pilot(c.pilot.length, c.pilot.power);
    const auto noise = seeded_noise(c, set.geometry().num_antennas);
    MeasurementDataset meas{pilot.angles(), pilot.power, noise, simulate_dataset(set, pilot, noise, c.threads)};
    const fs::path dir = c.paths.output_dir;
    save_channels(set, dir / "channels.json");
    save_measurements(meas, dir / "measurements.json");
    write_manifest(c, "generate");

    out << "M=" << set.geometry().num_antennas << " users=" << set.size() << " L=" << set.num_paths();
    if (set.size() >= 2) {
        try {
            const auto a = compute_alpha(set, c.threads);
            out << " alpha=" << io::format_double(a.alpha);
            if (a.degenerate) out << " (degenerate: channels " << a.first << " and " << a.second << ")";
        } catch (const DomainError& e) {
            out << " alpha=undefined (" << e.what() << ")";
        }
    }
    out << "\nwrote " << (dir / "channels.json").string() << " and " << (dir / "measurements.json").string() << "\n";
    return kExitOk;
}

int cmd_analyze(const WorkbenchConfig& c, std::ostream& out) {
    const auto set = dataset_channels(c);
    const auto alpha = compute_alpha(set, c.threads);
    nlohmann::json result{{"M", set.geometry().num_antennas},
                          {"num_users", set.size()},
                          {"L", set.num_paths()},
                          {"alpha", alpha.alpha},
                          {"degenerate", alpha.degenerate},
                          {"extremal_pair", {alpha.first, alpha.second}}};
    std::optional<std::size_t> required;
    if (!alpha.degenerate) required = min_pilot_length(alpha.alpha);
    result["min_pilot_length"] = required ? nlohmann::json(*required) : nlohmann::json(nullptr);
    result["corollary1_length"] = nullptr;
    if (set.num_paths() == 1 && set.min_aoa_separation() && set.geometry().num_antennas >= 2 &&
        *set.min_aoa_separation() > 0.0 && *set.min_aoa_separation() < kPi) {
        result["corollary1_length"] = corollary1_length(set.geometry().num_antennas, *set.min_aoa_separation());
        result["min_aoa_separation"] = *set.min_aoa_separation();
    }
    auto lengths = c.analysis.pilot_lengths;
    if (lengths.empty()) lengths.push_back(c.pilot.length);
    nlohmann::json reports = nlohmann::json::array();
    for (auto n : lengths) {
        const auto report =
            distinguishability_report(set, design_pilot(n, c.pilot.power), c.analysis.max_listed_pairs, c.threads);
        reports.push_back(to_json(report));
        out << "N=" << n << " distinguishable pairs " << report.pairs_distinguishable << "/" << report.pairs_total
            << ", uniquely identified " << io::format_double(report.channels_uniquely_identified_fraction) << "\n";
    }
    result["reports"] = std::move(reports);
    io::write_json_file(fs::path(c.paths.output_dir) / "analysis.json", result);
    write_manifest(c, "analyze");
    out << "alpha=" << io::format_double(alpha.alpha);
    if (required) {
        out << " min_pilot_length=" << *required;
    } else {
        out << " degenerate (channels " << alpha.first << " and " << alpha.second << " share every phase)";
    }
    if (!result["corollary1_length"].is_null()) out << " corollary1_length=" << result["corollary1_length"];
    out << "\n";
    return kExitOk;
}

int cmd_train(const WorkbenchConfig& c, std::ostream& out) {
    const auto prep = prepare_supervised(c);
    const auto seeds = plan_seeds(c.master_seed);
    MlpEstimator model(prep.data.num_antennas, prep.data.pilot_length, c.training.hidden_width,
                       c.training.dropout_rate, c.training.precision);
    model.initialize(seeds.init);
    TrainingConfig cfg = c.training;
    cfg.seed = seeds.trainer;
    const auto history = train(model, prep.data, cfg);
    const fs::path dir = c.paths.output_dir;
    save_checkpoint(model, dir / "model.json");
    io::write_text_file(dir / "history.csv", history_csv(history));
    write_manifest(c, "train");
    const auto& last = history.epochs.back();
    out << "epochs=" << history.epochs.size() << " initial_train_nmse=" << io::format_double(history.initial_train_nmse)
        << " train_nmse=" << io::format_double(last.train_nmse);
    if (last.test_nmse) out << " test_nmse=" << io::format_double(*last.test_nmse);
    out << "\nwrote " << (dir / "model.json").string() << "\n";
    return kExitOk;
}

int cmd_eval(const WorkbenchConfig& c, std::ostream& out) {
    const fs::path dir = c.paths.output_dir;
    const fs::path ckpt = c.paths.checkpoint ? fs::path(*c.paths.checkpoint) : dir / "model.json";
    const auto model = load_checkpoint(ckpt);
    const auto prep = prepare_supervised(c);
    if (model.num_antennas() != prep.data.num_antennas || model.pilot_length() != prep.data.pilot_length) {
        throw ConfigError("checkpoint geometry (M=" + std::to_string(model.num_antennas()) + ", N=" +
                          std::to_string(model.pilot_length()) + ") does not match the configured dataset");
    }
    const auto& samples = prep.data.test.empty() ? prep.data.train : prep.data.test;
    const auto estimates = predict_channels(model, prep.data, samples);
    const double rho = from_db(c.sweep.rho_db);
    double nmse = 0.0;
    double snr = 0.0;
    double bound = 0.0;
    bool snr_defined = true;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const auto& h = prep.set[samples[i]];
        nmse += nmse_metric(h, estimates[i]);
        bound += upper_bound_snr(h, rho);
        if (estimates[i].is_zero()) {
            snr_defined = false;
        } else {
            snr += per_antenna_snr(h, estimates[i], rho);
        }
    }
    const auto n = static_cast<double>(samples.size());
    const double train_nmse = evaluate_nmse(model, prep.data, prep.data.train);
    nlohmann::json result{{"samples", samples.size()},
                          {"split", prep.data.test.empty() ? "train" : "test"},
                          {"test_nmse", nmse / n},
                          {"train_nmse", train_nmse},
                          {"upper_bound_db", to_db(bound / n)}};
    result["mean_snr_per_antenna_db"] = snr_defined ? nlohmann::json(to_db(snr / n)) : nlohmann::json(nullptr);
    io::write_json_file(dir / "eval.json", result);
    write_manifest(c, "eval");
    out << "test_nmse=" << io::format_double(nmse / n) << " train_nmse=" << io::format_double(train_nmse)
        << " mean_snr_per_antenna_db=";
    if (snr_defined) {
        out << io::format_double(to_db(snr / n));
    } else {
        out << "undefined (zero channel estimate)";
    }
    out << " upper_bound_db=" << io::format_double(to_db(bound / n)) << "\n";
    return kExitOk;
}

int cmd_sweep(const WorkbenchConfig& c, std::ostream& out) {
    const auto report = run_sweep(make_plan(c));
    const fs::path dir = c.paths.output_dir;
    write_sweep_outputs(report, dir);
    write_manifest(c, "sweep");
    std::size_t failed = 0;
    for (const auto& r : report.cells) {
        out << "M=" << r.M << " N=" << r.N << " snr=" << r.snr << " " << to_string(r.estimator) << ": ";
        if (r.ok) {
            out << "test_nmse=" << io::format_double(r.test_nmse)
                << " snr_per_antenna_db=" << io::format_double(r.mean_snr_per_antenna_db)
                << " bound_db=" << io::format_double(r.upper_bound_db) << "\n";
        } else {
            ++failed;
            out << "failed: " << r.failure << "\n";
        }
    }
    out << report.cells.size() - failed << "/" << report.cells.size() << " cells ok; wrote " << dir.string() << "\n";
    return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"1-bit massive MIMO channel estimation workbench", "onebit"};
    app.require_subcommand(1);
    Options opt;
    const auto add_common = [&](CLI::App* sub) {
        sub->add_option("-c,--config", opt.config_path, "Workbench config (JSON)")->required();
        sub->add_option("--seed", opt.seed, "Override master_seed");
        sub->add_option("-o,--output-dir", opt.output_dir, "Override paths.output_dir");
        sub->add_option("-j,--threads", opt.threads, "Worker threads (0 = all cores)");
        sub->add_option("--precision", opt.precision, "Training precision: f32 or f64");
    };
    auto* generate = app.add_subcommand("generate", "Write channel and measurement datasets");
    auto* analyze = app.add_subcommand("analyze", "Mapping-angle and distinguishability report");
    auto* train_cmd = app.add_subcommand("train", "Train the dense estimator and save a checkpoint");
    auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint on the test split");
    auto* sweep = app.add_subcommand("sweep", "Run an (M, N, SNR) experiment sweep");
    for (auto* s : {generate, analyze, train_cmd, eval, sweep}) add_common(s);

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::CallForAllHelp& e) {
        out << app.help("", CLI::AppFormatMode::All);
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n";
        return kExitValidation;
    }

    try {
        const auto config = effective_config(opt);
        if (generate->parsed()) return cmd_generate(config, out);
        if (analyze->parsed()) return cmd_analyze(config, out);
        if (train_cmd->parsed()) return cmd_train(config, out);
        if (eval->parsed()) return cmd_eval(config, out);
        return cmd_sweep(config, out);
    } catch (const ValidationError& e) {
        err << "error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const std::exception& e) {
        err << "runtime failure: " << e.what() << "\n";
        return kExitRuntime;
    }
}

}  // namespace onebit::cli
