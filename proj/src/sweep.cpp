#include "onebit/sweep.hpp"

#include <atomic>
#include <chrono>
#include <map>
#include <sstream>
#include <thread>
#include <tuple>

#include "onebit/binary_io.hpp"
#include "onebit/errors.hpp"
#include "onebit/evaluation.hpp"
#include "onebit/pilot_design.hpp"
#include "onebit/seeding.hpp"
#include "onebit/thread_pool.hpp"

namespace onebit {

namespace {

struct CellTask {
    std::size_t m_index;
    std::size_t n_index;
    std::size_t snr_index;
};

struct ChannelSource {
    std::optional<ChannelSet> set;
    std::string error;
};

ChannelSource channels_for(const ExperimentPlan& plan, const PlanSeeds& seeds, std::size_t M) {
    ChannelSource src;
    try {
        if (plan.dataset.file) {
            auto set = load_channels(*plan.dataset.file);
            if (set.geometry().num_antennas != M) {
                throw ConfigError("dataset file has M=" + std::to_string(set.geometry().num_antennas) +
                                  ", sweep asks for M=" + std::to_string(M));
            }
            src.set.emplace(std::move(set));
        } else {
            src.set.emplace(generate_scenario({M, plan.dataset.element_spacing}, plan.dataset.scenario, seeds.scenario));
        }
    } catch (const std::exception& e) {
        src.error = e.what();
    }
    return src;
}

std::vector<CellRecord> run_cell(const ExperimentPlan& plan, const PlanSeeds& seeds, const ChannelSource& source,
                                 const CellTask& task) {
    const std::size_t M = plan.antenna_counts[task.m_index];
    const std::size_t N = plan.pilot_lengths[task.n_index];
    std::vector<CellRecord> records;
    for (auto kind : plan.estimators) {
        CellRecord r;
        r.M = M;
        r.N = N;
        r.snr = plan.snr_points[task.snr_index].label();
        r.estimator = kind;
        records.push_back(r);
    }
    const auto fail_all = [&](const std::string& why) {
        for (auto& r : records) {
            r.ok = false;
            r.failure = why;
        }
    };
    if (!source.set) {
        fail_all(source.error);
        return records;
    }
    const ChannelSet& set = *source.set;
    try {
        const auto pilot = design_pilot(N, plan.pilot_power);
        NoiseSpec noise = plan.snr_points[task.snr_index];
        noise.seed = seeds.noise(M, N, task.snr_index);
        const auto measurements = simulate_dataset(set, pilot, noise);
        const auto data = build_dataset(set.channels(), measurements, seeds.split, plan.train_fraction);
        if (data.test.empty()) throw ConfigError("test split is empty");
        const double rho = from_db(plan.rho_db);

        std::vector<ChannelVector> test_truth;
        std::vector<ChannelVector> train_truth;
        for (auto i : data.test) test_truth.push_back(set[i]);
        for (auto i : data.train) train_truth.push_back(set[i]);

        for (auto& r : records) {
            const auto start = std::chrono::steady_clock::now();
            try {
                std::vector<ChannelVector> test_pred;
                std::vector<ChannelVector> train_pred;
                if (r.estimator == EstimatorKind::mlp) {
                    MlpEstimator model(M, N, plan.trainer.hidden_width, plan.trainer.dropout_rate,
                                       plan.trainer.precision);
                    model.initialize(seeds.init);
                    TrainingConfig cfg = plan.trainer;
                    cfg.seed = seeds.trainer;
                    cfg.monitor_test = false;
                    train(model, data, cfg);
                    test_pred = predict_channels(model, data, data.test);
                    train_pred = predict_channels(model, data, data.train);
                } else {
                    NearestNeighborEstimator nn;
                    for (auto i : data.train) nn.add(measurements[i], set[i]);
                    for (auto i : data.test) test_pred.push_back(nn.estimate(measurements[i]));
                    for (auto i : data.train) train_pred.push_back(nn.estimate(measurements[i]));
                }
                const auto summary = summarize_estimates(test_truth, test_pred, rho);
                double train_nmse = 0.0;
                for (std::size_t k = 0; k < train_truth.size(); ++k) train_nmse += nmse_metric(train_truth[k], train_pred[k]);
                r.train_nmse = train_nmse / static_cast<double>(train_truth.size());
                r.test_nmse = summary.mean_nmse;
                r.mean_snr_per_antenna_db = summary.mean_snr_per_antenna_db;
                r.upper_bound_db = summary.upper_bound_db;
                r.train_size = data.train.size();
                r.test_size = data.test.size();
                r.ok = true;
            } catch (const std::exception& e) {
                r.ok = false;
                r.failure = e.what();
            }
            r.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        }
    } catch (const std::exception& e) {
        fail_all(e.what());
    }
    return records;
}

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

std::string metric(const CellRecord& r, double value) { return r.ok ? io::format_double(value) : std::string{}; }

}  // namespace

std::string to_string(EstimatorKind kind) { return kind == EstimatorKind::mlp ? "mlp" : "nearest_neighbor"; }

EstimatorKind parse_estimator(const std::string& text) {
    if (text == "mlp") return EstimatorKind::mlp;
    if (text == "nearest_neighbor") return EstimatorKind::nearest_neighbor;
    throw ConfigError("unknown estimator '" + text + "' (expected mlp or nearest_neighbor)");
}

void ExperimentPlan::validate() const {
    if (antenna_counts.empty() || pilot_lengths.empty() || snr_points.empty() || estimators.empty()) {
        throw ConfigError("sweep axes (antenna_counts, pilot_lengths, snr_points, estimators) must be non-empty");
    }
    for (auto m : antenna_counts) {
        if (m == 0) throw ConfigError("antenna counts must be positive");
    }
    for (auto n : pilot_lengths) {
        if (n == 0) throw ConfigError("pilot lengths must be positive");
    }
    for (const auto& s : snr_points) s.validate();
    trainer.validate();
    if (!(pilot_power > 0.0)) throw ConfigError("pilot power must be positive");
    if (!(train_fraction > 0.0 && train_fraction < 1.0)) throw ConfigError("train_fraction must lie in (0, 1)");
}

std::uint64_t PlanSeeds::noise(std::size_t m, std::size_t n, std::size_t snr_index) const {
    return derive_seed(master, {tag_hash("noise"), m, n, snr_index});
}

PlanSeeds plan_seeds(std::uint64_t master_seed) {
    PlanSeeds s{};
    s.master = master_seed;
    s.scenario = derive_seed(master_seed, "scenario");
    s.split = derive_seed(master_seed, "split");
    s.trainer = derive_seed(master_seed, "trainer");
    s.init = derive_seed(master_seed, "init");
    return s;
}

const CellRecord* SweepReport::find(std::size_t M, std::size_t N, const std::string& snr,
                                    EstimatorKind estimator) const {
    for (const auto& c : cells) {
        if (c.M == M && c.N == N && c.snr == snr && c.estimator == estimator) return &c;
    }
    return nullptr;
}

SweepReport run_sweep(const ExperimentPlan& plan) {
    plan.validate();
    const auto seeds = plan_seeds(plan.master_seed);

    std::vector<ChannelSource> sources;
    sources.reserve(plan.antenna_counts.size());
    for (auto M : plan.antenna_counts) sources.push_back(channels_for(plan, seeds, M));

    std::vector<CellTask> tasks;
    for (std::size_t a = 0; a < plan.antenna_counts.size(); ++a) {
        for (std::size_t b = 0; b < plan.pilot_lengths.size(); ++b) {
            for (std::size_t c = 0; c < plan.snr_points.size(); ++c) tasks.push_back({a, b, c});
        }
    }

    std::vector<std::vector<CellRecord>> results(tasks.size());
    std::atomic<std::size_t> next{0};
    const auto worker = [&] {
        for (std::size_t t = next++; t < tasks.size(); t = next++) {
            results[t] = run_cell(plan, seeds, sources[tasks[t].m_index], tasks[t]);
        }
    };
    const unsigned workers = std::min<unsigned>(resolve_threads(plan.threads), static_cast<unsigned>(tasks.size()));
    if (workers <= 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (unsigned w = 0; w < workers; ++w) pool.emplace_back(worker);
    }

    SweepReport report;
    for (auto& r : results) {
        for (auto& c : r) report.cells.push_back(std::move(c));
    }
    return report;
}

std::string report_csv(const SweepReport& report) {
    std::ostringstream out;
    out << "M,N,snr,estimator,status,test_nmse,train_nmse,mean_snr_per_antenna_db,upper_bound_db,train_size,test_size,"
           "failure\n";
    for (const auto& r : report.cells) {
        out << r.M << ',' << r.N << ',' << csv_field(r.snr) << ',' << to_string(r.estimator) << ','
            << (r.ok ? "ok" : "failed") << ',' << metric(r, r.test_nmse) << ',' << metric(r, r.train_nmse) << ','
            << metric(r, r.mean_snr_per_antenna_db) << ',' << metric(r, r.upper_bound_db) << ',' << r.train_size << ','
            << r.test_size << ',' << csv_field(r.failure) << '\n';
    }
    return out.str();
}

nlohmann::json report_json(const SweepReport& report) {
    nlohmann::json cells = nlohmann::json::array();
    for (const auto& r : report.cells) {
        nlohmann::json c{{"M", r.M},
                         {"N", r.N},
                         {"snr", r.snr},
                         {"estimator", to_string(r.estimator)},
                         {"status", r.ok ? "ok" : "failed"},
                         {"train_size", r.train_size},
                         {"test_size", r.test_size}};
        if (r.ok) {
            c["test_nmse"] = r.test_nmse;
            c["train_nmse"] = r.train_nmse;
            c["mean_snr_per_antenna_db"] = r.mean_snr_per_antenna_db;
            c["upper_bound_db"] = r.upper_bound_db;
        } else {
            c["failure"] = r.failure;
        }
        cells.push_back(std::move(c));
    }
    return {{"format_version", io::format_version()}, {"cells", std::move(cells)}};
}

std::string timing_csv(const SweepReport& report) {
    std::ostringstream out;
    out << "M,N,snr,estimator,wall_time_s\n";
    for (const auto& r : report.cells) {
        out << r.M << ',' << r.N << ',' << csv_field(r.snr) << ',' << to_string(r.estimator) << ','
            << io::format_double(r.wall_time_s) << '\n';
    }
    return out.str();
}

namespace {

// Cells with status ok, grouped into (estimator, N, snr) series sorted by M.
std::map<std::tuple<std::string, std::size_t, std::string>, std::vector<const CellRecord*>> series_of(
    const SweepReport& report) {
    std::map<std::tuple<std::string, std::size_t, std::string>, std::vector<const CellRecord*>> series;
    for (const auto& r : report.cells) {
        if (r.ok) series[{to_string(r.estimator), r.N, r.snr}].push_back(&r);
    }
    for (auto& [key, cells] : series) {
        std::stable_sort(cells.begin(), cells.end(), [](auto* a, auto* b) { return a->M < b->M; });
    }
    return series;
}

}  // namespace

std::string fig2_csv(const SweepReport& report) {
    std::ostringstream out;
    out << "series,estimator,N,snr,M,test_nmse\n";
    for (const auto& [key, cells] : series_of(report)) {
        const auto& [est, N, snr] = key;
        const std::string label = est + " N=" + std::to_string(N) + " " + snr;
        for (const auto* c : cells) {
            out << csv_field(label) << ',' << est << ',' << N << ',' << csv_field(snr) << ',' << c->M << ','
                << io::format_double(c->test_nmse) << '\n';
        }
    }
    return out.str();
}

std::string fig3_csv(const SweepReport& report) {
    std::ostringstream out;
    out << "series,estimator,N,snr,M,mean_snr_per_antenna_db,upper_bound_db\n";
    for (const auto& [key, cells] : series_of(report)) {
        const auto& [est, N, snr] = key;
        const std::string label = est + " N=" + std::to_string(N) + " " + snr;
        for (const auto* c : cells) {
            out << csv_field(label) << ',' << est << ',' << N << ',' << csv_field(snr) << ',' << c->M << ','
                << io::format_double(c->mean_snr_per_antenna_db) << ',' << io::format_double(c->upper_bound_db) << '\n';
        }
    }
    return out.str();
}

void write_sweep_outputs(const SweepReport& report, const std::filesystem::path& dir) {
    io::write_text_file(dir / "report.csv", report_csv(report));
    io::write_json_file(dir / "report.json", report_json(report));
    io::write_text_file(dir / "timing.csv", timing_csv(report));
    io::write_text_file(dir / "fig2_nmse_vs_m.csv", fig2_csv(report));
    io::write_text_file(dir / "fig3_snr_vs_m.csv", fig3_csv(report));
}

}  // namespace onebit
