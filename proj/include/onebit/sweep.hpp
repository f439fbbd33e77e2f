#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "onebit/channel_model.hpp"
#include "onebit/learning.hpp"
#include "onebit/quantized_frontend.hpp"

namespace onebit {

enum class EstimatorKind { mlp, nearest_neighbor };

std::string to_string(EstimatorKind kind);
EstimatorKind parse_estimator(const std::string& text);

/// Where each cell's channels come from: a scenario regenerated at every
/// antenna count, or a fixed file whose M must match the sweep.
struct DatasetSpec {
    ScenarioSpec scenario = RoomScenario{};
    double element_spacing = 0.5;
    std::optional<std::filesystem::path> file;
};

struct ExperimentPlan {
    std::vector<std::size_t> antenna_counts;
    std::vector<std::size_t> pilot_lengths;
    std::vector<NoiseSpec> snr_points;
    DatasetSpec dataset;
    TrainingConfig trainer;
    std::vector<EstimatorKind> estimators{EstimatorKind::mlp};
    double rho_db = 0.0;
    double pilot_power = 1.0;
    double train_fraction = 0.7;
    std::uint64_t master_seed = 0;
    /// Cells evaluated concurrently; 0 = hardware concurrency.
    unsigned threads = 1;

    void validate() const;
};

/// Derived seeds. Channels and the train/test split are shared by every
/// cell; noise is drawn per (M, N, snr point).
struct PlanSeeds {
    std::uint64_t scenario;
    std::uint64_t split;
    std::uint64_t trainer;
    std::uint64_t init;
    std::uint64_t noise(std::size_t m, std::size_t n, std::size_t snr_index) const;
    std::uint64_t master;
};
PlanSeeds plan_seeds(std::uint64_t master_seed);

struct CellRecord {
    std::size_t M = 0;
    std::size_t N = 0;
    std::string snr;
    EstimatorKind estimator = EstimatorKind::mlp;
    bool ok = false;
    std::string failure;
    double test_nmse = 0.0;
    double train_nmse = 0.0;
    double mean_snr_per_antenna_db = 0.0;
    double upper_bound_db = 0.0;
    std::size_t train_size = 0;
    std::size_t test_size = 0;
    double wall_time_s = 0.0;
};

struct SweepReport {
    std::vector<CellRecord> cells;

    const CellRecord* find(std::size_t M, std::size_t N, const std::string& snr, EstimatorKind estimator) const;
};

/// Cells are ordered M-major, then N, snr point and estimator; the order and
/// every metric are independent of `threads`.
SweepReport run_sweep(const ExperimentPlan& plan);

/// Deterministic serializations omit wall time; timing_csv carries it.
std::string report_csv(const SweepReport& report);
nlohmann::json report_json(const SweepReport& report);
std::string timing_csv(const SweepReport& report);
/// NMSE against M, one series per (estimator, N, snr).
std::string fig2_csv(const SweepReport& report);
/// Per-antenna SNR and its bound against M, one series per (estimator, N, snr).
std::string fig3_csv(const SweepReport& report);

/// Writes report.csv, report.json, timing.csv, fig2_nmse_vs_m.csv,
/// fig3_snr_vs_m.csv under `dir`.
void write_sweep_outputs(const SweepReport& report, const std::filesystem::path& dir);

}  // namespace onebit
