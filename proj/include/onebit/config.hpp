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
#include "onebit/sweep.hpp"

namespace onebit {

struct PilotSection {
    std::size_t length = 8;
    double power = 1.0;
};

struct AnalysisSection {
    /// Pilot lengths to run distinguishability for; empty = pilot.length only.
    std::vector<std::size_t> pilot_lengths;
    std::size_t max_listed_pairs = 100;
};

struct SweepSection {
    std::vector<std::size_t> antenna_counts{2, 8, 32, 64};
    std::vector<std::size_t> pilot_lengths{2, 5, 10};
    std::vector<NoiseSpec> snr_points{NoiseSpec::fixed(0.0), NoiseSpec::fixed(10.0)};
    std::vector<EstimatorKind> estimators{EstimatorKind::mlp};
    double rho_db = 0.0;
    double train_fraction = 0.7;
};

struct PathsSection {
    std::string output_dir = "out";
    std::optional<std::string> dataset;     // channel manifest to load instead of generating
    std::optional<std::string> checkpoint;  // model manifest for eval
};

/// Everything a workbench command needs. No section carries its own seed:
/// every random stream is derived from master_seed (see plan_seeds).
struct WorkbenchConfig {
    std::uint64_t master_seed = 0;
    /// Worker threads for pairwise scans and sweep cells; 0 = all cores.
    unsigned threads = 0;
    ArrayGeometry geometry{8, 0.5};
    ScenarioSpec scenario = RoomScenario{};
    PilotSection pilot;
    NoiseSpec noise = NoiseSpec::fixed(0.0);
    TrainingConfig training;
    AnalysisSection analysis;
    SweepSection sweep;
    PathsSection paths;
};

nlohmann::json to_json(const WorkbenchConfig& config);
/// Rejects unknown keys anywhere in the document.
WorkbenchConfig config_from_json(const nlohmann::json& j);
WorkbenchConfig load_config(const std::filesystem::path& path);

nlohmann::json scenario_to_json(const ScenarioSpec& spec);
ScenarioSpec scenario_from_json(const nlohmann::json& j, const std::string& where);

ExperimentPlan make_plan(const WorkbenchConfig& config);

}  // namespace onebit
