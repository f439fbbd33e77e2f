#include <doctest.h>

#include <fstream>
#include <sstream>

#include "onebit/binary_io.hpp"
#include "onebit/errors.hpp"
#include "onebit/pilot_design.hpp"
#include "onebit/sweep.hpp"
#include "test_support.hpp"

using namespace onebit;

namespace {
ExperimentPlan small_plan() {
    ExperimentPlan plan;
    AngularScenario s;
    s.num_users = 60;
    s.num_paths = 2;
    s.gain_model = GainModel::complex_gaussian;
    s.aoas.assign(60, 0.0);
    for (int u = 0; u < 60; ++u) s.aoas[u] = 0.05 * u;
    plan.dataset.scenario = s;
    plan.antenna_counts = {2, 8};
    plan.pilot_lengths = {2, 4};
    plan.snr_points = {NoiseSpec::fixed(0.0), NoiseSpec::fixed(10.0)};
    plan.estimators = {EstimatorKind::mlp, EstimatorKind::nearest_neighbor};
    plan.trainer.epochs = 4;
    plan.trainer.hidden_width = 16;
    plan.trainer.batch_size = 16;
    plan.master_seed = 42;
    return plan;
}

std::string read_text(const std::filesystem::path& p) {
    std::ifstream in(p);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}
}  // namespace

TEST_CASE("sweep covers every cell in M-major order and respects the bound") {
    const auto report = run_sweep(small_plan());
    REQUIRE(report.cells.size() == 2 * 2 * 2 * 2);
    CHECK(report.cells[0].M == 2);
    CHECK(report.cells[0].N == 2);
    CHECK(report.cells[0].snr == "0dB");
    CHECK(report.cells[0].estimator == EstimatorKind::mlp);
    CHECK(report.cells[1].estimator == EstimatorKind::nearest_neighbor);
    CHECK(report.cells.back().M == 8);
    for (const auto& c : report.cells) {
        INFO("M=" << c.M << " N=" << c.N << " " << c.snr << " " << c.failure);
        REQUIRE(c.ok);
        CHECK(c.train_size == 42);
        CHECK(c.test_size == 18);
        CHECK(c.mean_snr_per_antenna_db <= c.upper_bound_db + 1e-9);
        CHECK(std::isfinite(c.test_nmse));
    }
    CHECK(report.find(8, 4, "10dB", EstimatorKind::nearest_neighbor) != nullptr);
    CHECK(report.find(8, 3, "10dB", EstimatorKind::nearest_neighbor) == nullptr);
}

TEST_CASE("sweep results do not depend on the thread count") {
    auto plan = small_plan();
    const auto sequential = run_sweep(plan);
    plan.threads = 4;
    const auto parallel = run_sweep(plan);
    CHECK(report_csv(sequential) == report_csv(parallel));
    CHECK(report_json(sequential).dump() == report_json(parallel).dump());
    plan.master_seed = 43;
    CHECK(report_csv(run_sweep(plan)) != report_csv(sequential));
}

TEST_CASE("noiseless nearest-neighbor cell is exact on training channels") {
    ExperimentPlan plan;
    AngularScenario s;
    s.num_users = 30;
    s.num_paths = 1;
    s.min_separation = 0.1;
    plan.dataset.scenario = s;
    // Grid 0..2.9 spans past pi/2, so take the length from alpha directly.
    const auto set = generate_scenario({8, 0.5}, s, plan_seeds(7).scenario);
    const auto n = min_pilot_length(compute_alpha(set).alpha);
    plan.antenna_counts = {8};
    plan.pilot_lengths = {n};
    plan.snr_points = {NoiseSpec::noiseless()};
    plan.estimators = {EstimatorKind::nearest_neighbor};
    plan.master_seed = 7;
    const auto report = run_sweep(plan);
    REQUIRE(report.cells.size() == 1);
    REQUIRE(report.cells[0].ok);
    CHECK(report.cells[0].train_nmse == 0.0);
    CHECK(report.cells[0].snr == "noiseless");
}

TEST_CASE("failed cells are isolated") {
    auto plan = small_plan();
    AngularScenario bad;
    bad.num_users = 5;
    bad.min_separation = 1.0;  // last user at 4 rad: infeasible
    plan.dataset.scenario = bad;
    plan.estimators = {EstimatorKind::nearest_neighbor};
    const auto report = run_sweep(plan);
    REQUIRE(report.cells.size() == 8);
    for (const auto& c : report.cells) {
        CHECK_FALSE(c.ok);
        CHECK(c.failure.find("infeasible") != std::string::npos);
    }
    CHECK(report_csv(report).find("failed") != std::string::npos);

    // An M mismatch with a fixed file fails only the mismatching cells.
    const auto dir = onebit::testing::temp_dir("sweep-file");
    AngularScenario good;
    good.num_users = 20;
    good.min_separation = 0.1;
    save_channels(generate_scenario({8, 0.5}, good, 1), dir / "c.json");
    plan = small_plan();
    plan.dataset.file = dir / "c.json";
    plan.estimators = {EstimatorKind::nearest_neighbor};
    const auto mixed = run_sweep(plan);
    for (const auto& c : mixed.cells) CHECK(c.ok == (c.M == 8));
}

TEST_CASE("plan validation") {
    auto plan = small_plan();
    plan.antenna_counts.clear();
    CHECK_THROWS_AS(run_sweep(plan), ConfigError);
    plan = small_plan();
    plan.train_fraction = 1.0;
    CHECK_THROWS_AS(run_sweep(plan), ConfigError);
    plan = small_plan();
    plan.snr_points.push_back(NoiseSpec::mixed(10, 0));
    CHECK_THROWS_AS(run_sweep(plan), ConfigError);
    CHECK(parse_estimator("nearest_neighbor") == EstimatorKind::nearest_neighbor);
    CHECK_THROWS_AS(parse_estimator("gamp"), ConfigError);
}

TEST_CASE("sweep outputs") {
    const auto report = run_sweep(small_plan());
    const auto dir = onebit::testing::temp_dir("sweep-out");
    write_sweep_outputs(report, dir);
    for (const char* f : {"report.csv", "report.json", "timing.csv", "fig2_nmse_vs_m.csv", "fig3_snr_vs_m.csv"}) {
        CHECK(std::filesystem::exists(dir / f));
    }
    const auto csv = read_text(dir / "report.csv");
    CHECK(csv.rfind("M,N,snr,estimator,status", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 17);
    CHECK(csv.find("wall") == std::string::npos);
    const auto fig2 = read_text(dir / "fig2_nmse_vs_m.csv");
    CHECK(fig2.find("mlp N=2 0dB") != std::string::npos);
    CHECK(std::count(fig2.begin(), fig2.end(), '\n') == 17);
    const auto json = io::read_json_file(dir / "report.json");
    CHECK(json["cells"].size() == 16);
    CHECK(json["cells"][0].contains("test_nmse"));
    CHECK_FALSE(json["cells"][0].contains("wall_time_s"));
}
