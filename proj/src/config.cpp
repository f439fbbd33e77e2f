#include "onebit/config.hpp"

#include <algorithm>
#include <set>

#include "onebit/binary_io.hpp"
#include "onebit/errors.hpp"

namespace onebit {

namespace {

void check_keys(const nlohmann::json& j, std::initializer_list<const char*> allowed, const std::string& where) {
    if (!j.is_object()) throw ConfigError(where + ": expected an object");
    for (const auto& [key, value] : j.items()) {
        if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; })) {
            throw ConfigError(where + ": unknown key '" + key + "'");
        }
    }
}

template <class T>
void read(const nlohmann::json& j, const char* key, T& out, const std::string& where) {
    if (auto it = j.find(key); it != j.end()) {
        try {
            out = it->get<T>();
        } catch (const nlohmann::json::exception& e) {
            throw ConfigError(where + "." + key + ": " + e.what());
        }
    }
}

const char* gain_name(GainModel g) { return g == GainModel::unit ? "unit" : "complex_gaussian"; }

GainModel parse_gain(const std::string& s, const std::string& where) {
    if (s == "unit") return GainModel::unit;
    if (s == "complex_gaussian") return GainModel::complex_gaussian;
    throw ConfigError(where + ": unknown gain_model '" + s + "'");
}

nlohmann::json noise_config_json(const NoiseSpec& n) {
    auto j = to_json(n);
    j.erase("seed");
    return j;
}

NoiseSpec noise_config_from(const nlohmann::json& j, const std::string& where) {
    check_keys(j, {"mode", "snr_db", "low", "high"}, where);
    try {
        return noise_from_json(j, where);
    } catch (const ParseError& e) {
        throw ConfigError(e.what());
    }
}

}  // namespace

nlohmann::json scenario_to_json(const ScenarioSpec& spec) {
    if (const auto* a = std::get_if<AngularScenario>(&spec)) {
        nlohmann::json j{{"layout", "angular"},
                         {"num_users", a->num_users},
                         {"num_paths", a->num_paths},
                         {"first_aoa", a->first_aoa},
                         {"aoas", a->aoas},
                         {"gain_model", gain_name(a->gain_model)}};
        j["min_separation"] = a->min_separation ? nlohmann::json(*a->min_separation) : nlohmann::json(nullptr);
        return j;
    }
    const auto& r = std::get<RoomScenario>(spec);
    return {{"layout", "room_grid"},
            {"rows", r.rows},
            {"cols", r.cols},
            {"grid_spacing_m", r.grid_spacing_m},
            {"grid_origin_m", r.grid_origin_m},
            {"room_size_m", r.room_size_m},
            {"bs_position_m", r.bs_position_m},
            {"scatterer_position_m", r.scatterer_position_m},
            {"wavelength_m", r.wavelength_m},
            {"reflection_magnitude", r.reflection_magnitude},
            {"scatterer_magnitude", r.scatterer_magnitude},
            {"num_paths", r.num_paths}};
}

ScenarioSpec scenario_from_json(const nlohmann::json& j, const std::string& where) {
    if (!j.is_object()) throw ConfigError(where + ": expected an object");
    const std::string layout = j.value("layout", std::string("room_grid"));
    if (layout == "angular") {
        check_keys(j, {"layout", "num_users", "num_paths", "min_separation", "first_aoa", "aoas", "gain_model"}, where);
        AngularScenario a;
        read(j, "num_users", a.num_users, where);
        read(j, "num_paths", a.num_paths, where);
        read(j, "first_aoa", a.first_aoa, where);
        read(j, "aoas", a.aoas, where);
        if (auto it = j.find("min_separation"); it != j.end() && !it->is_null()) {
            double sep = 0.0;
            read(j, "min_separation", sep, where);
            a.min_separation = sep;
        }
        std::string gain = gain_name(a.gain_model);
        read(j, "gain_model", gain, where);
        a.gain_model = parse_gain(gain, where);
        return a;
    }
    if (layout == "room_grid") {
        check_keys(j,
                   {"layout", "rows", "cols", "grid_spacing_m", "grid_origin_m", "room_size_m", "bs_position_m",
                    "scatterer_position_m", "wavelength_m", "reflection_magnitude", "scatterer_magnitude",
                    "num_paths"},
                   where);
        RoomScenario r;
        read(j, "rows", r.rows, where);
        read(j, "cols", r.cols, where);
        read(j, "grid_spacing_m", r.grid_spacing_m, where);
        read(j, "grid_origin_m", r.grid_origin_m, where);
        read(j, "room_size_m", r.room_size_m, where);
        read(j, "bs_position_m", r.bs_position_m, where);
        read(j, "scatterer_position_m", r.scatterer_position_m, where);
        read(j, "wavelength_m", r.wavelength_m, where);
        read(j, "reflection_magnitude", r.reflection_magnitude, where);
        read(j, "scatterer_magnitude", r.scatterer_magnitude, where);
        read(j, "num_paths", r.num_paths, where);
        return r;
    }
    throw ConfigError(where + ": unknown layout '" + layout + "'");
}

nlohmann::json to_json(const WorkbenchConfig& c) {
    nlohmann::json snr = nlohmann::json::array();
    for (const auto& s : c.sweep.snr_points) snr.push_back(noise_config_json(s));
    std::vector<std::string> estimators;
    for (auto e : c.sweep.estimators) estimators.push_back(to_string(e));
    nlohmann::json paths{{"output_dir", c.paths.output_dir}};
    paths["dataset"] = c.paths.dataset ? nlohmann::json(*c.paths.dataset) : nlohmann::json(nullptr);
    paths["checkpoint"] = c.paths.checkpoint ? nlohmann::json(*c.paths.checkpoint) : nlohmann::json(nullptr);
    const auto& t = c.training;
    return {
        {"master_seed", c.master_seed},
        {"threads", c.threads},
        {"geometry", {{"num_antennas", c.geometry.num_antennas}, {"element_spacing", c.geometry.element_spacing}}},
        {"scenario", scenario_to_json(c.scenario)},
        {"pilot", {{"length", c.pilot.length}, {"power", c.pilot.power}}},
        {"noise", noise_config_json(c.noise)},
        {"training",
         {{"epochs", t.epochs},
          {"batch_size", t.batch_size},
          {"learning_rate", t.learning_rate},
          {"adam_beta1", t.adam_beta1},
          {"adam_beta2", t.adam_beta2},
          {"adam_epsilon", t.adam_epsilon},
          {"dropout_rate", t.dropout_rate},
          {"precision", to_string(t.precision)},
          {"hidden_width", t.hidden_width},
          {"monitor_test", t.monitor_test}}},
        {"analysis", {{"pilot_lengths", c.analysis.pilot_lengths}, {"max_listed_pairs", c.analysis.max_listed_pairs}}},
        {"sweep",
         {{"antenna_counts", c.sweep.antenna_counts},
          {"pilot_lengths", c.sweep.pilot_lengths},
          {"snr_points", std::move(snr)},
          {"estimators", estimators},
          {"rho_db", c.sweep.rho_db},
          {"train_fraction", c.sweep.train_fraction}}},
        {"paths", std::move(paths)},
    };
}

namespace {

WorkbenchConfig parse_config(const nlohmann::json& j) {
    check_keys(j,
               {"master_seed", "threads", "geometry", "scenario", "pilot", "noise", "training", "analysis", "sweep",
                "paths"},
               "config");
    WorkbenchConfig c;
    read(j, "master_seed", c.master_seed, "config");
    read(j, "threads", c.threads, "config");
    if (auto it = j.find("geometry"); it != j.end()) {
        check_keys(*it, {"num_antennas", "element_spacing"}, "geometry");
        read(*it, "num_antennas", c.geometry.num_antennas, "geometry");
        read(*it, "element_spacing", c.geometry.element_spacing, "geometry");
        try {
            c.geometry.validate();
        } catch (const DomainError& e) {
            throw ConfigError(std::string("geometry: ") + e.what());
        }
    }
    if (auto it = j.find("scenario"); it != j.end()) c.scenario = scenario_from_json(*it, "scenario");
    if (auto it = j.find("pilot"); it != j.end()) {
        check_keys(*it, {"length", "power"}, "pilot");
        read(*it, "length", c.pilot.length, "pilot");
        read(*it, "power", c.pilot.power, "pilot");
        if (c.pilot.length == 0 || !(c.pilot.power > 0.0)) throw ConfigError("pilot: length >= 1 and power > 0 required");
    }
    if (auto it = j.find("noise"); it != j.end()) c.noise = noise_config_from(*it, "noise");
    if (auto it = j.find("training"); it != j.end()) {
        check_keys(*it,
                   {"epochs", "batch_size", "learning_rate", "adam_beta1", "adam_beta2", "adam_epsilon", "dropout_rate",
                    "precision", "hidden_width", "monitor_test"},
                   "training");
        auto& t = c.training;
        read(*it, "epochs", t.epochs, "training");
        read(*it, "batch_size", t.batch_size, "training");
        read(*it, "learning_rate", t.learning_rate, "training");
        read(*it, "adam_beta1", t.adam_beta1, "training");
        read(*it, "adam_beta2", t.adam_beta2, "training");
        read(*it, "adam_epsilon", t.adam_epsilon, "training");
        read(*it, "dropout_rate", t.dropout_rate, "training");
        read(*it, "hidden_width", t.hidden_width, "training");
        read(*it, "monitor_test", t.monitor_test, "training");
        std::string precision = to_string(t.precision);
        read(*it, "precision", precision, "training");
        t.precision = parse_precision(precision);
        t.validate();
    }
    if (auto it = j.find("analysis"); it != j.end()) {
        check_keys(*it, {"pilot_lengths", "max_listed_pairs"}, "analysis");
        read(*it, "pilot_lengths", c.analysis.pilot_lengths, "analysis");
        read(*it, "max_listed_pairs", c.analysis.max_listed_pairs, "analysis");
    }
    if (auto it = j.find("sweep"); it != j.end()) {
        check_keys(*it, {"antenna_counts", "pilot_lengths", "snr_points", "estimators", "rho_db", "train_fraction"},
                   "sweep");
        auto& s = c.sweep;
        read(*it, "antenna_counts", s.antenna_counts, "sweep");
        read(*it, "pilot_lengths", s.pilot_lengths, "sweep");
        read(*it, "rho_db", s.rho_db, "sweep");
        read(*it, "train_fraction", s.train_fraction, "sweep");
        if (auto sp = it->find("snr_points"); sp != it->end()) {
            if (!sp->is_array()) throw ConfigError("sweep.snr_points: expected an array");
            s.snr_points.clear();
            for (std::size_t i = 0; i < sp->size(); ++i) {
                s.snr_points.push_back(noise_config_from((*sp)[i], "sweep.snr_points[" + std::to_string(i) + "]"));
            }
        }
        if (auto es = it->find("estimators"); es != it->end()) {
            std::vector<std::string> names;
            read(*it, "estimators", names, "sweep");
            s.estimators.clear();
            for (const auto& n : names) s.estimators.push_back(parse_estimator(n));
        }
    }
    if (auto it = j.find("paths"); it != j.end()) {
        check_keys(*it, {"output_dir", "dataset", "checkpoint"}, "paths");
        read(*it, "output_dir", c.paths.output_dir, "paths");
        if (auto d = it->find("dataset"); d != it->end() && !d->is_null()) c.paths.dataset = d->get<std::string>();
        if (auto d = it->find("checkpoint"); d != it->end() && !d->is_null()) c.paths.checkpoint = d->get<std::string>();
    }
    return c;
}

}  // namespace

WorkbenchConfig config_from_json(const nlohmann::json& j) {
    try {
        return parse_config(j);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("config: ") + e.what());
    } catch (const DomainError& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
}

WorkbenchConfig load_config(const std::filesystem::path& path) {
    nlohmann::json j;
    try {
        j = io::read_json_file(path);
    } catch (const ParseError& e) {
        throw ConfigError(e.what());
    }
    return config_from_json(j);
}

ExperimentPlan make_plan(const WorkbenchConfig& c) {
    ExperimentPlan p;
    p.antenna_counts = c.sweep.antenna_counts;
    p.pilot_lengths = c.sweep.pilot_lengths;
    p.snr_points = c.sweep.snr_points;
    p.dataset.scenario = c.scenario;
    p.dataset.element_spacing = c.geometry.element_spacing;
    if (c.paths.dataset) p.dataset.file = *c.paths.dataset;
    p.trainer = c.training;
    p.estimators = c.sweep.estimators;
    p.rho_db = c.sweep.rho_db;
    p.pilot_power = c.pilot.power;
    p.train_fraction = c.sweep.train_fraction;
    p.master_seed = c.master_seed;
    p.threads = c.threads;
    return p;
}

}  // namespace onebit
