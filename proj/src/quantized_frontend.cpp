#include "onebit/quantized_frontend.hpp"

#include <cmath>
#include <fstream>
#include <random>
#include <string>

#include "onebit/binary_io.hpp"
#include "onebit/errors.hpp"
#include "onebit/pilot_design.hpp"
#include "onebit/seeding.hpp"
#include "onebit/thread_pool.hpp"

namespace onebit {

QuantizedMeasurement::QuantizedMeasurement(std::size_t num_antennas, std::size_t pilot_length)
    : rows_(num_antennas), cols_(pilot_length), data_(2 * num_antennas * pilot_length, 1) {}

QuantizedMeasurement::QuantizedMeasurement(std::size_t num_antennas, std::size_t pilot_length,
                                           std::vector<std::int8_t> components)
    : rows_(num_antennas), cols_(pilot_length), data_(std::move(components)) {
    if (data_.size() != 2 * rows_ * cols_) {
        throw DomainError("measurement needs " + std::to_string(2 * rows_ * cols_) + " components, got " +
                          std::to_string(data_.size()));
    }
    for (std::size_t i = 0; i < data_.size(); ++i) {
        if (data_[i] != 1 && data_[i] != -1) {
            throw DomainError("measurement component " + std::to_string(i) + " is " + std::to_string(data_[i]) +
                              ", expected +1 or -1");
        }
    }
}

Complex QuantizedMeasurement::at(std::size_t m, std::size_t n) const {
    const std::size_t e = 2 * (n * rows_ + m);
    return {static_cast<double>(data_[e]), static_cast<double>(data_[e + 1])};
}

void QuantizedMeasurement::set(std::size_t m, std::size_t n, Complex value) {
    const auto q = complex_sign(value);
    const std::size_t e = 2 * (n * rows_ + m);
    data_[e] = static_cast<std::int8_t>(q.real());
    data_[e + 1] = static_cast<std::int8_t>(q.imag());
}

NoiseSpec NoiseSpec::noiseless() { return {}; }

NoiseSpec NoiseSpec::fixed(double snr_db, std::uint64_t seed) {
    NoiseSpec n;
    n.mode = Mode::fixed_snr;
    n.snr_db = snr_db;
    n.seed = seed;
    return n;
}

NoiseSpec NoiseSpec::mixed(double low_db, double high_db, std::uint64_t seed) {
    NoiseSpec n;
    n.mode = Mode::mixed_snr;
    n.snr_low_db = low_db;
    n.snr_high_db = high_db;
    n.seed = seed;
    return n;
}

void NoiseSpec::validate() const {
    if (mode == Mode::fixed_snr && !std::isfinite(snr_db)) throw ConfigError("snr_db must be finite");
    if (mode == Mode::mixed_snr) {
        if (!std::isfinite(snr_low_db) || !std::isfinite(snr_high_db)) throw ConfigError("SNR range must be finite");
        if (snr_low_db > snr_high_db) throw ConfigError("mixed SNR range needs low <= high");
    }
    if (!(reference_energy > 0.0) || !std::isfinite(reference_energy)) {
        throw ConfigError("noise reference energy must be positive");
    }
}

std::string NoiseSpec::label() const {
    switch (mode) {
        case Mode::noiseless: return "noiseless";
        case Mode::fixed_snr: return io::format_double(snr_db) + "dB";
        case Mode::mixed_snr: return io::format_double(snr_low_db) + "-" + io::format_double(snr_high_db) + "dB";
    }
    return "unknown";
}

double snr_to_sigma2(double snr_db, std::span<const ChannelVector> channels, double power) {
    if (channels.empty()) throw DomainError("snr_to_sigma2 needs a non-empty channel set");
    if (!(power > 0.0)) throw DomainError("pilot power must be positive");
    double total = 0.0;
    for (const auto& h : channels) total += h.energy() / static_cast<double>(h.size());
    const double mean = total / static_cast<double>(channels.size());
    return power * mean / std::pow(10.0, snr_db / 10.0);
}

double snr_to_sigma2(double snr_db, const ChannelSet& set, double power) {
    return snr_to_sigma2(snr_db, set.channels(), power);
}

std::vector<Complex> draw_complex_noise(double sigma2, std::size_t count, std::uint64_t seed) {
    if (!(sigma2 >= 0.0)) throw DomainError("noise variance must be non-negative");
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, std::sqrt(sigma2 / 2.0));
    std::vector<Complex> w(count);
    for (auto& z : w) {
        const double re = normal(rng);
        const double im = normal(rng);
        z = Complex(re, im);
    }
    return w;
}

QuantizedMeasurement simulate_measurement(const ChannelVector& h, const PilotSequence& pilot, const NoiseSpec& noise) {
    noise.validate();
    if (h.size() == 0 || pilot.size() == 0) throw DomainError("simulate_measurement needs non-empty h and pilot");
    const std::size_t M = h.size();
    const std::size_t N = pilot.size();
    QuantizedMeasurement y(M, N);

    std::vector<Complex> w;
    if (noise.mode != NoiseSpec::Mode::noiseless) {
        double snr = noise.snr_db;
        std::uint64_t noise_seed = noise.seed;
        if (noise.mode == NoiseSpec::Mode::mixed_snr) {
            std::mt19937_64 rng(derive_seed(noise.seed, "snr-draw"));
            snr = std::uniform_real_distribution<double>(noise.snr_low_db, noise.snr_high_db)(rng);
        }
        w = draw_complex_noise(noise.reference_energy / std::pow(10.0, snr / 10.0), M * N, noise_seed);
    }
    for (std::size_t n = 0; n < N; ++n) {
        for (std::size_t m = 0; m < M; ++m) {
            Complex r = h[m] * pilot.symbols[n];
            if (!w.empty()) r += w[n * M + m];
            y.set(m, n, r);
        }
    }
    return y;
}

std::vector<QuantizedMeasurement> simulate_dataset(const ChannelSet& set, const PilotSequence& pilot,
                                                   const NoiseSpec& noise, unsigned threads) {
    NoiseSpec base = noise;
    base.reference_energy = pilot.power * set.mean_per_antenna_energy();
    base.validate();
    std::vector<QuantizedMeasurement> out(set.size(), QuantizedMeasurement(set.geometry().num_antennas, pilot.size()));
    parallel_slices(set.size(), threads, [&](unsigned, std::size_t b, std::size_t e) {
        for (std::size_t u = b; u < e; ++u) {
            NoiseSpec per = base;
            per.seed = derive_seed(noise.seed, {u});
            out[u] = simulate_measurement(set[u], pilot, per);
        }
    });
    return out;
}

nlohmann::json to_json(const NoiseSpec& n) {
    nlohmann::json j;
    switch (n.mode) {
        case NoiseSpec::Mode::noiseless: j["mode"] = "noiseless"; break;
        case NoiseSpec::Mode::fixed_snr:
            j["mode"] = "fixed_snr_db";
            j["snr_db"] = n.snr_db;
            break;
        case NoiseSpec::Mode::mixed_snr:
            j["mode"] = "mixed_snr_db";
            j["low"] = n.snr_low_db;
            j["high"] = n.snr_high_db;
            break;
    }
    j["seed"] = n.seed;
    return j;
}

NoiseSpec noise_from_json(const nlohmann::json& j, const std::string& where) {
    try {
        NoiseSpec n;
        const auto mode = io::require(j, "mode", where).get<std::string>();
        if (mode == "noiseless") {
            n.mode = NoiseSpec::Mode::noiseless;
        } else if (mode == "fixed_snr_db") {
            n.mode = NoiseSpec::Mode::fixed_snr;
            n.snr_db = io::require(j, "snr_db", where).get<double>();
        } else if (mode == "mixed_snr_db") {
            n.mode = NoiseSpec::Mode::mixed_snr;
            n.snr_low_db = io::require(j, "low", where).get<double>();
            n.snr_high_db = io::require(j, "high", where).get<double>();
        } else {
            throw ParseError(where + ": unknown noise mode '" + mode + "'");
        }
        n.seed = j.value("seed", std::uint64_t{0});
        n.validate();
        return n;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(where + ": " + e.what());
    } catch (const ConfigError& e) {
        throw ParseError(where + ": " + e.what());
    }
}

void save_measurements(const MeasurementDataset& data, const std::filesystem::path& manifest_path) {
    if (data.measurements.empty()) throw DomainError("measurement dataset is empty");
    const std::size_t M = data.measurements.front().num_antennas();
    const std::size_t N = data.measurements.front().pilot_length();
    auto blob = manifest_path;
    blob.replace_extension(".bin");
    nlohmann::json manifest{
        {"format_version", io::format_version()},
        {"M", M},
        {"N", N},
        {"num_users", data.measurements.size()},
        {"complex_layout", "interleaved_re_im"},
        {"entry_order", "column_major"},
        {"dtype", "i8"},
        {"blob", blob.filename().string()},
        {"pilot", {{"angles", data.pilot_angles}, {"power", data.pilot_power}}},
        {"noise", to_json(data.noise)},
        {"snr_reference", "per_antenna_symbol"},
    };
    if (manifest_path.has_parent_path()) std::filesystem::create_directories(manifest_path.parent_path());
    std::ofstream out(blob, std::ios::binary);
    if (!out) throw Error(blob.string() + ": cannot open for writing");
    for (const auto& y : data.measurements) {
        if (y.num_antennas() != M || y.pilot_length() != N) throw DomainError("measurements have mixed dimensions");
        const auto c = y.components();
        out.write(reinterpret_cast<const char*>(c.data()), static_cast<std::streamsize>(c.size()));
    }
    if (!out) throw Error(blob.string() + ": write failed");
    io::write_json_file(manifest_path, manifest);
}

MeasurementDataset load_measurements(const std::filesystem::path& manifest_path) {
    const std::string where = manifest_path.string();
    const auto manifest = io::read_json_file(manifest_path);
    io::check_format_version(manifest, where);
    try {
        if (io::require(manifest, "dtype", where) != "i8") throw ParseError(where + ": unsupported dtype");
        const auto M = io::require(manifest, "M", where).get<std::size_t>();
        const auto N = io::require(manifest, "N", where).get<std::size_t>();
        const auto users = io::require(manifest, "num_users", where).get<std::size_t>();
        MeasurementDataset data;
        const auto& pilot = io::require(manifest, "pilot", where);
        data.pilot_angles = io::require(pilot, "angles", where + " pilot").get<std::vector<double>>();
        data.pilot_power = io::require(pilot, "power", where + " pilot").get<double>();
        if (data.pilot_angles.size() != N) throw ParseError(where + ": pilot angle count differs from N");
        data.noise = noise_from_json(io::require(manifest, "noise", where), where + " noise");

        const auto blob = io::blob_path(manifest_path, manifest);
        const auto bytes = io::read_file_bytes(blob);
        const std::size_t per = 2 * M * N;
        if (bytes.size() != users * per) {
            throw ParseError(blob.string() + ": blob holds " + std::to_string(bytes.size()) + " bytes, expected " +
                             std::to_string(users * per));
        }
        data.measurements.reserve(users);
        for (std::size_t u = 0; u < users; ++u) {
            std::vector<std::int8_t> c(per);
            for (std::size_t i = 0; i < per; ++i) c[i] = static_cast<std::int8_t>(std::to_integer<int>(bytes[u * per + i]));
            try {
                data.measurements.emplace_back(M, N, std::move(c));
            } catch (const DomainError& e) {
                throw ParseError(blob.string() + ": user " + std::to_string(u) + ": " + e.what());
            }
        }
        return data;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(where + ": " + e.what());
    }
}

}  // namespace onebit
