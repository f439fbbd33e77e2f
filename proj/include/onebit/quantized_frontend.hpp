#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include <json.hpp>

#include "onebit/channel_model.hpp"

namespace onebit {

struct PilotSequence;

/// sign(Re z) + j sign(Im z), sign(0) = +1.
constexpr Complex complex_sign(Complex z) noexcept {
    return {z.real() >= 0.0 ? 1.0 : -1.0, z.imag() >= 0.0 ? 1.0 : -1.0};
}

/// M x N matrix of 1-bit samples, each component +1 or -1.
/// Stored column-major, (re, im) interleaved per entry.
class QuantizedMeasurement {
  public:
    QuantizedMeasurement(std::size_t num_antennas, std::size_t pilot_length);
    /// Validates that every component is exactly +1 or -1.
    QuantizedMeasurement(std::size_t num_antennas, std::size_t pilot_length, std::vector<std::int8_t> components);

    std::size_t num_antennas() const noexcept { return rows_; }
    std::size_t pilot_length() const noexcept { return cols_; }

    Complex at(std::size_t m, std::size_t n) const;
    void set(std::size_t m, std::size_t n, Complex value);

    /// Interleaved column-major components, length 2MN.
    std::span<const std::int8_t> components() const noexcept { return data_; }

    friend bool operator==(const QuantizedMeasurement&, const QuantizedMeasurement&) = default;

  private:
    std::size_t rows_;
    std::size_t cols_;
    std::vector<std::int8_t> data_;
};

struct NoiseSpec {
    enum class Mode { noiseless, fixed_snr, mixed_snr };

    Mode mode = Mode::noiseless;
    double snr_db = 0.0;
    double snr_low_db = 0.0;
    double snr_high_db = 10.0;
    std::uint64_t seed = 0;
    /// P_t * E[||h||^2 / M] that the SNR refers to; filled by dataset builders.
    double reference_energy = 1.0;

    static NoiseSpec noiseless();
    static NoiseSpec fixed(double snr_db, std::uint64_t seed = 0);
    static NoiseSpec mixed(double low_db, double high_db, std::uint64_t seed = 0);

    void validate() const;
    std::string label() const;
};

/// sigma^2 = P_t * E_set[||h||^2 / M] / 10^(snr_db / 10).
double snr_to_sigma2(double snr_db, std::span<const ChannelVector> channels, double power);
double snr_to_sigma2(double snr_db, const ChannelSet& set, double power);

/// `count` i.i.d. CN(0, sigma2) samples (sigma2 / 2 per real dimension).
std::vector<Complex> draw_complex_noise(double sigma2, std::size_t count, std::uint64_t seed);

/// Y[m, n] = csgn(h_m x_n + w_mn). In mixed mode one SNR is drawn uniformly
/// in dB per call; noise.seed alone fixes the realization.
QuantizedMeasurement simulate_measurement(const ChannelVector& h, const PilotSequence& pilot, const NoiseSpec& noise);

/// Quantized measurements for a whole set. Sample u uses the seed
/// derive_seed(noise.seed, {u}); reference energy comes from the set.
std::vector<QuantizedMeasurement> simulate_dataset(const ChannelSet& set, const PilotSequence& pilot,
                                                   const NoiseSpec& noise, unsigned threads = 1);

struct MeasurementDataset {
    std::vector<double> pilot_angles;
    double pilot_power = 1.0;
    NoiseSpec noise;
    std::vector<QuantizedMeasurement> measurements;
};

nlohmann::json to_json(const NoiseSpec& noise);
NoiseSpec noise_from_json(const nlohmann::json& j, const std::string& where);

/// Channel-container manifest plus pilot/noise sections; blob of int8
/// components per user in QuantizedMeasurement::components() order.
void save_measurements(const MeasurementDataset& data, const std::filesystem::path& manifest_path);
MeasurementDataset load_measurements(const std::filesystem::path& manifest_path);

}  // namespace onebit
