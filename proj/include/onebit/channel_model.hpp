#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <variant>
#include <vector>

#include "onebit/types.hpp"

namespace onebit {

/// Uniform linear array. Spacing is in carrier wavelengths.
struct ArrayGeometry {
    std::size_t num_antennas = 1;
    double element_spacing = 0.5;

    void validate() const;
    friend bool operator==(const ArrayGeometry&, const ArrayGeometry&) = default;
};

/// One propagation path: complex gain and angle of arrival in [0, pi).
struct PathComponent {
    Complex gain{1.0, 0.0};
    double aoa = 0.0;
};

/// Scenario tags attached to a generated channel.
struct ChannelMeta {
    std::size_t user_index = 0;
    std::optional<std::array<double, 2>> position;  // metres, room layouts only
    std::vector<double> aoas;                       // per path, when known

    friend bool operator==(const ChannelMeta&, const ChannelMeta&) = default;
};

struct ChannelVector {
    std::vector<Complex> entries;
    std::optional<ChannelMeta> meta;

    std::size_t size() const noexcept { return entries.size(); }
    const Complex& operator[](std::size_t m) const { return entries[m]; }
    Complex& operator[](std::size_t m) { return entries[m]; }

    /// Squared Euclidean norm.
    double energy() const noexcept;
    bool is_zero() const noexcept;
};

/// Immutable candidate channel set sharing one array geometry.
///
/// Construction enforces: every channel has geometry.num_antennas entries,
/// no channel is all-zero, and channels are pairwise distinct.
class ChannelSet {
  public:
    ChannelSet(std::vector<ChannelVector> channels, ArrayGeometry geometry, std::uint64_t seed, std::size_t num_paths,
               std::optional<double> min_aoa_separation = std::nullopt);

    std::span<const ChannelVector> channels() const noexcept { return channels_; }
    const ChannelVector& operator[](std::size_t i) const { return channels_[i]; }
    std::size_t size() const noexcept { return channels_.size(); }
    const ArrayGeometry& geometry() const noexcept { return geometry_; }
    std::uint64_t seed() const noexcept { return seed_; }
    std::size_t num_paths() const noexcept { return num_paths_; }

    /// Smallest AoA gap between users' dominant paths, recorded by angular scenarios.
    std::optional<double> min_aoa_separation() const noexcept { return min_aoa_separation_; }

    /// Mean over the set of ||h||^2 / M.
    double mean_per_antenna_energy() const noexcept;

  private:
    std::vector<ChannelVector> channels_;
    ArrayGeometry geometry_;
    std::uint64_t seed_;
    std::size_t num_paths_;
    std::optional<double> min_aoa_separation_;
};

/// [a(aoa)]_m = exp(j 2 pi d m cos(aoa)), m = 0..M-1.
ChannelVector array_response(const ArrayGeometry& geometry, double aoa);

/// h = sum_l gain_l * a(aoa_l).
ChannelVector synthesize_channel(const ArrayGeometry& geometry, std::span<const PathComponent> paths);

enum class GainModel { unit, complex_gaussian };

/// Users described directly by path angles.
///
/// With `min_separation` set, user u's first path arrives from
/// first_aoa + u * min_separation. Otherwise `aoas` lists either one angle per
/// user (first path) or num_users * num_paths angles, row-major by user.
/// Paths not pinned by the grid draw their AoA uniformly in [0, pi).
/// complex_gaussian gains are CN(0, 1/L) per path.
struct AngularScenario {
    std::size_t num_users = 2;
    std::size_t num_paths = 1;
    std::optional<double> min_separation;
    double first_aoa = 0.0;
    std::vector<double> aoas;
    GainModel gain_model = GainModel::unit;
};

/// Users on a rectangular grid inside a room, seen by a ULA whose axis is
/// the room's x axis. Paths are, in order: line of sight, the four
/// first-order wall images, the four corner (double-bounce) images and one
/// point scatterer; the first `num_paths` of these are kept. A path of length
/// d metres contributes gain g / d * exp(-j 2 pi d / wavelength), where g is
/// the product of the reflection coefficients along it. Each wall's
/// reflection phase is drawn once per scenario from the seed.
struct RoomScenario {
    std::size_t rows = 52;
    std::size_t cols = 50;
    double grid_spacing_m = 0.0125;
    std::array<double, 2> grid_origin_m{3.0, 3.0};
    std::array<double, 2> room_size_m{10.0, 10.0};
    std::array<double, 2> bs_position_m{2.0, 0.5};
    std::array<double, 2> scatterer_position_m{6.5, 7.0};
    double wavelength_m = 0.125;
    double reflection_magnitude = 0.6;
    double scatterer_magnitude = 0.5;
    std::size_t num_paths = 10;

    static constexpr std::size_t kMaxPaths = 10;
    std::size_t num_users() const noexcept { return rows * cols; }
};

using ScenarioSpec = std::variant<AngularScenario, RoomScenario>;

/// Deterministic in (geometry, spec, seed).
ChannelSet generate_scenario(const ArrayGeometry& geometry, const ScenarioSpec& spec, std::uint64_t seed);

/// Path decomposition of one room-grid user; exposed for testing.
std::vector<PathComponent> room_user_paths(const RoomScenario& spec, std::size_t row, std::size_t col,
                                           std::span<const Complex> wall_phases);

/// Writes `<manifest>` (JSON) and its blob (interleaved re/im f64 LE).
void save_channels(const ChannelSet& set, const std::filesystem::path& manifest_path);
ChannelSet load_channels(const std::filesystem::path& manifest_path);

}  // namespace onebit
