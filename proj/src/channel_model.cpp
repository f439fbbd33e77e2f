#include "onebit/channel_model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <string>

#include "onebit/binary_io.hpp"
#include "onebit/errors.hpp"
#include "onebit/seeding.hpp"

namespace onebit {

namespace {

void check_aoa(double aoa) {
    if (!(aoa >= 0.0 && aoa < kPi)) {
        throw DomainError("angle of arrival " + io::format_double(aoa) + " outside [0, pi)");
    }
}

bool lexicographic_less(const ChannelVector& a, const ChannelVector& b) {
    return std::lexicographical_compare(a.entries.begin(), a.entries.end(), b.entries.begin(), b.entries.end(),
                                        [](const Complex& x, const Complex& y) {
                                            if (x.real() != y.real()) return x.real() < y.real();
                                            return x.imag() < y.imag();
                                        });
}

std::optional<double> smallest_gap(std::vector<double> angles) {
    if (angles.size() < 2) return std::nullopt;
    std::sort(angles.begin(), angles.end());
    double gap = kPi;
    for (std::size_t i = 1; i < angles.size(); ++i) gap = std::min(gap, angles[i] - angles[i - 1]);
    return gap;
}

ChannelSet generate_angular(const ArrayGeometry& geometry, const AngularScenario& spec, std::uint64_t seed) {
    if (spec.num_users == 0) throw ConfigError("scenario needs at least one user");
    if (spec.num_paths == 0) throw ConfigError("scenario needs at least one path per user");
    const std::size_t users = spec.num_users;
    const std::size_t paths = spec.num_paths;

    // pinned[u * paths + l] holds a fixed AoA or NaN for "draw at random".
    std::vector<double> pinned(users * paths, std::numeric_limits<double>::quiet_NaN());
    if (spec.min_separation) {
        const double sep = *spec.min_separation;
        if (!(sep > 0.0)) throw ConfigError("min_separation must be positive");
        if (!(spec.first_aoa >= 0.0 && spec.first_aoa < kPi)) throw ConfigError("first_aoa outside [0, pi)");
        const double last = spec.first_aoa + static_cast<double>(users - 1) * sep;
        if (!(last < kPi)) {
            throw ConfigError("min_separation " + io::format_double(sep) + " is infeasible for " +
                              std::to_string(users) + " users in [0, pi)");
        }
        for (std::size_t u = 0; u < users; ++u) pinned[u * paths] = spec.first_aoa + static_cast<double>(u) * sep;
    } else if (spec.aoas.size() == users) {
        for (std::size_t u = 0; u < users; ++u) pinned[u * paths] = spec.aoas[u];
    } else if (spec.aoas.size() == users * paths) {
        pinned = spec.aoas;
    } else {
        throw ConfigError("explicit AoA list must hold num_users or num_users * num_paths angles (got " +
                          std::to_string(spec.aoas.size()) + ")");
    }
    for (double a : pinned) {
        if (!std::isnan(a) && !(a >= 0.0 && a < kPi)) throw ConfigError("AoA " + io::format_double(a) + " outside [0, pi)");
    }

    std::vector<ChannelVector> channels;
    channels.reserve(users);
    std::vector<double> dominant;
    const double gain_sigma = std::sqrt(0.5 / static_cast<double>(paths));
    for (std::size_t u = 0; u < users; ++u) {
        std::mt19937_64 rng(derive_seed(seed, {tag_hash("angular-user"), u}));
        std::uniform_real_distribution<double> angle(0.0, kPi);
        std::normal_distribution<double> normal(0.0, gain_sigma);
        std::vector<PathComponent> comps(paths);
        for (std::size_t l = 0; l < paths; ++l) {
            const double p = pinned[u * paths + l];
            comps[l].aoa = std::isnan(p) ? angle(rng) : p;
            if (spec.gain_model == GainModel::complex_gaussian) {
                const double re = normal(rng);
                const double im = normal(rng);
                comps[l].gain = Complex(re, im);
            }
        }
        auto h = synthesize_channel(geometry, comps);
        if (h.is_zero()) throw ConfigError("user " + std::to_string(u) + " has an all-zero channel");
        ChannelMeta meta;
        meta.user_index = u;
        for (const auto& c : comps) meta.aoas.push_back(c.aoa);
        dominant.push_back(comps.front().aoa);
        h.meta = std::move(meta);
        channels.push_back(std::move(h));
    }
    return ChannelSet(std::move(channels), geometry, seed, paths, smallest_gap(dominant));
}

double aoa_toward(const std::array<double, 2>& from, double x, double y) {
    const double dx = x - from[0];
    const double dy = y - from[1];
    const double d = std::hypot(dx, dy);
    double phi = std::acos(std::clamp(dx / d, -1.0, 1.0));
    if (phi >= kPi) phi = std::nextafter(kPi, 0.0);
    return phi;
}

ChannelSet generate_room(const ArrayGeometry& geometry, const RoomScenario& spec, std::uint64_t seed) {
    if (spec.rows == 0 || spec.cols == 0) throw ConfigError("room grid needs at least one row and column");
    if (spec.num_paths == 0 || spec.num_paths > RoomScenario::kMaxPaths) {
        throw ConfigError("room scenario supports 1.." + std::to_string(RoomScenario::kMaxPaths) + " paths");
    }
    if (!(spec.grid_spacing_m > 0.0) || !(spec.wavelength_m > 0.0)) {
        throw ConfigError("grid spacing and wavelength must be positive");
    }
    const auto inside = [&](double x, double y) {
        return x > 0.0 && y > 0.0 && x < spec.room_size_m[0] && y < spec.room_size_m[1];
    };
    const double far_x = spec.grid_origin_m[0] + static_cast<double>(spec.cols - 1) * spec.grid_spacing_m;
    const double far_y = spec.grid_origin_m[1] + static_cast<double>(spec.rows - 1) * spec.grid_spacing_m;
    if (!inside(spec.grid_origin_m[0], spec.grid_origin_m[1]) || !inside(far_x, far_y) ||
        !inside(spec.bs_position_m[0], spec.bs_position_m[1]) ||
        !inside(spec.scatterer_position_m[0], spec.scatterer_position_m[1])) {
        throw ConfigError("room scenario places the grid, base station or scatterer outside the room");
    }

    std::mt19937_64 rng(derive_seed(seed, "room-walls"));
    std::uniform_real_distribution<double> phase(0.0, 2.0 * kPi);
    std::vector<Complex> wall_phases(5);
    for (auto& w : wall_phases) w = std::polar(1.0, phase(rng));

    std::vector<ChannelVector> channels;
    channels.reserve(spec.num_users());
    for (std::size_t r = 0; r < spec.rows; ++r) {
        for (std::size_t c = 0; c < spec.cols; ++c) {
            const auto comps = room_user_paths(spec, r, c, wall_phases);
            auto h = synthesize_channel(geometry, comps);
            const std::size_t u = r * spec.cols + c;
            if (h.is_zero()) throw ConfigError("user " + std::to_string(u) + " has an all-zero channel");
            ChannelMeta meta;
            meta.user_index = u;
            meta.position = {spec.grid_origin_m[0] + static_cast<double>(c) * spec.grid_spacing_m,
                             spec.grid_origin_m[1] + static_cast<double>(r) * spec.grid_spacing_m};
            for (const auto& p : comps) meta.aoas.push_back(p.aoa);
            h.meta = std::move(meta);
            channels.push_back(std::move(h));
        }
    }
    return ChannelSet(std::move(channels), geometry, seed, spec.num_paths);
}

}  // namespace

void ArrayGeometry::validate() const {
    if (num_antennas < 1) throw DomainError("array needs at least one antenna");
    if (!(element_spacing > 0.0) || !std::isfinite(element_spacing)) {
        throw DomainError("element spacing must be positive and finite");
    }
}

double ChannelVector::energy() const noexcept {
    double e = 0.0;
    for (const auto& z : entries) e += std::norm(z);
    return e;
}

bool ChannelVector::is_zero() const noexcept {
    return std::all_of(entries.begin(), entries.end(), [](const Complex& z) { return z == Complex{}; });
}

ChannelSet::ChannelSet(std::vector<ChannelVector> channels, ArrayGeometry geometry, std::uint64_t seed,
                       std::size_t num_paths, std::optional<double> min_aoa_separation)
    : channels_(std::move(channels)),
      geometry_(geometry),
      seed_(seed),
      num_paths_(num_paths),
      min_aoa_separation_(min_aoa_separation) {
    geometry_.validate();
    if (num_paths_ < 1) throw DomainError("channel set needs num_paths >= 1");
    for (std::size_t i = 0; i < channels_.size(); ++i) {
        if (channels_[i].size() != geometry_.num_antennas) {
            throw DomainError("channel " + std::to_string(i) + " has " + std::to_string(channels_[i].size()) +
                              " entries, geometry expects " + std::to_string(geometry_.num_antennas));
        }
        if (channels_[i].is_zero()) throw DomainError("channel " + std::to_string(i) + " is all-zero");
    }
    std::vector<std::size_t> order(channels_.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return lexicographic_less(channels_[a], channels_[b]); });
    for (std::size_t i = 1; i < order.size(); ++i) {
        if (channels_[order[i - 1]].entries == channels_[order[i]].entries) {
            const auto [a, b] = std::minmax(order[i - 1], order[i]);
            throw DomainError("channels " + std::to_string(a) + " and " + std::to_string(b) + " are identical");
        }
    }
}

double ChannelSet::mean_per_antenna_energy() const noexcept {
    if (channels_.empty()) return 0.0;
    double total = 0.0;
    for (const auto& h : channels_) total += h.energy();
    return total / (static_cast<double>(channels_.size()) * static_cast<double>(geometry_.num_antennas));
}

ChannelVector array_response(const ArrayGeometry& geometry, double aoa) {
    geometry.validate();
    check_aoa(aoa);
    ChannelVector h;
    h.entries.resize(geometry.num_antennas);
    const double step = 2.0 * kPi * geometry.element_spacing * std::cos(aoa);
    for (std::size_t m = 0; m < geometry.num_antennas; ++m) {
        h.entries[m] = std::polar(1.0, step * static_cast<double>(m));
    }
    return h;
}

ChannelVector synthesize_channel(const ArrayGeometry& geometry, std::span<const PathComponent> paths) {
    if (paths.empty()) throw DomainError("synthesize_channel needs at least one path");
    ChannelVector h;
    h.entries.assign(geometry.num_antennas, Complex{});
    for (const auto& p : paths) {
        const auto a = array_response(geometry, p.aoa);
        for (std::size_t m = 0; m < h.size(); ++m) h.entries[m] += p.gain * a.entries[m];
    }
    return h;
}

std::vector<PathComponent> room_user_paths(const RoomScenario& spec, std::size_t row, std::size_t col,
                                           std::span<const Complex> wall_phases) {
    const double x = spec.grid_origin_m[0] + static_cast<double>(col) * spec.grid_spacing_m;
    const double y = spec.grid_origin_m[1] + static_cast<double>(row) * spec.grid_spacing_m;
    const double width = spec.room_size_m[0];
    const double depth = spec.room_size_m[1];
    const auto& bs = spec.bs_position_m;
    const double k = 2.0 * kPi / spec.wavelength_m;
    // Walls in order x = 0, x = W, y = 0, y = D.
    std::array<Complex, 4> wall;
    for (std::size_t w = 0; w < 4; ++w) wall[w] = spec.reflection_magnitude * wall_phases[w];

    struct Source {
        double x, y;
        Complex coefficient;
    };
    const std::array<Source, 9> sources{{
        {x, y, Complex{1.0, 0.0}},
        {-x, y, wall[0]},
        {2.0 * width - x, y, wall[1]},
        {x, -y, wall[2]},
        {x, 2.0 * depth - y, wall[3]},
        {-x, -y, wall[0] * wall[2]},
        {-x, 2.0 * depth - y, wall[0] * wall[3]},
        {2.0 * width - x, -y, wall[1] * wall[2]},
        {2.0 * width - x, 2.0 * depth - y, wall[1] * wall[3]},
    }};

    std::vector<PathComponent> paths;
    paths.reserve(spec.num_paths);
    for (std::size_t i = 0; i < sources.size() && paths.size() < spec.num_paths; ++i) {
        const auto& s = sources[i];
        const double d = std::hypot(s.x - bs[0], s.y - bs[1]);
        paths.push_back({s.coefficient / d * std::polar(1.0, -k * d), aoa_toward(bs, s.x, s.y)});
    }
    if (paths.size() < spec.num_paths) {
        const auto& sc = spec.scatterer_position_m;
        const double d = std::hypot(sc[0] - bs[0], sc[1] - bs[1]) + std::hypot(x - sc[0], y - sc[1]);
        paths.push_back({spec.scatterer_magnitude * wall_phases[4] / d * std::polar(1.0, -k * d),
                         aoa_toward(bs, sc[0], sc[1])});
    }
    return paths;
}

ChannelSet generate_scenario(const ArrayGeometry& geometry, const ScenarioSpec& spec, std::uint64_t seed) {
    geometry.validate();
    return std::visit(
        [&](const auto& s) -> ChannelSet {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, AngularScenario>) {
                return generate_angular(geometry, s, seed);
            } else {
                return generate_room(geometry, s, seed);
            }
        },
        spec);
}

void save_channels(const ChannelSet& set, const std::filesystem::path& manifest_path) {
    auto blob = manifest_path;
    blob.replace_extension(".bin");
    nlohmann::json manifest{
        {"format_version", io::format_version()},
        {"M", set.geometry().num_antennas},
        {"element_spacing", set.geometry().element_spacing},
        {"num_users", set.size()},
        {"L", set.num_paths()},
        {"seed", set.seed()},
        {"complex_layout", "interleaved_re_im"},
        {"dtype", "f64_le"},
        {"blob", blob.filename().string()},
    };
    if (set.min_aoa_separation()) manifest["min_aoa_separation"] = *set.min_aoa_separation();

    nlohmann::json meta = nlohmann::json::array();
    bool any_meta = false;
    for (const auto& h : set.channels()) {
        if (!h.meta) {
            meta.push_back(nullptr);
            continue;
        }
        any_meta = true;
        nlohmann::json m{{"user", h.meta->user_index}, {"aoas", h.meta->aoas}};
        if (h.meta->position) m["position"] = *h.meta->position;
        meta.push_back(std::move(m));
    }
    if (any_meta) manifest["user_meta"] = std::move(meta);

    std::vector<double> values;
    values.reserve(set.size() * set.geometry().num_antennas * 2);
    for (const auto& h : set.channels()) {
        for (const auto& z : h.entries) {
            values.push_back(z.real());
            values.push_back(z.imag());
        }
    }
    if (manifest_path.has_parent_path()) std::filesystem::create_directories(manifest_path.parent_path());
    std::ofstream out(blob, std::ios::binary);
    if (!out) throw Error(blob.string() + ": cannot open for writing");
    io::write_f64_le(out, values);
    if (!out) throw Error(blob.string() + ": write failed");
    io::write_json_file(manifest_path, manifest);
}

ChannelSet load_channels(const std::filesystem::path& manifest_path) {
    const std::string where = manifest_path.string();
    const auto manifest = io::read_json_file(manifest_path);
    io::check_format_version(manifest, where);
    try {
        if (io::require(manifest, "complex_layout", where) != "interleaved_re_im") {
            throw ParseError(where + ": unsupported complex_layout");
        }
        if (io::require(manifest, "dtype", where) != "f64_le") throw ParseError(where + ": unsupported dtype");
        ArrayGeometry geometry;
        geometry.num_antennas = io::require(manifest, "M", where).get<std::size_t>();
        geometry.element_spacing = manifest.value("element_spacing", 0.5);
        const auto users = io::require(manifest, "num_users", where).get<std::size_t>();
        const auto paths = io::require(manifest, "L", where).get<std::size_t>();
        const auto seed = io::require(manifest, "seed", where).get<std::uint64_t>();
        if (geometry.num_antennas == 0) throw ParseError(where + ": M must be positive");

        const auto blob = io::blob_path(manifest_path, manifest);
        const auto bytes = io::read_file_bytes(blob);
        const std::size_t expected = users * geometry.num_antennas * 2 * sizeof(double);
        if (bytes.size() != expected) {
            throw ParseError(blob.string() + ": blob holds " + std::to_string(bytes.size()) + " bytes, manifest (M=" +
                             std::to_string(geometry.num_antennas) + ", num_users=" + std::to_string(users) +
                             ") requires " + std::to_string(expected));
        }
        const auto values = io::read_f64_le(bytes);

        const nlohmann::json* meta = nullptr;
        if (auto it = manifest.find("user_meta"); it != manifest.end()) {
            if (!it->is_array() || it->size() != users) throw ParseError(where + ": user_meta must list every user");
            meta = &*it;
        }

        std::vector<ChannelVector> channels(users);
        const std::size_t M = geometry.num_antennas;
        for (std::size_t u = 0; u < users; ++u) {
            auto& h = channels[u];
            h.entries.resize(M);
            for (std::size_t m = 0; m < M; ++m) {
                const double re = values[(u * M + m) * 2];
                const double im = values[(u * M + m) * 2 + 1];
                if (!std::isfinite(re) || !std::isfinite(im)) {
                    throw ParseError(blob.string() + ": non-finite value at user " + std::to_string(u) + ", antenna " +
                                     std::to_string(m));
                }
                h.entries[m] = Complex(re, im);
            }
            if (meta && !(*meta)[u].is_null()) {
                const auto& mj = (*meta)[u];
                ChannelMeta cm;
                cm.user_index = mj.value("user", u);
                cm.aoas = mj.value("aoas", std::vector<double>{});
                if (mj.contains("position")) cm.position = mj["position"].get<std::array<double, 2>>();
                h.meta = std::move(cm);
            }
        }
        std::optional<double> separation;
        if (auto it = manifest.find("min_aoa_separation"); it != manifest.end()) separation = it->get<double>();
        try {
            return ChannelSet(std::move(channels), geometry, seed, paths, separation);
        } catch (const DomainError& e) {
            throw ParseError(where + ": " + e.what());
        }
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(where + ": " + e.what());
    }
}

}  // namespace onebit
