#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include <json.hpp>

#include "onebit/channel_model.hpp"

namespace onebit {

/// N pilot symbols of equal power P_t.
struct PilotSequence {
    std::vector<Complex> symbols;
    double power = 1.0;

    std::size_t size() const noexcept { return symbols.size(); }
    std::vector<double> angles() const;

    /// Rebuilds a sequence from its symbol angles; validates power > 0.
    static PilotSequence from_angles(std::span<const double> angles, double power);
};

/// symbol_k = sqrt(power) * exp(j k pi / (2n)), k = 1..n.
PilotSequence design_pilot(std::size_t n, double power);

/// max over m of the circular distance between the phases of u[m] and v[m].
double pair_max_angle(std::span<const Complex> u, std::span<const Complex> v);
double pair_max_angle(const ChannelVector& u, const ChannelVector& v);

/// Minimum of pair_max_angle over unordered pairs. When degenerate, alpha is
/// 0 and (first, second) names the lowest-index pair with equal phases.
struct AlphaResult {
    double alpha = 0.0;
    std::size_t first = 0;
    std::size_t second = 0;
    bool degenerate = false;
};

/// Exact scan over all pairs. `threads` = 0 selects hardware concurrency.
/// Ties between equal pair values resolve to the lowest (first, second)
/// pair, so the result does not depend on the thread count.
AlphaResult compute_alpha(std::span<const ChannelVector> channels, unsigned threads = 0);
AlphaResult compute_alpha(const ChannelSet& set, unsigned threads = 0);

/// ceil(pi / (2 alpha)).
std::size_t min_pilot_length(double alpha);

/// ceil(1 / ((M - 1) * 4 sin^2(delta_phi / 2))).
std::size_t corollary1_length(std::size_t num_antennas, double delta_phi);

struct BijectivityReport {
    double alpha = 0.0;
    std::optional<std::size_t> min_pilot_length;  // empty when degenerate
    bool degenerate = false;
    std::size_t pilot_length = 0;
    std::size_t pairs_total = 0;
    std::size_t pairs_distinguishable = 0;
    double channels_uniquely_identified_fraction = 0.0;
    std::vector<std::pair<std::size_t, std::size_t>> undistinguishable_pairs;
    bool undistinguishable_pairs_truncated = false;
};

/// Noiseless quantized signature of h under a pilot, packed two bits
/// (re, im sign; set bit = -1) per measurement entry.
std::vector<std::uint64_t> noiseless_signature(std::span<const Complex> h, const PilotSequence& pilot);

/// Counts pairs whose noiseless signatures differ. Channels are grouped by
/// signature, so the count is exact without comparing every pair entrywise.
/// Listed pairs are capped at `max_listed_pairs`, smallest pairs first.
BijectivityReport distinguishability_report(std::span<const ChannelVector> channels, const PilotSequence& pilot,
                                            std::size_t max_listed_pairs = 100, unsigned threads = 0);
BijectivityReport distinguishability_report(const ChannelSet& set, const PilotSequence& pilot,
                                            std::size_t max_listed_pairs = 100, unsigned threads = 0);

nlohmann::json to_json(const BijectivityReport& report);

}  // namespace onebit
