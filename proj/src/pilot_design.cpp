#include "onebit/pilot_design.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>
#include <tuple>

#include "onebit/binary_io.hpp"
#include "onebit/errors.hpp"
#include "onebit/quantized_frontend.hpp"
#include "onebit/thread_pool.hpp"

namespace onebit {

namespace {

double circular_distance(double a, double b) {
    const double d = std::abs(a - b);
    return d > kPi ? 2.0 * kPi - d : d;
}

double max_phase_gap(std::span<const double> pu, std::span<const double> pv) {
    double best = 0.0;
    for (std::size_t m = 0; m < pu.size(); ++m) best = std::max(best, circular_distance(pu[m], pv[m]));
    return best;
}

std::vector<double> phases_of(std::span<const Complex> h, std::size_t channel_index) {
    std::vector<double> p(h.size());
    for (std::size_t m = 0; m < h.size(); ++m) {
        if (h[m] == Complex{}) {
            throw DomainError("channel " + std::to_string(channel_index) + " has a zero entry at element " +
                              std::to_string(m) + "; its phase is undefined");
        }
        p[m] = std::arg(h[m]);
    }
    return p;
}

}  // namespace

std::vector<double> PilotSequence::angles() const {
    std::vector<double> a(symbols.size());
    std::transform(symbols.begin(), symbols.end(), a.begin(), [](const Complex& z) { return std::arg(z); });
    return a;
}

PilotSequence PilotSequence::from_angles(std::span<const double> angles, double power) {
    if (!(power > 0.0) || !std::isfinite(power)) throw DomainError("pilot power must be positive");
    PilotSequence p;
    p.power = power;
    const double amp = std::sqrt(power);
    for (double a : angles) p.symbols.push_back(std::polar(amp, a));
    return p;
}

PilotSequence design_pilot(std::size_t n, double power) {
    if (n == 0) throw DomainError("pilot length must be at least 1");
    std::vector<double> angles(n);
    for (std::size_t k = 1; k <= n; ++k) angles[k - 1] = static_cast<double>(k) * kPi / (2.0 * static_cast<double>(n));
    return PilotSequence::from_angles(angles, power);
}

double pair_max_angle(std::span<const Complex> u, std::span<const Complex> v) {
    if (u.size() != v.size()) throw DomainError("pair_max_angle needs equal-length channels");
    const auto pu = phases_of(u, 0);
    const auto pv = phases_of(v, 1);
    return max_phase_gap(pu, pv);
}

double pair_max_angle(const ChannelVector& u, const ChannelVector& v) { return pair_max_angle(u.entries, v.entries); }

AlphaResult compute_alpha(std::span<const ChannelVector> channels, unsigned threads) {
    const std::size_t n = channels.size();
    if (n < 2) throw DomainError("compute_alpha needs at least two channels");
    const std::size_t M = channels[0].size();
    std::vector<std::vector<double>> phases(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (channels[i].size() != M) throw DomainError("channels have unequal lengths");
        phases[i] = phases_of(channels[i].entries, i);
    }

    using Best = std::tuple<double, std::size_t, std::size_t>;
    const unsigned workers = resolve_threads(threads);
    std::vector<Best> partial(workers, Best{std::numeric_limits<double>::infinity(), 0, 0});
    // Rows are dealt round-robin so the triangular workload stays balanced.
    parallel_slices(workers, workers, [&](unsigned, std::size_t wbegin, std::size_t wend) {
        for (std::size_t w = wbegin; w < wend; ++w) {
            Best best = partial[w];
            for (std::size_t u = w; u + 1 < n; u += workers) {
                for (std::size_t v = u + 1; v < n; ++v) {
                    const double a = max_phase_gap(phases[u], phases[v]);
                    if (a < std::get<0>(best)) best = Best{a, u, v};
                }
            }
            partial[w] = best;
        }
    });
    const Best best = *std::min_element(partial.begin(), partial.end());
    AlphaResult r;
    r.alpha = std::get<0>(best);
    r.first = std::get<1>(best);
    r.second = std::get<2>(best);
    r.degenerate = r.alpha == 0.0;
    return r;
}

AlphaResult compute_alpha(const ChannelSet& set, unsigned threads) { return compute_alpha(set.channels(), threads); }

std::size_t min_pilot_length(double alpha) {
    if (!(alpha > 0.0)) throw DomainError("alpha must be positive (degenerate channel set)");
    if (alpha > kPi) throw DomainError("alpha " + io::format_double(alpha) + " exceeds pi");
    const double n = std::ceil(kPi / (2.0 * alpha));
    if (n > 1e18) throw DomainError("alpha " + io::format_double(alpha) + " needs an unrepresentable pilot length");
    return static_cast<std::size_t>(n);
}

std::size_t corollary1_length(std::size_t num_antennas, double delta_phi) {
    if (num_antennas < 2) throw DomainError("corollary1_length needs at least two antennas");
    if (!(delta_phi > 0.0 && delta_phi < kPi)) throw DomainError("delta_phi must lie in (0, pi)");
    const double s = std::sin(delta_phi / 2.0);
    const double n = std::ceil(1.0 / (static_cast<double>(num_antennas - 1) * 4.0 * s * s));
    if (n > 1e18) throw DomainError("delta_phi needs an unrepresentable pilot length");
    return static_cast<std::size_t>(n);
}

std::vector<std::uint64_t> noiseless_signature(std::span<const Complex> h, const PilotSequence& pilot) {
    const std::size_t M = h.size();
    const std::size_t bits = 2 * M * pilot.size();
    std::vector<std::uint64_t> sig((bits + 63) / 64, 0);
    for (std::size_t n = 0; n < pilot.size(); ++n) {
        for (std::size_t m = 0; m < M; ++m) {
            const Complex q = complex_sign(h[m] * pilot.symbols[n]);
            const std::size_t e = 2 * (n * M + m);
            if (q.real() < 0) sig[e / 64] |= std::uint64_t{1} << (e % 64);
            if (q.imag() < 0) sig[(e + 1) / 64] |= std::uint64_t{1} << ((e + 1) % 64);
        }
    }
    return sig;
}

BijectivityReport distinguishability_report(std::span<const ChannelVector> channels, const PilotSequence& pilot,
                                            std::size_t max_listed_pairs, unsigned threads) {
    const std::size_t n = channels.size();
    if (n < 2) throw DomainError("distinguishability_report needs at least two channels");
    if (pilot.size() == 0) throw DomainError("pilot sequence is empty");

    BijectivityReport report;
    const auto alpha = compute_alpha(channels, threads);
    report.alpha = alpha.alpha;
    report.degenerate = alpha.degenerate;
    if (!alpha.degenerate) report.min_pilot_length = min_pilot_length(alpha.alpha);
    report.pilot_length = pilot.size();

    std::vector<std::vector<std::uint64_t>> sigs(n);
    parallel_slices(n, threads, [&](unsigned, std::size_t b, std::size_t e) {
        for (std::size_t i = b; i < e; ++i) sigs[i] = noiseless_signature(channels[i].entries, pilot);
    });

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return sigs[a] != sigs[b] ? sigs[a] < sigs[b] : a < b;
    });

    // group_of[i] -> members of i's signature class in ascending index order.
    std::vector<std::vector<std::size_t>> groups;
    std::vector<std::size_t> group_of(n);
    std::vector<std::size_t> rank_in_group(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (i == 0 || sigs[order[i]] != sigs[order[i - 1]]) groups.emplace_back();
        group_of[order[i]] = groups.size() - 1;
        rank_in_group[order[i]] = groups.back().size();
        groups.back().push_back(order[i]);
    }

    std::size_t colliding = 0;
    std::size_t unique = 0;
    for (const auto& g : groups) {
        colliding += g.size() * (g.size() - 1) / 2;
        if (g.size() == 1) ++unique;
    }
    report.pairs_total = n * (n - 1) / 2;
    report.pairs_distinguishable = report.pairs_total - colliding;
    report.channels_uniquely_identified_fraction = static_cast<double>(unique) / static_cast<double>(n);

    for (std::size_t u = 0; u < n && report.undistinguishable_pairs.size() < colliding; ++u) {
        const auto& g = groups[group_of[u]];
        for (std::size_t k = rank_in_group[u] + 1; k < g.size(); ++k) {
            if (report.undistinguishable_pairs.size() == max_listed_pairs) {
                report.undistinguishable_pairs_truncated = true;
                break;
            }
            report.undistinguishable_pairs.emplace_back(u, g[k]);
        }
        if (report.undistinguishable_pairs_truncated) break;
    }
    return report;
}

BijectivityReport distinguishability_report(const ChannelSet& set, const PilotSequence& pilot,
                                            std::size_t max_listed_pairs, unsigned threads) {
    return distinguishability_report(set.channels(), pilot, max_listed_pairs, threads);
}

nlohmann::json to_json(const BijectivityReport& r) {
    nlohmann::json pairs = nlohmann::json::array();
    for (const auto& [u, v] : r.undistinguishable_pairs) pairs.push_back({u, v});
    return {
        {"alpha", r.alpha},
        {"min_pilot_length", r.min_pilot_length ? nlohmann::json(*r.min_pilot_length) : nlohmann::json(nullptr)},
        {"degenerate", r.degenerate},
        {"pilot_length", r.pilot_length},
        {"pairs_total", r.pairs_total},
        {"pairs_distinguishable", r.pairs_distinguishable},
        {"channels_uniquely_identified_fraction", r.channels_uniquely_identified_fraction},
        {"undistinguishable_pairs", std::move(pairs)},
        {"undistinguishable_pairs_truncated", r.undistinguishable_pairs_truncated},
    };
}

}  // namespace onebit
