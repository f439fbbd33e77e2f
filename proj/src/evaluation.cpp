#include "onebit/evaluation.hpp"

#include <cmath>
#include <string>

#include "onebit/errors.hpp"

namespace onebit {

namespace {

void check_lengths(const ChannelVector& a, const ChannelVector& b) {
    if (a.size() != b.size() || a.size() == 0) throw DomainError("channel and estimate lengths differ");
}

}  // namespace

double nmse_metric(const ChannelVector& truth, const ChannelVector& estimate) {
    check_lengths(truth, estimate);
    const double den = truth.energy();
    if (den == 0.0) throw DomainError("NMSE of an all-zero channel is undefined");
    double num = 0.0;
    for (std::size_t m = 0; m < truth.size(); ++m) num += std::norm(truth[m] - estimate[m]);
    return num / den;
}

double per_antenna_snr(const ChannelVector& truth, const ChannelVector& estimate, double rho) {
    check_lengths(truth, estimate);
    const double est_energy = estimate.energy();
    if (est_energy == 0.0) throw DomainError("conjugate beamformer needs a nonzero channel estimate");
    Complex inner{};
    for (std::size_t m = 0; m < truth.size(); ++m) inner += std::conj(estimate[m]) * truth[m];
    return rho / static_cast<double>(truth.size()) * std::norm(inner) / est_energy;
}

double upper_bound_snr(const ChannelVector& truth, double rho) {
    if (truth.size() == 0 || truth.is_zero()) throw DomainError("upper bound needs a nonzero channel");
    return rho * truth.energy() / static_cast<double>(truth.size());
}

double to_db(double linear) { return 10.0 * std::log10(linear); }
double from_db(double db) { return std::pow(10.0, db / 10.0); }

EstimateSummary summarize_estimates(std::span<const ChannelVector> truths, std::span<const ChannelVector> estimates,
                                    double rho) {
    if (truths.empty() || truths.size() != estimates.size()) {
        throw DomainError("summarize_estimates needs equally many non-zero truths and estimates");
    }
    EstimateSummary s;
    for (std::size_t i = 0; i < truths.size(); ++i) {
        s.mean_nmse += nmse_metric(truths[i], estimates[i]);
        s.mean_snr_per_antenna += per_antenna_snr(truths[i], estimates[i], rho);
        s.upper_bound += upper_bound_snr(truths[i], rho);
    }
    const auto n = static_cast<double>(truths.size());
    s.mean_nmse /= n;
    s.mean_snr_per_antenna /= n;
    s.upper_bound /= n;
    s.mean_snr_per_antenna_db = to_db(s.mean_snr_per_antenna);
    s.upper_bound_db = to_db(s.upper_bound);
    return s;
}

}  // namespace onebit
