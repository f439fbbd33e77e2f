#pragma once

#include <span>

#include "onebit/channel_model.hpp"

namespace onebit {

/// ||h - h_hat||^2 / ||h||^2.
double nmse_metric(const ChannelVector& truth, const ChannelVector& estimate);

/// (rho / M) |h_hat^H h|^2 / ||h_hat||^2: downlink SNR per transmit antenna
/// with the conjugate beamformer built from the estimate.
double per_antenna_snr(const ChannelVector& truth, const ChannelVector& estimate, double rho);

/// rho ||h||^2 / M, attained when the beamformer uses the exact channel.
double upper_bound_snr(const ChannelVector& truth, double rho);

double to_db(double linear);
double from_db(double db);

/// Test-set aggregates: mean NMSE, and the mean of linear per-antenna SNRs
/// and bounds reported in dB.
struct EstimateSummary {
    double mean_nmse = 0.0;
    double mean_snr_per_antenna_db = 0.0;
    double upper_bound_db = 0.0;
    double mean_snr_per_antenna = 0.0;
    double upper_bound = 0.0;
};

EstimateSummary summarize_estimates(std::span<const ChannelVector> truths, std::span<const ChannelVector> estimates,
                                    double rho);

}  // namespace onebit
