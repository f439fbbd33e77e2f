#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <Eigen/Core>
#include <json.hpp>

#include "onebit/channel_model.hpp"
#include "onebit/network.hpp"
#include "onebit/quantized_frontend.hpp"

namespace onebit {

enum class Precision { f32, f64 };

std::string to_string(Precision p);
Precision parse_precision(const std::string& text);

/// Hyperparameters. Defaults for values the method leaves open are labeled
/// defaults, not reproductions.
struct TrainingConfig {
    std::size_t epochs = 100;
    std::size_t batch_size = 128;
    double learning_rate = 1e-3;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_epsilon = 1e-8;
    double dropout_rate = 0.3;
    std::uint64_t seed = 0;
    Precision precision = Precision::f32;
    std::size_t hidden_width = 512;
    /// Evaluate the test split after every epoch (otherwise only after the last).
    bool monitor_test = true;

    void validate() const;
};

/// 1-bit measurements and their channels with a seeded 70/30 split.
struct SupervisedDataset {
    std::size_t num_antennas = 0;
    std::size_t pilot_length = 0;
    Eigen::MatrixXd inputs;   // 2MN x S, one vectorized measurement per column
    Eigen::MatrixXd targets;  // 2M x S, raw channels as [Re; Im]
    std::vector<std::size_t> train;
    std::vector<std::size_t> test;
    std::uint64_t shuffle_seed = 0;

    std::size_t size() const noexcept { return static_cast<std::size_t>(inputs.cols()); }
    ChannelVector channel(std::size_t sample) const;
};

SupervisedDataset build_dataset(std::span<const ChannelVector> channels,
                                std::span<const QuantizedMeasurement> measurements, std::uint64_t shuffle_seed,
                                double train_fraction = 0.7);

/// Largest |Re| or |Im| over the given channels.
double preprocess_fit(std::span<const ChannelVector> channels);
double preprocess_fit(const SupervisedDataset& data);

/// Column-major flattening to MN values, then [Re; Im].
std::vector<double> vectorize_measurement(const QuantizedMeasurement& y);
QuantizedMeasurement devectorize_measurement(std::span<const double> v, std::size_t num_antennas,
                                             std::size_t pilot_length);

/// [Re; Im] of a channel, and back.
std::vector<double> channel_to_real(const ChannelVector& h);
ChannelVector channel_from_real(std::span<const double> v);

/// ||target - predicted||^2 / ||target||^2.
double nmse_loss(std::span<const double> predicted, std::span<const double> target);

/// The dense channel estimator: [2MN, L, L, 2M] with ReLU and dropout after
/// both hidden layers.
class MlpEstimator {
  public:
    using Network = std::variant<DenseNetwork<float>, DenseNetwork<double>>;

    MlpEstimator(std::size_t num_antennas, std::size_t pilot_length, std::size_t hidden_width, double dropout_rate,
                 Precision precision);
    /// Wraps an existing network; its widths must be [2MN, L, L, 2M].
    MlpEstimator(std::size_t num_antennas, std::size_t pilot_length, Network network,
                 std::optional<double> norm_scale = std::nullopt);

    std::size_t num_antennas() const noexcept { return M_; }
    std::size_t pilot_length() const noexcept { return N_; }
    std::size_t input_width() const noexcept { return 2 * M_ * N_; }
    std::size_t output_width() const noexcept { return 2 * M_; }
    std::vector<std::size_t> layer_sizes() const;
    double dropout_rate() const;
    Precision precision() const noexcept;

    bool fitted() const noexcept { return norm_scale_.has_value(); }
    double norm_scale() const;
    void set_norm_scale(double scale);

    void initialize(std::uint64_t seed);

    Network& network() noexcept { return net_; }
    const Network& network() const noexcept { return net_; }

    /// Raw network output (normalized units) for one vectorized measurement.
    std::vector<double> forward(std::span<const double> input, Mode mode, std::uint64_t seed = 0) const;
    /// Eval-mode outputs for a batch of columns, in the network's normalized units.
    Eigen::MatrixXd forward_batch(const Eigen::MatrixXd& inputs) const;

  private:
    std::size_t M_;
    std::size_t N_;
    Network net_;
    std::optional<double> norm_scale_;
};

struct EpochRecord {
    std::size_t epoch = 0;
    double train_nmse = 0.0;
    std::optional<double> test_nmse;
};

struct TrainingHistory {
    std::vector<EpochRecord> epochs;
    double initial_train_nmse = 0.0;
};

std::string history_csv(const TrainingHistory& history);

/// Fits norm_scale on the train split, then runs mini-batch ADAM on the
/// batch-mean NMSE. Batches are reshuffled each epoch from config.seed.
TrainingHistory train(MlpEstimator& model, const SupervisedDataset& data, const TrainingConfig& config);

/// Mean NMSE over the given samples (eval mode, denormalized).
double evaluate_nmse(const MlpEstimator& model, const SupervisedDataset& data, std::span<const std::size_t> samples);

ChannelVector predict_channel(const MlpEstimator& model, const QuantizedMeasurement& y);
/// Denormalized eval-mode predictions for the given samples.
std::vector<ChannelVector> predict_channels(const MlpEstimator& model, const SupervisedDataset& data,
                                            std::span<const std::size_t> samples);

/// Hamming-distance lookup over stored (measurement, channel) pairs.
class NearestNeighborEstimator {
  public:
    void add(const QuantizedMeasurement& y, ChannelVector h);
    std::size_t size() const noexcept { return channels_.size(); }
    /// Index of the closest stored signature; ties go to the lowest index.
    std::size_t nearest_index(const QuantizedMeasurement& y) const;
    const ChannelVector& estimate(const QuantizedMeasurement& y) const;

  private:
    std::size_t components_ = 0;
    std::vector<std::vector<std::uint64_t>> signatures_;
    std::vector<ChannelVector> channels_;
};

ChannelVector nearest_neighbor_estimate(std::span<const std::pair<QuantizedMeasurement, ChannelVector>> train_pairs,
                                        const QuantizedMeasurement& y);

/// JSON header {format_version, layer_sizes, dropout_rate, norm_scale, M, N,
/// precision, blob} plus little-endian weights in layer order (W row-major,
/// then b) in the model's precision.
void save_checkpoint(const MlpEstimator& model, const std::filesystem::path& manifest_path);
MlpEstimator load_checkpoint(const std::filesystem::path& manifest_path);

}  // namespace onebit
