#pragma once

#include <concepts>
#include <cstddef>
#include <cstdint>
#include <vector>

#include <Eigen/Core>

namespace onebit {

enum class Mode { train, eval };

/// Fully connected regression network: every layer but the last is
/// affine -> ReLU -> inverted dropout; the last layer is affine.
/// Samples are columns.
template <std::floating_point T>
class DenseNetwork {
  public:
    using Matrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;

    DenseNetwork() = default;
    DenseNetwork(std::vector<std::size_t> layer_sizes, double dropout_rate);

    /// Weights uniform in +-sqrt(6 / (fan_in + fan_out)), biases zero.
    void initialize(std::uint64_t seed);

    const std::vector<std::size_t>& layer_sizes() const noexcept { return sizes_; }
    std::size_t num_layers() const noexcept { return sizes_.size() - 1; }
    std::size_t input_width() const noexcept { return sizes_.front(); }
    std::size_t output_width() const noexcept { return sizes_.back(); }
    double dropout_rate() const noexcept { return dropout_; }

    /// Parameters in layer order: W0, b0, W1, b1, ... ; W_i is (out x in),
    /// b_i is (out x 1).
    std::vector<Matrix>& parameters() noexcept { return params_; }
    const std::vector<Matrix>& parameters() const noexcept { return params_; }
    Matrix& weight(std::size_t layer) { return params_[2 * layer]; }
    Matrix& bias(std::size_t layer) { return params_[2 * layer + 1]; }
    const Matrix& weight(std::size_t layer) const { return params_[2 * layer]; }
    const Matrix& bias(std::size_t layer) const { return params_[2 * layer + 1]; }
    std::size_t parameter_count() const noexcept;

    /// `dropout_seed` is ignored in eval mode.
    Matrix forward(const Matrix& inputs, Mode mode, std::uint64_t dropout_seed = 0) const;

    /// Batch-mean NMSE of forward(inputs) against targets, and its gradient
    /// with respect to every parameter (same layout as parameters()).
    T loss_and_gradient(const Matrix& inputs, const Matrix& targets, Mode mode, std::uint64_t dropout_seed,
                        std::vector<Matrix>& gradients) const;

    /// Inverted-dropout scale mask (entries 0 or 1 / (1 - p)) for one hidden layer.
    Matrix dropout_mask(std::size_t layer, Eigen::Index rows, Eigen::Index cols, std::uint64_t dropout_seed) const;

  private:
    std::vector<std::size_t> sizes_;
    double dropout_ = 0.0;
    std::vector<Matrix> params_;
};

/// Batch-mean of ||t_i - p_i||^2 / ||t_i||^2 over columns.
template <std::floating_point T>
T batch_nmse(const Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>& predicted,
             const Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>& targets);

struct AdamSettings {
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

/// ADAM with bias correction over a list of parameter matrices.
template <std::floating_point T>
class AdamOptimizer {
  public:
    using Matrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;

    AdamOptimizer(const std::vector<Matrix>& like, AdamSettings settings);

    void step(std::vector<Matrix>& params, const std::vector<Matrix>& grads);
    std::size_t steps_taken() const noexcept { return t_; }

  private:
    AdamSettings settings_;
    std::vector<Matrix> m_;
    std::vector<Matrix> v_;
    std::size_t t_ = 0;
};

extern template class DenseNetwork<float>;
extern template class DenseNetwork<double>;
extern template class AdamOptimizer<float>;
extern template class AdamOptimizer<double>;

}  // namespace onebit
