#include "onebit/network.hpp"

#include <cmath>
#include <random>
#include <string>

#include "onebit/errors.hpp"
#include "onebit/seeding.hpp"

namespace onebit {

template <std::floating_point T>
DenseNetwork<T>::DenseNetwork(std::vector<std::size_t> layer_sizes, double dropout_rate)
    : sizes_(std::move(layer_sizes)), dropout_(dropout_rate) {
    if (sizes_.size() < 2) throw DomainError("network needs an input and an output width");
    for (auto s : sizes_) {
        if (s == 0) throw DomainError("layer widths must be positive");
    }
    if (!(dropout_ >= 0.0 && dropout_ < 1.0)) throw DomainError("dropout rate must lie in [0, 1)");
    params_.reserve(2 * num_layers());
    for (std::size_t l = 0; l < num_layers(); ++l) {
        params_.push_back(Matrix::Zero(static_cast<Eigen::Index>(sizes_[l + 1]), static_cast<Eigen::Index>(sizes_[l])));
        params_.push_back(Matrix::Zero(static_cast<Eigen::Index>(sizes_[l + 1]), 1));
    }
}

template <std::floating_point T>
void DenseNetwork<T>::initialize(std::uint64_t seed) {
    for (std::size_t l = 0; l < num_layers(); ++l) {
        std::mt19937_64 rng(derive_seed(seed, {l}));
        const double limit = std::sqrt(6.0 / static_cast<double>(sizes_[l] + sizes_[l + 1]));
        std::uniform_real_distribution<double> dist(-limit, limit);
        auto& w = weight(l);
        for (Eigen::Index j = 0; j < w.cols(); ++j) {
            for (Eigen::Index i = 0; i < w.rows(); ++i) w(i, j) = static_cast<T>(dist(rng));
        }
        bias(l).setZero();
    }
}

template <std::floating_point T>
std::size_t DenseNetwork<T>::parameter_count() const noexcept {
    std::size_t n = 0;
    for (const auto& p : params_) n += static_cast<std::size_t>(p.size());
    return n;
}

template <std::floating_point T>
typename DenseNetwork<T>::Matrix DenseNetwork<T>::dropout_mask(std::size_t layer, Eigen::Index rows, Eigen::Index cols,
                                                               std::uint64_t dropout_seed) const {
    Matrix mask(rows, cols);
    if (dropout_ == 0.0) {
        mask.setOnes();
        return mask;
    }
    std::mt19937_64 rng(derive_seed(dropout_seed, {layer}));
    std::uniform_real_distribution<double> uniform(0.0, 1.0);
    const T keep = static_cast<T>(1.0 / (1.0 - dropout_));
    T* data = mask.data();
    for (Eigen::Index i = 0; i < mask.size(); ++i) data[i] = uniform(rng) >= dropout_ ? keep : T(0);
    return mask;
}

template <std::floating_point T>
typename DenseNetwork<T>::Matrix DenseNetwork<T>::forward(const Matrix& inputs, Mode mode,
                                                          std::uint64_t dropout_seed) const {
    if (static_cast<std::size_t>(inputs.rows()) != input_width()) {
        throw DomainError("network expects input width " + std::to_string(input_width()) + ", got " +
                          std::to_string(inputs.rows()));
    }
    Matrix a = inputs;
    for (std::size_t l = 0; l < num_layers(); ++l) {
        Matrix z = weight(l) * a;
        z.colwise() += bias(l).col(0);
        if (l + 1 == num_layers()) return z;
        a = z.cwiseMax(T(0));
        if (mode == Mode::train && dropout_ > 0.0) a = a.cwiseProduct(dropout_mask(l, a.rows(), a.cols(), dropout_seed));
    }
    return a;
}

template <std::floating_point T>
T batch_nmse(const Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>& predicted,
             const Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>& targets) {
    if (predicted.rows() != targets.rows() || predicted.cols() != targets.cols()) {
        throw DomainError("prediction and target batches differ in shape");
    }
    if (targets.cols() == 0) throw DomainError("empty batch");
    T total = 0;
    for (Eigen::Index i = 0; i < targets.cols(); ++i) {
        const T denom = targets.col(i).squaredNorm();
        if (denom == T(0)) throw DomainError("NMSE target " + std::to_string(i) + " is all-zero");
        total += (targets.col(i) - predicted.col(i)).squaredNorm() / denom;
    }
    return total / static_cast<T>(targets.cols());
}

template <std::floating_point T>
T DenseNetwork<T>::loss_and_gradient(const Matrix& inputs, const Matrix& targets, Mode mode,
                                     std::uint64_t dropout_seed, std::vector<Matrix>& gradients) const {
    if (static_cast<std::size_t>(inputs.rows()) != input_width()) {
        throw DomainError("network expects input width " + std::to_string(input_width()));
    }
    if (static_cast<std::size_t>(targets.rows()) != output_width() || targets.cols() != inputs.cols()) {
        throw DomainError("target batch shape does not match the network output");
    }
    const std::size_t layers = num_layers();
    const bool drop = mode == Mode::train && dropout_ > 0.0;

    std::vector<Matrix> acts(layers);        // input to layer l
    std::vector<Matrix> pre(layers - 1);     // hidden pre-activations
    std::vector<Matrix> masks(drop ? layers - 1 : 0);
    acts[0] = inputs;
    Matrix out;
    for (std::size_t l = 0; l < layers; ++l) {
        Matrix z = weight(l) * acts[l];
        z.colwise() += bias(l).col(0);
        if (l + 1 == layers) {
            out = std::move(z);
            break;
        }
        Matrix a = z.cwiseMax(T(0));
        if (drop) {
            masks[l] = dropout_mask(l, a.rows(), a.cols(), dropout_seed);
            a = a.cwiseProduct(masks[l]);
        }
        pre[l] = std::move(z);
        acts[l + 1] = std::move(a);
    }

    const auto batch = inputs.cols();
    Matrix delta = out - targets;
    T loss = 0;
    for (Eigen::Index i = 0; i < batch; ++i) {
        const T denom = targets.col(i).squaredNorm();
        if (denom == T(0)) throw DomainError("NMSE target " + std::to_string(i) + " is all-zero");
        loss += delta.col(i).squaredNorm() / denom;
        delta.col(i) *= T(2) / (denom * static_cast<T>(batch));
    }
    loss /= static_cast<T>(batch);

    gradients.resize(params_.size());
    for (std::size_t l = layers; l-- > 0;) {
        gradients[2 * l].noalias() = delta * acts[l].transpose();
        gradients[2 * l + 1] = delta.rowwise().sum();
        if (l == 0) break;
        Matrix back = weight(l).transpose() * delta;
        back = back.cwiseProduct((pre[l - 1].array() > T(0)).template cast<T>().matrix());
        if (drop) back = back.cwiseProduct(masks[l - 1]);
        delta = std::move(back);
    }
    return loss;
}

template <std::floating_point T>
AdamOptimizer<T>::AdamOptimizer(const std::vector<Matrix>& like, AdamSettings settings) : settings_(settings) {
    if (!(settings_.learning_rate >= 0.0)) throw DomainError("learning rate must be non-negative");
    for (const auto& p : like) {
        m_.push_back(Matrix::Zero(p.rows(), p.cols()));
        v_.push_back(Matrix::Zero(p.rows(), p.cols()));
    }
}

template <std::floating_point T>
void AdamOptimizer<T>::step(std::vector<Matrix>& params, const std::vector<Matrix>& grads) {
    if (params.size() != m_.size() || grads.size() != m_.size()) throw DomainError("ADAM parameter list mismatch");
    ++t_;
    const T b1 = static_cast<T>(settings_.beta1);
    const T b2 = static_cast<T>(settings_.beta2);
    const T lr = static_cast<T>(settings_.learning_rate);
    const T eps = static_cast<T>(settings_.epsilon);
    const T c1 = static_cast<T>(1.0 - std::pow(settings_.beta1, static_cast<double>(t_)));
    const T c2 = static_cast<T>(1.0 - std::pow(settings_.beta2, static_cast<double>(t_)));
    for (std::size_t i = 0; i < params.size(); ++i) {
        auto m = m_[i].array();
        auto v = v_[i].array();
        const auto g = grads[i].array();
        m = b1 * m + (T(1) - b1) * g;
        v = b2 * v + (T(1) - b2) * g.square();
        params[i].array() -= lr * (m / c1) / ((v / c2).sqrt() + eps);
    }
}

template class DenseNetwork<float>;
template class DenseNetwork<double>;
template class AdamOptimizer<float>;
template class AdamOptimizer<double>;
template float batch_nmse<float>(const Eigen::MatrixXf&, const Eigen::MatrixXf&);
template double batch_nmse<double>(const Eigen::MatrixXd&, const Eigen::MatrixXd&);

}  // namespace onebit
