#include "onebit/learning.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include "onebit/binary_io.hpp"
#include "onebit/errors.hpp"
#include "onebit/seeding.hpp"

namespace onebit {

namespace {

constexpr Eigen::Index kEvalChunk = 512;

// Gathers the listed columns of `source` into a new matrix of scalar T.
template <class T>
Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic> gather(const Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>& source,
                                                        std::span<const std::size_t> columns) {
    Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic> out(source.rows(), static_cast<Eigen::Index>(columns.size()));
    for (std::size_t i = 0; i < columns.size(); ++i) {
        out.col(static_cast<Eigen::Index>(i)) = source.col(static_cast<Eigen::Index>(columns[i]));
    }
    return out;
}

template <class T>
Eigen::MatrixXd forward_chunked(const DenseNetwork<T>& net, const Eigen::MatrixXd& inputs) {
    Eigen::MatrixXd out(static_cast<Eigen::Index>(net.output_width()), inputs.cols());
    for (Eigen::Index start = 0; start < inputs.cols(); start += kEvalChunk) {
        const Eigen::Index count = std::min(kEvalChunk, inputs.cols() - start);
        const auto chunk = inputs.middleCols(start, count).template cast<T>().eval();
        out.middleCols(start, count) = net.forward(chunk, Mode::eval).template cast<double>();
    }
    return out;
}

template <class T>
void train_network(DenseNetwork<T>& net, const SupervisedDataset& data, double scale, const TrainingConfig& config,
                   TrainingHistory& history) {
    using Matrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;
    const Matrix inputs = data.inputs.cast<T>();
    const Matrix targets = (data.targets / scale).cast<T>();

    const auto split_nmse = [&](std::span<const std::size_t> samples) {
        double total = 0.0;
        for (std::size_t start = 0; start < samples.size(); start += kEvalChunk) {
            const auto chunk = samples.subspan(start, std::min<std::size_t>(kEvalChunk, samples.size() - start));
            const Matrix pred = net.forward(gather<T>(inputs, chunk), Mode::eval);
            total += static_cast<double>(batch_nmse<T>(pred, gather<T>(targets, chunk))) *
                     static_cast<double>(chunk.size());
        }
        return total / static_cast<double>(samples.size());
    };

    history.initial_train_nmse = split_nmse(data.train);
    AdamOptimizer<T> adam(net.parameters(),
                          {config.learning_rate, config.adam_beta1, config.adam_beta2, config.adam_epsilon});
    std::vector<Matrix> grads;
    std::vector<std::size_t> order = data.train;
    for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
        std::mt19937_64 rng(derive_seed(config.seed, {tag_hash("epoch-shuffle"), epoch}));
        std::shuffle(order.begin(), order.end(), rng);
        double weighted = 0.0;
        std::size_t batch_index = 0;
        for (std::size_t start = 0; start < order.size(); start += config.batch_size, ++batch_index) {
            const auto cols = std::span<const std::size_t>(order).subspan(
                start, std::min(config.batch_size, order.size() - start));
            const Matrix xb = gather<T>(inputs, cols);
            const Matrix yb = gather<T>(targets, cols);
            const T loss = net.loss_and_gradient(xb, yb, Mode::train,
                                                 derive_seed(config.seed, {tag_hash("dropout"), epoch, batch_index}),
                                                 grads);
            if (!std::isfinite(static_cast<double>(loss))) {
                throw TrainingError("training loss became non-finite at epoch " + std::to_string(epoch) + ", batch " +
                                        std::to_string(batch_index),
                                    epoch, batch_index);
            }
            adam.step(net.parameters(), grads);
            weighted += static_cast<double>(loss) * static_cast<double>(cols.size());
        }
        EpochRecord rec;
        rec.epoch = epoch;
        rec.train_nmse = weighted / static_cast<double>(order.size());
        if (!data.test.empty() && (config.monitor_test || epoch == config.epochs)) rec.test_nmse = split_nmse(data.test);
        history.epochs.push_back(rec);
    }
}

}  // namespace

std::string to_string(Precision p) { return p == Precision::f32 ? "f32" : "f64"; }

Precision parse_precision(const std::string& text) {
    if (text == "f32") return Precision::f32;
    if (text == "f64") return Precision::f64;
    throw ConfigError("unknown precision '" + text + "' (expected f32 or f64)");
}

void TrainingConfig::validate() const {
    if (epochs < 1) throw ConfigError("epochs must be at least 1");
    if (batch_size < 1) throw ConfigError("batch_size must be at least 1");
    if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) throw ConfigError("learning_rate must be >= 0");
    if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0) || !(adam_beta2 >= 0.0 && adam_beta2 < 1.0)) {
        throw ConfigError("ADAM betas must lie in [0, 1)");
    }
    if (!(adam_epsilon >= 0.0)) throw ConfigError("adam_epsilon must be non-negative");
    if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) throw ConfigError("dropout_rate must lie in [0, 1)");
    if (hidden_width < 1) throw ConfigError("hidden_width must be at least 1");
}

ChannelVector SupervisedDataset::channel(std::size_t sample) const {
    const auto col = targets.col(static_cast<Eigen::Index>(sample));
    return channel_from_real(std::span<const double>(col.data(), static_cast<std::size_t>(col.size())));
}

SupervisedDataset build_dataset(std::span<const ChannelVector> channels,
                                std::span<const QuantizedMeasurement> measurements, std::uint64_t shuffle_seed,
                                double train_fraction) {
    if (channels.empty()) throw DomainError("dataset needs at least one sample");
    if (channels.size() != measurements.size()) throw DomainError("channel and measurement counts differ");
    if (!(train_fraction > 0.0 && train_fraction <= 1.0)) throw DomainError("train fraction must lie in (0, 1]");
    SupervisedDataset d;
    d.num_antennas = channels[0].size();
    d.pilot_length = measurements[0].pilot_length();
    d.shuffle_seed = shuffle_seed;
    const auto n = channels.size();
    const auto in_w = static_cast<Eigen::Index>(2 * d.num_antennas * d.pilot_length);
    const auto out_w = static_cast<Eigen::Index>(2 * d.num_antennas);
    d.inputs.resize(in_w, static_cast<Eigen::Index>(n));
    d.targets.resize(out_w, static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) {
        if (channels[i].size() != d.num_antennas || measurements[i].num_antennas() != d.num_antennas ||
            measurements[i].pilot_length() != d.pilot_length) {
            throw DomainError("sample " + std::to_string(i) + " has inconsistent dimensions");
        }
        const auto x = vectorize_measurement(measurements[i]);
        const auto t = channel_to_real(channels[i]);
        d.inputs.col(static_cast<Eigen::Index>(i)) = Eigen::Map<const Eigen::VectorXd>(x.data(), in_w);
        d.targets.col(static_cast<Eigen::Index>(i)) = Eigen::Map<const Eigen::VectorXd>(t.data(), out_w);
    }

    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    std::mt19937_64 rng(shuffle_seed);
    std::shuffle(perm.begin(), perm.end(), rng);
    auto n_train = static_cast<std::size_t>(std::llround(train_fraction * static_cast<double>(n)));
    n_train = std::clamp<std::size_t>(n_train, 1, n);
    if (train_fraction < 1.0 && n >= 2) n_train = std::min(n_train, n - 1);
    d.train.assign(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(n_train));
    d.test.assign(perm.begin() + static_cast<std::ptrdiff_t>(n_train), perm.end());
    std::sort(d.train.begin(), d.train.end());
    std::sort(d.test.begin(), d.test.end());
    return d;
}

double preprocess_fit(std::span<const ChannelVector> channels) {
    if (channels.empty()) throw DomainError("preprocess_fit needs a non-empty training split");
    double scale = 0.0;
    for (const auto& h : channels) {
        for (const auto& z : h.entries) scale = std::max({scale, std::abs(z.real()), std::abs(z.imag())});
    }
    if (!(scale > 0.0)) throw DomainError("training channels are all zero; cannot normalize");
    return scale;
}

double preprocess_fit(const SupervisedDataset& data) {
    if (data.train.empty()) throw DomainError("preprocess_fit needs a non-empty training split");
    double scale = 0.0;
    for (auto i : data.train) scale = std::max(scale, data.targets.col(static_cast<Eigen::Index>(i)).cwiseAbs().maxCoeff());
    if (!(scale > 0.0)) throw DomainError("training channels are all zero; cannot normalize");
    return scale;
}

std::vector<double> vectorize_measurement(const QuantizedMeasurement& y) {
    const std::size_t mn = y.num_antennas() * y.pilot_length();
    const auto c = y.components();
    std::vector<double> v(2 * mn);
    for (std::size_t e = 0; e < mn; ++e) {
        v[e] = c[2 * e];
        v[mn + e] = c[2 * e + 1];
    }
    return v;
}

QuantizedMeasurement devectorize_measurement(std::span<const double> v, std::size_t num_antennas,
                                             std::size_t pilot_length) {
    const std::size_t mn = num_antennas * pilot_length;
    if (v.size() != 2 * mn) throw DomainError("vector length does not match 2MN");
    std::vector<std::int8_t> c(2 * mn);
    for (std::size_t e = 0; e < mn; ++e) {
        c[2 * e] = static_cast<std::int8_t>(v[e]);
        c[2 * e + 1] = static_cast<std::int8_t>(v[mn + e]);
    }
    return QuantizedMeasurement(num_antennas, pilot_length, std::move(c));
}

std::vector<double> channel_to_real(const ChannelVector& h) {
    const std::size_t M = h.size();
    std::vector<double> v(2 * M);
    for (std::size_t m = 0; m < M; ++m) {
        v[m] = h[m].real();
        v[M + m] = h[m].imag();
    }
    return v;
}

ChannelVector channel_from_real(std::span<const double> v) {
    if (v.size() % 2 != 0) throw DomainError("real channel representation must have even length");
    const std::size_t M = v.size() / 2;
    ChannelVector h;
    h.entries.resize(M);
    for (std::size_t m = 0; m < M; ++m) h.entries[m] = Complex(v[m], v[M + m]);
    return h;
}

double nmse_loss(std::span<const double> predicted, std::span<const double> target) {
    if (predicted.size() != target.size()) throw DomainError("nmse_loss needs equal lengths");
    double num = 0.0;
    double den = 0.0;
    for (std::size_t i = 0; i < target.size(); ++i) {
        const double d = target[i] - predicted[i];
        num += d * d;
        den += target[i] * target[i];
    }
    if (den == 0.0) throw DomainError("nmse_loss target is all-zero");
    return num / den;
}

MlpEstimator::MlpEstimator(std::size_t num_antennas, std::size_t pilot_length, std::size_t hidden_width,
                           double dropout_rate, Precision precision)
    : M_(num_antennas), N_(pilot_length) {
    if (M_ == 0 || N_ == 0) throw DomainError("estimator needs M >= 1 and N >= 1");
    if (hidden_width == 0) throw DomainError("hidden width must be positive");
    std::vector<std::size_t> sizes{input_width(), hidden_width, hidden_width, output_width()};
    if (precision == Precision::f32) {
        net_ = DenseNetwork<float>(sizes, dropout_rate);
    } else {
        net_ = DenseNetwork<double>(sizes, dropout_rate);
    }
}

MlpEstimator::MlpEstimator(std::size_t num_antennas, std::size_t pilot_length, Network network,
                           std::optional<double> norm_scale)
    : M_(num_antennas), N_(pilot_length), net_(std::move(network)) {
    const auto sizes = layer_sizes();
    if (sizes.size() != 4 || sizes[0] != input_width() || sizes[3] != output_width() || sizes[1] != sizes[2]) {
        throw DomainError("estimator network must have widths [2MN, L, L, 2M]");
    }
    if (norm_scale) set_norm_scale(*norm_scale);
}

std::vector<std::size_t> MlpEstimator::layer_sizes() const {
    return std::visit([](const auto& n) { return n.layer_sizes(); }, net_);
}

double MlpEstimator::dropout_rate() const {
    return std::visit([](const auto& n) { return n.dropout_rate(); }, net_);
}

Precision MlpEstimator::precision() const noexcept {
    return std::holds_alternative<DenseNetwork<float>>(net_) ? Precision::f32 : Precision::f64;
}

double MlpEstimator::norm_scale() const {
    if (!norm_scale_) throw StateError("estimator normalization has not been fitted");
    return *norm_scale_;
}

void MlpEstimator::set_norm_scale(double scale) {
    if (!(scale > 0.0) || !std::isfinite(scale)) throw DomainError("norm_scale must be positive and finite");
    norm_scale_ = scale;
}

void MlpEstimator::initialize(std::uint64_t seed) {
    std::visit([seed](auto& n) { n.initialize(seed); }, net_);
}

std::vector<double> MlpEstimator::forward(std::span<const double> input, Mode mode, std::uint64_t seed) const {
    if (input.size() != input_width()) {
        throw DomainError("estimator expects input width " + std::to_string(input_width()) + ", got " +
                          std::to_string(input.size()));
    }
    return std::visit(
        [&](const auto& n) {
            using T = typename std::decay_t<decltype(n)>::Matrix::Scalar;
            const auto x = Eigen::Map<const Eigen::VectorXd>(input.data(), static_cast<Eigen::Index>(input.size()))
                               .cast<T>()
                               .eval();
            const auto out = n.forward(x, mode, seed);
            std::vector<double> v(static_cast<std::size_t>(out.size()));
            for (Eigen::Index i = 0; i < out.size(); ++i) v[static_cast<std::size_t>(i)] = static_cast<double>(out(i));
            return v;
        },
        net_);
}

Eigen::MatrixXd MlpEstimator::forward_batch(const Eigen::MatrixXd& inputs) const {
    return std::visit([&](const auto& n) { return forward_chunked(n, inputs); }, net_);
}

std::string history_csv(const TrainingHistory& history) {
    std::ostringstream out;
    out << "epoch,train_nmse,test_nmse\n";
    for (const auto& r : history.epochs) {
        out << r.epoch << ',' << io::format_double(r.train_nmse) << ','
            << (r.test_nmse ? io::format_double(*r.test_nmse) : std::string{}) << '\n';
    }
    return out.str();
}

TrainingHistory train(MlpEstimator& model, const SupervisedDataset& data, const TrainingConfig& config) {
    config.validate();
    if (data.num_antennas != model.num_antennas() || data.pilot_length != model.pilot_length()) {
        throw DomainError("dataset geometry does not match the estimator");
    }
    if (data.train.empty()) throw DomainError("training split is empty");
    const double scale = preprocess_fit(data);
    model.set_norm_scale(scale);
    TrainingHistory history;
    std::visit([&](auto& net) { train_network(net, data, scale, config, history); }, model.network());
    return history;
}

std::vector<ChannelVector> predict_channels(const MlpEstimator& model, const SupervisedDataset& data,
                                            std::span<const std::size_t> samples) {
    const double scale = model.norm_scale();
    Eigen::MatrixXd inputs(data.inputs.rows(), static_cast<Eigen::Index>(samples.size()));
    for (std::size_t i = 0; i < samples.size(); ++i) {
        inputs.col(static_cast<Eigen::Index>(i)) = data.inputs.col(static_cast<Eigen::Index>(samples[i]));
    }
    const Eigen::MatrixXd out = model.forward_batch(inputs) * scale;
    std::vector<ChannelVector> result;
    result.reserve(samples.size());
    for (Eigen::Index i = 0; i < out.cols(); ++i) {
        result.push_back(channel_from_real(std::span<const double>(out.col(i).data(), static_cast<std::size_t>(out.rows()))));
    }
    return result;
}

double evaluate_nmse(const MlpEstimator& model, const SupervisedDataset& data, std::span<const std::size_t> samples) {
    if (samples.empty()) throw DomainError("evaluate_nmse needs at least one sample");
    const auto predictions = predict_channels(model, data, samples);
    double total = 0.0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const auto t = channel_to_real(data.channel(samples[i]));
        const auto p = channel_to_real(predictions[i]);
        total += nmse_loss(p, t);
    }
    return total / static_cast<double>(samples.size());
}

ChannelVector predict_channel(const MlpEstimator& model, const QuantizedMeasurement& y) {
    const double scale = model.norm_scale();
    if (y.num_antennas() != model.num_antennas() || y.pilot_length() != model.pilot_length()) {
        throw DomainError("measurement dimensions do not match the estimator");
    }
    auto out = model.forward(vectorize_measurement(y), Mode::eval);
    for (auto& v : out) v *= scale;
    return channel_from_real(out);
}

void NearestNeighborEstimator::add(const QuantizedMeasurement& y, ChannelVector h) {
    const auto c = y.components();
    if (channels_.empty()) {
        components_ = c.size();
    } else if (c.size() != components_) {
        throw DomainError("nearest-neighbor signatures must share dimensions");
    }
    std::vector<std::uint64_t> sig((c.size() + 63) / 64, 0);
    for (std::size_t i = 0; i < c.size(); ++i) {
        if (c[i] < 0) sig[i / 64] |= std::uint64_t{1} << (i % 64);
    }
    signatures_.push_back(std::move(sig));
    channels_.push_back(std::move(h));
}

std::size_t NearestNeighborEstimator::nearest_index(const QuantizedMeasurement& y) const {
    if (channels_.empty()) throw StateError("nearest-neighbor estimator has no stored pairs");
    const auto c = y.components();
    if (c.size() != components_) throw DomainError("measurement dimensions do not match stored signatures");
    std::vector<std::uint64_t> sig((c.size() + 63) / 64, 0);
    for (std::size_t i = 0; i < c.size(); ++i) {
        if (c[i] < 0) sig[i / 64] |= std::uint64_t{1} << (i % 64);
    }
    std::size_t best = 0;
    int best_distance = std::numeric_limits<int>::max();
    for (std::size_t k = 0; k < signatures_.size(); ++k) {
        int d = 0;
        for (std::size_t w = 0; w < sig.size(); ++w) d += std::popcount(sig[w] ^ signatures_[k][w]);
        if (d < best_distance) {
            best_distance = d;
            best = k;
            if (d == 0) break;
        }
    }
    return best;
}

const ChannelVector& NearestNeighborEstimator::estimate(const QuantizedMeasurement& y) const {
    return channels_[nearest_index(y)];
}

ChannelVector nearest_neighbor_estimate(std::span<const std::pair<QuantizedMeasurement, ChannelVector>> train_pairs,
                                        const QuantizedMeasurement& y) {
    if (train_pairs.empty()) throw DomainError("nearest_neighbor_estimate needs at least one stored pair");
    NearestNeighborEstimator nn;
    for (const auto& [m, h] : train_pairs) nn.add(m, h);
    return nn.estimate(y);
}

}  // namespace onebit
