#include <fstream>

#include "onebit/binary_io.hpp"
#include "onebit/errors.hpp"
#include "onebit/learning.hpp"

namespace onebit {

namespace {

template <class T>
void write_network(std::ostream& out, const DenseNetwork<T>& net) {
    std::vector<T> buf;
    for (std::size_t l = 0; l < net.num_layers(); ++l) {
        const auto& w = net.weight(l);
        const auto& b = net.bias(l);
        buf.clear();
        for (Eigen::Index i = 0; i < w.rows(); ++i) {
            for (Eigen::Index j = 0; j < w.cols(); ++j) buf.push_back(w(i, j));
        }
        for (Eigen::Index i = 0; i < b.rows(); ++i) buf.push_back(b(i, 0));
        if constexpr (std::is_same_v<T, float>) {
            io::write_f32_le(out, buf);
        } else {
            io::write_f64_le(out, buf);
        }
    }
}

template <class T>
DenseNetwork<T> read_network(const std::vector<std::size_t>& sizes, double dropout, std::span<const std::byte> bytes,
                             const std::string& where) {
    DenseNetwork<T> net(sizes, dropout);
    const std::size_t expected = net.parameter_count() * sizeof(T);
    if (bytes.size() != expected) {
        throw ParseError(where + ": weight blob holds " + std::to_string(bytes.size()) + " bytes, layer sizes need " +
                         std::to_string(expected));
    }
    std::vector<T> values;
    if constexpr (std::is_same_v<T, float>) {
        values = io::read_f32_le(bytes);
    } else {
        values = io::read_f64_le(bytes);
    }
    std::size_t k = 0;
    for (std::size_t l = 0; l < net.num_layers(); ++l) {
        auto& w = net.weight(l);
        auto& b = net.bias(l);
        for (Eigen::Index i = 0; i < w.rows(); ++i) {
            for (Eigen::Index j = 0; j < w.cols(); ++j) w(i, j) = values[k++];
        }
        for (Eigen::Index i = 0; i < b.rows(); ++i) b(i, 0) = values[k++];
    }
    for (const auto v : values) {
        if (!std::isfinite(static_cast<double>(v))) throw ParseError(where + ": non-finite weight");
    }
    return net;
}

}  // namespace

void save_checkpoint(const MlpEstimator& model, const std::filesystem::path& manifest_path) {
    auto blob = manifest_path;
    blob.replace_extension(".bin");
    nlohmann::json header{
        {"format_version", io::format_version()},
        {"layer_sizes", model.layer_sizes()},
        {"dropout_rate", model.dropout_rate()},
        {"norm_scale", model.fitted() ? nlohmann::json(model.norm_scale()) : nlohmann::json(nullptr)},
        {"M", model.num_antennas()},
        {"N", model.pilot_length()},
        {"precision", to_string(model.precision())},
        {"blob", blob.filename().string()},
    };
    if (manifest_path.has_parent_path()) std::filesystem::create_directories(manifest_path.parent_path());
    std::ofstream out(blob, std::ios::binary);
    if (!out) throw Error(blob.string() + ": cannot open for writing");
    std::visit([&](const auto& net) { write_network(out, net); }, model.network());
    if (!out) throw Error(blob.string() + ": write failed");
    io::write_json_file(manifest_path, header);
}

MlpEstimator load_checkpoint(const std::filesystem::path& manifest_path) {
    const std::string where = manifest_path.string();
    const auto header = io::read_json_file(manifest_path);
    io::check_format_version(header, where);
    try {
        const auto sizes = io::require(header, "layer_sizes", where).get<std::vector<std::size_t>>();
        const auto dropout = io::require(header, "dropout_rate", where).get<double>();
        const auto M = io::require(header, "M", where).get<std::size_t>();
        const auto N = io::require(header, "N", where).get<std::size_t>();
        const auto precision = parse_precision(io::require(header, "precision", where).get<std::string>());
        std::optional<double> scale;
        if (const auto& s = io::require(header, "norm_scale", where); !s.is_null()) scale = s.get<double>();
        const auto bytes = io::read_file_bytes(io::blob_path(manifest_path, header));
        MlpEstimator::Network net;
        if (precision == Precision::f32) {
            net = read_network<float>(sizes, dropout, bytes, where);
        } else {
            net = read_network<double>(sizes, dropout, bytes, where);
        }
        return MlpEstimator(M, N, std::move(net), scale);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(where + ": " + e.what());
    } catch (const ConfigError& e) {
        throw ParseError(where + ": " + e.what());
    } catch (const DomainError& e) {
        throw ParseError(where + ": " + e.what());
    }
}

}  // namespace onebit
