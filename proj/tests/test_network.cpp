#include <doctest.h>

#include <cmath>

#include "onebit/errors.hpp"
#include "onebit/network.hpp"
#include "test_support.hpp"

using namespace onebit;
using onebit::testing::Gen;
using MatD = Eigen::MatrixXd;

namespace {
MatD random_matrix(Gen& g, Eigen::Index r, Eigen::Index c) {
    MatD m(r, c);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = g.normal();
    return m;
}

// Relative error between analytic and central-difference gradients over all parameters.
double gradient_check(DenseNetwork<double>& net, const MatD& x, const MatD& t, Mode mode, std::uint64_t seed) {
    std::vector<MatD> grads;
    net.loss_and_gradient(x, t, mode, seed, grads);
    const double h = 1e-5;
    double diff2 = 0.0;
    double norm2 = 0.0;
    std::vector<MatD> scratch;
    for (std::size_t p = 0; p < net.parameters().size(); ++p) {
        auto& param = net.parameters()[p];
        for (Eigen::Index i = 0; i < param.size(); ++i) {
            const double keep = param.data()[i];
            param.data()[i] = keep + h;
            const double up = net.loss_and_gradient(x, t, mode, seed, scratch);
            param.data()[i] = keep - h;
            const double down = net.loss_and_gradient(x, t, mode, seed, scratch);
            param.data()[i] = keep;
            const double numeric = (up - down) / (2 * h);
            const double analytic = grads[p].data()[i];
            diff2 += (numeric - analytic) * (numeric - analytic);
            norm2 += (numeric * numeric + analytic * analytic);
        }
    }
    return std::sqrt(diff2 / norm2);
}
}  // namespace

TEST_CASE("layer shapes and initialization") {
    DenseNetwork<double> net({6, 10, 10, 4}, 0.2);
    CHECK(net.num_layers() == 3);
    CHECK(net.parameter_count() == 6 * 10 + 10 + 10 * 10 + 10 + 10 * 4 + 4);
    net.initialize(5);
    for (std::size_t l = 0; l < 3; ++l) {
        const double limit = std::sqrt(6.0 / double(net.layer_sizes()[l] + net.layer_sizes()[l + 1]));
        CHECK(net.weight(l).cwiseAbs().maxCoeff() <= limit);
        CHECK(net.weight(l).cwiseAbs().maxCoeff() > 0.5 * limit);
        CHECK(net.bias(l).isZero());
    }
    DenseNetwork<double> same({6, 10, 10, 4}, 0.2);
    same.initialize(5);
    CHECK(same.weight(1) == net.weight(1));
    CHECK_THROWS_AS(DenseNetwork<double>({3}, 0.0), DomainError);
    CHECK_THROWS_AS(DenseNetwork<double>({3, 0, 2}, 0.0), DomainError);
    CHECK_THROWS_AS(DenseNetwork<double>({3, 2}, 1.0), DomainError);
}

TEST_CASE("forward examples") {
    DenseNetwork<double> zero({8, 5, 5, 3}, 0.3);
    Gen g(1);
    const MatD x = random_matrix(g, 8, 4);
    CHECK(zero.forward(x, Mode::eval).isZero());
    CHECK(zero.forward(x, Mode::train, 9).isZero());

    // One neuron per layer, weight 1, bias 0: input -2 is cut off by the ReLU.
    DenseNetwork<double> relu({1, 1, 1}, 0.0);
    relu.weight(0)(0, 0) = 1.0;
    relu.weight(1)(0, 0) = 1.0;
    MatD in(1, 2);
    in << -2.0, 3.0;
    const MatD out = relu.forward(in, Mode::eval);
    CHECK(out(0, 0) == 0.0);
    CHECK(out(0, 1) == 3.0);

    DenseNetwork<double> nodrop({8, 16, 16, 3}, 0.0);
    nodrop.initialize(2);
    CHECK(nodrop.forward(x, Mode::train, 77) == nodrop.forward(x, Mode::eval));

    DenseNetwork<double> drop({8, 16, 16, 3}, 0.5);
    drop.initialize(2);
    CHECK(drop.forward(x, Mode::train, 77) == drop.forward(x, Mode::train, 77));
    CHECK(drop.forward(x, Mode::train, 77) != drop.forward(x, Mode::train, 78));
    CHECK_THROWS_AS(drop.forward(random_matrix(g, 7, 1), Mode::eval), DomainError);
}

TEST_CASE("analytic gradients match central differences") {
    Gen g(2);
    for (int t = 0; t < 12; ++t) {
        const std::size_t in = g.index(1, 12);
        const std::size_t hidden = g.index(2, 32);
        const std::size_t out = g.index(1, 8);
        DenseNetwork<double> net({in, hidden, hidden, out}, 0.0);
        net.initialize(static_cast<std::uint64_t>(t));
        for (auto& b : net.parameters()) {
            if (b.cols() == 1) b = random_matrix(g, b.rows(), 1) * 0.1;
        }
        const auto batch = static_cast<Eigen::Index>(g.index(1, 6));
        const MatD x = random_matrix(g, static_cast<Eigen::Index>(in), batch);
        const MatD y = random_matrix(g, static_cast<Eigen::Index>(out), batch);
        INFO("net " << t << " widths " << in << "/" << hidden << "/" << out);
        CHECK(gradient_check(net, x, y, Mode::eval, 0) < 1e-4);
    }
}

TEST_CASE("gradients include the dropout mask in train mode") {
    Gen g(3);
    DenseNetwork<double> net({5, 12, 12, 3}, 0.4);
    net.initialize(8);
    const MatD x = random_matrix(g, 5, 4);
    const MatD y = random_matrix(g, 3, 4);
    CHECK(gradient_check(net, x, y, Mode::train, 1234) < 1e-4);
}

TEST_CASE("loss is the batch-mean NMSE and rejects zero targets") {
    Gen g(4);
    DenseNetwork<double> net({3, 4, 2}, 0.0);
    net.initialize(1);
    const MatD x = random_matrix(g, 3, 5);
    MatD t = random_matrix(g, 2, 5);
    std::vector<MatD> grads;
    const double loss = net.loss_and_gradient(x, t, Mode::eval, 0, grads);
    CHECK(loss == doctest::Approx(batch_nmse<double>(net.forward(x, Mode::eval), t)));
    t.col(2).setZero();
    CHECK_THROWS_AS(net.loss_and_gradient(x, t, Mode::eval, 0, grads), DomainError);
}

TEST_CASE("inverted dropout preserves the expected activation") {
    DenseNetwork<double> net({6, 32, 4}, 0.3);
    net.initialize(4);
    Gen g(5);
    const MatD x = random_matrix(g, 6, 1);
    const MatD eval = net.forward(x, Mode::eval);
    MatD mean = MatD::Zero(4, 1);
    const int draws = 10000;
    for (int k = 0; k < draws; ++k) mean += net.forward(x, Mode::train, static_cast<std::uint64_t>(k));
    mean /= draws;
    CHECK((mean - eval).norm() / eval.norm() < 0.01);

    const auto mask = net.dropout_mask(0, 100, 100, 3);
    CHECK(mask.mean() == doctest::Approx(1.0).epsilon(0.01));
    for (Eigen::Index i = 0; i < mask.size(); ++i) {
        const double v = mask.data()[i];
        CHECK((v == 0.0 || v == doctest::Approx(1.0 / 0.7)));
    }
}

TEST_CASE("ADAM first step moves each parameter by exactly the learning rate") {
    for (double grad_scale : {1e-6, 0.03, 1.0, 250.0}) {
        // loss = c (w - 1)^2 from w = 0: gradient -2c
        std::vector<MatD> w{MatD::Zero(1, 1)};
        AdamOptimizer<double> adam(w, {0.1, 0.9, 0.999, 0.0});
        std::vector<MatD> g{MatD::Constant(1, 1, -2.0 * grad_scale)};
        adam.step(w, g);
        CHECK(w[0](0, 0) == doctest::Approx(0.1).epsilon(1e-12));
    }
    std::vector<MatD> w{MatD::Zero(1, 1)};
    AdamOptimizer<double> adam(w, AdamSettings{0.1});
    std::vector<MatD> g{MatD::Constant(1, 1, -3.0)};
    adam.step(w, g);
    CHECK(w[0](0, 0) == doctest::Approx(0.1).epsilon(1e-8));
    CHECK(adam.steps_taken() == 1);
}

TEST_CASE("ADAM with zero learning rate leaves parameters unchanged") {
    Gen g(6);
    std::vector<MatD> w{random_matrix(g, 3, 3), random_matrix(g, 3, 1)};
    const auto before = w;
    AdamOptimizer<double> adam(w, AdamSettings{0.0});
    for (int k = 0; k < 20; ++k) {
        std::vector<MatD> grads{random_matrix(g, 3, 3), random_matrix(g, 3, 1)};
        adam.step(w, grads);
    }
    CHECK(w[0] == before[0]);
    CHECK(w[1] == before[1]);
}

TEST_CASE("ADAM converges on a quadratic bowl") {
    std::vector<MatD> w{MatD::Constant(2, 1, 5.0)};
    AdamOptimizer<double> adam(w, AdamSettings{0.05});
    for (int k = 0; k < 2000; ++k) {
        std::vector<MatD> g{2.0 * (w[0] - MatD::Constant(2, 1, -1.0))};
        adam.step(w, g);
    }
    CHECK((w[0] - MatD::Constant(2, 1, -1.0)).norm() < 1e-3);
}

TEST_CASE("float and double networks agree to single precision") {
    DenseNetwork<double> d({4, 16, 16, 2}, 0.0);
    DenseNetwork<float> f({4, 16, 16, 2}, 0.0);
    d.initialize(3);
    f.initialize(3);
    Gen g(7);
    const MatD x = random_matrix(g, 4, 3);
    const MatD yd = d.forward(x, Mode::eval);
    const MatD yf = f.forward(x.cast<float>(), Mode::eval).cast<double>();
    CHECK((yd - yf).norm() < 1e-5 * (1 + yd.norm()));
}
