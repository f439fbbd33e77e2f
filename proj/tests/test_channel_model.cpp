#include <doctest.h>

#include <cmath>
#include <cstring>
#include <fstream>

#include "onebit/binary_io.hpp"
#include "onebit/channel_model.hpp"
#include "onebit/errors.hpp"
#include "test_support.hpp"

using namespace onebit;
using onebit::testing::Gen;
using onebit::testing::make_channel;
using onebit::testing::max_abs_diff;

namespace {
const Complex kJ{0.0, 1.0};

void check_close(const ChannelVector& h, const std::vector<Complex>& expected, double tol = 1e-12) {
    REQUIRE(h.size() == expected.size());
    for (std::size_t m = 0; m < h.size(); ++m) CHECK(std::abs(h[m] - expected[m]) < tol);
}
}  // namespace

TEST_CASE("array_response examples") {
    check_close(array_response({4, 0.5}, kPi / 2), {1, 1, 1, 1});
    check_close(array_response({2, 0.5}, 0.0), {1, -1});
    check_close(array_response({3, 0.5}, kPi / 3), {1, kJ, -1});
}

TEST_CASE("array_response rejects angles outside [0, pi)") {
    CHECK_THROWS_AS(array_response({4, 0.5}, -1e-9), DomainError);
    CHECK_THROWS_AS(array_response({4, 0.5}, kPi), DomainError);
    CHECK_THROWS_AS(array_response({4, 0.5}, std::nan("")), DomainError);
    CHECK_THROWS_AS(array_response({0, 0.5}, 1.0), DomainError);
    CHECK_THROWS_AS(array_response({4, 0.0}, 1.0), DomainError);
}

TEST_CASE("array_response entries have unit magnitude") {
    Gen g(11);
    for (int t = 0; t < 200; ++t) {
        const ArrayGeometry geo{g.index(1, 64), g.uniform(0.1, 2.0)};
        const auto a = array_response(geo, g.aoa());
        for (const auto& z : a.entries) CHECK(std::abs(std::abs(z) - 1.0) < 1e-12);
    }
}

TEST_CASE("synthesize_channel examples") {
    const std::vector<PathComponent> single{{1.0, kPi / 2}};
    check_close(synthesize_channel({4, 0.5}, single), {1, 1, 1, 1});

    const std::vector<PathComponent> cancel{{1.0, 0.7}, {-1.0, 0.7}};
    CHECK(synthesize_channel({5, 0.5}, cancel).is_zero());

    const std::vector<PathComponent> mixed{{1.0, kPi / 2}, {kJ, 0.0}};
    check_close(synthesize_channel({2, 0.5}, mixed), {Complex(1, 1), Complex(1, -1)});

    CHECK_THROWS_AS(synthesize_channel({2, 0.5}, std::vector<PathComponent>{}), DomainError);
}

TEST_CASE("synthesize_channel is linear in its path list") {
    Gen g(12);
    for (int t = 0; t < 200; ++t) {
        const ArrayGeometry geo{g.index(1, 32), 0.5};
        const auto a = g.paths(g.index(1, 5));
        const auto b = g.paths(g.index(1, 5));
        auto both = a;
        both.insert(both.end(), b.begin(), b.end());
        const auto ha = synthesize_channel(geo, a);
        const auto hb = synthesize_channel(geo, b);
        const auto hab = synthesize_channel(geo, both);
        for (std::size_t m = 0; m < geo.num_antennas; ++m) CHECK(std::abs(hab[m] - ha[m] - hb[m]) < 1e-12);
    }
}

TEST_CASE("conjugating gains and mirroring angles conjugates the channel") {
    Gen g(13);
    for (int t = 0; t < 200; ++t) {
        const ArrayGeometry geo{g.index(1, 32), 0.5};
        auto paths = g.paths(g.index(1, 6));
        for (auto& p : paths) p.aoa = std::max(p.aoa, 1e-6);  // keep pi - aoa inside [0, pi)
        auto mirrored = paths;
        for (auto& p : mirrored) {
            p.gain = std::conj(p.gain);
            p.aoa = kPi - p.aoa;
        }
        const auto h = synthesize_channel(geo, paths);
        const auto hm = synthesize_channel(geo, mirrored);
        for (std::size_t m = 0; m < geo.num_antennas; ++m) CHECK(std::abs(hm[m] - std::conj(h[m])) < 1e-12);
    }
}

TEST_CASE("angular grid scenario produces pure array responses") {
    AngularScenario s;
    s.num_users = 10;
    s.num_paths = 1;
    s.min_separation = 0.3;
    const ArrayGeometry geo{8, 0.5};
    const auto set = generate_scenario(geo, s, 7);
    REQUIRE(set.size() == 10);
    CHECK(set.num_paths() == 1);
    REQUIRE(set.min_aoa_separation().has_value());
    CHECK(*set.min_aoa_separation() == doctest::Approx(0.3));
    for (std::size_t u = 0; u < set.size(); ++u) {
        CHECK(max_abs_diff(set[u], array_response(geo, 0.3 * static_cast<double>(u))) < 1e-12);
    }
    const auto again = generate_scenario(geo, s, 7);
    for (std::size_t u = 0; u < set.size(); ++u) CHECK(set[u].entries == again[u].entries);
}

TEST_CASE("complex gaussian multipath users equal the sum of their paths") {
    AngularScenario s;
    s.num_users = 25;
    s.num_paths = 3;
    s.aoas.clear();
    s.gain_model = GainModel::complex_gaussian;
    // Without a grid or list every angle is drawn; give one angle per user.
    for (int u = 0; u < 25; ++u) s.aoas.push_back(0.1 * u);
    const ArrayGeometry geo{6, 0.5};
    const auto set = generate_scenario(geo, s, 99);
    for (std::size_t u = 0; u < set.size(); ++u) {
        const auto& meta = set[u].meta;
        REQUIRE(meta.has_value());
        REQUIRE(meta->aoas.size() == 3);
        CHECK(meta->aoas[0] == doctest::Approx(0.1 * static_cast<double>(u)));
        // Recover the gains by least squares against the three array responses: the
        // channel must lie in their span and the residual must vanish.
        std::vector<ChannelVector> basis;
        for (double a : meta->aoas) basis.push_back(array_response(geo, a));
        // Gram system A^H A g = A^H h, solved with Cramer on 3x3.
        Complex G[3][3];
        Complex r[3];
        for (int i = 0; i < 3; ++i) {
            r[i] = 0;
            for (std::size_t m = 0; m < 6; ++m) r[i] += std::conj(basis[i][m]) * set[u][m];
            for (int k = 0; k < 3; ++k) {
                G[i][k] = 0;
                for (std::size_t m = 0; m < 6; ++m) G[i][k] += std::conj(basis[i][m]) * basis[k][m];
            }
        }
        const auto det3 = [](Complex a[3][3]) {
            return a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1]) - a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0]) +
                   a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0]);
        };
        const Complex d = det3(G);
        std::vector<PathComponent> paths;
        for (int c = 0; c < 3; ++c) {
            Complex Gc[3][3];
            for (int i = 0; i < 3; ++i)
                for (int k = 0; k < 3; ++k) Gc[i][k] = (k == c) ? r[i] : G[i][k];
            paths.push_back({det3(Gc) / d, meta->aoas[c]});
        }
        CHECK(max_abs_diff(synthesize_channel(geo, paths), set[u]) < 1e-8);
    }
}

TEST_CASE("complex gaussian gains have variance 1/L per path") {
    AngularScenario s;
    s.num_users = 4000;
    s.num_paths = 4;
    s.gain_model = GainModel::complex_gaussian;
    s.aoas.assign(s.num_users * s.num_paths, kPi / 2);
    // At broadside every path adds the same response 1, so h_0 = sum of gains ~ CN(0, 1).
    const auto set = generate_scenario({1, 0.5}, s, 5);
    double e = 0.0;
    for (const auto& h : set.channels()) e += std::norm(h[0]);
    e /= static_cast<double>(set.size());
    CHECK(e == doctest::Approx(1.0).epsilon(0.08));
}

TEST_CASE("scenario configuration errors") {
    AngularScenario s;
    s.num_users = 12;
    s.min_separation = 0.3;  // 11 * 0.3 = 3.3 > pi
    CHECK_THROWS_AS(generate_scenario({4, 0.5}, s, 1), ConfigError);
    s.min_separation.reset();
    s.aoas = {0.1, 0.2};
    CHECK_THROWS_AS(generate_scenario({4, 0.5}, s, 1), ConfigError);
    RoomScenario r;
    r.num_paths = 11;
    CHECK_THROWS_AS(generate_scenario({4, 0.5}, r, 1), ConfigError);
}

TEST_CASE("channel set invariants") {
    const ArrayGeometry geo{2, 0.5};
    CHECK_THROWS_AS(ChannelSet({make_channel({1, 1}), make_channel({1})}, geo, 0, 1), DomainError);
    CHECK_THROWS_AS(ChannelSet({make_channel({1, 1}), make_channel({0, 0})}, geo, 0, 1), DomainError);
    CHECK_THROWS_AS(ChannelSet({make_channel({1, 2}), make_channel({3, 1}), make_channel({1, 2})}, geo, 0, 1),
                    DomainError);
    const ChannelSet ok({make_channel({1, kJ}), make_channel({2, 0})}, geo, 0, 1);
    CHECK(ok.mean_per_antenna_energy() == doctest::Approx(1.5));
}

TEST_CASE("room scenario") {
    RoomScenario r;
    r.rows = 4;
    r.cols = 5;
    const ArrayGeometry geo{8, 0.5};
    const auto set = generate_scenario(geo, r, 3);
    CHECK(set.size() == 20);
    CHECK(set.num_paths() == 10);
    for (const auto& h : set.channels()) {
        REQUIRE(h.meta.has_value());
        CHECK(h.meta->aoas.size() == 10);
        for (double a : h.meta->aoas) CHECK((a >= 0.0 && a < kPi));
    }
    const auto again = generate_scenario(geo, r, 3);
    for (std::size_t u = 0; u < set.size(); ++u) CHECK(set[u].entries == again[u].entries);
    const auto other = generate_scenario(geo, r, 4);
    CHECK(set[0].entries != other[0].entries);

    // The line-of-sight path follows the geometry directly.
    const std::vector<Complex> phases(5, Complex{1.0, 0.0});
    const auto paths = room_user_paths(r, 1, 2, phases);
    const double x = r.grid_origin_m[0] + 2 * r.grid_spacing_m;
    const double y = r.grid_origin_m[1] + 1 * r.grid_spacing_m;
    const double d = std::hypot(x - r.bs_position_m[0], y - r.bs_position_m[1]);
    CHECK(paths[0].aoa == doctest::Approx(std::acos((x - r.bs_position_m[0]) / d)));
    CHECK(std::abs(paths[0].gain - std::polar(1.0 / d, -2 * kPi * d / r.wavelength_m)) < 1e-12);

    r.num_paths = 1;
    const auto los = generate_scenario(geo, r, 3);
    CHECK(los.num_paths() == 1);
    for (const auto& h : los.channels()) CHECK(h.meta->aoas.size() == 1);
}

TEST_CASE("channel files round-trip bit-exactly") {
    const auto dir = onebit::testing::temp_dir("channels");
    AngularScenario s;
    s.num_users = 10;
    s.num_paths = 2;
    s.gain_model = GainModel::complex_gaussian;
    s.min_separation = 0.2;
    const auto set = generate_scenario({7, 0.5}, s, 21);
    save_channels(set, dir / "c.json");
    const auto back = load_channels(dir / "c.json");
    REQUIRE(back.size() == set.size());
    CHECK(back.geometry() == set.geometry());
    CHECK(back.seed() == set.seed());
    CHECK(back.num_paths() == 2);
    CHECK(back.min_aoa_separation() == set.min_aoa_separation());
    for (std::size_t u = 0; u < set.size(); ++u) {
        CHECK(back[u].entries == set[u].entries);
        CHECK(back[u].meta == set[u].meta);
    }
}

TEST_CASE("channel file contract violations are parse errors") {
    const auto dir = onebit::testing::temp_dir("channels-bad");
    AngularScenario s;
    s.num_users = 3;
    s.min_separation = 0.5;
    const auto set = generate_scenario({3, 0.5}, s, 1);
    save_channels(set, dir / "c.json");

    SUBCASE("manifest M larger than the blob") {
        auto manifest = io::read_json_file(dir / "c.json");
        manifest["M"] = 4;
        io::write_json_file(dir / "c.json", manifest);
        CHECK_THROWS_AS(load_channels(dir / "c.json"), ParseError);
    }
    SUBCASE("NaN entry names the user") {
        auto bytes = io::read_file_bytes(dir / "c.bin");
        const double nan = std::nan("");
        // user 2, antenna 1, real part
        const std::size_t offset = (2 * 3 + 1) * 2 * sizeof(double);
        std::memcpy(bytes.data() + offset, &nan, sizeof nan);
        std::ofstream(dir / "c.bin", std::ios::binary).write(reinterpret_cast<const char*>(bytes.data()),
                                                             static_cast<std::streamsize>(bytes.size()));
        try {
            load_channels(dir / "c.json");
            FAIL("expected ParseError");
        } catch (const ParseError& e) {
            CHECK(std::string(e.what()).find("user 2") != std::string::npos);
        }
    }
    SUBCASE("newer format major is rejected") {
        auto manifest = io::read_json_file(dir / "c.json");
        manifest["format_version"] = "2.0";
        io::write_json_file(dir / "c.json", manifest);
        CHECK_THROWS_AS(load_channels(dir / "c.json"), ParseError);
    }
    SUBCASE("missing keys") {
        auto manifest = io::read_json_file(dir / "c.json");
        manifest.erase("num_users");
        io::write_json_file(dir / "c.json", manifest);
        CHECK_THROWS_AS(load_channels(dir / "c.json"), ParseError);
    }
    SUBCASE("malformed JSON") {
        std::ofstream(dir / "c.json") << "{ not json";
        CHECK_THROWS_AS(load_channels(dir / "c.json"), ParseError);
    }
}
