#include <cmath>

#include "doctest.h"
#include "ssepld/oracle.hpp"

using namespace ssepld;

namespace {

using Matrix = std::vector<std::vector<double>>;

Matrix multiply(const Matrix& a, const Matrix& b) {
    const std::size_t n = a.size();
    Matrix c(n, std::vector<double>(n, 0.0));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t k = 0; k < n; ++k)
            for (std::size_t j = 0; j < n; ++j) c[i][j] += a[i][k] * b[k][j];
    return c;
}

// exp(A) by scaling and squaring with a truncated Taylor series.
Matrix expm(Matrix a) {
    const std::size_t n = a.size();
    double norm = 0.0;
    for (const auto& row : a) {
        double s = 0.0;
        for (double v : row) s += std::abs(v);
        norm = std::max(norm, s);
    }
    int squarings = 0;
    while (norm > 0.1) {
        norm *= 0.5;
        ++squarings;
    }
    const double scale = std::ldexp(1.0, -squarings);
    for (auto& row : a)
        for (double& v : row) v *= scale;
    Matrix result(n, std::vector<double>(n, 0.0)), term(n, std::vector<double>(n, 0.0));
    for (std::size_t i = 0; i < n; ++i) result[i][i] = term[i][i] = 1.0;
    for (int k = 1; k <= 20; ++k) {
        term = multiply(term, a);
        for (auto& row : term)
            for (double& v : row) v /= k;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) result[i][j] += term[i][j];
    }
    for (int s = 0; s < squarings; ++s) result = multiply(result, result);
    return result;
}

// Rate matrix of the N = 1 chain written out by hand. Bits: 0 -> eta(-1), 1 -> eta(0), 2 -> eta(1).
Matrix hand_generator(double gamma, double scale, double rm, double rp) {
    Matrix q(8, std::vector<double>(8, 0.0));
    auto add = [&](std::size_t i, std::size_t j, double r) {
        q[i][j] += r;
        q[i][i] -= r;
    };
    for (std::size_t i = 0; i < 8; ++i) {
        const bool a = i & 1u, b = i & 2u, c = i & 4u;
        if (a != b) add(i, i ^ 3u, gamma * scale);
        if (b != c) add(i, i ^ 6u, gamma * scale);
        add(i, i ^ 1u, scale * (a ? 1.0 - rm : rm));
        add(i, i ^ 4u, scale * (c ? 1.0 - rp : rp));
    }
    return q;
}

}  // namespace

TEST_CASE("generator rows sum to zero and match the hand-built chain at N=1") {
    const ScalingParameters s{1, 1.0, 1.3};
    const BoundaryProtocol p = BoundaryProtocol::constant(0.25, 0.6, 1.0);
    const Matrix q = GeneratorAction(s, p, 0.0).dense();
    const Matrix ref = hand_generator(1.3, 1.0, 0.25, 0.6);
    for (std::size_t i = 0; i < 8; ++i) {
        double row = 0.0;
        for (std::size_t j = 0; j < 8; ++j) {
            row += q[i][j];
            CHECK(q[i][j] == doctest::Approx(ref[i][j]).epsilon(1e-14));
        }
        CHECK(std::abs(row) < 1e-12);
    }
    const ScalingParameters big{3, 0.5, 1.0};
    const Matrix q3 = GeneratorAction(big, p, 0.0).dense();
    for (const auto& row : q3) {
        double total = 0.0;
        for (double v : row) total += v;
        CHECK(std::abs(total) < 1e-9);
    }
}

TEST_CASE("forward evolution agrees with the matrix exponential") {
    const ScalingParameters s{1, 2.0, 0.8};
    const BoundaryProtocol p = BoundaryProtocol::constant(0.2, 0.7, 1.0);
    const double t = 0.9;
    Matrix a = hand_generator(0.8, 1.0, 0.2, 0.7);
    for (auto& row : a)
        for (double& v : row) v *= t;
    const Matrix e = expm(a);
    const LatticeState start(1, {1, 0, 1});
    const std::size_t i0 = configuration_index(start);
    const Evolution ev = evolve_master(point_mass(start), s, p, 0.0, t, OracleOptions{1e-13, 1e-12});
    for (std::size_t j = 0; j < 8; ++j) CHECK(ev.final.p[j] == doctest::Approx(e[i0][j]).epsilon(1e-8));
    CHECK(ev.final.total() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(configuration_state(1, i0).occupancy()[0] == 1);
}

TEST_CASE("stationary law has the linear mean profile") {
    for (int n : {1, 2, 3}) {
        const ScalingParameters s{n, 1.0, 1.0};
        const std::vector<double> pi = stationary_distribution(s, 0.2, 0.8);
        const MasterState m{n, 0.0, pi};
        CHECK(m.total() == doctest::Approx(1.0));
        for (int x = -n; x <= n; ++x) {
            const double expected = 0.2 + 0.6 * (x + n + 1) / (2.0 * n + 2.0);
            CHECK(exact_mean_density(m, x) == doctest::Approx(expected).epsilon(1e-10));
        }
        // Stationary means do not move under the forward equation.
        const Evolution ev = evolve_master(m, s, BoundaryProtocol::constant(0.2, 0.8, 0.5), 0.0, 0.5);
        for (int x = -n; x <= n; ++x) CHECK(exact_mean_density(ev.final, x) == doctest::Approx(exact_mean_density(m, x)).epsilon(1e-8));
    }
}

TEST_CASE("mean current equals the derivative of the tilted generating function") {
    const int n = 2;
    const ScalingParameters s{n, 1.0, 1.0};
    const BoundaryProtocol p(RampSchedule{0.3, 0.5}, ConstantSchedule{0.75}, 0.5);
    const MasterState start = point_mass(LatticeState::empty(n));
    const Evolution ev = evolve_master(start, s, p, 0.0, 0.5, OracleOptions{1e-13, 1e-12});
    const double z = 1e-4;
    for (int c = 0; c < 2 * n + 2; ++c) {
        auto tilted = [&](double zz) {
            std::vector<double> v(static_cast<std::size_t>(2 * n + 2), 0.0);
            v[static_cast<std::size_t>(c)] = zz;
            const auto tilt = TiltSpecification::from_values(n, 0.5, 1, v);
            return feynman_kac_tilted(start, s, p, tilt, 0.5, FeynmanKacMode::Uncompensated, OracleOptions{1e-13, 1e-12})
                .log_value;
        };
        const double derivative = (tilted(z) - tilted(-z)) / (2.0 * z);
        CHECK(derivative == doctest::Approx(exact_mean_current(ev, c - n - 1)).epsilon(1e-5));
    }
}

TEST_CASE("oracle limits and degenerate tilts") {
    const BoundaryProtocol p = BoundaryProtocol::constant(0.3, 0.6, 1.0);
    CHECK_THROWS_AS(GeneratorAction(ScalingParameters{7, 1.0, 1.0}, p, 0.0), std::length_error);
    CHECK_THROWS_AS(evolve_master(point_mass(LatticeState::empty(7)), ScalingParameters{7, 1.0, 1.0}, p, 0.0, 1.0),
                    std::length_error);
    CHECK_THROWS_AS(stationary_distribution(ScalingParameters{5, 1.0, 1.0}, 0.3, 0.6), std::length_error);

    const ScalingParameters s{2, 1.0, 1.0};
    const MasterState start = product_bernoulli_measure(s, p, 0.0);
    CHECK(start.total() == doctest::Approx(1.0));
    for (FeynmanKacMode mode : {FeynmanKacMode::Uncompensated, FeynmanKacMode::Compensated}) {
        const auto r = feynman_kac_tilted(start, s, p, TiltSpecification::untilted(2, 1.0), 1.0, mode);
        CHECK(r.value == doctest::Approx(1.0).epsilon(1e-8));
        CHECK(std::abs(r.log_value) < 1e-8);
    }
    CHECK_THROWS_AS(feynman_kac_tilted(start, s, p, TiltSpecification::untilted(3, 1.0), 1.0, FeynmanKacMode::Compensated),
                    std::invalid_argument);
}

TEST_CASE("large tilts overflow unless the log scale is tracked") {
    const ScalingParameters s{2, 3.0, 1.0};
    const BoundaryProtocol p = BoundaryProtocol::constant(0.3, 0.6, 1.0);
    const auto tilt = TiltSpecification::from_values(2, 1.0, 1, std::vector<double>(6, 3.0));
    const MasterState start = point_mass(LatticeState::empty(2));
    const auto logged = feynman_kac_tilted(start, s, p, tilt, 1.0, FeynmanKacMode::Uncompensated);
    CHECK(logged.log_value > 800.0);
    CHECK(std::isfinite(logged.log_value));
    CHECK_THROWS_AS(feynman_kac_tilted(start, s, p, tilt, 1.0, FeynmanKacMode::Uncompensated, {}, false),
                    std::overflow_error);
    // The compensated version is a martingale whatever the size of the tilt.
    const auto comp = feynman_kac_tilted(start, s, p, tilt, 1.0, FeynmanKacMode::Compensated);
    CHECK(std::abs(comp.log_value) < 1e-6);
}
