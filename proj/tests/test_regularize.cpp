#include <cmath>
#include <random>

#include "doctest.h"
#include "ssepld/functional.hpp"

using namespace ssepld;

namespace {

DensityField smooth_density(const BoundaryProtocol& p, int mt, int my, double amp = 0.1) {
    const GridSpec g{p.horizon(), mt, my};
    std::vector<double> v;
    for (int i = 0; i < g.time_nodes(); ++i)
        for (int j = 0; j < g.space_nodes(); ++j) {
            const double t = g.t(i), y = g.y(j);
            v.push_back(quasi_static_profile(p, t, y) + amp * (1.0 + t) * std::sin(3.0 * y + 1.0) * (1.0 - y * y));
        }
    return DensityField(g, v);
}

// Plain Gaussian elimination with partial pivoting on the dense matrix.
std::vector<double> dense_solve(std::vector<std::vector<double>> a, std::vector<double> b) {
    const std::size_t n = b.size();
    for (std::size_t c = 0; c < n; ++c) {
        std::size_t piv = c;
        for (std::size_t r = c + 1; r < n; ++r)
            if (std::abs(a[r][c]) > std::abs(a[piv][c])) piv = r;
        std::swap(a[c], a[piv]);
        std::swap(b[c], b[piv]);
        for (std::size_t r = c + 1; r < n; ++r) {
            const double m = a[r][c] / a[c][c];
            for (std::size_t k = c; k < n; ++k) a[r][k] -= m * a[c][k];
            b[r] -= m * b[c];
        }
    }
    std::vector<double> x(n);
    for (std::size_t i = n; i-- > 0;) {
        double s = b[i];
        for (std::size_t k = i + 1; k < n; ++k) s -= a[i][k] * x[k];
        x[i] = s / a[i][i];
    }
    return x;
}

}  // namespace

TEST_CASE("tridiagonal solver matches dense elimination") {
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (std::size_t n : {1u, 2u, 5u, 40u}) {
        std::vector<double> sub(n), diag(n), sup(n), rhs(n);
        std::vector<std::vector<double>> a(n, std::vector<double>(n, 0.0));
        for (std::size_t i = 0; i < n; ++i) {
            sub[i] = i ? u(rng) : 0.0;
            sup[i] = i + 1 < n ? u(rng) : 0.0;
            diag[i] = 3.0 + u(rng);
            rhs[i] = u(rng);
            a[i][i] = diag[i];
            if (i) a[i][i - 1] = sub[i];
            if (i + 1 < n) a[i][i + 1] = sup[i];
        }
        const auto ref = dense_solve(a, rhs);
        REQUIRE(solve_tridiagonal(sub, diag, sup, rhs));
        for (std::size_t i = 0; i < n; ++i) CHECK(rhs[i] == doctest::Approx(ref[i]).epsilon(1e-12));
    }
    std::vector<double> rhs{1.0, 1.0};
    CHECK_FALSE(solve_tridiagonal({0.0, 1.0}, {0.0, 1.0}, {1.0, 0.0}, rhs));
}

TEST_CASE("convex regularization interpolates towards the linear profile") {
    const BoundaryProtocol p = BoundaryProtocol::constant(0.2, 0.7, 1.0);
    const DensityField rho = smooth_density(p, 10, 20, 0.2);
    CHECK(regularize_convex(rho, p, 0.0).values() == rho.values());
    const DensityField bar = DensityField::quasi_static(p, 10, 20);
    const DensityField one = regularize_convex(rho, p, 1.0);
    for (std::size_t k = 0; k < bar.values().size(); ++k) CHECK(one.values()[k] == doctest::Approx(bar.values()[k]));
    const DensityField half = regularize_convex(rho, p, 0.5);
    CHECK(half.boundary_mismatch(p) < 1e-12);
    CHECK(half.at(5, 7) == doctest::Approx(0.5 * (rho.at(5, 7) + bar.at(5, 7))));
    CHECK_THROWS_AS(regularize_convex(rho, p, 1.5), std::invalid_argument);
}

TEST_CASE("resolvent regularization solves the Dirichlet problem and keeps the boundary data") {
    const BoundaryProtocol p(RampSchedule{0.3, 0.5}, ConstantSchedule{0.6}, 1.0);
    const DensityField rho = smooth_density(p, 4, 50);
    const double eps = 0.02;
    const DensityField s = regularize_resolvent(rho, p, eps);
    const GridSpec& g = rho.grid();
    const double c = eps / (g.dy() * g.dy());
    CHECK(s.boundary_mismatch(p) == 0.0);
    for (int i = 0; i < g.time_nodes(); ++i) {
        const double t = g.t(i);
        auto u = [&](int j) { return s.at(i, j) - quasi_static_profile(p, t, g.y(j)); };
        for (int j = 1; j < g.space_steps; ++j) {
            const double applied = u(j) - c * (u(j + 1) - 2.0 * u(j) + u(j - 1));
            CHECK(applied == doctest::Approx(rho.at(i, j) - quasi_static_profile(p, t, g.y(j))).epsilon(1e-10));
        }
    }
    // The linear profile is a fixed point.
    const DensityField bar = DensityField::quasi_static(p, 4, 50);
    const DensityField sb = regularize_resolvent(bar, p, eps);
    for (std::size_t k = 0; k < bar.values().size(); ++k) CHECK(sb.values()[k] == doctest::Approx(bar.values()[k]));
    CHECK_THROWS_AS(regularize_resolvent(rho, p, 0.0), std::invalid_argument);
}

TEST_CASE("resolvent identity residual is second order in the space step") {
    const BoundaryProtocol p = BoundaryProtocol::constant(0.3, 0.6, 1.0);
    std::vector<double> res;
    for (int my : {50, 100, 200, 400}) res.push_back(resolvent_identity_residual(smooth_density(p, 2, my), p, 0.01));
    for (std::size_t k = 1; k < res.size(); ++k) {
        const double order = std::log2(res[k - 1] / res[k]);
        CHECK(order > 1.7);
    }
}

TEST_CASE("regularized rate converges to the rate of a smooth pair") {
    const BoundaryProtocol p = BoundaryProtocol::constant(0.3, 0.6, 1.0);
    const DensityField rho = smooth_density(p, 20, 200);
    const CurrentPath j = CurrentPath::from_slopes(1.0, std::vector<double>(20, 0.2));
    const double target = rate_functional_closed(j, rho, p).total;
    double previous = std::numeric_limits<double>::infinity();
    for (double eps : {1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6}) {
        const DensityField r = regularize_resolvent(regularize_convex(rho, p, eps), p, eps);
        const double gap = std::abs(rate_functional_closed(j, r, p).total - target);
        // Smooth data: the gap shrinks about linearly in eps.
        if (eps < 1e-2) CHECK(gap < 0.2 * previous);
        CHECK(gap < previous);
        previous = gap;
    }
    CHECK(previous < 1e-4 * target);
}
