#include <cmath>
#include <numbers>

#include "doctest.h"
#include "ssepld/harness/experiments.hpp"
#include "ssepld/oracle.hpp"
#include "ssepld/simulator.hpp"
#include "ssepld/stats.hpp"

using namespace ssepld;

namespace {

const ScalingParameters kScaling{2, 1.0, 1.0};

BoundaryProtocol driven() {
    return BoundaryProtocol(SinusoidSchedule{0.5, 0.2, 2.0 * std::numbers::pi, 0.0}, ConstantSchedule{0.3}, 1.0);
}

TiltSpecification bump(double amp, BoundaryTiltRule rule) {
    return TiltSpecification::from_function(
        2, 1.0, 10, [amp](double t, double y) { return amp * (1.0 + y) * (1.0 + std::cos(3.0 * t) * y); },
        [amp](double t, double y) { return amp * (1.0 + std::cos(3.0 * t) * (1.0 + 2.0 * y)); }, rule);
}

}  // namespace

TEST_CASE("compensated exponential is a martingale for both boundary rules") {
    const BoundaryProtocol p = driven();
    const MasterState m0 = product_bernoulli_measure(kScaling, p, 0.0);
    for (BoundaryTiltRule rule : {BoundaryTiltRule::LinearExtension, BoundaryTiltRule::Literal}) {
        for (double amp : {0.2, 0.8}) {
            const auto r = feynman_kac_tilted(m0, kScaling, p, bump(amp, rule), 1.0, FeynmanKacMode::Compensated);
            CHECK(r.value == doctest::Approx(1.0).epsilon(1e-7));
            // Without the compensator the mean is not one.
            const auto u = feynman_kac_tilted(m0, kScaling, p, bump(amp, rule), 1.0, FeynmanKacMode::Uncompensated);
            CHECK(std::abs(u.value - 1.0) > 1e-3);
        }
    }
    for (int k = 0; k < harness::kMartingaleFamilies; ++k) {
        const auto tilt = harness::martingale_tilt(k, 2, 1.0, 0.3);
        CHECK(tilt.z_max() > 0.0);
        const auto r = feynman_kac_tilted(m0, kScaling, p, tilt, 1.0, FeynmanKacMode::Compensated);
        CHECK(r.value == doctest::Approx(1.0).epsilon(1e-7));
    }
}

TEST_CASE("boundary rules differ only on the reservoir channels") {
    const auto a = bump(0.5, BoundaryTiltRule::LinearExtension);
    const auto b = bump(0.5, BoundaryTiltRule::Literal);
    for (int cell = 0; cell < a.cells(); ++cell) {
        for (int c = 1; c < a.channels() - 1; ++c) CHECK(a.z(cell, c) == b.z(cell, c));
        CHECK(a.z(cell, 0) == doctest::Approx(-b.z(cell, 0)));
    }
}

TEST_CASE("Monte Carlo weights have unit mean under the untilted law") {
    const BoundaryProtocol p = driven();
    const auto tilt = bump(0.4, BoundaryTiltRule::LinearExtension);
    SimulationOptions o;
    o.track_replacement = false;
    RunningStats w;
    for (std::uint64_t r = 0; r < 20000; ++r) {
        const auto rec = simulate(kScaling, p, TiltSpecification::untilted(2, 1.0), InitialCondition::bernoulli(),
                                  replica_seed(31, r), o, &tilt);
        w.add(std::exp(rec.final().log_rn));
    }
    CHECK(std::abs(w.mean() - 1.0) < 4.0 * w.standard_error());
    CHECK(w.standard_error() < 0.05);
}

TEST_CASE("uncompensated generating function matches Monte Carlo") {
    const BoundaryProtocol p = driven();
    std::vector<double> z{0.3, -0.2, 0.1, 0.25, -0.1, 0.2};
    const auto tilt = TiltSpecification::from_values(2, 1.0, 1, z);
    const MasterState m0 = point_mass(LatticeState::empty(2));
    const double exact = feynman_kac_tilted(m0, kScaling, p, tilt, 1.0, FeynmanKacMode::Uncompensated).value;
    SimulationOptions o;
    o.track_replacement = false;
    RunningStats st;
    for (std::uint64_t r = 0; r < 20000; ++r) {
        const auto rec = simulate(kScaling, p, TiltSpecification::untilted(2, 1.0), InitialCondition::empty(),
                                  replica_seed(47, r), o);
        double s = 0.0;
        for (int c = 0; c < 6; ++c) s += z[static_cast<std::size_t>(c)] * static_cast<double>(rec.final().net(c));
        st.add(std::exp(s));
    }
    CHECK(std::abs(st.mean() - exact) < 4.0 * st.standard_error());
}

TEST_CASE("reweighting tilted trajectories recovers untilted expectations") {
    const BoundaryProtocol p = driven();
    const auto tilt = bump(0.5, BoundaryTiltRule::LinearExtension);
    const MasterState m0 = point_mass(LatticeState::empty(2));
    const Evolution ev = evolve_master(m0, kScaling, p, 0.0, 1.0);
    SimulationOptions o;
    o.track_replacement = false;
    std::vector<RunningStats> site(5);
    for (std::uint64_t r = 0; r < 20000; ++r) {
        const auto rec = simulate(kScaling, p, tilt, InitialCondition::empty(), replica_seed(53, r), o);
        const double w = std::exp(-rec.final().log_rn);
        for (int k = 0; k < 5; ++k) site[static_cast<std::size_t>(k)].add(w * rec.final().occupancy[static_cast<std::size_t>(k)]);
    }
    for (int x = -2; x <= 2; ++x) {
        const auto& st = site[static_cast<std::size_t>(x + 2)];
        CHECK(std::abs(st.mean() - exact_mean_density(ev.final, x)) < 4.0 * st.standard_error());
    }
}
