#include <cmath>
#include <numbers>

#include "doctest.h"
#include "ssepld/observables.hpp"
#include "ssepld/oracle.hpp"
#include "ssepld/simulator.hpp"
#include "ssepld/stats.hpp"

using namespace ssepld;

namespace {

const ScalingParameters kSmall{2, 1.0, 1.0};

BoundaryProtocol ramp(double horizon) {
    return BoundaryProtocol(RampSchedule{0.2, 0.6}, ConstantSchedule{0.7}, horizon);
}

TiltSpecification smooth_tilt(int n, double horizon, double amp) {
    return TiltSpecification::from_function(
        n, horizon, 8, [amp](double t, double y) { return amp * (1.0 + t) * (y + 1.0) * (y - 0.5); },
        [amp](double t, double y) { return amp * (1.0 + t) * (2.0 * y + 0.5); });
}

}  // namespace

TEST_CASE("simulation is bit-exact for a fixed seed") {
    const BoundaryProtocol p = ramp(1.0);
    const auto tilt = smooth_tilt(3, 1.0, 0.4);
    SimulationOptions o;
    o.sample_times = {0.25, 0.5, 1.0};
    o.record_events = true;
    const ScalingParameters s{3, 1.0, 1.0};
    const TrajectoryRecord a = simulate(s, p, tilt, InitialCondition::bernoulli(), 99, o);
    const TrajectoryRecord b = simulate(s, p, tilt, InitialCondition::bernoulli(), 99, o);
    const TrajectoryRecord c = simulate(s, p, tilt, InitialCondition::bernoulli(), 100, o);
    REQUIRE(a.samples.size() == 3);
    CHECK(a.proposals == b.proposals);
    CHECK(a.events.size() == b.events.size());
    for (std::size_t k = 0; k < a.samples.size(); ++k) {
        CHECK(a.samples[k].occupancy == b.samples[k].occupancy);
        CHECK(a.samples[k].plus == b.samples[k].plus);
        CHECK(a.samples[k].minus == b.samples[k].minus);
        CHECK(a.samples[k].log_rn == b.samples[k].log_rn);
        CHECK(a.samples[k].replacement_integral == b.samples[k].replacement_integral);
    }
    CHECK(a.proposals != c.proposals);
}

TEST_CASE("conservation, homogeneity and the active set hold along every trajectory") {
    const BoundaryProtocol p(SinusoidSchedule{0.5, 0.3, 2.0 * std::numbers::pi, 0.0}, ConstantSchedule{0.2}, 1.0);
    SimulationOptions o;
    for (int k = 1; k <= 20; ++k) o.sample_times.push_back(0.05 * k);
    o.audit_active_set = true;
    for (int n : {1, 4, 8}) {
        const ScalingParameters s{n, 1.0, 1.0};
        for (std::uint64_t seed = 0; seed < 10; ++seed) {
            const auto r = simulate(s, p, TiltSpecification::untilted(n, 1.0), InitialCondition::bernoulli(), seed, o);
            REQUIRE(r.invariants_ok);
            REQUIRE(r.audit_ok);
            for (const auto& sm : r.samples) REQUIRE(sm.invariants.max_spread <= 2 * n);
        }
    }
}

TEST_CASE("the spread of the current exceeds N^{1+alpha} (2N)^{-alpha} on typical trajectories") {
    // The bound that does hold is 2N; the rescaled form with exponent -alpha does not.
    const int n = 8;
    const ScalingParameters s{n, 1.0, 1.0};
    const BoundaryProtocol p = BoundaryProtocol::constant(0.2, 0.8, 1.0);
    SimulationOptions o;
    for (int k = 1; k <= 20; ++k) o.sample_times.push_back(0.05 * k);
    std::int64_t spread = 0;
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const auto r = simulate(s, p, TiltSpecification::untilted(n, 1.0), InitialCondition::bernoulli(), seed, o);
        for (const auto& sm : r.samples) spread = std::max(spread, sm.invariants.max_spread);
    }
    const double literal = std::pow(n, 2.0) * std::pow(2.0 * n, -1.0);
    CHECK(static_cast<double>(spread) > literal);
    CHECK(spread <= 2 * n);
}

TEST_CASE("input validation and the event guard") {
    const BoundaryProtocol p = BoundaryProtocol::constant(0.3, 0.6, 2.0);
    const ScalingParameters s{10, 1.5, 2.0};
    const auto tilt = TiltSpecification::untilted(10, 2.0);
    // T N^{2+alpha} (2 N gamma + 2)
    CHECK(projected_events(s, p, tilt) == doctest::Approx(2.0 * std::pow(10.0, 3.5) * 42.0));
    SimulationOptions o;
    o.max_events = 1000;
    CHECK_THROWS_AS(simulate(s, p, tilt, InitialCondition::empty(), 1, o), std::length_error);
    CHECK_THROWS_AS(simulate(s, p, TiltSpecification::untilted(9, 2.0), InitialCondition::empty(), 1),
                    std::invalid_argument);
    CHECK_THROWS_AS(simulate(s, p, TiltSpecification::untilted(10, 1.0), InitialCondition::empty(), 1),
                    std::invalid_argument);
    SimulationOptions bad;
    bad.sample_times = {0.5, 0.4};
    CHECK_THROWS_AS(simulate(kSmall, p, TiltSpecification::untilted(2, 2.0), InitialCondition::empty(), 1, bad),
                    std::invalid_argument);
    bad.sample_times = {3.0};
    CHECK_THROWS_AS(simulate(kSmall, p, TiltSpecification::untilted(2, 2.0), InitialCondition::empty(), 1, bad),
                    std::invalid_argument);
    TrajectoryRecord without_events;
    CHECK_THROWS_AS(log_radon_nikodym(without_events, tilt, s, p), std::invalid_argument);
}

TEST_CASE("the incremental log weight equals a replay of the event stream") {
    const BoundaryProtocol p(SinusoidSchedule{0.5, 0.2, 5.0, 0.1}, RampSchedule{0.4, 0.7}, 1.0);
    const ScalingParameters s{3, 1.0, 1.0};
    const auto tilt = smooth_tilt(3, 1.0, 0.5);
    SimulationOptions o;
    o.record_events = true;
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const auto r = simulate(s, p, tilt, InitialCondition::bernoulli(), seed, o);
        const double replay = log_radon_nikodym(r, tilt, s, p);
        CHECK(replay == doctest::Approx(r.final().log_rn).epsilon(1e-10));
        CHECK(std::abs(replay) > 1e-3);
    }
}

TEST_CASE("final configurations follow the exact law (chi-square at N=2)") {
    const double T = 0.4;
    const BoundaryProtocol p = ramp(T);
    const Evolution e = evolve_master(point_mass(LatticeState::empty(2)), kSmall, p, 0.0, T);
    const int replicas = 20000;
    std::vector<std::uint64_t> counts(e.final.p.size(), 0);
    RunningStats occ0, cur;
    for (int r = 0; r < replicas; ++r) {
        const auto rec = simulate(kSmall, p, TiltSpecification::untilted(2, T), InitialCondition::empty(),
                                  replica_seed(2024, static_cast<std::uint64_t>(r)));
        const auto& f = rec.final();
        ++counts[configuration_index(LatticeState(2, f.occupancy))];
        occ0.add(f.occupation_time[2]);
        cur.add(static_cast<double>(f.net(3)));
    }
    const ChiSquareResult chi = chi_square_test(counts, e.final.p);
    CHECK(chi.p_value > 1e-3);
    CHECK(std::abs(occ0.mean() - e.occupation_integral[2]) < 4.0 * occ0.standard_error());
    CHECK(std::abs(cur.mean() - exact_mean_current(e, 0)) < 4.0 * cur.standard_error());
}

TEST_CASE("the replacement integral equals a replay of the observable along the events") {
    // Constant reservoirs make V piecewise constant in time, so the replay is exact.
    const int n = 4;
    const ScalingParameters s{n, 1.0, 1.0};
    const BoundaryProtocol p = BoundaryProtocol::constant(0.3, 0.65, 0.5);
    SimulationOptions o;
    o.eps = 0.25;
    o.record_events = true;
    for (std::uint64_t seed = 0; seed < 3; ++seed) {
        const auto r = simulate(s, p, TiltSpecification::untilted(n, 0.5), InitialCondition::bernoulli(), seed, o);
        LatticeState st = r.initial;
        double t = 0.0, v = 0.0;
        std::vector<double> occ(static_cast<std::size_t>(st.sites()), 0.0);
        auto advance = [&](double t1) {
            v += (t1 - t) * replacement_observable(st, p, t, o.eps, nullptr);
            for (int k = 0; k < st.sites(); ++k) occ[static_cast<std::size_t>(k)] += (t1 - t) * st.occupancy()[static_cast<std::size_t>(k)];
            t = t1;
        };
        for (const Event& ev : r.events) {
            if (!ev.accepted) continue;
            advance(ev.t);
            if (ev.channel == 0) st.flip(-n);
            else if (ev.channel == 2 * n + 1) st.flip(n);
            else st.exchange(ev.channel - 1);
        }
        advance(0.5);
        CHECK(r.final().occupancy == std::vector<std::uint8_t>(st.occupancy().begin(), st.occupancy().end()));
        CHECK(r.final().replacement_integral == doctest::Approx(v).epsilon(1e-9));
        for (int k = 0; k < st.sites(); ++k)
            CHECK(r.final().occupation_time[static_cast<std::size_t>(k)] == doctest::Approx(occ[static_cast<std::size_t>(k)]).epsilon(1e-9));
    }
}

TEST_CASE("long-run mean density matches the linear stationary profile") {
    const BoundaryProtocol p = BoundaryProtocol::constant(0.2, 0.8, 3.0);
    const int replicas = 3000;
    std::vector<RunningStats> site(5);
    for (int r = 0; r < replicas; ++r) {
        const auto rec = simulate(kSmall, p, TiltSpecification::untilted(2, 3.0), InitialCondition::empty(),
                                  replica_seed(7, static_cast<std::uint64_t>(r)));
        for (int k = 0; k < 5; ++k) site[static_cast<std::size_t>(k)].add(rec.final().occupancy[static_cast<std::size_t>(k)]);
    }
    for (int x = -2; x <= 2; ++x) {
        const double expected = 0.2 + 0.6 * (x + 3) / 6.0;
        const auto& st = site[static_cast<std::size_t>(x + 2)];
        CHECK(std::abs(st.mean() - expected) < 4.0 * st.standard_error());
    }
}
