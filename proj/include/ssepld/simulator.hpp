#pragma once

// Event-driven simulation of the boundary-driven SSEP in macroscopic time
// with reservoir densities rho_-(t), rho_+(t), optionally under an
// exponential tilt of the jump rates.

#include <cstdint>
#include <functional>
#include <vector>

#include "ssepld/lattice.hpp"
#include "ssepld/protocol.hpp"
#include "ssepld/random.hpp"
#include "ssepld/tilt.hpp"

namespace ssepld {

struct InitialCondition {
    enum class Kind { Empty, Full, Bernoulli, Explicit };
    Kind kind = Kind::Bernoulli;
    std::vector<std::uint8_t> occupancy;  // Explicit only

    static InitialCondition empty() { return {Kind::Empty, {}}; }
    static InitialCondition full() { return {Kind::Full, {}}; }
    // Product measure with site densities rho-bar(x/N, 0).
    static InitialCondition bernoulli() { return {Kind::Bernoulli, {}}; }
    static InitialCondition from(const LatticeState& s) {
        return {Kind::Explicit, {s.occupancy().begin(), s.occupancy().end()}};
    }
};

LatticeState draw_initial(const InitialCondition& init, const ScalingParameters& scaling,
                          const BoundaryProtocol& protocol, Rng& rng);

struct SimulationOptions {
    std::vector<double> sample_times;  // increasing, within [0, T]; empty means {T}
    double eps = 0.1;                  // local-average radius for V_{N,eps}
    std::function<double(double)> test_function;  // G(y); unset means G = 1
    bool track_replacement = true;
    bool record_events = false;        // keep every proposal (time, channel, direction, accepted)
    bool audit_active_set = false;     // full rescan of the active bonds at each sample
    double max_events = 1e9;           // guard on the projected proposal count
    bool allow_large = false;
};

struct Sample {
    double t = 0.0;
    std::vector<std::uint8_t> occupancy;   // eta_t(x), index x + N
    std::vector<std::int64_t> plus;        // h_+(t, x), channel x + N + 1
    std::vector<std::int64_t> minus;       // h_-(t, x)
    std::vector<double> occupation_time;   // int_0^t eta_s(x) ds
    double replacement_integral = 0.0;     // int_0^t V_{N,eps}(s, eta_s) ds
    double log_rn = 0.0;                   // cumulative log Radon-Nikodym weight
    CountInvariantReport invariants;

    std::int64_t net(int channel) const {
        return plus[static_cast<std::size_t>(channel)] - minus[static_cast<std::size_t>(channel)];
    }
};

struct Event {
    double t = 0.0;
    int channel = 0;
    std::int8_t direction = 0;  // +1 for a jump x -> x+1 on the channel, -1 otherwise
    bool accepted = false;
};

struct TrajectoryRecord {
    ScalingParameters scaling;
    double horizon = 0.0;
    std::uint64_t seed = 0;
    double eps = 0.1;
    LatticeState initial;
    std::vector<Sample> samples;
    bool has_events = false;
    std::vector<Event> events;
    std::uint64_t proposals = 0;
    std::uint64_t accepted = 0;
    double wall_seconds = 0.0;
    bool invariants_ok = true;
    bool audit_ok = true;

    const Sample& final() const { return samples.back(); }
};

// Throws std::invalid_argument on inconsistent inputs, std::length_error when
// the projected proposal count exceeds the guard, std::logic_error on an
// envelope violation. The weight tilt, if given, is the one whose log
// Radon-Nikodym derivative is accumulated; by default it is the dynamics tilt.
TrajectoryRecord simulate(const ScalingParameters& scaling, const BoundaryProtocol& protocol,
                          const TiltSpecification& tilt, const InitialCondition& initial,
                          std::uint64_t seed, const SimulationOptions& options = {},
                          const TiltSpecification* weight = nullptr);

// Projected number of proposals: T times the envelope rate with all bonds active.
double projected_events(const ScalingParameters& scaling, const BoundaryProtocol& protocol,
                        const TiltSpecification& tilt);

// Recompute the log Radon-Nikodym weight of `tilt` from the event stream.
// Boundary integrals use the exact antiderivatives of the schedules.
// Throws std::invalid_argument if the record holds no event stream.
double log_radon_nikodym(const TrajectoryRecord& record, const TiltSpecification& tilt,
                         const ScalingParameters& scaling, const BoundaryProtocol& protocol);

}  // namespace ssepld
