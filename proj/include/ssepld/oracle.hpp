#pragma once

// Exact laws of the small-N process: the time-inhomogeneous forward equation
// d/dt p = L*_t p on all 2^{2N+1} configurations, and Feynman-Kac tilted
// evolutions. Configuration bit x + N holds eta(x).

#include <cstdint>
#include <vector>

#include "ssepld/lattice.hpp"
#include "ssepld/protocol.hpp"
#include "ssepld/tilt.hpp"

namespace ssepld {

inline constexpr int kOracleMaxN = 6;

struct OracleOptions {
    double atol = 1e-10;
    double rtol = 1e-9;
    int max_n = kOracleMaxN;
    long max_steps = 10'000'000;
};

// One jump channel acting on configuration bits: pattern = (i >> shift) & mask,
// and a jump maps i to i ^ partner. Rates are indexed by pattern.
struct ChannelRates {
    int channel = 0;
    unsigned shift = 0;
    unsigned mask = 0;
    std::size_t partner = 0;
    std::vector<double> out_rate;   // total rate of leaving through this channel
    std::vector<int> direction;     // +1 / -1 for the jump leaving this pattern, 0 if none
};

class GeneratorAction {
public:
    // Throws std::length_error when N exceeds max_n.
    GeneratorAction(const ScalingParameters& scaling, const BoundaryProtocol& protocol, double t,
                    int max_n = kOracleMaxN);

    int n() const { return n_; }
    std::size_t states() const { return states_; }
    const std::vector<ChannelRates>& channels() const { return channels_; }

    // Dense rate matrix Q[i][j] = rate(i -> j), diagonal = -row sum. Small N only.
    std::vector<std::vector<double>> dense() const;
    // Outgoing transitions (target, rate) of configuration i.
    std::vector<std::pair<std::size_t, double>> transitions(std::size_t i) const;

private:
    int n_;
    std::size_t states_;
    std::vector<ChannelRates> channels_;
};

GeneratorAction build_generator(const ScalingParameters& scaling, const BoundaryProtocol& protocol, double t,
                                int max_n = kOracleMaxN);

struct MasterState {
    int n = 1;
    double t = 0.0;
    std::vector<double> p;

    double total() const;
};

std::size_t configuration_index(const LatticeState& s);
LatticeState configuration_state(int n, std::size_t index);

MasterState point_mass(const LatticeState& s, double t = 0.0);
MasterState product_bernoulli_measure(const ScalingParameters& scaling, const BoundaryProtocol& protocol, double t);

struct Evolution {
    MasterState final;
    std::vector<double> occupation_integral;  // int_{t0}^{t1} E[eta_s(x)] ds, index x + N
    std::vector<double> mean_current;         // E[h(t1, x) - h(t0, x)], channel x + N + 1
    long steps = 0;
    double max_mass_drift = 0.0;              // largest |sum p - 1| before renormalisation
};

Evolution evolve_master(const MasterState& initial, const ScalingParameters& scaling,
                        const BoundaryProtocol& protocol, double t0, double t1, const OracleOptions& options = {});

double exact_mean_density(const MasterState& m, int x);
double exact_mean_current(const Evolution& e, int x);

enum class FeynmanKacMode {
    // Off-diagonal rates multiplied by e^{z}, original diagonal: E[exp(sum z dh)].
    Uncompensated,
    // Additionally subtracts the compensator: E[exp(sum z dh - int c dt)] (should be 1).
    Compensated,
};

struct FeynmanKacResult {
    double log_value = 0.0;
    double value = 1.0;
    long steps = 0;
};

// The tilt cells are honoured exactly: the integration restarts at every cell
// boundary. Throws std::overflow_error if log tracking is disabled and the
// vector leaves the representable range.
FeynmanKacResult feynman_kac_tilted(const MasterState& initial, const ScalingParameters& scaling,
                                    const BoundaryProtocol& protocol, const TiltSpecification& tilt, double t1,
                                    FeynmanKacMode mode, const OracleOptions& options = {}, bool log_tracking = true);

// Stationary law for constant reservoirs from L* p = 0 with sum p = 1 (dense
// elimination, N <= 4).
std::vector<double> stationary_distribution(const ScalingParameters& scaling, double rho_minus, double rho_plus);

}  // namespace ssepld
