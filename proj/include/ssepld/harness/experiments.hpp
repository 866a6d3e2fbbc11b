#pragma once

// The scripted experiments. Each structured entry point returns the raw
// numbers; run_experiment turns them into tables and pass/fail checks.

#include <cstdint>
#include <functional>
#include <vector>

#include "ssepld/fields.hpp"
#include "ssepld/harness/config.hpp"
#include "ssepld/harness/runner.hpp"
#include "ssepld/stats.hpp"
#include "ssepld/tilt.hpp"

namespace ssepld::harness {

// ---- hydrodynamic limit -------------------------------------------------

struct HydroPoint {
    int n = 0;
    double l1_distance = 0.0;        // window-averaged profile vs rho-bar in L1(dy dt)
    double current_mean = 0.0;       // bond-averaged h(T) / N^{1+alpha}
    double current_se = 0.0;
    double current_target = 0.0;     // J-bar(T)
    double replacement_mean = 0.0;   // (1/N) int_0^T V_{N,eps} dt
    double replacement_se = 0.0;
    bool invariants_ok = true;       // conservation and the 2N spread bound, every sample
    std::int64_t max_spread = 0;     // max over replicas and samples of max_x h - min_x h
    double literal_bound_ratio = 0.0;  // max (spread / N^{1+alpha}) / (2N)^{-alpha}
    std::uint64_t proposals = 0;
    double wall_seconds = 0.0;
};

HydroPoint hydro_point(const ExperimentConfig& c, int n, std::vector<ReplicaInfo>* log = nullptr);

// ---- small-N oracle comparison -------------------------------------------

struct OracleComparison {
    int n = 0;
    std::vector<double> density_exact, density_mean, density_z;  // site x + N
    std::vector<double> current_exact, current_mean, current_z;  // channel x + N + 1
    double max_abs_z = 0.0;
    ChiSquareResult chi_square;
    std::uint64_t chi_square_replicas = 0;
    double max_mass_drift = 0.0;
};

// Means from c.replicas runs; the end-state law from chi_square_replicas
// further runs (skipped when zero).
OracleComparison oracle_comparison(const ExperimentConfig& c, std::uint64_t chi_square_replicas,
                                   std::vector<ReplicaInfo>* log = nullptr);

// ---- exponential martingale ---------------------------------------------

inline constexpr int kMartingaleFamilies = 5;

// Smooth tilts H_k(t, y) with H_k(t, -1) = 0, k = 0..4, scaled by `amplitude`.
TiltSpecification martingale_tilt(int k, int n, double horizon, double amplitude, int cells = 16);

struct MartingaleReport {
    std::vector<double> compensated;     // exact E[exp(log RN)] per family
    std::vector<double> uncompensated;   // exact E[exp(sum z dh)] per family
    std::vector<double> mc_mean, mc_se;  // Monte Carlo E[exp(log RN)] under the untilted law
    double max_replay_gap = 0.0;         // incremental vs event-replay log RN
};

MartingaleReport martingale_report(const ExperimentConfig& c, double amplitude = 0.3,
                                   std::vector<ReplicaInfo>* log = nullptr);

// ---- tilted relative entropy ---------------------------------------------

struct EntropyTarget {
    CurrentPath current;
    DensityField density;
    TiltField tilt;  // optimal tilt for (current, density)
    double rate = 0.0;
};

// J' = J-bar' + c.current_shift, rho = rho-bar on the (time_steps, space_steps) grid.
EntropyTarget entropy_target(const ExperimentConfig& c);

struct EntropyPoint {
    int n = 0;
    double entropy_rate = 0.0;  // mean log RN / N^{1+alpha}
    double entropy_se = 0.0;
    double rate = 0.0;          // I(J, rho)
    double sup_distance = 0.0;  // time-averaged tilted profile vs target
    double wall_seconds = 0.0;
};

EntropyPoint entropy_point(const ExperimentConfig& c, const EntropyTarget& target, int n,
                           std::vector<ReplicaInfo>* log = nullptr);

// ---- test fields for the functional checks ---------------------------------

// A compatible (J, rho) given analytically, so any grid can be sampled.
struct AnalyticField {
    std::function<double(double, double)> rho;
    std::function<double(double)> current;
    double horizon = 1.0;

    DensityField density_field(int time_steps, int space_steps) const;
    CurrentPath current_path(int time_steps) const;
};

// rho = rho-bar + (1 - y^2) sum_m a_m sin(m pi (1+y)/2) (1 + b sin(2 pi t/T + theta)),
// J = J-bar + sum_m d_m sin(m pi t/T) + e t, with random coefficients.
AnalyticField random_field(const BoundaryProtocol& protocol, std::uint64_t seed);

// Rough test field f = 0..4 for the regularisation scan: kinked profiles
// and large, localised current slopes.
AnalyticField regularization_field(const BoundaryProtocol& protocol, int f);

struct FluctuationReport {
    std::vector<double> residual;             // relative, closed functional
    std::vector<double> contracted_residual;  // absolute, contracted functional
    std::vector<double> q_gap;                // I - Q (must be >= 0)
};

FluctuationReport fluctuation_report(const ExperimentConfig& c);

struct VariationalReport {
    std::vector<int> levels;                 // time steps per level; space steps twice that
    std::vector<double> reference;           // extrapolated continuum I per field
    std::vector<std::vector<double>> gap;    // [field][level] |objective(H-bar) - reference|
    std::vector<double> observed_order;      // per field, last doubling
    double worst_random_excess = 0.0;        // max objective(H) - I on the same grid
    int random_tilts = 0;
};

VariationalReport variational_report(const ExperimentConfig& c, int fields = 20, int random_tilts = 50);

// ---- Bodineau-Derrida ----------------------------------------------------------

struct BdScan {
    double q_bar = 0.0;
    double value_at_q_bar = 0.0;
    std::vector<double> q, value;
    double min_second_difference = 0.0;
};

BdScan bd_scan(const ExperimentConfig& c, int points = 21, double half_width = 1.0);

// ---- regularisation -------------------------------------------------------------

struct RegularizationReport {
    std::vector<double> k, eps;                  // the (k, eps) schedule
    std::vector<std::vector<double>> gap;        // [field][step] |I(J_k, rho_eps) - I(J, rho)|
    std::vector<double> rate;                    // I(J, rho) per field
    std::vector<int> grid;                        // space steps for the resolvent check
    std::vector<double> residual;                 // resolvent identity residual per grid
};

RegularizationReport regularization_report(const ExperimentConfig& c);

// ---- dispatch ---------------------------------------------------------------------

ExperimentResult run_experiment(const ExperimentConfig& c);

}  // namespace ssepld::harness
