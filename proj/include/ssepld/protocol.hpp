#pragma once

// Reservoir schedules rho_-(t), rho_+(t) and the closed-form quantities of the
// quasi-static limit (profile, mean current, reversed-current cost).

#include <string>
#include <variant>
#include <vector>

#include "json.hpp"

namespace ssepld {

enum class Side { Left, Right };

struct ConstantSchedule {
    double value = 0.5;
};

// Linear interpolation from `start` at t=0 to `end` at t=T.
struct RampSchedule {
    double start = 0.5;
    double end = 0.5;
};

// mean + amplitude * sin(omega * t + phase)
struct SinusoidSchedule {
    double mean = 0.5;
    double amplitude = 0.0;
    double omega = 0.0;
    double phase = 0.0;
};

// Natural cubic spline through (time, value) knots. The knots must cover [0, T].
class SplineSchedule {
public:
    SplineSchedule() = default;
    SplineSchedule(std::vector<double> times, std::vector<double> values);

    double value(double t) const;
    double derivative(double t) const;
    // Integral of the spline from times.front() to t.
    double antiderivative(double t) const;

    const std::vector<double>& times() const { return times_; }
    const std::vector<double>& values() const { return values_; }

private:
    std::size_t segment(double t) const;

    std::vector<double> times_;
    std::vector<double> values_;
    std::vector<double> second_;  // spline second derivatives at knots
};

using Schedule = std::variant<ConstantSchedule, RampSchedule, SinusoidSchedule, SplineSchedule>;

// Evaluation of a single schedule on [0, horizon]; no range checks.
double schedule_value(const Schedule& s, double horizon, double t);
double schedule_derivative(const Schedule& s, double horizon, double t);
double schedule_integral(const Schedule& s, double horizon, double t);  // from 0 to t

struct ScalingParameters {
    int n = 1;           // sites -n..n
    double alpha = 1.0;  // quasi-static exponent
    double gamma = 1.0;  // exchange rate

    void validate() const;
    int sites() const { return 2 * n + 1; }
    // N^{2+alpha}
    double time_scale() const;
};

inline constexpr double kDefaultFloor = 0.05;

class BoundaryProtocol {
public:
    // Throws std::invalid_argument if the schedules leave [floor, 1-floor]
    // anywhere on a dense grid of [0, horizon].
    BoundaryProtocol(Schedule left, Schedule right, double horizon, double floor = kDefaultFloor);

    static BoundaryProtocol constant(double rho_minus, double rho_plus, double horizon,
                                     double floor = kDefaultFloor);

    double horizon() const { return horizon_; }
    double floor() const { return floor_; }
    const Schedule& schedule(Side side) const { return side == Side::Left ? left_ : right_; }

    // Range-checked (std::domain_error outside [0, T]).
    double density(Side side, double t) const;
    double density_derivative(Side side, double t) const;
    double fugacity(Side side, double t) const;

    // Unchecked evaluation used in inner loops.
    double rho_minus(double t) const { return schedule_value(left_, horizon_, t); }
    double rho_plus(double t) const { return schedule_value(right_, horizon_, t); }

    // Integral over [0, t] of rho_+(s) - rho_-(s), exact for every descriptor.
    double integrated_gradient(double t) const;

    nlohmann::json to_json() const;
    static BoundaryProtocol from_json(const nlohmann::json& j);

private:
    void check_time(double t) const;

    Schedule left_;
    Schedule right_;
    double horizon_;
    double floor_;
};

double boundary_density(const BoundaryProtocol& p, Side side, double t);
double boundary_fugacity(const BoundaryProtocol& p, Side side, double t);

// 1/2 [rho_+ - rho_-] y + 1/2 [rho_+ + rho_-]
double quasi_static_profile(const BoundaryProtocol& p, double t, double y);

// -(gamma/2) int_0^t [rho_+(s) - rho_-(s)] ds
double quasi_static_current(const BoundaryProtocol& p, double t, double gamma = 1.0);

// Bernoulli relative entropy rho log(rho/nu) + (1-rho) log((1-rho)/(1-nu)).
double relative_entropy_bernoulli(double rho, double nu);

// 1/2 int_0^T [H(rho_+, rho_-) + H(rho_-, rho_+)] dt
double reversed_current_cost(const BoundaryProtocol& p);

inline double mobility_phi(double rho) { return rho * (1.0 - rho); }
double logit(double rho);

}  // namespace ssepld
