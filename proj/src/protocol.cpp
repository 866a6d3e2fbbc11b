#include "ssepld/protocol.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "ssepld/quadrature.hpp"

namespace ssepld {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

constexpr int kValidationPoints = 4001;

}  // namespace

SplineSchedule::SplineSchedule(std::vector<double> times, std::vector<double> values)
    : times_(std::move(times)), values_(std::move(values)) {
    const std::size_t n = times_.size();
    if (n < 2 || values_.size() != n) {
        throw std::invalid_argument("spline schedule needs at least two (time, value) knots");
    }
    for (std::size_t i = 1; i < n; ++i) {
        if (!(times_[i] > times_[i - 1])) {
            throw std::invalid_argument("spline knot times must be strictly increasing");
        }
    }
    // Natural spline: tridiagonal system for the interior second derivatives.
    second_.assign(n, 0.0);
    if (n > 2) {
        std::vector<double> diag(n, 0.0), rhs(n, 0.0), upper(n, 0.0);
        for (std::size_t i = 1; i + 1 < n; ++i) {
            const double h0 = times_[i] - times_[i - 1];
            const double h1 = times_[i + 1] - times_[i];
            diag[i] = 2.0 * (h0 + h1);
            upper[i] = h1;
            rhs[i] = 6.0 * ((values_[i + 1] - values_[i]) / h1 - (values_[i] - values_[i - 1]) / h0);
        }
        for (std::size_t i = 2; i + 1 < n; ++i) {
            const double lower = times_[i] - times_[i - 1];
            const double w = lower / diag[i - 1];
            diag[i] -= w * upper[i - 1];
            rhs[i] -= w * rhs[i - 1];
        }
        for (std::size_t i = n - 2; i >= 1; --i) {
            second_[i] = (rhs[i] - upper[i] * second_[i + 1]) / diag[i];
            if (i == 1) break;
        }
    }
}

std::size_t SplineSchedule::segment(double t) const {
    auto it = std::upper_bound(times_.begin(), times_.end(), t);
    std::size_t k = static_cast<std::size_t>(std::distance(times_.begin(), it));
    if (k == 0) return 0;
    return std::min(k - 1, times_.size() - 2);
}

double SplineSchedule::value(double t) const {
    const std::size_t k = segment(t);
    const double h = times_[k + 1] - times_[k];
    const double a = (times_[k + 1] - t) / h;
    const double b = (t - times_[k]) / h;
    return a * values_[k] + b * values_[k + 1] +
           ((a * a * a - a) * second_[k] + (b * b * b - b) * second_[k + 1]) * h * h / 6.0;
}

double SplineSchedule::derivative(double t) const {
    const std::size_t k = segment(t);
    const double h = times_[k + 1] - times_[k];
    const double a = (times_[k + 1] - t) / h;
    const double b = (t - times_[k]) / h;
    return (values_[k + 1] - values_[k]) / h +
           (-(3.0 * a * a - 1.0) * second_[k] + (3.0 * b * b - 1.0) * second_[k + 1]) * h / 6.0;
}

double SplineSchedule::antiderivative(double t) const {
    // Integral of segment k from its left knot to u, with b = (u - t_k)/h.
    auto partial = [this](std::size_t k, double u) {
        const double h = times_[k + 1] - times_[k];
        const double b = (u - times_[k]) / h;
        const double a = 1.0 - b;
        // int a db = (1 - a^2)/2, int b db = b^2/2, int (a^3-a) = (a^2/2 - a^4/4) - 1/4,
        // int (b^3-b) = b^4/4 - b^2/2
        const double lin = values_[k] * (1.0 - a * a) / 2.0 + values_[k + 1] * b * b / 2.0;
        const double cub = second_[k] * ((a * a / 2.0 - a * a * a * a / 4.0) - 0.25) +
                           second_[k + 1] * (b * b * b * b / 4.0 - b * b / 2.0);
        return h * (lin + cub * h * h / 6.0);
    };
    const std::size_t k = segment(t);
    double total = 0.0;
    for (std::size_t i = 0; i < k; ++i) total += partial(i, times_[i + 1]);
    return total + partial(k, t);
}

double schedule_value(const Schedule& s, double horizon, double t) {
    return std::visit(
        Overloaded{
            [](const ConstantSchedule& c) { return c.value; },
            [&](const RampSchedule& r) { return r.start + (r.end - r.start) * (t / horizon); },
            [&](const SinusoidSchedule& w) { return w.mean + w.amplitude * std::sin(w.omega * t + w.phase); },
            [&](const SplineSchedule& sp) { return sp.value(t); },
        },
        s);
}

double schedule_derivative(const Schedule& s, double horizon, double t) {
    return std::visit(
        Overloaded{
            [](const ConstantSchedule&) { return 0.0; },
            [&](const RampSchedule& r) { return (r.end - r.start) / horizon; },
            [&](const SinusoidSchedule& w) {
                return w.amplitude * w.omega * std::cos(w.omega * t + w.phase);
            },
            [&](const SplineSchedule& sp) { return sp.derivative(t); },
        },
        s);
}

double schedule_integral(const Schedule& s, double horizon, double t) {
    return std::visit(
        Overloaded{
            [&](const ConstantSchedule& c) { return c.value * t; },
            [&](const RampSchedule& r) { return r.start * t + 0.5 * (r.end - r.start) * t * t / horizon; },
            [&](const SinusoidSchedule& w) {
                double osc = 0.0;
                if (w.omega != 0.0) {
                    osc = w.amplitude * (std::cos(w.phase) - std::cos(w.omega * t + w.phase)) / w.omega;
                } else {
                    osc = w.amplitude * std::sin(w.phase) * t;
                }
                return w.mean * t + osc;
            },
            [&](const SplineSchedule& sp) { return sp.antiderivative(t) - sp.antiderivative(0.0); },
        },
        s);
}

void ScalingParameters::validate() const {
    if (n < 1) throw std::invalid_argument("lattice half-width N must be >= 1");
    if (!(alpha > 0.0)) throw std::invalid_argument("alpha must be > 0");
    if (!(gamma > 0.0)) throw std::invalid_argument("gamma must be > 0");
}

double ScalingParameters::time_scale() const {
    return std::pow(static_cast<double>(n), 2.0 + alpha);
}

BoundaryProtocol::BoundaryProtocol(Schedule left, Schedule right, double horizon, double floor)
    : left_(std::move(left)), right_(std::move(right)), horizon_(horizon), floor_(floor) {
    if (!(horizon_ > 0.0)) throw std::invalid_argument("protocol horizon T must be > 0");
    if (!(floor_ > 0.0 && floor_ < 0.5)) throw std::invalid_argument("floor a must lie in (0, 1/2)");
    if (const auto* sp = std::get_if<SplineSchedule>(&left_)) {
        if (sp->times().front() > 0.0 || sp->times().back() < horizon_)
            throw std::invalid_argument("left spline knots do not cover [0, T]");
    }
    if (const auto* sp = std::get_if<SplineSchedule>(&right_)) {
        if (sp->times().front() > 0.0 || sp->times().back() < horizon_)
            throw std::invalid_argument("right spline knots do not cover [0, T]");
    }
    for (int i = 0; i < kValidationPoints; ++i) {
        const double t = horizon_ * i / (kValidationPoints - 1);
        for (const Schedule* s : {&left_, &right_}) {
            const double v = schedule_value(*s, horizon_, t);
            if (!(v >= floor_ && v <= 1.0 - floor_)) {
                throw std::invalid_argument("reservoir density " + std::to_string(v) + " at t=" +
                                            std::to_string(t) + " leaves [a, 1-a]");
            }
        }
    }
}

BoundaryProtocol BoundaryProtocol::constant(double rho_minus, double rho_plus, double horizon,
                                            double floor) {
    return BoundaryProtocol(ConstantSchedule{rho_minus}, ConstantSchedule{rho_plus}, horizon, floor);
}

void BoundaryProtocol::check_time(double t) const {
    if (!(t >= 0.0 && t <= horizon_)) {
        throw std::domain_error("time " + std::to_string(t) + " outside [0, T]");
    }
}

double BoundaryProtocol::density(Side side, double t) const {
    check_time(t);
    return schedule_value(schedule(side), horizon_, t);
}

double BoundaryProtocol::density_derivative(Side side, double t) const {
    check_time(t);
    return schedule_derivative(schedule(side), horizon_, t);
}

double BoundaryProtocol::fugacity(Side side, double t) const { return logit(density(side, t)); }

double BoundaryProtocol::integrated_gradient(double t) const {
    return schedule_integral(right_, horizon_, t) - schedule_integral(left_, horizon_, t);
}

namespace {

nlohmann::json schedule_to_json(const Schedule& s) {
    return std::visit(
        Overloaded{
            [](const ConstantSchedule& c) { return nlohmann::json{{"type", "constant"}, {"value", c.value}}; },
            [](const RampSchedule& r) {
                return nlohmann::json{{"type", "ramp"}, {"start", r.start}, {"end", r.end}};
            },
            [](const SinusoidSchedule& w) {
                return nlohmann::json{{"type", "sinusoid"}, {"mean", w.mean}, {"amplitude", w.amplitude},
                                      {"omega", w.omega}, {"phase", w.phase}};
            },
            [](const SplineSchedule& sp) {
                return nlohmann::json{{"type", "spline"}, {"times", sp.times()}, {"values", sp.values()}};
            },
        },
        s);
}

Schedule schedule_from_json(const nlohmann::json& j) {
    const std::string type = j.at("type").get<std::string>();
    if (type == "constant") return ConstantSchedule{j.at("value").get<double>()};
    if (type == "ramp") return RampSchedule{j.at("start").get<double>(), j.at("end").get<double>()};
    if (type == "sinusoid") {
        return SinusoidSchedule{j.at("mean").get<double>(), j.value("amplitude", 0.0),
                                j.value("omega", 0.0), j.value("phase", 0.0)};
    }
    if (type == "spline") {
        return SplineSchedule(j.at("times").get<std::vector<double>>(),
                              j.at("values").get<std::vector<double>>());
    }
    throw std::invalid_argument("unknown schedule type '" + type + "'");
}

}  // namespace

nlohmann::json BoundaryProtocol::to_json() const {
    return {{"left", schedule_to_json(left_)},
            {"right", schedule_to_json(right_)},
            {"horizon", horizon_},
            {"floor", floor_}};
}

BoundaryProtocol BoundaryProtocol::from_json(const nlohmann::json& j) {
    return BoundaryProtocol(schedule_from_json(j.at("left")), schedule_from_json(j.at("right")),
                            j.at("horizon").get<double>(), j.value("floor", kDefaultFloor));
}

double boundary_density(const BoundaryProtocol& p, Side side, double t) { return p.density(side, t); }

double boundary_fugacity(const BoundaryProtocol& p, Side side, double t) { return p.fugacity(side, t); }

double quasi_static_profile(const BoundaryProtocol& p, double t, double y) {
    if (!(y >= -1.0 && y <= 1.0)) throw std::domain_error("profile coordinate y outside [-1, 1]");
    const double lo = p.density(Side::Left, t);
    const double hi = p.density(Side::Right, t);
    if (y == -1.0) return lo;
    if (y == 1.0) return hi;
    return 0.5 * (hi - lo) * y + 0.5 * (hi + lo);
}

double quasi_static_current(const BoundaryProtocol& p, double t, double gamma) {
    if (!(t >= 0.0 && t <= p.horizon())) throw std::domain_error("time outside [0, T]");
    return -0.5 * gamma * p.integrated_gradient(t);
}

double logit(double rho) { return std::log(rho / (1.0 - rho)); }

double relative_entropy_bernoulli(double rho, double nu) {
    if (!(nu > 0.0 && nu < 1.0)) throw std::domain_error("reference density must lie in (0, 1)");
    if (!(rho >= 0.0 && rho <= 1.0)) throw std::domain_error("density must lie in [0, 1]");
    double h = 0.0;
    if (rho > 0.0) h += rho * std::log(rho / nu);
    if (rho < 1.0) h += (1.0 - rho) * std::log((1.0 - rho) / (1.0 - nu));
    return std::max(h, 0.0);
}

double reversed_current_cost(const BoundaryProtocol& p) {
    auto integrand = [&p](double t) {
        const double lo = p.rho_minus(t);
        const double hi = p.rho_plus(t);
        return 0.5 * (relative_entropy_bernoulli(hi, lo) + relative_entropy_bernoulli(lo, hi));
    };
    return integrate_adaptive(integrand, 0.0, p.horizon(), 1e-10);
}

}  // namespace ssepld
