#include "ssepld/observables.hpp"

#include <cmath>
#include <stdexcept>

namespace ssepld {

EmpiricalDensity::EmpiricalDensity(const LatticeState& state) : n_(state.n()) {
    values_.reserve(static_cast<std::size_t>(state.sites()));
    for (auto v : state.occupancy()) values_.push_back(v);
}

double EmpiricalDensity::operator()(double y) const {
    if (!(y >= -1.0 && y <= 1.0)) throw std::domain_error("empirical density evaluated outside [-1, 1]");
    const int x = static_cast<int>(std::floor(n_ * y));
    return values_[static_cast<std::size_t>(std::min(x, n_) + n_)];
}

double EmpiricalDensity::integral() const {
    // [Ny] = x on [x/N, (x+1)/N); the point y = 1 has measure zero.
    double s = 0.0;
    for (int x = -n_; x < n_; ++x) s += values_[static_cast<std::size_t>(x + n_)];
    return s / n_;
}

EmpiricalDensity empirical_density(const LatticeState& state) { return EmpiricalDensity(state); }

int local_window(int n, double eps) { return static_cast<int>(std::floor(eps * n + 1e-12)); }

bool in_bulk(int n, double eps, int x) { return std::abs(x) < n * (1.0 - eps); }

double local_average(std::span<const std::uint8_t> occupancy, int n, double rho_minus, double rho_plus,
                     double eps, int x) {
    if (!(eps > 0.0 && eps < 1.0)) throw std::invalid_argument("local average radius eps must lie in (0, 1)");
    if (x < -n || x > n) throw std::out_of_range("site outside -N..N");
    if (!in_bulk(n, eps, x)) return x > 0 ? rho_plus : rho_minus;
    const int w = local_window(n, eps);
    const int lo = std::max(-n, x - w);
    const int hi = std::min(n, x + w);
    int s = 0;
    for (int k = lo; k <= hi; ++k) s += occupancy[static_cast<std::size_t>(k + n)];
    return static_cast<double>(s) / (hi - lo + 1);
}

double local_average(const LatticeState& state, const BoundaryProtocol& protocol, double t, double eps, int x) {
    return local_average(state.occupancy(), state.n(), protocol.rho_minus(t), protocol.rho_plus(t), eps, x);
}

double rescaled_current(std::span<const std::int64_t> net_current, int n, double alpha, double y) {
    if (!(y >= -1.0 && y <= 1.0)) throw std::domain_error("rescaled current evaluated outside [-1, 1]");
    if (net_current.size() != static_cast<std::size_t>(2 * n + 2)) {
        throw std::invalid_argument("current vector has the wrong number of channels");
    }
    const int x = std::min(static_cast<int>(std::floor(n * y)), n);
    return static_cast<double>(net_current[static_cast<std::size_t>(x + n + 1)]) / std::pow(n, 1.0 + alpha);
}

double replacement_observable(const LatticeState& state, const BoundaryProtocol& protocol, double t,
                              double eps, const std::function<double(double, double)>& g) {
    const int n = state.n();
    const double rm = protocol.rho_minus(t), rp = protocol.rho_plus(t);
    double v = 0.0;
    for (int x = -n; x < n; ++x) {
        const double weight = g ? g(t, static_cast<double>(x) / n) : 1.0;
        const double pair = state.at(x) * (1 - state.at(x + 1));
        v += weight * (pair - mobility_phi(local_average(state.occupancy(), n, rm, rp, eps, x)));
    }
    return v;
}

}  // namespace ssepld
