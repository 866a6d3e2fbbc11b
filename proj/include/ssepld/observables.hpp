#pragma once

#include <functional>
#include <span>
#include <vector>

#include "ssepld/lattice.hpp"
#include "ssepld/protocol.hpp"

namespace ssepld {

// pi_N(y) = eta([Ny]) as a step function on [-1, 1].
class EmpiricalDensity {
public:
    explicit EmpiricalDensity(const LatticeState& state);
    double operator()(double y) const;
    // int_{-1}^{1} pi_N(y) dy, exact for the step function.
    double integral() const;
    int n() const { return n_; }

private:
    int n_;
    std::vector<double> values_;  // index x + N
};

EmpiricalDensity empirical_density(const LatticeState& state);

// Bulk (|x| < N(1-eps)): arithmetic mean of eta over |x'-x| <= eps N.
// Boundary zones: rho_+(t) for x >= N(1-eps), rho_-(t) for x <= -N(1-eps).
double local_average(const LatticeState& state, const BoundaryProtocol& protocol, double t, double eps, int x);

// Same convention on a raw occupation vector.
double local_average(std::span<const std::uint8_t> occupancy, int n, double rho_minus, double rho_plus,
                     double eps, int x);

int local_window(int n, double eps);  // floor(eps N)
bool in_bulk(int n, double eps, int x);

// h(t, [Ny]) / N^{1+alpha}
double rescaled_current(std::span<const std::int64_t> net_current, int n, double alpha, double y);

// V_{N,eps}(t, eta) = sum_{x=-N}^{N-1} G(t, x/N) [eta(x)(1-eta(x+1)) - phi(local average at x)]
double replacement_observable(const LatticeState& state, const BoundaryProtocol& protocol, double t,
                              double eps, const std::function<double(double, double)>& g);

}  // namespace ssepld
