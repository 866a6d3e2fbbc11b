#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "ssepld/functional.hpp"

namespace ssepld {

DensityField regularize_convex(const DensityField& rho, const BoundaryProtocol& protocol, double eps) {
    if (!(eps >= 0.0 && eps <= 1.0)) throw std::invalid_argument("convex regularization needs eps in [0, 1]");
    const GridSpec& g = rho.grid();
    std::vector<double> v(rho.values().size());
    std::size_t k = 0;
    for (int i = 0; i < g.time_nodes(); ++i) {
        for (int j = 0; j < g.space_nodes(); ++j, ++k) {
            const double bar = quasi_static_profile(protocol, g.t(i), g.y(j));
            v[k] = std::clamp((1.0 - eps) * rho.at(i, j) + eps * bar, 0.0, 1.0);
        }
    }
    return DensityField(g, std::move(v));
}

namespace {

// (I - eps Delta_D)^{-1} applied to the interior values of r (r.front() and
// r.back() are ignored and returned as zero).
std::vector<double> dirichlet_resolvent(const std::vector<double>& r, double eps, double h) {
    const std::size_t m = r.size() - 1;
    const double c = eps / (h * h);
    std::vector<double> sub(m - 1, -c), diag(m - 1, 1.0 + 2.0 * c), sup(m - 1, -c);
    std::vector<double> rhs(r.begin() + 1, r.end() - 1);
    if (!solve_tridiagonal(sub, diag, sup, rhs)) throw std::logic_error("singular Dirichlet resolvent system");
    std::vector<double> u(m + 1, 0.0);
    std::copy(rhs.begin(), rhs.end(), u.begin() + 1);
    return u;
}

// (I - eps Delta_N)^{-1} on nodes with reflecting ghosts w_{-1} = w_1, w_{M+1} = w_{M-1}.
std::vector<double> neumann_resolvent(std::vector<double> w, double eps, double h) {
    const std::size_t n = w.size();
    const double c = eps / (h * h);
    std::vector<double> sub(n, -c), diag(n, 1.0 + 2.0 * c), sup(n, -c);
    sup[0] = -2.0 * c;
    sub[n - 1] = -2.0 * c;
    if (!solve_tridiagonal(sub, diag, sup, w)) throw std::logic_error("singular Neumann resolvent system");
    return w;
}

std::vector<double> centred_derivative(std::span<const double> f, double h) {
    const std::size_t m = f.size() - 1;
    std::vector<double> d(m + 1);
    d[0] = (-3.0 * f[0] + 4.0 * f[1] - f[2]) / (2.0 * h);
    d[m] = (3.0 * f[m] - 4.0 * f[m - 1] + f[m - 2]) / (2.0 * h);
    for (std::size_t j = 1; j < m; ++j) d[j] = (f[j + 1] - f[j - 1]) / (2.0 * h);
    return d;
}

}  // namespace

DensityField regularize_resolvent(const DensityField& rho, const BoundaryProtocol& protocol, double eps) {
    if (!(eps > 0.0)) throw std::invalid_argument("resolvent regularization needs eps > 0");
    const GridSpec& g = rho.grid();
    std::vector<double> v(rho.values().size());
    std::vector<double> bar(static_cast<std::size_t>(g.space_nodes())), r(bar.size());
    for (int i = 0; i < g.time_nodes(); ++i) {
        const double t = g.t(i);
        for (int j = 0; j < g.space_nodes(); ++j) {
            bar[static_cast<std::size_t>(j)] = quasi_static_profile(protocol, t, g.y(j));
            r[static_cast<std::size_t>(j)] = rho.at(i, j) - bar[static_cast<std::size_t>(j)];
        }
        const std::vector<double> u = dirichlet_resolvent(r, eps, g.dy());
        double* out = v.data() + static_cast<std::size_t>(i) * g.space_nodes();
        for (int j = 0; j < g.space_nodes(); ++j) {
            out[j] = std::clamp(bar[static_cast<std::size_t>(j)] + u[static_cast<std::size_t>(j)], 0.0, 1.0);
        }
        out[0] = protocol.rho_minus(t);
        out[g.space_steps] = protocol.rho_plus(t);
    }
    return DensityField(g, std::move(v));
}

double resolvent_identity_residual(const DensityField& rho, const BoundaryProtocol& protocol, double eps) {
    const DensityField smooth = regularize_resolvent(rho, protocol, eps);
    const GridSpec& g = rho.grid();
    double worst = 0.0;
    for (int i = 0; i < g.time_nodes(); ++i) {
        const std::vector<double> lhs = centred_derivative(smooth.row(i), g.dy());
        const std::vector<double> rhs = neumann_resolvent(centred_derivative(rho.row(i), g.dy()), eps, g.dy());
        for (int j = 1; j < g.space_steps; ++j) {
            worst = std::max(worst, std::abs(lhs[static_cast<std::size_t>(j)] - rhs[static_cast<std::size_t>(j)]));
        }
    }
    return worst;
}

}  // namespace ssepld
