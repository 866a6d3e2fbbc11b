#include "ssepld/functional.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "ssepld/simd/kernels.hpp"

namespace ssepld {

namespace {

void check_aligned(const CurrentPath& j, const DensityField& rho) {
    const GridSpec& g = rho.grid();
    if (j.time_steps() != g.time_steps || std::abs(j.horizon() - g.horizon) > 1e-12 * g.horizon) {
        throw std::invalid_argument("current path and density field are on different time grids");
    }
}

// Smallest rho with phi(rho) >= phi_min.
double density_floor(double phi_min) { return 0.5 * (1.0 - std::sqrt(1.0 - 4.0 * phi_min)); }

// Clamped copy of a row and its logits; returns true if the clamp was active.
bool prepare_row(std::span<const double> row, double lo, std::vector<double>& r, std::vector<double>& l) {
    bool clamped = false;
    r.resize(row.size());
    l.resize(row.size());
    for (std::size_t k = 0; k < row.size(); ++k) {
        double v = row[k];
        if (v < lo) {
            v = lo;
            clamped = true;
        } else if (v > 1.0 - lo) {
            v = 1.0 - lo;
            clamped = true;
        }
        r[k] = v;
        l[k] = logit(v);
    }
    return clamped;
}

std::vector<double> trapezoid_weights(int steps, double h) {
    std::vector<double> w(static_cast<std::size_t>(steps) + 1, h);
    w.front() = w.back() = 0.5 * h;
    return w;
}

}  // namespace

RateBreakdown rate_functional_closed(const CurrentPath& j, const DensityField& rho, const BoundaryProtocol& protocol,
                                     const RateOptions& options) {
    check_aligned(j, rho);
    const GridSpec& g = rho.grid();
    RateBreakdown out;
    out.boundary_mismatch = rho.boundary_mismatch(protocol);
    const double tol = options.tol_bc < 0.0 ? 2.0 * g.dy() : options.tol_bc;
    if (out.boundary_mismatch > tol) {
        out.finite = false;
        out.total = out.current_term = out.gradient_term = std::numeric_limits<double>::infinity();
        out.cross_term = std::numeric_limits<double>::quiet_NaN();
        return out;
    }
    const auto& k = simd::active();
    const std::vector<double> dj = j.node_derivatives();
    const std::vector<double> wt = trapezoid_weights(g.time_steps, g.dt());
    const double lo = density_floor(options.phi_min);
    std::vector<double> r, l;
    for (int i = 0; i < g.time_nodes(); ++i) {
        out.floor_active |= prepare_row(rho.row(i), lo, r, l);
        const simd::CellSums s = k.cell_rate_terms(r.data(), l.data(), static_cast<std::size_t>(g.space_steps),
                                                   dj[static_cast<std::size_t>(i)], g.dy());
        const double w = wt[static_cast<std::size_t>(i)];
        out.current_term += w * s.current_sq;
        out.gradient_term += w * s.gradient_sq;
        out.cross_term += w * s.cross;
    }
    out.total = out.current_term + out.gradient_term + out.cross_term;
    return out;
}

std::vector<double> rate_density_in_time(const CurrentPath& j, const DensityField& rho, const RateOptions& options) {
    check_aligned(j, rho);
    const GridSpec& g = rho.grid();
    const auto& k = simd::active();
    const std::vector<double> dj = j.node_derivatives();
    const double lo = density_floor(options.phi_min);
    std::vector<double> r, l, out(static_cast<std::size_t>(g.time_nodes()));
    for (int i = 0; i < g.time_nodes(); ++i) {
        prepare_row(rho.row(i), lo, r, l);
        const simd::CellSums s = k.cell_rate_terms(r.data(), l.data(), static_cast<std::size_t>(g.space_steps),
                                                   dj[static_cast<std::size_t>(i)], g.dy());
        out[static_cast<std::size_t>(i)] = s.current_sq + s.gradient_sq + s.cross;
    }
    return out;
}

double variational_objective(const TiltField& h, const CurrentPath& j, const DensityField& rho,
                             const BoundaryProtocol& protocol) {
    check_aligned(j, rho);
    const GridSpec& g = rho.grid();
    if (!(h.grid() == g)) throw std::invalid_argument("tilt field and density field are on different grids");
    for (int i = 0; i < g.time_nodes(); ++i) {
        if (h.at(i, 0) != 0.0) throw std::invalid_argument("tilt field violates the constraint H(t, -1) = 0");
    }
    const int m = g.space_steps;
    const std::vector<double> wt = trapezoid_weights(g.time_steps, g.dt());
    const std::vector<double> wy = trapezoid_weights(m, g.dy());
    double value = h.at(g.time_steps, m) * j.at(g.time_steps);
    for (int i = 0; i < g.time_nodes(); ++i) {
        const double t = g.t(i);
        double slice = -h.dt(i, m) * j.at(i) + h.dy(i, m) * protocol.rho_plus(t) - h.dy(i, 0) * protocol.rho_minus(t);
        for (int y = 0; y <= m; ++y) {
            const double r = rho.at(i, y);
            const double hy = h.dy(i, y);
            slice -= wy[static_cast<std::size_t>(y)] * (h.dyy(i, y) * r + hy * hy * mobility_phi(r));
        }
        value += wt[static_cast<std::size_t>(i)] * slice;
    }
    return value;
}

TiltField optimal_tilt(const CurrentPath& j, const DensityField& rho, double phi_min) {
    check_aligned(j, rho);
    const GridSpec& g = rho.grid();
    const std::vector<double> dj = j.node_derivatives();
    const double dy = g.dy();
    std::vector<double> v(static_cast<std::size_t>(g.time_nodes()) * g.space_nodes(), 0.0);
    for (int i = 0; i < g.time_nodes(); ++i) {
        const auto row = rho.row(i);
        for (double r : row) {
            if (mobility_phi(r) < phi_min) throw std::domain_error("density too close to 0 or 1 for the optimal tilt; regularize first");
        }
        double* out = v.data() + static_cast<std::size_t>(i) * g.space_nodes();
        const double jp = dj[static_cast<std::size_t>(i)];
        for (int y = 0; y < g.space_steps; ++y) {
            const double a = row[static_cast<std::size_t>(y)], b = row[static_cast<std::size_t>(y) + 1];
            const double dl = logit(b) - logit(a);
            const double d = b - a;
            const double mean_inv = std::abs(d) > 1e-7 ? dl / d : 1.0 / mobility_phi(0.5 * (a + b));
            out[y + 1] = out[y] + 0.5 * (jp * dy * mean_inv + dl);
        }
    }
    return TiltField(g, std::move(v));
}

double current_marginal_Q(const CurrentPath& j, const DensityField& rho, const BoundaryProtocol& protocol) {
    check_aligned(j, rho);
    const GridSpec& g = rho.grid();
    const std::vector<double> dj = j.node_derivatives();
    const std::vector<double> wt = trapezoid_weights(g.time_steps, g.dt());
    double q = 0.0;
    for (int i = 0; i < g.time_nodes(); ++i) {
        const auto row = rho.row(i);
        // Simpson is exact for the quadratic phi on each linear cell.
        double phibar = 0.0;
        for (int y = 0; y < g.space_steps; ++y) {
            const double a = row[static_cast<std::size_t>(y)], b = row[static_cast<std::size_t>(y) + 1];
            phibar += g.dy() / 6.0 * (mobility_phi(a) + 4.0 * mobility_phi(0.5 * (a + b)) + mobility_phi(b));
        }
        const double t = g.t(i);
        const double num = 2.0 * dj[static_cast<std::size_t>(i)] + protocol.rho_plus(t) - protocol.rho_minus(t);
        q += wt[static_cast<std::size_t>(i)] * 0.25 * num * num / phibar;
    }
    return q;
}

double fluctuation_difference(const CurrentPath& j, const BoundaryProtocol& protocol) {
    const std::vector<double> dj = j.node_derivatives();
    const int m = j.time_steps();
    const std::vector<double> wt = trapezoid_weights(m, j.dt());
    double s = 0.0;
    for (int i = 0; i <= m; ++i) {
        const double t = i == m ? j.horizon() : i * j.dt();
        s += wt[static_cast<std::size_t>(i)] * dj[static_cast<std::size_t>(i)] *
             (logit(protocol.rho_plus(t)) - logit(protocol.rho_minus(t)));
    }
    return s;
}

CurrentPath truncate_current(const CurrentPath& j, double k) {
    if (!(k > 0.0)) throw std::invalid_argument("truncation level k must be > 0");
    std::vector<double> s = j.interval_slopes();
    for (double& v : s) v = std::clamp(v, -k, k);
    return CurrentPath::from_slopes(j.horizon(), s);
}

bool solve_tridiagonal(std::vector<double> sub, std::vector<double> diag, std::vector<double> sup,
                       std::vector<double>& rhs) {
    const std::size_t n = diag.size();
    for (std::size_t i = 1; i < n; ++i) {
        if (diag[i - 1] == 0.0) return false;
        const double m = sub[i] / diag[i - 1];
        diag[i] -= m * sup[i - 1];
        rhs[i] -= m * rhs[i - 1];
    }
    if (n == 0 || diag[n - 1] == 0.0) return n == 0;
    rhs[n - 1] /= diag[n - 1];
    for (std::size_t i = n - 1; i-- > 0;) rhs[i] = (rhs[i] - sup[i] * rhs[i + 1]) / diag[i];
    return true;
}

}  // namespace ssepld
