#include "ssepld/fields.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace ssepld {

void GridSpec::validate() const {
    if (!(horizon > 0.0)) throw std::invalid_argument("grid horizon must be > 0");
    if (time_steps < 1) throw std::invalid_argument("grid needs at least one time step");
    if (space_steps < 2) throw std::invalid_argument("grid needs at least two space steps");
}

DensityField::DensityField(GridSpec grid, std::vector<double> values)
    : grid_(grid), values_(std::move(values)) {
    grid_.validate();
    const std::size_t expected = static_cast<std::size_t>(grid_.time_nodes()) * grid_.space_nodes();
    if (values_.size() != expected) throw std::invalid_argument("density field has wrong size");
    for (double v : values_) {
        if (!(v >= 0.0 && v <= 1.0)) {
            throw std::invalid_argument("density value " + std::to_string(v) + " outside [0, 1]");
        }
    }
}

DensityField DensityField::quasi_static(const BoundaryProtocol& protocol, int time_steps,
                                        int space_steps) {
    GridSpec g{protocol.horizon(), time_steps, space_steps};
    g.validate();
    std::vector<double> v;
    v.reserve(static_cast<std::size_t>(g.time_nodes()) * g.space_nodes());
    for (int i = 0; i < g.time_nodes(); ++i) {
        for (int j = 0; j < g.space_nodes(); ++j) v.push_back(quasi_static_profile(protocol, g.t(i), g.y(j)));
    }
    return DensityField(g, std::move(v));
}

double DensityField::boundary_mismatch(const BoundaryProtocol& protocol) const {
    double worst = 0.0;
    for (int i = 0; i < grid_.time_nodes(); ++i) {
        const double t = grid_.t(i);
        worst = std::max(worst, std::abs(at(i, 0) - protocol.rho_minus(t)));
        worst = std::max(worst, std::abs(at(i, grid_.space_steps) - protocol.rho_plus(t)));
    }
    return worst;
}

CurrentPath::CurrentPath(double horizon, std::vector<double> values)
    : horizon_(horizon), values_(std::move(values)) {
    if (!(horizon_ > 0.0)) throw std::invalid_argument("current path horizon must be > 0");
    if (values_.size() < 3) throw std::invalid_argument("current path needs at least two time steps");
    if (values_.front() != 0.0) throw std::invalid_argument("current path must start at J(0) = 0");
}

CurrentPath CurrentPath::typical(const BoundaryProtocol& protocol, int time_steps, double gamma) {
    GridSpec g{protocol.horizon(), time_steps, 2};
    g.validate();
    std::vector<double> v(static_cast<std::size_t>(g.time_nodes()));
    for (int i = 0; i < g.time_nodes(); ++i) v[static_cast<std::size_t>(i)] = quasi_static_current(protocol, g.t(i), gamma);
    v[0] = 0.0;
    return CurrentPath(protocol.horizon(), std::move(v));
}

CurrentPath CurrentPath::from_slopes(double horizon, std::span<const double> slopes) {
    const double dt = horizon / static_cast<double>(slopes.size());
    std::vector<double> v(slopes.size() + 1, 0.0);
    for (std::size_t k = 0; k < slopes.size(); ++k) v[k + 1] = v[k] + dt * slopes[k];
    return CurrentPath(horizon, std::move(v));
}

std::vector<double> CurrentPath::interval_slopes() const {
    const double h = dt();
    std::vector<double> s(values_.size() - 1);
    for (std::size_t k = 0; k + 1 < values_.size(); ++k) s[k] = (values_[k + 1] - values_[k]) / h;
    return s;
}

std::vector<double> CurrentPath::node_derivatives() const {
    const std::vector<double> s = interval_slopes();
    const std::size_t m = s.size();
    std::vector<double> d(m + 1);
    for (std::size_t i = 1; i < m; ++i) d[i] = 0.5 * (s[i - 1] + s[i]);
    d[0] = 1.5 * s[0] - 0.5 * s[1];
    d[m] = 1.5 * s[m - 1] - 0.5 * s[m - 2];
    return d;
}

CurrentPath CurrentPath::negated() const {
    std::vector<double> v(values_.size());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = -values_[i];
    v[0] = 0.0;
    return CurrentPath(horizon_, std::move(v));
}

TiltField::TiltField(GridSpec grid, std::vector<double> values) : grid_(grid), values_(std::move(values)) {
    grid_.validate();
    const std::size_t expected = static_cast<std::size_t>(grid_.time_nodes()) * grid_.space_nodes();
    if (values_.size() != expected) throw std::invalid_argument("tilt field has wrong size");
    for (int i = 0; i < grid_.time_nodes(); ++i) {
        if (at(i, 0) != 0.0) throw std::invalid_argument("tilt field violates the constraint H(t, -1) = 0");
    }
}

TiltField TiltField::zero(const GridSpec& grid) {
    return TiltField(grid, std::vector<double>(static_cast<std::size_t>(grid.time_nodes()) * grid.space_nodes(), 0.0));
}

double TiltField::dy(int i, int j) const {
    const double h = grid_.dy();
    const int m = grid_.space_steps;
    if (j == 0) return (-3.0 * at(i, 0) + 4.0 * at(i, 1) - at(i, 2)) / (2.0 * h);
    if (j == m) return (3.0 * at(i, m) - 4.0 * at(i, m - 1) + at(i, m - 2)) / (2.0 * h);
    return (at(i, j + 1) - at(i, j - 1)) / (2.0 * h);
}

double TiltField::dyy(int i, int j) const {
    const double h = grid_.dy();
    const int c = std::clamp(j, 1, grid_.space_steps - 1);
    return (at(i, c + 1) - 2.0 * at(i, c) + at(i, c - 1)) / (h * h);
}

double TiltField::dt(int i, int j) const {
    const double h = grid_.dt();
    const int m = grid_.time_steps;
    if (m == 1) return (at(1, j) - at(0, j)) / h;
    if (i == 0) return (-3.0 * at(0, j) + 4.0 * at(1, j) - at(2, j)) / (2.0 * h);
    if (i == m) return (3.0 * at(m, j) - 4.0 * at(m - 1, j) + at(m - 2, j)) / (2.0 * h);
    return (at(i + 1, j) - at(i - 1, j)) / (2.0 * h);
}

namespace {

// Cell index and fractional position of u on a grid of `steps` cells of width h from lo.
std::pair<int, double> locate(double u, double lo, double h, int steps) {
    double s = (u - lo) / h;
    s = std::clamp(s, 0.0, static_cast<double>(steps));
    int k = std::min(static_cast<int>(s), steps - 1);
    return {k, s - k};
}

}  // namespace

double TiltField::interpolate(double t, double y) const {
    auto [i, a] = locate(t, 0.0, grid_.dt(), grid_.time_steps);
    auto [j, b] = locate(y, -1.0, grid_.dy(), grid_.space_steps);
    const double h00 = at(i, j), h01 = at(i, j + 1), h10 = at(i + 1, j), h11 = at(i + 1, j + 1);
    return (1 - a) * ((1 - b) * h00 + b * h01) + a * ((1 - b) * h10 + b * h11);
}

double TiltField::boundary_slope(double t, Side side) const {
    auto [i, a] = locate(t, 0.0, grid_.dt(), grid_.time_steps);
    const int j = side == Side::Left ? 0 : grid_.space_steps;
    return (1 - a) * dy(i, j) + a * dy(i + 1, j);
}

}  // namespace ssepld
