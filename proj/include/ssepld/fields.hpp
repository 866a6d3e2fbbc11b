#pragma once

// Grid functions on [0,T] x [-1,1]: density rho(t,y), current J(t), tilt H(t,y).

#include <span>
#include <vector>

#include "ssepld/protocol.hpp"

namespace ssepld {

struct GridSpec {
    double horizon = 1.0;
    int time_steps = 1;   // M_t: nodes t_i = i*dt, i = 0..M_t
    int space_steps = 2;  // M_y: nodes y_j = -1 + j*dy, j = 0..M_y

    void validate() const;
    double dt() const { return horizon / time_steps; }
    double dy() const { return 2.0 / space_steps; }
    double t(int i) const { return i == time_steps ? horizon : i * dt(); }
    double y(int j) const { return j == space_steps ? 1.0 : -1.0 + j * dy(); }
    int time_nodes() const { return time_steps + 1; }
    int space_nodes() const { return space_steps + 1; }
    bool operator==(const GridSpec&) const = default;
};

class DensityField {
public:
    DensityField() = default;
    // Values outside [0, 1] throw std::invalid_argument.
    DensityField(GridSpec grid, std::vector<double> values);

    static DensityField quasi_static(const BoundaryProtocol& protocol, int time_steps, int space_steps);

    const GridSpec& grid() const { return grid_; }
    double at(int i, int j) const { return values_[index(i, j)]; }
    std::span<const double> row(int i) const {
        return {values_.data() + index(i, 0), static_cast<std::size_t>(grid_.space_nodes())};
    }
    const std::vector<double>& values() const { return values_; }

    // max_i |rho(t_i, +-1) - rho_+-(t_i)|
    double boundary_mismatch(const BoundaryProtocol& protocol) const;

private:
    std::size_t index(int i, int j) const {
        return static_cast<std::size_t>(i) * grid_.space_nodes() + static_cast<std::size_t>(j);
    }

    GridSpec grid_;
    std::vector<double> values_;
};

// J(t_i) on a uniform time grid with J(0) = 0.
class CurrentPath {
public:
    CurrentPath() = default;
    CurrentPath(double horizon, std::vector<double> values);

    // J-bar(t) = -(gamma/2) int_0^t (rho_+ - rho_-) ds at the grid nodes.
    static CurrentPath typical(const BoundaryProtocol& protocol, int time_steps, double gamma = 1.0);
    // J(t_i) = sum_{k<i} dt * slopes[k]
    static CurrentPath from_slopes(double horizon, std::span<const double> slopes);

    double horizon() const { return horizon_; }
    int time_steps() const { return static_cast<int>(values_.size()) - 1; }
    double dt() const { return horizon_ / time_steps(); }
    const std::vector<double>& values() const { return values_; }
    double at(int i) const { return values_[static_cast<std::size_t>(i)]; }

    // (J(t_{i+1}) - J(t_i)) / dt for i = 0..M_t-1
    std::vector<double> interval_slopes() const;
    // Nodal J'(t_i): centred differences inside, second-order one-sided at the ends.
    std::vector<double> node_derivatives() const;

    CurrentPath negated() const;

private:
    double horizon_ = 1.0;
    std::vector<double> values_;
};

// H(t_i, y_j) with H(t, -1) = 0.
class TiltField {
public:
    TiltField() = default;
    // Throws std::invalid_argument unless H(t_i, -1) == 0 for every i.
    TiltField(GridSpec grid, std::vector<double> values);

    static TiltField zero(const GridSpec& grid);

    const GridSpec& grid() const { return grid_; }
    double at(int i, int j) const { return values_[index(i, j)]; }
    const std::vector<double>& values() const { return values_; }

    double dy(int i, int j) const;   // centred inside, second-order one-sided at y = +-1
    double dyy(int i, int j) const;  // three-point stencil, shifted inward at the ends
    double dt(int i, int j) const;   // centred inside, second-order one-sided at t = 0, T

    // Bilinear interpolation, and the y-derivative at the ends interpolated
    // linearly in t; used by the simulator to build lattice tilts.
    double interpolate(double t, double y) const;
    double boundary_slope(double t, Side side) const;

private:
    std::size_t index(int i, int j) const {
        return static_cast<std::size_t>(i) * grid_.space_nodes() + static_cast<std::size_t>(j);
    }

    GridSpec grid_;
    std::vector<double> values_;
};

}  // namespace ssepld
