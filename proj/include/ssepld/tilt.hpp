#pragma once

// Lattice tilt z_+(t, x) = H(t, (x+1)/N) - H(t, x/N) on the channels
// x = -N-1..N (channel index c = x + N + 1), and z_- = -z_+. The value is held
// constant on each of a fixed number of time cells, taken at the cell midpoint.

#include <functional>
#include <span>
#include <vector>

#include "ssepld/fields.hpp"
#include "ssepld/protocol.hpp"

namespace ssepld {

// How the two boundary channels see H outside [-1, 1].
enum class BoundaryTiltRule {
    // H extended linearly past +-1 with slope d_yH(t, +-1):
    //   z(c=0) = (1/N) d_yH(t,-1),  z(c=2N+1) = (1/N) d_yH(t,1).
    LinearExtension,
    // z(c=0) = -(1/N) d_yH(t,-1),
    // z(c=2N+1) = (1/N) d_yH(t,1) - H(t,1) + H(t,1-1/N).
    Literal,
};

class TiltSpecification {
public:
    using Function = std::function<double(double t, double y)>;

    TiltSpecification() = default;

    static TiltSpecification untilted(int n, double horizon);

    // H and d_yH supplied as functions; H(t,-1) must vanish.
    static TiltSpecification from_function(int n, double horizon, int time_cells, const Function& h,
                                           const Function& h_y,
                                           BoundaryTiltRule rule = BoundaryTiltRule::LinearExtension);

    // Uses the grid's time steps as cells unless time_cells > 0.
    static TiltSpecification from_field(int n, const TiltField& field, int time_cells = 0,
                                        BoundaryTiltRule rule = BoundaryTiltRule::LinearExtension);

    // Direct channel values, one row of 2N+2 entries per cell.
    static TiltSpecification from_values(int n, double horizon, int time_cells, std::vector<double> z);

    int n() const { return n_; }
    double horizon() const { return horizon_; }
    int cells() const { return cells_; }
    int channels() const { return 2 * n_ + 2; }
    double cell_width() const { return horizon_ / cells_; }
    double cell_start(int k) const { return k * cell_width(); }
    double cell_end(int k) const { return k + 1 == cells_ ? horizon_ : (k + 1) * cell_width(); }
    int cell_of(double t) const;

    bool is_zero() const { return zero_; }
    double z_max() const { return z_max_; }

    double z(int cell, int channel) const { return z_[static_cast<std::size_t>(cell) * channels() + channel]; }
    std::span<const double> row(int cell) const {
        return {z_.data() + static_cast<std::size_t>(cell) * channels(), static_cast<std::size_t>(channels())};
    }

private:
    void finish();

    int n_ = 1;
    double horizon_ = 1.0;
    int cells_ = 1;
    bool zero_ = true;
    double z_max_ = 0.0;
    std::vector<double> z_;
};

}  // namespace ssepld
