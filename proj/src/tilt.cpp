#include "ssepld/tilt.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace ssepld {

namespace {

void check_shape(int n, double horizon, int cells) {
    if (n < 1) throw std::invalid_argument("tilt needs N >= 1");
    if (!(horizon > 0.0)) throw std::invalid_argument("tilt horizon must be > 0");
    if (cells < 1) throw std::invalid_argument("tilt needs at least one time cell");
}

}  // namespace

TiltSpecification TiltSpecification::untilted(int n, double horizon) {
    check_shape(n, horizon, 1);
    TiltSpecification s;
    s.n_ = n;
    s.horizon_ = horizon;
    s.cells_ = 1;
    s.z_.assign(static_cast<std::size_t>(s.channels()), 0.0);
    s.finish();
    return s;
}

TiltSpecification TiltSpecification::from_function(int n, double horizon, int time_cells, const Function& h,
                                                   const Function& h_y, BoundaryTiltRule rule) {
    check_shape(n, horizon, time_cells);
    TiltSpecification s;
    s.n_ = n;
    s.horizon_ = horizon;
    s.cells_ = time_cells;
    const int ch = s.channels();
    const double inv_n = 1.0 / n;
    s.z_.resize(static_cast<std::size_t>(time_cells) * ch);
    for (int k = 0; k < time_cells; ++k) {
        const double t = 0.5 * (s.cell_start(k) + s.cell_end(k));
        if (std::abs(h(t, -1.0)) > 1e-12) throw std::invalid_argument("tilt must satisfy H(t, -1) = 0");
        double* row = s.z_.data() + static_cast<std::size_t>(k) * ch;
        for (int x = -n; x < n; ++x) row[x + n + 1] = h(t, (x + 1) * inv_n) - h(t, x * inv_n);
        if (rule == BoundaryTiltRule::LinearExtension) {
            row[0] = inv_n * h_y(t, -1.0);
            row[ch - 1] = inv_n * h_y(t, 1.0);
        } else {
            row[0] = -inv_n * h_y(t, -1.0);
            row[ch - 1] = inv_n * h_y(t, 1.0) - h(t, 1.0) + h(t, 1.0 - inv_n);
        }
    }
    s.finish();
    return s;
}

TiltSpecification TiltSpecification::from_field(int n, const TiltField& field, int time_cells,
                                                BoundaryTiltRule rule) {
    const int cells = time_cells > 0 ? time_cells : field.grid().time_steps;
    auto h = [&field](double t, double y) { return field.interpolate(t, y); };
    auto h_y = [&field](double t, double y) {
        return field.boundary_slope(t, y < 0.0 ? Side::Left : Side::Right);
    };
    return from_function(n, field.grid().horizon, cells, h, h_y, rule);
}

TiltSpecification TiltSpecification::from_values(int n, double horizon, int time_cells, std::vector<double> z) {
    check_shape(n, horizon, time_cells);
    TiltSpecification s;
    s.n_ = n;
    s.horizon_ = horizon;
    s.cells_ = time_cells;
    if (z.size() != static_cast<std::size_t>(time_cells) * s.channels()) {
        throw std::invalid_argument("tilt values have the wrong size");
    }
    s.z_ = std::move(z);
    s.finish();
    return s;
}

void TiltSpecification::finish() {
    z_max_ = 0.0;
    for (double v : z_) {
        if (!std::isfinite(v)) throw std::invalid_argument("tilt value is not finite");
        z_max_ = std::max(z_max_, std::abs(v));
    }
    zero_ = z_max_ == 0.0;
}

int TiltSpecification::cell_of(double t) const {
    const int k = static_cast<int>(t / cell_width());
    return std::clamp(k, 0, cells_ - 1);
}

}  // namespace ssepld
