#include "ssepld/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "ssepld/simd/kernels.hpp"

namespace ssepld {

namespace {

void check_size(int n, int max_n) {
    if (n > max_n) {
        throw std::length_error("oracle refuses N=" + std::to_string(n) + " (limit " + std::to_string(max_n) +
                                ", state space 2^" + std::to_string(2 * n + 1) + ")");
    }
}

// Channel structure with rates at time t. Bulk patterns: bit x + 2 bit x+1.
std::vector<ChannelRates> make_channels(const ScalingParameters& scaling, const BoundaryProtocol& protocol, double t) {
    const int n = scaling.n;
    const double s = scaling.time_scale();
    const double rm = protocol.rho_minus(t), rp = protocol.rho_plus(t);
    std::vector<ChannelRates> ch;
    ch.reserve(static_cast<std::size_t>(2 * n + 2));
    // Left reservoir, site -N at bit 0: entry (+) when empty, exit (-) when full.
    ch.push_back({0, 0u, 1u, 1u, {s * rm, s * (1.0 - rm)}, {+1, -1}});
    for (int b = 0; b < 2 * n; ++b) {
        const double r = scaling.gamma * s;
        ch.push_back({b + 1, static_cast<unsigned>(b), 3u, std::size_t{3} << b, {0.0, r, r, 0.0}, {0, +1, -1, 0}});
    }
    // Right reservoir, site N at bit 2N: exit (+) when full, entry (-) when empty.
    ch.push_back({2 * n + 1, static_cast<unsigned>(2 * n), 1u, std::size_t{1} << (2 * n), {s * rp, s * (1.0 - rp)}, {-1, +1}});
    return ch;
}

void update_boundary_rates(std::vector<ChannelRates>& ch, const ScalingParameters& scaling,
                           const BoundaryProtocol& protocol, double t) {
    const double s = scaling.time_scale();
    const double rm = protocol.rho_minus(t), rp = protocol.rho_plus(t);
    ch.front().out_rate = {s * rm, s * (1.0 - rm)};
    ch.back().out_rate = {s * rp, s * (1.0 - rp)};
}

// Right-hand side of the (possibly tilted) forward equation plus occupation integrals.
class ForwardRhs {
public:
    ForwardRhs(const ScalingParameters& scaling, const BoundaryProtocol& protocol, const std::vector<double>* z,
               bool compensate)
        : scaling_(scaling),
          protocol_(protocol),
          z_(z),
          compensate_(compensate),
          n_(scaling.n),
          states_(std::size_t{1} << (2 * scaling.n + 1)),
          channels_(make_channels(scaling, protocol, 0.0)),
          kernels_(simd::active()) {
        if (compensate_) comp_.resize(states_);
    }

    std::size_t states() const { return states_; }
    std::size_t dimension() const { return states_ + static_cast<std::size_t>(2 * n_ + 1); }

    void operator()(double t, const double* y, double* dy) {
        update_boundary_rates(channels_, scaling_, protocol_, t);
        std::fill(dy, dy + states_, 0.0);
        for (const ChannelRates& c : channels_) {
            const std::size_t patterns = c.out_rate.size();
            double gain[4] = {0, 0, 0, 0}, loss[4] = {0, 0, 0, 0};
            const unsigned flip = static_cast<unsigned>(patterns - 1);  // pattern of the partner is pat ^ flip
            const double zc = z_ ? (*z_)[static_cast<std::size_t>(c.channel)] : 0.0;
            for (std::size_t pat = 0; pat < patterns; ++pat) {
                loss[pat] = c.out_rate[pat];
                const std::size_t from = pat ^ flip;
                const int dir = c.direction[from];
                gain[pat] = dir == 0 ? 0.0 : c.out_rate[from] * std::exp(dir * zc);
            }
            kernels_.pattern_flip(y, dy, states_, c.shift, c.mask, c.partner, gain, loss);
        }
        if (compensate_) {
            std::fill(comp_.begin(), comp_.end(), 0.0);
            for (const ChannelRates& c : channels_) {
                const double zc = (*z_)[static_cast<std::size_t>(c.channel)];
                double e[4] = {0, 0, 0, 0};
                for (std::size_t pat = 0; pat < c.out_rate.size(); ++pat) {
                    const int dir = c.direction[pat];
                    e[pat] = dir == 0 ? 0.0 : c.out_rate[pat] * std::expm1(dir * zc);
                }
                for (std::size_t i = 0; i < states_; ++i) comp_[i] += e[(i >> c.shift) & c.mask];
            }
            kernels_.diagonal_sub(comp_.data(), y, dy, states_);
        }
        // d/dt int E[eta(x)] = sum over configurations with bit x set.
        for (int k = 0; k < 2 * n_ + 1; ++k) {
            const std::size_t bit = std::size_t{1} << k;
            double m = 0.0;
            for (std::size_t i = 0; i < states_; ++i) {
                if (i & bit) m += y[i];
            }
            dy[states_ + static_cast<std::size_t>(k)] = m;
        }
    }

private:
    const ScalingParameters& scaling_;
    const BoundaryProtocol& protocol_;
    const std::vector<double>* z_;
    bool compensate_;
    int n_;
    std::size_t states_;
    std::vector<ChannelRates> channels_;
    const simd::KernelTable& kernels_;
    std::vector<double> comp_;
};

// Dormand-Prince 5(4) with FSAL. After every accepted step the probability
// components are rescaled to unit sum; with track_log the log of the scale is
// accumulated.
struct Dopri {
    long steps = 0;
    double log_scale = 0.0;
    double max_drift = 0.0;
};

void dopri5(ForwardRhs& f, std::vector<double>& y, double t0, double t1, const OracleOptions& opt, Dopri& stats,
            bool track_log, bool stochastic) {
    if (t1 <= t0) return;
    static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
    static constexpr double a21 = 1.0 / 5;
    static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
    static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
    static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
    static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                            a65 = -5103.0 / 18656;
    static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784, b6 = 11.0 / 84;
    static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                            e6 = 22.0 / 525, e7 = -1.0 / 40;
    const auto& k = simd::active();
    const std::size_t d = y.size();
    const std::size_t ns = f.states();
    std::vector<double> k1(d), k2(d), k3(d), k4(d), k5(d), k6(d), k7(d), tmp(d), ynew(d), err(d);

    auto stage = [&](std::initializer_list<std::pair<double, const std::vector<double>*>> terms, double h) {
        std::copy(y.begin(), y.end(), tmp.begin());
        for (const auto& [a, v] : terms) k.axpy(h * a, v->data(), tmp.data(), d);
    };

    double t = t0;
    f(t, y.data(), k1.data());
    // Initial step from the largest decay rate of the first derivative.
    double scale = 0.0;
    for (std::size_t i = 0; i < ns; ++i) scale = std::max(scale, std::abs(k1[i]) / (opt.atol + opt.rtol * std::abs(y[i])));
    double h = scale > 0.0 ? std::min(t1 - t0, 0.01 / std::pow(scale, 0.2) * std::pow(opt.atol, 0.2)) : (t1 - t0);
    h = std::max(h, 1e-12 * (t1 - t0));
    const double h_min = 1e-14 * std::max(1.0, std::abs(t1));
    while (t < t1) {
        if (stats.steps >= opt.max_steps) {
            throw std::runtime_error("oracle step budget exhausted; use a smaller N or a looser tolerance");
        }
        const bool last = t + h >= t1;
        if (last) h = t1 - t;
        stage({{a21, &k1}}, h);
        f(t + c2 * h, tmp.data(), k2.data());
        stage({{a31, &k1}, {a32, &k2}}, h);
        f(t + c3 * h, tmp.data(), k3.data());
        stage({{a41, &k1}, {a42, &k2}, {a43, &k3}}, h);
        f(t + c4 * h, tmp.data(), k4.data());
        stage({{a51, &k1}, {a52, &k2}, {a53, &k3}, {a54, &k4}}, h);
        f(t + c5 * h, tmp.data(), k5.data());
        stage({{a61, &k1}, {a62, &k2}, {a63, &k3}, {a64, &k4}, {a65, &k5}}, h);
        f(t + h, tmp.data(), k6.data());
        std::copy(y.begin(), y.end(), ynew.begin());
        k.axpy(h * b1, k1.data(), ynew.data(), d);
        k.axpy(h * b3, k3.data(), ynew.data(), d);
        k.axpy(h * b4, k4.data(), ynew.data(), d);
        k.axpy(h * b5, k5.data(), ynew.data(), d);
        k.axpy(h * b6, k6.data(), ynew.data(), d);
        const double t_new = last ? t1 : t + h;
        f(t_new, ynew.data(), k7.data());
        std::fill(err.begin(), err.end(), 0.0);
        k.axpy(h * e1, k1.data(), err.data(), d);
        k.axpy(h * e3, k3.data(), err.data(), d);
        k.axpy(h * e4, k4.data(), err.data(), d);
        k.axpy(h * e5, k5.data(), err.data(), d);
        k.axpy(h * e6, k6.data(), err.data(), d);
        k.axpy(h * e7, k7.data(), err.data(), d);
        const double en = k.scaled_error_max(err.data(), y.data(), ynew.data(), opt.atol, opt.rtol, d);
        if (!std::isfinite(en)) {
            h *= 0.2;
            if (h < h_min) throw std::runtime_error("oracle step size underflow; use a smaller N or a looser tolerance");
            continue;
        }
        if (en <= 1.0) {
            ++stats.steps;
            t = t_new;
            std::swap(y, ynew);
            std::swap(k1, k7);
            const double total = k.sum(y.data(), ns);
            if (stochastic) stats.max_drift = std::max(stats.max_drift, std::abs(total - 1.0));
            // Without rescaling the next stages would overflow before the total does.
            if (!(total > 0.0) || !(total < 1e290)) throw std::overflow_error("tilted vector left the representable range");
            if (track_log || stochastic) {
                const double inv = 1.0 / total;
                for (std::size_t i = 0; i < ns; ++i) y[i] *= inv;
                if (track_log) stats.log_scale += std::log(total);
                f(t, y.data(), k1.data());
            }
        }
        const double fac = en > 0.0 ? 0.9 * std::pow(en, -0.2) : 5.0;
        h *= std::clamp(fac, 0.2, 5.0);
        if (t < t1 && h < h_min) throw std::runtime_error("oracle step size underflow; use a smaller N or a looser tolerance");
    }
}

}  // namespace

GeneratorAction::GeneratorAction(const ScalingParameters& scaling, const BoundaryProtocol& protocol, double t,
                                 int max_n)
    : n_(scaling.n), states_(0) {
    scaling.validate();
    check_size(scaling.n, max_n);
    if (!(t >= 0.0 && t <= protocol.horizon())) throw std::domain_error("generator time outside [0, T]");
    states_ = std::size_t{1} << (2 * n_ + 1);
    channels_ = make_channels(scaling, protocol, t);
}

std::vector<std::pair<std::size_t, double>> GeneratorAction::transitions(std::size_t i) const {
    std::vector<std::pair<std::size_t, double>> out;
    for (const ChannelRates& c : channels_) {
        const std::size_t pat = (i >> c.shift) & c.mask;
        const double r = c.out_rate[pat];
        if (c.direction[pat] != 0 && r > 0.0) out.emplace_back(i ^ c.partner, r);
    }
    return out;
}

std::vector<std::vector<double>> GeneratorAction::dense() const {
    if (n_ > 4) throw std::length_error("dense generator limited to N <= 4");
    std::vector<std::vector<double>> q(states_, std::vector<double>(states_, 0.0));
    for (std::size_t i = 0; i < states_; ++i) {
        for (const auto& [j, r] : transitions(i)) {
            q[i][j] += r;
            q[i][i] -= r;
        }
    }
    return q;
}

GeneratorAction build_generator(const ScalingParameters& scaling, const BoundaryProtocol& protocol, double t,
                                int max_n) {
    return GeneratorAction(scaling, protocol, t, max_n);
}

double MasterState::total() const {
    double s = 0.0;
    for (double v : p) s += v;
    return s;
}

std::size_t configuration_index(const LatticeState& s) {
    std::size_t i = 0;
    for (int k = 0; k < s.sites(); ++k) {
        if (s.occupancy()[static_cast<std::size_t>(k)]) i |= std::size_t{1} << k;
    }
    return i;
}

LatticeState configuration_state(int n, std::size_t index) {
    std::vector<std::uint8_t> occ(static_cast<std::size_t>(2 * n + 1));
    for (int k = 0; k < 2 * n + 1; ++k) occ[static_cast<std::size_t>(k)] = (index >> k) & 1u;
    return LatticeState(n, std::move(occ));
}

MasterState point_mass(const LatticeState& s, double t) {
    check_size(s.n(), kOracleMaxN);
    MasterState m;
    m.n = s.n();
    m.t = t;
    m.p.assign(std::size_t{1} << s.sites(), 0.0);
    m.p[configuration_index(s)] = 1.0;
    return m;
}

MasterState product_bernoulli_measure(const ScalingParameters& scaling, const BoundaryProtocol& protocol, double t) {
    scaling.validate();
    check_size(scaling.n, kOracleMaxN);
    const int n = scaling.n;
    const int sites = 2 * n + 1;
    std::vector<double> rho(static_cast<std::size_t>(sites));
    for (int x = -n; x <= n; ++x) rho[static_cast<std::size_t>(x + n)] = quasi_static_profile(protocol, t, static_cast<double>(x) / n);
    MasterState m;
    m.n = n;
    m.t = t;
    m.p.assign(std::size_t{1} << sites, 1.0);
    for (std::size_t i = 0; i < m.p.size(); ++i) {
        for (int k = 0; k < sites; ++k) m.p[i] *= ((i >> k) & 1u) ? rho[static_cast<std::size_t>(k)] : 1.0 - rho[static_cast<std::size_t>(k)];
    }
    return m;
}

Evolution evolve_master(const MasterState& initial, const ScalingParameters& scaling,
                        const BoundaryProtocol& protocol, double t0, double t1, const OracleOptions& options) {
    scaling.validate();
    check_size(scaling.n, options.max_n);
    if (initial.n != scaling.n || initial.p.size() != (std::size_t{1} << (2 * scaling.n + 1))) {
        throw std::invalid_argument("master state does not match the lattice size");
    }
    if (!(t0 >= 0.0 && t1 <= protocol.horizon() + 1e-12 && t0 <= t1)) {
        throw std::invalid_argument("evolve_master needs 0 <= t0 <= t1 <= T");
    }
    const int n = scaling.n;
    ForwardRhs rhs(scaling, protocol, nullptr, false);
    std::vector<double> y(rhs.dimension(), 0.0);
    std::copy(initial.p.begin(), initial.p.end(), y.begin());
    Dopri stats;
    dopri5(rhs, y, t0, std::min(t1, protocol.horizon()), options, stats, false, true);

    Evolution e;
    e.final.n = n;
    e.final.t = t1;
    e.final.p.assign(y.begin(), y.begin() + static_cast<std::ptrdiff_t>(rhs.states()));
    e.occupation_integral.assign(y.begin() + static_cast<std::ptrdiff_t>(rhs.states()), y.end());
    e.steps = stats.steps;
    e.max_mass_drift = stats.max_drift;

    // Mean currents from the occupation integrals.
    const double s = scaling.time_scale();
    const auto& occ = e.occupation_integral;
    const double T = protocol.horizon();
    const double int_rm = schedule_integral(protocol.schedule(Side::Left), T, t1) - schedule_integral(protocol.schedule(Side::Left), T, t0);
    const double int_rp = schedule_integral(protocol.schedule(Side::Right), T, t1) - schedule_integral(protocol.schedule(Side::Right), T, t0);
    e.mean_current.assign(static_cast<std::size_t>(2 * n + 2), 0.0);
    e.mean_current[0] = s * (int_rm - occ[0]);
    for (int b = 0; b < 2 * n; ++b) {
        e.mean_current[static_cast<std::size_t>(b) + 1] = scaling.gamma * s * (occ[static_cast<std::size_t>(b)] - occ[static_cast<std::size_t>(b) + 1]);
    }
    e.mean_current[static_cast<std::size_t>(2 * n) + 1] = s * (occ[static_cast<std::size_t>(2 * n)] - int_rp);
    return e;
}

double exact_mean_density(const MasterState& m, int x) {
    if (x < -m.n || x > m.n) throw std::out_of_range("site outside -N..N");
    const std::size_t bit = std::size_t{1} << (x + m.n);
    double s = 0.0;
    for (std::size_t i = 0; i < m.p.size(); ++i) {
        if (i & bit) s += m.p[i];
    }
    return s;
}

double exact_mean_current(const Evolution& e, int x) {
    const int n = e.final.n;
    if (x < -n - 1 || x > n) throw std::out_of_range("channel outside -N-1..N");
    return e.mean_current[static_cast<std::size_t>(x + n + 1)];
}

FeynmanKacResult feynman_kac_tilted(const MasterState& initial, const ScalingParameters& scaling,
                                    const BoundaryProtocol& protocol, const TiltSpecification& tilt, double t1,
                                    FeynmanKacMode mode, const OracleOptions& options, bool log_tracking) {
    scaling.validate();
    check_size(scaling.n, options.max_n);
    if (tilt.n() != scaling.n) throw std::invalid_argument("tilt lattice size does not match");
    if (!(t1 >= initial.t && t1 <= protocol.horizon() + 1e-12)) throw std::invalid_argument("Feynman-Kac end time outside [t0, T]");
    FeynmanKacResult out;
    std::vector<double> y;
    {
        ForwardRhs probe(scaling, protocol, nullptr, false);
        y.assign(probe.dimension(), 0.0);
    }
    std::copy(initial.p.begin(), initial.p.end(), y.begin());
    Dopri stats;
    double t = initial.t;
    const bool compensate = mode == FeynmanKacMode::Compensated;
    int cell = tilt.cell_of(t);
    while (t < t1) {
        while (cell + 1 < tilt.cells() && t >= tilt.cell_end(cell)) ++cell;
        const double end = cell + 1 < tilt.cells() ? std::min(t1, tilt.cell_end(cell)) : t1;
        std::vector<double> z(tilt.row(cell).begin(), tilt.row(cell).end());
        ForwardRhs rhs(scaling, protocol, &z, compensate);
        // Occupation integrals are not needed here.
        std::fill(y.begin() + static_cast<std::ptrdiff_t>(rhs.states()), y.end(), 0.0);
        dopri5(rhs, y, t, end, options, stats, log_tracking, false);
        t = end;
    }
    double total = 0.0;
    for (std::size_t i = 0; i < initial.p.size(); ++i) total += y[i];
    if (!log_tracking && (!std::isfinite(total) || total <= 0.0)) {
        throw std::overflow_error("Feynman-Kac value overflowed; enable log tracking");
    }
    out.log_value = stats.log_scale + std::log(total);
    out.value = std::exp(out.log_value);
    out.steps = stats.steps;
    return out;
}

std::vector<double> stationary_distribution(const ScalingParameters& scaling, double rho_minus, double rho_plus) {
    if (scaling.n > 4) throw std::length_error("stationary solve limited to N <= 4");
    const BoundaryProtocol protocol = BoundaryProtocol::constant(
        rho_minus, rho_plus, 1.0, std::min({rho_minus, rho_plus, 1.0 - rho_minus, 1.0 - rho_plus, kDefaultFloor}));
    const auto q = GeneratorAction(scaling, protocol, 0.0).dense();
    const std::size_t s = q.size();
    // Rows of Q^T p = 0, with the last equation replaced by sum p = 1.
    std::vector<std::vector<double>> a(s, std::vector<double>(s + 1, 0.0));
    for (std::size_t i = 0; i < s; ++i) {
        for (std::size_t j = 0; j < s; ++j) a[i][j] = q[j][i];
    }
    for (std::size_t j = 0; j < s; ++j) a[s - 1][j] = 1.0;
    a[s - 1][s] = 1.0;
    for (std::size_t c = 0; c < s; ++c) {
        std::size_t piv = c;
        for (std::size_t r = c + 1; r < s; ++r) {
            if (std::abs(a[r][c]) > std::abs(a[piv][c])) piv = r;
        }
        if (a[piv][c] == 0.0) throw std::logic_error("singular stationary system");
        std::swap(a[c], a[piv]);
        for (std::size_t r = 0; r < s; ++r) {
            if (r == c || a[r][c] == 0.0) continue;
            const double f = a[r][c] / a[c][c];
            for (std::size_t k = c; k <= s; ++k) a[r][k] -= f * a[c][k];
        }
    }
    std::vector<double> p(s);
    for (std::size_t i = 0; i < s; ++i) p[i] = a[i][s] / a[i][i];
    return p;
}

}  // namespace ssepld
