#include "ssepld/simulator.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <stdexcept>
#include <string>

#include "ssepld/observables.hpp"
#include "ssepld/quadrature.hpp"

namespace ssepld {

LatticeState draw_initial(const InitialCondition& init, const ScalingParameters& scaling,
                          const BoundaryProtocol& protocol, Rng& rng) {
    const int n = scaling.n;
    switch (init.kind) {
        case InitialCondition::Kind::Empty:
            return LatticeState::empty(n);
        case InitialCondition::Kind::Full:
            return LatticeState::full(n);
        case InitialCondition::Kind::Explicit:
            return LatticeState(n, init.occupancy);
        case InitialCondition::Kind::Bernoulli:
            break;
    }
    std::vector<std::uint8_t> occ(static_cast<std::size_t>(2 * n + 1));
    for (int x = -n; x <= n; ++x) {
        const double rho = quasi_static_profile(protocol, 0.0, static_cast<double>(x) / n);
        occ[static_cast<std::size_t>(x + n)] = rng.bernoulli(rho) ? 1 : 0;
    }
    return LatticeState(n, std::move(occ));
}

double projected_events(const ScalingParameters& scaling, const BoundaryProtocol& protocol,
                        const TiltSpecification& tilt) {
    const double envelope = scaling.time_scale() * std::exp(tilt.z_max());
    return protocol.horizon() * envelope * (2.0 * scaling.n * scaling.gamma + 2.0);
}

namespace {

void check_inputs(const ScalingParameters& scaling, const BoundaryProtocol& protocol,
                  const TiltSpecification& tilt, const char* what) {
    if (tilt.n() != scaling.n) {
        throw std::invalid_argument(std::string(what) + " tilt was built for N=" + std::to_string(tilt.n()) +
                                    " but the lattice has N=" + std::to_string(scaling.n));
    }
    if (std::abs(tilt.horizon() - protocol.horizon()) > 1e-12 * protocol.horizon()) {
        throw std::invalid_argument(std::string(what) + " tilt horizon differs from the protocol horizon");
    }
}

// Running integrals whose integrands are piecewise constant in eta between
// events: the compensator of the weight tilt and the replacement observable.
class Integrator {
public:
    Integrator(const ScalingParameters& scaling, const BoundaryProtocol& protocol, const TiltSpecification& weight,
               const SimulationOptions& opt, const LatticeState& state)
        : n_(scaling.n),
          gamma_scale_(scaling.gamma * scaling.time_scale()),
          scale_(scaling.time_scale()),
          protocol_(protocol),
          weight_(weight),
          weighted_(!weight.is_zero()),
          replacement_(opt.track_replacement),
          eps_(opt.eps),
          state_(state) {
        if (weighted_) {
            bond_term_.assign(static_cast<std::size_t>(2 * n_), 0.0);
            exp_plus_.resize(static_cast<std::size_t>(2 * n_ + 2));
            exp_minus_.resize(static_cast<std::size_t>(2 * n_ + 2));
            load_cell(0);
        }
        if (replacement_) setup_replacement(opt);
    }

    double log_rn() const { return log_rn_; }
    double replacement_integral() const { return v_integral_; }

    // Integrate from t0 to t1 with the current configuration.
    void advance(double t0, double t1) {
        if (t1 <= t0) return;
        if (replacement_) advance_replacement(t0, t1);
        if (!weighted_) return;
        while (true) {
            while (cell_ + 1 < weight_.cells() && t0 >= weight_.cell_end(cell_)) load_cell(cell_ + 1);
            const double seg = cell_ + 1 < weight_.cells() ? std::min(t1, weight_.cell_end(cell_)) : t1;
            compensate(t0, seg);
            if (seg >= t1) break;
            t0 = seg;
        }
    }

    // Called before a jump on `channel` is applied at time t.
    void jump(int channel, int direction) {
        if (!weighted_) return;
        log_rn_ += direction * weight_.z(cell_, channel);
    }

    // Called after the configuration changed at the given sites.
    void sites_changed(int first_site, int last_site, const int* delta) {
        if (weighted_) {
            for (int b = first_site - 1; b <= last_site; ++b) {
                if (b < 0 || b >= 2 * n_) continue;
                bulk_sum_ -= bond_term_[static_cast<std::size_t>(b)];
                bond_term_[static_cast<std::size_t>(b)] = bond_value(b);
                bulk_sum_ += bond_term_[static_cast<std::size_t>(b)];
            }
        }
        if (replacement_) {
            for (int k = first_site; k <= last_site; ++k) update_windows(k, delta[k - first_site]);
            for (int p = first_site - 1; p <= last_site; ++p) {
                if (p < 0 || p >= 2 * n_) continue;
                pair_sum_ -= g_[static_cast<std::size_t>(p)] * pair_[static_cast<std::size_t>(p)];
                pair_[static_cast<std::size_t>(p)] = pair_value(p);
                pair_sum_ += g_[static_cast<std::size_t>(p)] * pair_[static_cast<std::size_t>(p)];
            }
        }
    }

    // Removes accumulated rounding drift in the incremental sums.
    void resync() {
        if (weighted_) load_cell(cell_);
        if (replacement_) recompute_replacement();
    }

private:
    void load_cell(int k) {
        cell_ = k;
        for (int c = 0; c < 2 * n_ + 2; ++c) {
            const double z = weight_.z(k, c);
            exp_plus_[static_cast<std::size_t>(c)] = std::expm1(z);
            exp_minus_[static_cast<std::size_t>(c)] = std::expm1(-z);
        }
        bulk_sum_ = 0.0;
        for (int b = 0; b < 2 * n_; ++b) {
            bond_term_[static_cast<std::size_t>(b)] = bond_value(b);
            bulk_sum_ += bond_term_[static_cast<std::size_t>(b)];
        }
    }

    // Bond b carries channel b + 1.
    double bond_value(int b) const {
        const auto& occ = state_.occupancy();
        const int a = occ[static_cast<std::size_t>(b)], c = occ[static_cast<std::size_t>(b) + 1];
        if (a == c) return 0.0;
        const std::size_t ch = static_cast<std::size_t>(b) + 1;
        return gamma_scale_ * (a == 1 ? exp_plus_[ch] : exp_minus_[ch]);
    }

    void compensate(double t0, double t1) {
        const double dt = t1 - t0;
        double acc = bulk_sum_ * dt;
        const std::size_t right = static_cast<std::size_t>(2 * n_ + 1);
        const int el = state_.at(-n_), er = state_.at(n_);
        const double T = protocol_.horizon();
        const Schedule& ls = protocol_.schedule(Side::Left);
        const Schedule& rs = protocol_.schedule(Side::Right);
        const double rm = schedule_integral(ls, T, t1) - schedule_integral(ls, T, t0);
        const double rp = schedule_integral(rs, T, t1) - schedule_integral(rs, T, t0);
        // Left channel: + is entry (rho_-), - is exit (1 - rho_-).
        acc += scale_ * (el == 0 ? exp_plus_[0] * rm : exp_minus_[0] * (dt - rm));
        // Right channel: + is exit (1 - rho_+), - is entry (rho_+).
        acc += scale_ * (er == 1 ? exp_plus_[right] * (dt - rp) : exp_minus_[right] * rp);
        log_rn_ -= acc;
    }

    void setup_replacement(const SimulationOptions& opt) {
        window_ = local_window(n_, eps_);
        g_.resize(static_cast<std::size_t>(2 * n_));
        bulk_.resize(static_cast<std::size_t>(2 * n_));
        g_left_ = g_right_ = 0.0;
        for (int p = 0; p < 2 * n_; ++p) {
            const int x = p - n_;
            const double gy = opt.test_function ? opt.test_function(static_cast<double>(x) / n_) : 1.0;
            g_[static_cast<std::size_t>(p)] = gy;
            bulk_[static_cast<std::size_t>(p)] = in_bulk(n_, eps_, x);
            if (!bulk_[static_cast<std::size_t>(p)]) (x > 0 ? g_right_ : g_left_) += gy;
        }
        pair_.assign(static_cast<std::size_t>(2 * n_), 0.0);
        wsum_.assign(static_cast<std::size_t>(2 * n_), 0);
        recompute_replacement();
    }

    double pair_value(int p) const {
        const auto& occ = state_.occupancy();
        return occ[static_cast<std::size_t>(p)] * (1 - occ[static_cast<std::size_t>(p) + 1]);
    }

    double window_term(int p) const {
        const double mean = static_cast<double>(wsum_[static_cast<std::size_t>(p)]) / (2 * window_ + 1);
        return g_[static_cast<std::size_t>(p)] * mobility_phi(mean);
    }

    void recompute_replacement() {
        const auto& occ = state_.occupancy();
        pair_sum_ = 0.0;
        window_sum_ = 0.0;
        for (int p = 0; p < 2 * n_; ++p) {
            pair_[static_cast<std::size_t>(p)] = pair_value(p);
            pair_sum_ += g_[static_cast<std::size_t>(p)] * pair_[static_cast<std::size_t>(p)];
            if (!bulk_[static_cast<std::size_t>(p)]) continue;
            int s = 0;
            for (int k = p - window_; k <= p + window_; ++k) s += occ[static_cast<std::size_t>(k)];
            wsum_[static_cast<std::size_t>(p)] = s;
            window_sum_ += window_term(p);
        }
    }

    // Site k (index x + N) changed by delta.
    void update_windows(int k, int delta) {
        if (delta == 0) return;
        const int lo = std::max(0, k - window_), hi = std::min(2 * n_ - 1, k + window_);
        for (int p = lo; p <= hi; ++p) {
            if (!bulk_[static_cast<std::size_t>(p)]) continue;
            window_sum_ -= window_term(p);
            wsum_[static_cast<std::size_t>(p)] += delta;
            window_sum_ += window_term(p);
        }
    }

    void advance_replacement(double t0, double t1) {
        const double phi_left = g_left_ == 0.0 ? 0.0 : gauss2([this](double s) { return mobility_phi(protocol_.rho_minus(s)); }, t0, t1);
        const double phi_right = g_right_ == 0.0 ? 0.0 : gauss2([this](double s) { return mobility_phi(protocol_.rho_plus(s)); }, t0, t1);
        v_integral_ += (pair_sum_ - window_sum_) * (t1 - t0) - g_left_ * phi_left - g_right_ * phi_right;
    }

    int n_;
    double gamma_scale_;
    double scale_;
    const BoundaryProtocol& protocol_;
    const TiltSpecification& weight_;
    bool weighted_;
    bool replacement_;
    double eps_;
    const LatticeState& state_;

    int cell_ = 0;
    std::vector<double> exp_plus_, exp_minus_, bond_term_;
    double bulk_sum_ = 0.0;
    double log_rn_ = 0.0;

    int window_ = 0;
    std::vector<double> g_, pair_;
    std::vector<bool> bulk_;
    std::vector<int> wsum_;
    double g_left_ = 0.0, g_right_ = 0.0;
    double pair_sum_ = 0.0, window_sum_ = 0.0;
    double v_integral_ = 0.0;
};

}  // namespace

TrajectoryRecord simulate(const ScalingParameters& scaling, const BoundaryProtocol& protocol,
                          const TiltSpecification& tilt, const InitialCondition& initial, std::uint64_t seed,
                          const SimulationOptions& options, const TiltSpecification* weight) {
    const auto wall_start = std::chrono::steady_clock::now();
    scaling.validate();
    check_inputs(scaling, protocol, tilt, "dynamics");
    const TiltSpecification& w = weight ? *weight : tilt;
    check_inputs(scaling, protocol, w, "weight");
    if (options.track_replacement && !(options.eps > 0.0 && options.eps < 1.0)) {
        throw std::invalid_argument("local average radius eps must lie in (0, 1)");
    }
    const double horizon = protocol.horizon();
    std::vector<double> samples = options.sample_times;
    if (samples.empty()) samples.push_back(horizon);
    for (std::size_t k = 0; k < samples.size(); ++k) {
        if (!(samples[k] >= 0.0 && samples[k] <= horizon)) throw std::invalid_argument("sample time outside [0, T]");
        if (k > 0 && !(samples[k] > samples[k - 1])) throw std::invalid_argument("sample times must be increasing");
    }
    const double projected = projected_events(scaling, protocol, tilt);
    if (!options.allow_large && projected > options.max_events) {
        throw std::length_error("projected event count " + std::to_string(projected) + " exceeds the guard " +
                                std::to_string(options.max_events));
    }

    const int n = scaling.n;
    Rng rng(seed);
    TrajectoryRecord rec;
    rec.scaling = scaling;
    rec.horizon = horizon;
    rec.seed = seed;
    rec.eps = options.eps;
    rec.initial = draw_initial(initial, scaling, protocol, rng);
    rec.has_events = options.record_events;

    LatticeState state = rec.initial;
    CurrentCounters counters(n);
    Integrator integ(scaling, protocol, w, options, state);

    std::vector<double> occ_time(static_cast<std::size_t>(state.sites()), 0.0);
    std::vector<double> last_change(static_cast<std::size_t>(state.sites()), 0.0);
    auto touch = [&](int k, double t) {
        occ_time[static_cast<std::size_t>(k)] += state.occupancy()[static_cast<std::size_t>(k)] * (t - last_change[static_cast<std::size_t>(k)]);
        last_change[static_cast<std::size_t>(k)] = t;
    };

    auto record = [&](double t) {
        for (int k = 0; k < state.sites(); ++k) touch(k, t);
        integ.resync();
        Sample s;
        s.t = t;
        s.occupancy.assign(state.occupancy().begin(), state.occupancy().end());
        s.plus.resize(static_cast<std::size_t>(2 * n + 2));
        s.minus.resize(static_cast<std::size_t>(2 * n + 2));
        for (int c = 0; c < 2 * n + 2; ++c) {
            s.plus[static_cast<std::size_t>(c)] = counters.plus(c);
            s.minus[static_cast<std::size_t>(c)] = counters.minus(c);
        }
        s.occupation_time = occ_time;
        s.replacement_integral = integ.replacement_integral();
        s.log_rn = integ.log_rn();
        s.invariants = check_count_invariants(rec.initial, state, counters.net_all());
        if (!s.invariants.conservation || !s.invariants.homogeneity) rec.invariants_ok = false;
        if (options.audit_active_set && !state.audit()) rec.audit_ok = false;
        rec.samples.push_back(std::move(s));
    };

    const double z_max = tilt.z_max();
    const bool tilted = !tilt.is_zero();
    const double bond_env = scaling.gamma * scaling.time_scale() * std::exp(z_max);
    const double bdry_env = scaling.time_scale() * std::exp(z_max);
    const double guard = 4.0 * std::max(projected, 1e3) + 1e6;

    std::size_t next = 0;
    double t = 0.0;
    while (next < samples.size() && samples[next] <= 0.0) record(samples[next++]);

    while (true) {
        const int active = state.active_bonds().size();
        const double bulk_rate = active * bond_env;
        const double total = bulk_rate + 2.0 * bdry_env;
        const double t_next = t + rng.exponential(total);
        while (next < samples.size() && samples[next] < t_next) {
            integ.advance(t, samples[next]);
            t = samples[next];
            record(samples[next++]);
        }
        if (t_next > horizon || next == samples.size()) break;
        integ.advance(t, t_next);
        t = t_next;
        if (++rec.proposals > guard) throw std::length_error("event-count overflow guard tripped");

        const double u = rng.uniform() * total;
        int channel;
        int direction;
        double accept;  // true rate / envelope
        const int cell = tilted ? tilt.cell_of(t) : 0;
        if (u < bulk_rate) {
            const int k = std::min(static_cast<int>(u / bond_env), active - 1);
            const int b = state.active_bonds().at(k);
            channel = b + 1;
            direction = state.occupancy()[static_cast<std::size_t>(b)] == 1 ? +1 : -1;
            accept = tilted ? std::exp(direction * tilt.z(cell, channel) - z_max) : 1.0;
        } else {
            const bool left = u - bulk_rate < bdry_env;
            channel = left ? 0 : 2 * n + 1;
            const int e = state.at(left ? -n : n);
            double base;
            if (left) {
                const double rm = protocol.rho_minus(t);
                direction = e == 0 ? +1 : -1;
                base = e == 0 ? rm : 1.0 - rm;
            } else {
                const double rp = protocol.rho_plus(t);
                direction = e == 1 ? +1 : -1;
                base = e == 1 ? 1.0 - rp : rp;
            }
            accept = base * (tilted ? std::exp(direction * tilt.z(cell, channel) - z_max) : 1.0);
        }
        if (accept > 1.0 + 1e-12) throw std::logic_error("thinning envelope violated: acceptance probability > 1");
        const bool ok = accept >= 1.0 || rng.uniform() < accept;
        if (options.record_events) rec.events.push_back({t, channel, static_cast<std::int8_t>(direction), ok});
        if (!ok) continue;

        ++rec.accepted;
        integ.jump(channel, direction);
        if (direction > 0) {
            counters.record_plus(channel);
        } else {
            counters.record_minus(channel);
        }
        if (channel == 0 || channel == 2 * n + 1) {
            const int k = channel == 0 ? 0 : 2 * n;
            touch(k, t);
            const int delta = state.occupancy()[static_cast<std::size_t>(k)] == 0 ? 1 : -1;
            state.flip(k - n);
            integ.sites_changed(k, k, &delta);
        } else {
            const int b = channel - 1;
            touch(b, t);
            touch(b + 1, t);
            const int delta[2] = {-direction, direction};
            state.exchange(b);
            integ.sites_changed(b, b + 1, delta);
        }
    }

    rec.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - wall_start).count();
    return rec;
}

double log_radon_nikodym(const TrajectoryRecord& record, const TiltSpecification& tilt,
                         const ScalingParameters& scaling, const BoundaryProtocol& protocol) {
    if (!record.has_events) throw std::invalid_argument("log_radon_nikodym needs a recorded event stream");
    check_inputs(scaling, protocol, tilt, "weight");
    if (tilt.is_zero()) return 0.0;
    const int n = scaling.n;
    const double horizon = record.samples.empty() ? record.horizon : record.samples.back().t;
    const double scale = scaling.time_scale();
    const Schedule& left = protocol.schedule(Side::Left);
    const Schedule& right = protocol.schedule(Side::Right);
    const double T = protocol.horizon();

    std::vector<std::uint8_t> occ(record.initial.occupancy().begin(), record.initial.occupancy().end());

    // Full compensator rate sum over [a, b] within one tilt cell.
    auto compensator = [&](double a, double b, int cell) {
        double bulk = 0.0;
        for (int x = -n; x < n; ++x) {
            const int e0 = occ[static_cast<std::size_t>(x + n)], e1 = occ[static_cast<std::size_t>(x + n + 1)];
            const double z = tilt.z(cell, x + n + 1);
            bulk += std::expm1(z) * e0 * (1 - e1) + std::expm1(-z) * e1 * (1 - e0);
        }
        const double dt = b - a;
        const double int_rm = schedule_integral(left, T, b) - schedule_integral(left, T, a);
        const double int_rp = schedule_integral(right, T, b) - schedule_integral(right, T, a);
        const int el = occ[0], er = occ[static_cast<std::size_t>(2 * n)];
        const double z0 = tilt.z(cell, 0), zr = tilt.z(cell, 2 * n + 1);
        double bd = std::expm1(z0) * int_rm * (1 - el) + std::expm1(-z0) * (dt - int_rm) * el;
        bd += std::expm1(zr) * (dt - int_rp) * er + std::expm1(-zr) * int_rp * (1 - er);
        return scaling.gamma * scale * bulk * dt + scale * bd;
    };

    auto integrate = [&](double a, double b) {
        double total = 0.0;
        int cell = tilt.cell_of(a);
        while (a < b) {
            while (cell + 1 < tilt.cells() && a >= tilt.cell_end(cell)) ++cell;
            const double end = cell + 1 < tilt.cells() ? std::min(b, tilt.cell_end(cell)) : b;
            total += compensator(a, end, cell);
            a = end;
        }
        return total;
    };

    double log_rn = 0.0;
    double t = 0.0;
    for (const Event& ev : record.events) {
        if (!ev.accepted) continue;
        log_rn -= integrate(t, ev.t);
        t = ev.t;
        log_rn += ev.direction * tilt.z(tilt.cell_of(t), ev.channel);
        if (ev.channel == 0) {
            occ[0] ^= 1u;
        } else if (ev.channel == 2 * n + 1) {
            occ[static_cast<std::size_t>(2 * n)] ^= 1u;
        } else {
            std::swap(occ[static_cast<std::size_t>(ev.channel - 1)], occ[static_cast<std::size_t>(ev.channel)]);
        }
    }
    log_rn -= integrate(t, horizon);
    return log_rn;
}

}  // namespace ssepld
