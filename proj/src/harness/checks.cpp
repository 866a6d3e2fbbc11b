#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "ssepld/functional.hpp"
#include "ssepld/grid_io.hpp"
#include "ssepld/harness/experiments.hpp"
#include "ssepld/observables.hpp"
#include "ssepld/oracle.hpp"
#include "ssepld/random.hpp"
#include "ssepld/simulator.hpp"

namespace ssepld::harness {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

ScalingParameters with_n(const ScalingParameters& s, int n) {
    ScalingParameters out = s;
    out.n = n;
    return out;
}

InitialCondition initial_of(const ExperimentConfig& c) { return InitialCondition{c.initial, {}}; }

// Window average of rho-bar(., y) over [a, b], from exact schedule integrals.
double window_profile(const BoundaryProtocol& p, double a, double b, double y) {
    const double T = p.horizon();
    const Schedule& l = p.schedule(Side::Left);
    const Schedule& r = p.schedule(Side::Right);
    const double il = (schedule_integral(l, T, b) - schedule_integral(l, T, a)) / (b - a);
    const double ir = (schedule_integral(r, T, b) - schedule_integral(r, T, a)) / (b - a);
    return 0.5 * (ir - il) * y + 0.5 * (ir + il);
}

MasterState oracle_initial(const ExperimentConfig& c, const ScalingParameters& s) {
    switch (c.initial) {
        case InitialCondition::Kind::Empty: return point_mass(LatticeState::empty(s.n));
        case InitialCondition::Kind::Full: return point_mass(LatticeState::full(s.n));
        default: return product_bernoulli_measure(s, c.boundary(), 0.0);
    }
}

std::string fmt(double v) {
    std::ostringstream os;
    os.precision(6);
    os << v;
    return os.str();
}

CheckLine at_most(std::string name, double value, double threshold, std::string detail = {}) {
    return {std::move(name), value <= threshold, value, threshold, std::move(detail)};
}

CheckLine at_least(std::string name, double value, double threshold, std::string detail = {}) {
    return {std::move(name), value >= threshold, value, threshold, std::move(detail)};
}

CheckLine flag(std::string name, bool ok, std::string detail = {}) {
    return {std::move(name), ok, ok ? 1.0 : 0.0, 1.0, std::move(detail)};
}

DensityField load_density_checked(const std::string& path) {
    try {
        return load_density(path);
    } catch (const std::exception& e) {
        throw ConfigError("density input '" + path + "': " + e.what());
    }
}

CurrentPath load_current_checked(const std::string& path) {
    try {
        return load_current(path);
    } catch (const std::exception& e) {
        throw ConfigError("current input '" + path + "': " + e.what());
    }
}

bool strictly_decreasing(const std::vector<double>& v) {
    for (std::size_t i = 1; i < v.size(); ++i)
        if (!(v[i] < v[i - 1])) return false;
    return true;
}

std::string join(const std::vector<double>& v) {
    std::string s;
    for (double x : v) s += (s.empty() ? "" : ", ") + fmt(x);
    return s;
}

}  // namespace

// ---------------------------------------------------------------------------
// hydrodynamic limit

HydroPoint hydro_point(const ExperimentConfig& c, int n, std::vector<ReplicaInfo>* log) {
    const ScalingParameters s = with_n(c.scaling, n);
    const BoundaryProtocol& p = c.boundary();
    const double T = p.horizon();
    const int w = c.windows;
    const int sites = 2 * n + 1;

    SimulationOptions opt;
    opt.eps = c.eps;
    for (int k = 1; k <= w; ++k) opt.sample_times.push_back(k == w ? T : T * k / w);
    const TiltSpecification none = TiltSpecification::untilted(n, T);
    const std::uint64_t base = block_seed(c.seed, n);
    const double current_scale = std::pow(static_cast<double>(n), 1.0 + s.alpha);

    struct Replica {
        std::vector<double> windows;  // w x sites, occupation averages
        double current = 0.0;
        double replacement = 0.0;
        bool invariants = true;
        std::int64_t spread = 0;
        std::uint64_t proposals = 0;
        std::uint64_t seed = 0;
        double wall = 0.0;
    };

    const auto t0 = Clock::now();
    auto runs = fan_out<Replica>(c.replicas, c.threads, [&](std::size_t r) {
        Replica out;
        out.seed = replica_seed(base, r);
        const TrajectoryRecord rec = simulate(s, p, none, initial_of(c), out.seed, opt);
        out.windows.resize(static_cast<std::size_t>(w * sites));
        std::vector<double> prev(static_cast<std::size_t>(sites), 0.0);
        double t_prev = 0.0;
        for (int k = 0; k < w; ++k) {
            const Sample& sm = rec.samples[static_cast<std::size_t>(k)];
            const double dt = sm.t - t_prev;
            for (int i = 0; i < sites; ++i) {
                out.windows[static_cast<std::size_t>(k * sites + i)] =
                    (sm.occupation_time[static_cast<std::size_t>(i)] - prev[static_cast<std::size_t>(i)]) / dt;
                prev[static_cast<std::size_t>(i)] = sm.occupation_time[static_cast<std::size_t>(i)];
            }
            t_prev = sm.t;
            out.invariants = out.invariants && sm.invariants.conservation && sm.invariants.homogeneity;
            out.spread = std::max(out.spread, sm.invariants.max_spread);
        }
        const Sample& last = rec.final();
        double h = 0.0;
        for (int b = 1; b <= 2 * n; ++b) h += static_cast<double>(last.net(b));
        out.current = h / (2.0 * n) / current_scale;
        out.replacement = last.replacement_integral / n;
        out.invariants = out.invariants && rec.invariants_ok;
        out.proposals = rec.proposals;
        out.wall = rec.wall_seconds;
        return out;
    });

    HydroPoint hp;
    hp.n = n;
    std::vector<double> mean(static_cast<std::size_t>(w * sites), 0.0);
    RunningStats cur, rep;
    for (std::size_t r = 0; r < runs.size(); ++r) {
        const Replica& x = runs[r];
        for (std::size_t i = 0; i < mean.size(); ++i) mean[i] += x.windows[i];
        cur.add(x.current);
        rep.add(x.replacement);
        hp.invariants_ok = hp.invariants_ok && x.invariants;
        hp.max_spread = std::max(hp.max_spread, x.spread);
        hp.proposals += x.proposals;
        if (log) log->push_back({n, r, x.seed, x.wall});
    }
    for (double& v : mean) v /= static_cast<double>(runs.size());

    // L1(dy dt): trapezoid weights in y, window widths in t.
    double l1 = 0.0, t_prev = 0.0;
    for (int k = 0; k < w; ++k) {
        const double tk = opt.sample_times[static_cast<std::size_t>(k)];
        for (int i = 0; i < sites; ++i) {
            const int x = i - n;
            const double wy = (x == -n || x == n) ? 0.5 / n : 1.0 / n;
            const double target = window_profile(p, t_prev, tk, static_cast<double>(x) / n);
            l1 += wy * (tk - t_prev) * std::abs(mean[static_cast<std::size_t>(k * sites + i)] - target);
        }
        t_prev = tk;
    }
    hp.l1_distance = l1;
    hp.current_mean = cur.mean();
    hp.current_se = cur.standard_error();
    hp.current_target = quasi_static_current(p, T, s.gamma);
    hp.replacement_mean = rep.mean();
    hp.replacement_se = rep.standard_error();
    const double literal = std::pow(2.0 * n, -s.alpha);
    hp.literal_bound_ratio = static_cast<double>(hp.max_spread) / current_scale / literal;
    hp.wall_seconds = seconds_since(t0);
    return hp;
}

// ---------------------------------------------------------------------------
// oracle comparison

OracleComparison oracle_comparison(const ExperimentConfig& c, std::uint64_t chi_square_replicas,
                                   std::vector<ReplicaInfo>* log) {
    const ScalingParameters& s = c.scaling;
    const BoundaryProtocol& p = c.boundary();
    const int n = s.n;
    const double T = p.horizon();
    const int sites = 2 * n + 1, channels = 2 * n + 2;

    OracleComparison oc;
    oc.n = n;
    const Evolution ev = evolve_master(oracle_initial(c, s), s, p, 0.0, T);
    oc.max_mass_drift = ev.max_mass_drift;
    for (int x = -n; x <= n; ++x) oc.density_exact.push_back(exact_mean_density(ev.final, x));
    for (int x = -n - 1; x <= n; ++x) oc.current_exact.push_back(exact_mean_current(ev, x));

    SimulationOptions opt;
    opt.sample_times = {T};
    opt.track_replacement = false;
    const TiltSpecification none = TiltSpecification::untilted(n, T);

    struct Replica {
        std::vector<std::uint8_t> occ;
        std::vector<std::int64_t> net;
        std::uint64_t seed = 0;
        double wall = 0.0;
    };
    auto run_block = [&](int block, std::uint64_t count) {
        const std::uint64_t base = block_seed(c.seed, block);
        auto runs = fan_out<Replica>(count, c.threads, [&](std::size_t r) {
            Replica out;
            out.seed = replica_seed(base, r);
            const TrajectoryRecord rec = simulate(s, p, none, initial_of(c), out.seed, opt);
            out.occ = rec.final().occupancy;
            out.net.resize(static_cast<std::size_t>(channels));
            for (int ch = 0; ch < channels; ++ch) out.net[static_cast<std::size_t>(ch)] = rec.final().net(ch);
            out.wall = rec.wall_seconds;
            return out;
        });
        if (log)
            for (std::size_t r = 0; r < runs.size(); ++r) log->push_back({block, r, runs[r].seed, runs[r].wall});
        return runs;
    };

    const auto means = run_block(n, c.replicas);
    std::vector<RunningStats> dens(static_cast<std::size_t>(sites)), curr(static_cast<std::size_t>(channels));
    for (const auto& r : means) {
        for (int i = 0; i < sites; ++i) dens[static_cast<std::size_t>(i)].add(r.occ[static_cast<std::size_t>(i)]);
        for (int ch = 0; ch < channels; ++ch)
            curr[static_cast<std::size_t>(ch)].add(static_cast<double>(r.net[static_cast<std::size_t>(ch)]));
    }
    auto z_of = [](const RunningStats& st, double exact) {
        const double se = st.standard_error();
        if (se == 0.0) return st.mean() == exact ? 0.0 : std::numeric_limits<double>::infinity();
        return (st.mean() - exact) / se;
    };
    for (int i = 0; i < sites; ++i) {
        const auto& st = dens[static_cast<std::size_t>(i)];
        oc.density_mean.push_back(st.mean());
        oc.density_z.push_back(z_of(st, oc.density_exact[static_cast<std::size_t>(i)]));
    }
    for (int ch = 0; ch < channels; ++ch) {
        const auto& st = curr[static_cast<std::size_t>(ch)];
        oc.current_mean.push_back(st.mean());
        oc.current_z.push_back(z_of(st, oc.current_exact[static_cast<std::size_t>(ch)]));
    }
    for (double z : oc.density_z) oc.max_abs_z = std::max(oc.max_abs_z, std::abs(z));
    for (double z : oc.current_z) oc.max_abs_z = std::max(oc.max_abs_z, std::abs(z));

    if (chi_square_replicas > 0) {
        const auto law = run_block(1'000'000 + n, chi_square_replicas);
        std::vector<std::uint64_t> counts(ev.final.p.size(), 0);
        for (const auto& r : law) ++counts[configuration_index(LatticeState(n, r.occ))];
        oc.chi_square = chi_square_test(counts, ev.final.p);
        oc.chi_square_replicas = chi_square_replicas;
    }
    return oc;
}

// ---------------------------------------------------------------------------
// exponential martingale

TiltSpecification martingale_tilt(int k, int n, double horizon, double amplitude, int cells) {
    using std::numbers::pi;
    const double a = amplitude;
    TiltSpecification::Function h, hy;
    // u = (1 + y) / 2 runs over [0, 1]; du/dy = 1/2.
    switch (k) {
        case 0:
            h = [a](double, double y) { return a * (1.0 + y); };
            hy = [a](double, double) { return a; };
            break;
        case 1:
            h = [a](double t, double y) { return a * std::sin(pi * 0.5 * (1.0 + y)) * (1.0 + t); };
            hy = [a](double t, double y) { return a * 0.5 * pi * std::cos(pi * 0.5 * (1.0 + y)) * (1.0 + t); };
            break;
        case 2:
            h = [a](double t, double y) {
                const double u = 0.5 * (1.0 + y);
                return 2.0 * a * u * u * std::cos(pi * t);
            };
            hy = [a](double t, double y) { return a * (1.0 + y) * std::cos(pi * t); };
            break;
        case 3:
            h = [a](double t, double y) {
                const double u = 0.5 * (1.0 + y);
                return 4.0 * a * u * (1.0 - u) * std::sin(2.0 * pi * t);
            };
            hy = [a](double t, double y) { return -2.0 * a * y * std::sin(2.0 * pi * t); };
            break;
        case 4:
            h = [a](double t, double y) { return a * (1.0 - std::cos(pi * 0.5 * (1.0 + y))) * t; };
            hy = [a](double t, double y) { return a * 0.5 * pi * std::sin(pi * 0.5 * (1.0 + y)) * t; };
            break;
        default:
            throw std::invalid_argument("martingale tilt family must be 0..4");
    }
    return TiltSpecification::from_function(n, horizon, cells, h, hy);
}

MartingaleReport martingale_report(const ExperimentConfig& c, double amplitude, std::vector<ReplicaInfo>* log) {
    const ScalingParameters& s = c.scaling;
    const BoundaryProtocol& p = c.boundary();
    const int n = s.n;
    const double T = p.horizon();
    const MasterState m0 = oracle_initial(c, s);
    const TiltSpecification none = TiltSpecification::untilted(n, T);

    MartingaleReport mr;
    for (int k = 0; k < kMartingaleFamilies; ++k) {
        const TiltSpecification tilt = martingale_tilt(k, n, T, amplitude);
        mr.compensated.push_back(feynman_kac_tilted(m0, s, p, tilt, T, FeynmanKacMode::Compensated).value);
        mr.uncompensated.push_back(feynman_kac_tilted(m0, s, p, tilt, T, FeynmanKacMode::Uncompensated).value);

        SimulationOptions opt;
        opt.sample_times = {T};
        opt.track_replacement = false;
        const int block = 1000 * (k + 1) + n;
        const std::uint64_t base = block_seed(c.seed, block);
        struct Replica {
            double weight = 0.0;
            std::uint64_t seed = 0;
            double wall = 0.0;
        };
        auto runs = fan_out<Replica>(c.replicas, c.threads, [&](std::size_t r) {
            Replica out;
            out.seed = replica_seed(base, r);
            const TrajectoryRecord rec = simulate(s, p, none, initial_of(c), out.seed, opt, &tilt);
            out.weight = std::exp(rec.final().log_rn);
            out.wall = rec.wall_seconds;
            return out;
        });
        RunningStats st;
        for (std::size_t r = 0; r < runs.size(); ++r) {
            st.add(runs[r].weight);
            if (log) log->push_back({block, r, runs[r].seed, runs[r].wall});
        }
        mr.mc_mean.push_back(st.mean());
        mr.mc_se.push_back(st.standard_error());

        SimulationOptions ev = opt;
        ev.record_events = true;
        for (std::uint64_t r = 0; r < 8; ++r) {
            const TrajectoryRecord rec =
                simulate(s, p, none, initial_of(c), replica_seed(base ^ 0x5eedULL, r), ev, &tilt);
            const double replay = log_radon_nikodym(rec, tilt, s, p);
            mr.max_replay_gap = std::max(mr.max_replay_gap, std::abs(replay - rec.final().log_rn));
        }
    }
    return mr;
}

// ---------------------------------------------------------------------------
// tilted relative entropy

EntropyTarget entropy_target(const ExperimentConfig& c) {
    const BoundaryProtocol& p = c.boundary();
    EntropyTarget t;
    t.density = DensityField::quasi_static(p, c.time_steps, c.space_steps);
    const CurrentPath typical = CurrentPath::typical(p, c.time_steps, c.scaling.gamma);
    std::vector<double> j = typical.values();
    for (int i = 0; i <= c.time_steps; ++i) j[static_cast<std::size_t>(i)] += c.current_shift * t.density.grid().t(i);
    t.current = CurrentPath(p.horizon(), std::move(j));
    t.tilt = optimal_tilt(t.current, t.density);
    t.rate = rate_functional_closed(t.current, t.density, p).total;
    return t;
}

EntropyPoint entropy_point(const ExperimentConfig& c, const EntropyTarget& target, int n,
                           std::vector<ReplicaInfo>* log) {
    const ScalingParameters s = with_n(c.scaling, n);
    const BoundaryProtocol& p = c.boundary();
    const double T = p.horizon();
    const TiltSpecification tilt = TiltSpecification::from_field(n, target.tilt);
    const double speed = std::pow(static_cast<double>(n), 1.0 + s.alpha);

    SimulationOptions opt;
    opt.sample_times = {T};
    opt.track_replacement = false;
    const std::uint64_t base = block_seed(c.seed, n);
    struct Replica {
        double log_rn = 0.0;
        std::vector<double> occupation;
        std::uint64_t seed = 0;
        double wall = 0.0;
    };
    const auto t0 = Clock::now();
    auto runs = fan_out<Replica>(c.replicas, c.threads, [&](std::size_t r) {
        Replica out;
        out.seed = replica_seed(base, r);
        const TrajectoryRecord rec = simulate(s, p, tilt, initial_of(c), out.seed, opt);
        out.log_rn = rec.final().log_rn;
        out.occupation = rec.final().occupation_time;
        out.wall = rec.wall_seconds;
        return out;
    });

    EntropyPoint ep;
    ep.n = n;
    ep.rate = target.rate;
    RunningStats st;
    std::vector<double> profile(static_cast<std::size_t>(2 * n + 1), 0.0);
    for (std::size_t r = 0; r < runs.size(); ++r) {
        st.add(runs[r].log_rn / speed);
        for (std::size_t i = 0; i < profile.size(); ++i) profile[i] += runs[r].occupation[i] / T;
        if (log) log->push_back({n, r, runs[r].seed, runs[r].wall});
    }
    ep.entropy_rate = st.mean();
    ep.entropy_se = st.standard_error();
    for (int x = -n; x <= n; ++x) {
        const double emp = profile[static_cast<std::size_t>(x + n)] / static_cast<double>(runs.size());
        const double want = window_profile(p, 0.0, T, static_cast<double>(x) / n);
        ep.sup_distance = std::max(ep.sup_distance, std::abs(emp - want));
    }
    ep.wall_seconds = seconds_since(t0);
    return ep;
}

// ---------------------------------------------------------------------------
// test fields

DensityField AnalyticField::density_field(int time_steps, int space_steps) const {
    const GridSpec g{horizon, time_steps, space_steps};
    std::vector<double> v;
    v.reserve(static_cast<std::size_t>(g.time_nodes() * g.space_nodes()));
    for (int i = 0; i <= time_steps; ++i)
        for (int j = 0; j <= space_steps; ++j) v.push_back(rho(g.t(i), g.y(j)));
    return DensityField(g, std::move(v));
}

CurrentPath AnalyticField::current_path(int time_steps) const {
    const GridSpec g{horizon, time_steps, 2};
    std::vector<double> v;
    for (int i = 0; i <= time_steps; ++i) v.push_back(i == 0 ? 0.0 : current(g.t(i)));
    return CurrentPath(horizon, std::move(v));
}

AnalyticField random_field(const BoundaryProtocol& protocol, std::uint64_t seed) {
    using std::numbers::pi;
    Rng rng(seed);
    auto u = [&rng](double lo, double hi) { return lo + (hi - lo) * rng.uniform(); };
    std::array<double, 3> a{u(-1, 1), u(-1, 1), u(-1, 1)};
    const double b = u(-0.5, 0.5), theta = u(0, 2 * pi);
    std::array<double, 3> d{u(-0.3, 0.3), u(-0.3, 0.3), u(-0.3, 0.3)};
    const double e = u(-0.3, 0.3);
    // Keep the perturbation within 0.12 so rho stays inside [0.05, 0.95].
    const double total = std::abs(a[0]) + std::abs(a[1]) + std::abs(a[2]);
    const double scale = 0.12 / ((1.0 + std::abs(b)) * std::max(total, 1e-12)) * u(0.3, 1.0);
    const BoundaryProtocol* p = &protocol;
    const double T = protocol.horizon();
    const double gamma = 1.0;

    AnalyticField f;
    f.horizon = T;
    f.rho = [=](double t, double y) {
        double s = 0.0;
        for (int m = 1; m <= 3; ++m) s += a[static_cast<std::size_t>(m - 1)] * std::sin(m * pi * 0.5 * (1.0 + y));
        const double v = quasi_static_profile(*p, t, y) +
                         scale * (1.0 - y * y) * s * (1.0 + b * std::sin(2.0 * pi * t / T + theta));
        return std::clamp(v, 0.0, 1.0);
    };
    f.current = [=](double t) {
        double s = quasi_static_current(*p, t, gamma) + e * t;
        for (int m = 1; m <= 3; ++m) s += d[static_cast<std::size_t>(m - 1)] * std::sin(m * pi * t / T);
        return s;
    };
    return f;
}

AnalyticField regularization_field(const BoundaryProtocol& protocol, int f) {
    if (f < 0 || f > 4) throw std::invalid_argument("regularisation field must be 0..4");
    const BoundaryProtocol* p = &protocol;
    const double T = protocol.horizon();
    // Tent perturbations (kinks in y) of height h at y0, and a current slope
    // spike of size s on [t0, t0 + w].
    static constexpr double kHeight[5] = {0.10, -0.12, 0.15, 0.08, -0.05};
    static constexpr double kCentre[5] = {0.0, 0.3, -0.4, 0.6, -0.2};
    static constexpr double kSpike[5] = {2.0, -3.0, 4.0, 1.5, -2.5};
    static constexpr double kStart[5] = {0.2, 0.5, 0.1, 0.7, 0.35};
    const double height = kHeight[f], y0 = kCentre[f], spike = kSpike[f], t0 = kStart[f] * T, w = 0.1 * T;

    AnalyticField out;
    out.horizon = T;
    out.rho = [=](double t, double y) {
        const double tent = y <= y0 ? (1.0 + y) / (1.0 + y0) : (1.0 - y) / (1.0 - y0);
        return std::clamp(quasi_static_profile(*p, t, y) + height * tent * (1.0 + 0.5 * std::sin(3.0 * t / T)),
                          0.0, 1.0);
    };
    out.current = [=](double t) {
        const double inside = std::clamp(t - t0, 0.0, w);
        return quasi_static_current(*p, t, 1.0) + spike * inside;
    };
    return out;
}

// ---------------------------------------------------------------------------
// functional identities

FluctuationReport fluctuation_report(const ExperimentConfig& c) {
    const BoundaryProtocol& p = c.boundary();
    BdOptions bd;
    bd.space_steps = 400;
    FluctuationReport fr;
    for (std::uint64_t f = 0; f < c.replicas; ++f) {
        const AnalyticField field = random_field(p, block_seed(c.seed, static_cast<int>(f)));
        const DensityField rho = field.density_field(c.time_steps, c.space_steps);
        const CurrentPath j = field.current_path(c.time_steps);
        const CurrentPath jm = j.negated();
        const double ip = rate_functional_closed(j, rho, p).total;
        const double im = rate_functional_closed(jm, rho, p).total;
        const double work = fluctuation_difference(j, p);
        const double scale = std::max({std::abs(ip), std::abs(im), std::abs(work), 1e-300});
        fr.residual.push_back(std::abs(ip - im - work) / scale);
        const double cp = contracted_rate(j, p, bd);
        const double cm = contracted_rate(jm, p, bd);
        fr.contracted_residual.push_back(std::abs(cp - cm - work));
        fr.q_gap.push_back(ip - current_marginal_Q(j, rho, p));
    }
    return fr;
}

VariationalReport variational_report(const ExperimentConfig& c, int fields, int random_tilts) {
    const BoundaryProtocol& p = c.boundary();
    VariationalReport vr;
    vr.levels = {20, 40, 80, 160, 320};
    std::vector<AnalyticField> fs;
    for (int f = 0; f < fields; ++f) fs.push_back(random_field(p, block_seed(c.seed, 5000 + f)));
    for (const auto& field : fs) {
        // Continuum reference: second-order extrapolation of I from two fine grids.
        const int fine = 2 * vr.levels.back();
        auto rate_at = [&](int mt) {
            return rate_functional_closed(field.current_path(mt), field.density_field(mt, 2 * mt), p).total;
        };
        const double reference = (4.0 * rate_at(fine) - rate_at(fine / 2)) / 3.0;
        vr.reference.push_back(reference);
        std::vector<double> gaps;
        for (int mt : vr.levels) {
            const DensityField rho = field.density_field(mt, 2 * mt);
            const CurrentPath j = field.current_path(mt);
            const TiltField h = optimal_tilt(j, rho);
            gaps.push_back(std::abs(variational_objective(h, j, rho, p) - reference));
        }
        const std::size_t L = gaps.size();
        vr.observed_order.push_back(std::log2(gaps[L - 2] / gaps[L - 1]));
        vr.gap.push_back(std::move(gaps));
    }

    // Perturbations of the optimal tilt on the fourth level, vanishing at y = -1.
    using std::numbers::pi;
    const int mt = vr.levels[3];
    Rng rng(block_seed(c.seed, 6000));
    vr.worst_random_excess = -std::numeric_limits<double>::infinity();
    for (int r = 0; r < random_tilts; ++r) {
        const AnalyticField& field = fs[static_cast<std::size_t>(r % fields)];
        const DensityField rho = field.density_field(mt, 2 * mt);
        const CurrentPath j = field.current_path(mt);
        const TiltField h = optimal_tilt(j, rho);
        const double rate = rate_functional_closed(j, rho, p).total;
        const double size = std::pow(10.0, -2.0 + 2.0 * rng.uniform());
        const double c1 = rng.uniform() - 0.5, c2 = rng.uniform() - 0.5, c3 = rng.uniform() - 0.5;
        const GridSpec& g = h.grid();
        std::vector<double> v = h.values();
        for (int i = 0; i <= g.time_steps; ++i)
            for (int jy = 0; jy <= g.space_steps; ++jy) {
                const double t = g.t(i), y = g.y(jy);
                v[static_cast<std::size_t>(i * g.space_nodes() + jy)] +=
                    size * (c1 * (1.0 + y) + c2 * std::sin(pi * (1.0 + y)) * std::cos(pi * t) +
                            c3 * (1.0 + y) * (1.0 + y) * t);
            }
        const TiltField hr(g, std::move(v));
        vr.worst_random_excess = std::max(vr.worst_random_excess, variational_objective(hr, j, rho, p) - rate);
    }
    vr.random_tilts = random_tilts;
    return vr;
}

// ---------------------------------------------------------------------------
// Bodineau-Derrida scan

BdScan bd_scan(const ExperimentConfig& c, int points, double half_width) {
    const BoundaryProtocol& p = c.boundary();
    const double rp = p.rho_plus(0.0), rm = p.rho_minus(0.0);
    BdOptions opt;
    opt.space_steps = c.space_steps;
    BdScan out;
    out.q_bar = -0.5 * (rp - rm);
    out.value_at_q_bar = bd_rate(out.q_bar, rp, rm, opt).value;
    for (int i = 0; i < points; ++i) {
        const double q = out.q_bar + half_width * (2.0 * i / (points - 1) - 1.0);
        out.q.push_back(q);
        out.value.push_back(bd_rate(q, rp, rm, opt).value);
    }
    out.min_second_difference = std::numeric_limits<double>::infinity();
    for (int i = 1; i + 1 < points; ++i)
        out.min_second_difference =
            std::min(out.min_second_difference, out.value[static_cast<std::size_t>(i - 1)] -
                                                    2.0 * out.value[static_cast<std::size_t>(i)] +
                                                    out.value[static_cast<std::size_t>(i + 1)]);
    return out;
}

// ---------------------------------------------------------------------------
// regularisation

RegularizationReport regularization_report(const ExperimentConfig& c) {
    const BoundaryProtocol& p = c.boundary();
    RegularizationReport rr;
    rr.k = {0.5, 1.0, 2.0, 4.0, 8.0, 16.0, 32.0, 64.0};
    rr.eps = {1e-1, 3e-2, 1e-2, 3e-3, 1e-3, 1e-4, 1e-5, 1e-6};
    for (int f = 0; f < 5; ++f) {
        const AnalyticField field = regularization_field(p, f);
        const DensityField rho = field.density_field(c.time_steps, c.space_steps);
        const CurrentPath j = field.current_path(c.time_steps);
        const double rate = rate_functional_closed(j, rho, p).total;
        rr.rate.push_back(rate);
        std::vector<double> gaps;
        for (std::size_t s = 0; s < rr.k.size(); ++s) {
            const DensityField smooth = regularize_resolvent(regularize_convex(rho, p, rr.eps[s]), p, rr.eps[s]);
            const CurrentPath jk = truncate_current(j, rr.k[s]);
            gaps.push_back(std::abs(rate_functional_closed(jk, smooth, p).total - rate));
        }
        rr.gap.push_back(std::move(gaps));
    }
    const AnalyticField smooth = random_field(p, block_seed(c.seed, 7000));
    rr.grid = {50, 100, 200, 400};
    for (int m : rr.grid) rr.residual.push_back(resolvent_identity_residual(smooth.density_field(4, m), p, 0.01));
    return rr;
}

// ---------------------------------------------------------------------------
// dispatch

namespace {

ExperimentResult run_hydro(const ExperimentConfig& c) {
    ExperimentResult res;
    std::vector<HydroPoint> pts;
    for (int n : c.n_values) pts.push_back(hydro_point(c, n, &res.replicas));

    Table t{"hydro",
            {"n", "l1_distance", "current_mean", "current_se", "current_target", "replacement_mean",
             "replacement_se", "max_spread", "literal_bound_ratio", "invariants_ok", "proposals", "wall_seconds"},
            {}};
    std::vector<double> l1, rep;
    bool inv = true;
    double literal = 0.0;
    for (const auto& h : pts) {
        t.rows.push_back({double(h.n), h.l1_distance, h.current_mean, h.current_se, h.current_target,
                          h.replacement_mean, h.replacement_se, double(h.max_spread), h.literal_bound_ratio,
                          h.invariants_ok ? 1.0 : 0.0, double(h.proposals), h.wall_seconds});
        l1.push_back(h.l1_distance);
        rep.push_back(h.replacement_mean);
        inv = inv && h.invariants_ok;
        literal = std::max(literal, h.literal_bound_ratio);
        res.summary["n" + std::to_string(h.n)] = {{"l1_distance", h.l1_distance},
                                                 {"current_mean", h.current_mean},
                                                 {"current_se", h.current_se},
                                                 {"replacement_mean", h.replacement_mean},
                                                 {"replacement_se", h.replacement_se}};
    }
    res.tables.push_back(std::move(t));

    res.checks.push_back(flag("count invariants", inv,
                              "largest spread / N^{1+alpha} over (2N)^{-alpha}: " + fmt(literal)));
    if (pts.empty()) return res;
    const HydroPoint& last = pts.back();
    if (pts.size() > 1) res.checks.push_back(flag("profile distance decreasing in N", strictly_decreasing(l1), join(l1)));
    res.checks.push_back(at_most("profile distance at largest N", last.l1_distance, c.tolerance("l1_max", 0.05)));
    const double z = last.current_se > 0 ? std::abs(last.current_mean - last.current_target) / last.current_se : 0.0;
    res.checks.push_back(at_most("bond-averaged current z-score at largest N", z, c.tolerance("current_z", 3.0)));
    if (pts.size() > 1)
        res.checks.push_back(flag("replacement observable decreasing in N", strictly_decreasing(rep), join(rep)));
    res.checks.push_back(
        at_most("replacement observable at largest N", last.replacement_mean, c.tolerance("replacement_max", 0.02)));
    return res;
}

ExperimentResult run_oracle(const ExperimentConfig& c) {
    ExperimentResult res;
    const auto chi_n = static_cast<std::uint64_t>(c.tolerance("chi_square_replicas", 10.0 * c.replicas));
    const OracleComparison oc = oracle_comparison(c, chi_n, &res.replicas);
    Table t{"oracle", {"kind", "index", "exact", "mean", "z"}, {}};
    for (std::size_t i = 0; i < oc.density_z.size(); ++i)
        t.rows.push_back({0.0, double(i), oc.density_exact[i], oc.density_mean[i], oc.density_z[i]});
    for (std::size_t i = 0; i < oc.current_z.size(); ++i)
        t.rows.push_back({1.0, double(i), oc.current_exact[i], oc.current_mean[i], oc.current_z[i]});
    res.tables.push_back(std::move(t));
    res.summary = {{"max_abs_z", oc.max_abs_z},
                   {"chi_square", oc.chi_square.statistic},
                   {"chi_square_dof", oc.chi_square.degrees_of_freedom},
                   {"chi_square_p", oc.chi_square.p_value},
                   {"mass_drift", oc.max_mass_drift}};
    res.checks.push_back(at_most("max |z| of site densities and bond currents", oc.max_abs_z, c.tolerance("z_max", 3.0)));
    if (chi_n > 0)
        res.checks.push_back(at_least("end-state chi-square p-value", oc.chi_square.p_value, c.tolerance("p_min", 0.01),
                                      std::to_string(oc.chi_square.bins) + " bins"));
    return res;
}

ExperimentResult run_martingale(const ExperimentConfig& c) {
    ExperimentResult res;
    const MartingaleReport mr = martingale_report(c, c.tolerance("amplitude", 0.3), &res.replicas);
    Table t{"martingale", {"family", "compensated", "uncompensated", "mc_mean", "mc_se"}, {}};
    double worst_fk = 0.0, worst_z = 0.0;
    for (int k = 0; k < kMartingaleFamilies; ++k) {
        const auto u = static_cast<std::size_t>(k);
        t.rows.push_back({double(k), mr.compensated[u], mr.uncompensated[u], mr.mc_mean[u], mr.mc_se[u]});
        worst_fk = std::max(worst_fk, std::abs(mr.compensated[u] - 1.0));
        worst_z = std::max(worst_z, std::abs(mr.mc_mean[u] - 1.0) / mr.mc_se[u]);
    }
    res.tables.push_back(std::move(t));
    res.summary = {{"max_fk_deviation", worst_fk}, {"max_mc_z", worst_z}, {"max_replay_gap", mr.max_replay_gap}};
    res.checks.push_back(at_most("compensated Feynman-Kac |value - 1|", worst_fk, c.tolerance("fk_tol", 1e-5)));
    res.checks.push_back(at_most("Monte Carlo E[exp(log RN)] max |z|", worst_z, c.tolerance("z_max", 3.0)));
    res.checks.push_back(at_most("incremental vs replayed log RN", mr.max_replay_gap, c.tolerance("replay_tol", 1e-8)));
    return res;
}

ExperimentResult run_entropy(const ExperimentConfig& c) {
    ExperimentResult res;
    const EntropyTarget target = entropy_target(c);
    std::vector<EntropyPoint> pts;
    for (int n : c.n_values) pts.push_back(entropy_point(c, target, n, &res.replicas));
    Table t{"entropy", {"n", "entropy_rate", "entropy_se", "rate", "relative_gap", "sup_distance", "wall_seconds"}, {}};
    std::vector<double> gap, sup;
    for (const auto& e : pts) {
        const double rel = e.rate > 0 ? std::abs(e.entropy_rate - e.rate) / e.rate : std::abs(e.entropy_rate);
        t.rows.push_back({double(e.n), e.entropy_rate, e.entropy_se, e.rate, rel, e.sup_distance, e.wall_seconds});
        gap.push_back(rel);
        sup.push_back(e.sup_distance);
        res.summary["n" + std::to_string(e.n)] = {
            {"entropy_rate", e.entropy_rate}, {"entropy_se", e.entropy_se}, {"rate", e.rate}, {"sup_distance", e.sup_distance}};
    }
    res.tables.push_back(std::move(t));
    if (pts.empty()) return res;
    if (target.rate > 0) {
        if (pts.size() > 1) res.checks.push_back(flag("entropy gap decreasing in N", strictly_decreasing(gap), join(gap)));
        res.checks.push_back(at_most("relative entropy gap at largest N", gap.back(), c.tolerance("relative_gap", 0.15)));
        if (pts.size() > 1)
            res.checks.push_back(flag("tilted profile sup-distance decreasing in N", strictly_decreasing(sup), join(sup)));
    } else {
        res.checks.push_back(at_most("entropy rate of the zero tilt", std::abs(pts.back().entropy_rate),
                                     c.tolerance("zero_tol", 1e-12)));
    }
    return res;
}

ExperimentResult run_rate(const ExperimentConfig& c) {
    ExperimentResult res;
    const BoundaryProtocol& p = c.boundary();
    if (c.inputs.size() >= 2) {
        const DensityField rho = load_density_checked(c.inputs[0]);
        const CurrentPath j = load_current_checked(c.inputs[1]);
        const RateBreakdown b = rate_functional_closed(j, rho, p);
        res.summary = {{"rate", b.total}, {"current_term", b.current_term}, {"gradient_term", b.gradient_term},
                       {"cross_term", b.cross_term}, {"finite", b.finite}, {"boundary_mismatch", b.boundary_mismatch}};
        res.checks.push_back(flag("rate is finite", b.finite, "I = " + fmt(b.total)));
        return res;
    }
    const DensityField rho = DensityField::quasi_static(p, c.time_steps, c.space_steps);
    const CurrentPath j = CurrentPath::typical(p, c.time_steps, c.scaling.gamma);
    const RateBreakdown typical = rate_functional_closed(j, rho, p);
    const RateBreakdown reversed = rate_functional_closed(j.negated(), rho, p);
    const double closed = reversed_current_cost(p);
    res.tables.push_back({"rate",
                          {"time_steps", "space_steps", "typical", "reversed", "reversed_closed_form"},
                          {{double(c.time_steps), double(c.space_steps), typical.total, reversed.total, closed}}});
    res.summary = {{"typical", typical.total}, {"reversed", reversed.total}, {"reversed_closed_form", closed}};
    res.checks.push_back(at_most("I(J-bar, rho-bar)", std::abs(typical.total), c.tolerance("zero_tol", 1e-8)));
    res.checks.push_back(at_most("|I(-J-bar, rho-bar) - closed form|", std::abs(reversed.total - closed),
                                 c.tolerance("reversed_tol", 1e-4)));
    return res;
}

ExperimentResult run_bd(const ExperimentConfig& c) {
    ExperimentResult res;
    const BdScan s = bd_scan(c);
    Table t{"bd", {"q", "value"}, {}};
    for (std::size_t i = 0; i < s.q.size(); ++i) t.rows.push_back({s.q[i], s.value[i]});
    res.tables.push_back(std::move(t));
    res.summary = {{"q_bar", s.q_bar}, {"value_at_q_bar", s.value_at_q_bar}, {"min_second_difference", s.min_second_difference}};
    res.checks.push_back(at_most("I_BD(q-bar)", std::abs(s.value_at_q_bar), c.tolerance("zero_tol", 1e-8)));
    res.checks.push_back(at_least("min second difference on the q grid", s.min_second_difference,
                                  -c.tolerance("convexity_tol", 1e-10)));
    return res;
}

ExperimentResult run_fluctuation(const ExperimentConfig& c) {
    ExperimentResult res;
    const FluctuationReport fr = fluctuation_report(c);
    Table t{"fluctuation", {"field", "relative_residual", "contracted_residual", "rate_minus_Q"}, {}};
    for (std::size_t i = 0; i < fr.residual.size(); ++i)
        t.rows.push_back({double(i), fr.residual[i], fr.contracted_residual[i], fr.q_gap[i]});
    res.tables.push_back(std::move(t));
    const double r = *std::max_element(fr.residual.begin(), fr.residual.end());
    const double cr = *std::max_element(fr.contracted_residual.begin(), fr.contracted_residual.end());
    const double qg = *std::min_element(fr.q_gap.begin(), fr.q_gap.end());
    res.summary = {{"max_relative_residual", r}, {"max_contracted_residual", cr}, {"min_rate_minus_Q", qg}};
    res.checks.push_back(at_most("fluctuation identity, relative residual", r, c.tolerance("identity_tol", 1e-9)));
    res.checks.push_back(at_most("contracted fluctuation identity", cr, c.tolerance("contracted_tol", 1e-4)));
    res.checks.push_back(at_least("I - Q over the fields", qg, -c.tolerance("q_tol", 1e-12)));

    const VariationalReport vr = variational_report(c);
    Table v{"variational", {"field", "level", "time_steps", "space_steps", "gap"}, {}};
    double worst_order = std::numeric_limits<double>::infinity();
    bool shrinking = true;
    for (std::size_t f = 0; f < vr.gap.size(); ++f) {
        for (std::size_t l = 0; l < vr.levels.size(); ++l)
            v.rows.push_back({double(f), double(l), double(vr.levels[l]), 2.0 * vr.levels[l], vr.gap[f][l]});
        worst_order = std::min(worst_order, vr.observed_order[f]);
        shrinking = shrinking && vr.gap[f].back() < vr.gap[f].front();
    }
    res.tables.push_back(std::move(v));
    double finest = 0.0;
    for (std::size_t f = 0; f < vr.gap.size(); ++f)
        finest = std::max(finest, vr.gap[f].back() / std::max(1.0, std::abs(vr.reference[f])));
    res.summary["variational_min_order"] = worst_order;
    res.summary["variational_finest_gap"] = finest;
    res.summary["variational_random_excess"] = vr.worst_random_excess;
    res.checks.push_back(flag("variational gap below its coarsest value", shrinking));
    res.checks.push_back(at_least("variational observed order, last doubling", worst_order, c.tolerance("order_min", 0.9)));
    res.checks.push_back(at_most("variational relative gap at the finest grid", finest, c.tolerance("variational_gap", 1e-3)));
    res.checks.push_back(at_most("objective(H) - I over random tilts", vr.worst_random_excess,
                                 c.tolerance("variational_slack", 1e-3)));
    return res;
}

ExperimentResult run_regularization(const ExperimentConfig& c) {
    ExperimentResult res;
    const RegularizationReport rr = regularization_report(c);
    Table t{"regularization", {"field", "k", "eps", "rate", "gap"}, {}};
    bool monotone = true;
    double final_gap = 0.0;
    for (std::size_t f = 0; f < rr.gap.size(); ++f) {
        for (std::size_t s = 0; s < rr.k.size(); ++s) {
            t.rows.push_back({double(f), rr.k[s], rr.eps[s], rr.rate[f], rr.gap[f][s]});
            if (s > 0 && rr.gap[f][s] > rr.gap[f][s - 1] + 1e-12) monotone = false;
        }
        final_gap = std::max(final_gap, rr.gap[f].back());
    }
    res.tables.push_back(std::move(t));
    Table r{"resolvent", {"space_steps", "residual"}, {}};
    for (std::size_t i = 0; i < rr.grid.size(); ++i) r.rows.push_back({double(rr.grid[i]), rr.residual[i]});
    res.tables.push_back(std::move(r));
    const std::size_t L = rr.residual.size();
    const double order = std::log2(rr.residual[L - 2] / rr.residual[L - 1]);
    res.summary = {{"final_gap", final_gap}, {"resolvent_order", order}};
    res.checks.push_back(flag("regularised rate gap non-increasing", monotone));
    res.checks.push_back(at_most("final regularisation gap", final_gap, c.tolerance("gap_max", 1e-3)));
    res.checks.push_back(at_least("resolvent identity residual order", order, c.tolerance("order_min", 1.8)));
    return res;
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& c) {
    c.validate();
    const auto t0 = Clock::now();
    ExperimentResult res;
    switch (c.kind) {
        case ExperimentKind::HydroConvergence: res = run_hydro(c); break;
        case ExperimentKind::OracleCheck: res = run_oracle(c); break;
        case ExperimentKind::MartingaleCheck: res = run_martingale(c); break;
        case ExperimentKind::TiltedEntropy: res = run_entropy(c); break;
        case ExperimentKind::RateEval: res = run_rate(c); break;
        case ExperimentKind::BdScan: res = run_bd(c); break;
        case ExperimentKind::FluctuationCheck: res = run_fluctuation(c); break;
        case ExperimentKind::RegularizationScan: res = run_regularization(c); break;
    }
    res.kind = kind_name(c.kind);
    res.wall_seconds = seconds_since(t0);
    return res;
}

}  // namespace ssepld::harness
