#include "ssepld/harness/cli.hpp"

#include <iomanip>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>

#include "CLI11.hpp"
#include "ssepld/harness/config.hpp"
#include "ssepld/harness/experiments.hpp"
#include "ssepld/simd/kernels.hpp"

namespace ssepld::harness {

namespace {

struct Overrides {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::optional<std::uint64_t> replicas;
    std::optional<int> n;
    std::optional<double> alpha;
    std::optional<double> eps;
    std::optional<unsigned> threads;
    std::string grid;
    std::string out;
};

void parse_grid(const std::string& s, ExperimentConfig& c) {
    try {
        const auto x = s.find('x');
        std::size_t used = 0;
        if (x == std::string::npos) {
            const int m = std::stoi(s, &used);
            if (used != s.size()) throw std::invalid_argument(s);
            c.time_steps = c.space_steps = m;
        } else {
            const std::string a = s.substr(0, x), b = s.substr(x + 1);
            c.time_steps = std::stoi(a, &used);
            if (used != a.size()) throw std::invalid_argument(s);
            c.space_steps = std::stoi(b, &used);
            if (used != b.size()) throw std::invalid_argument(s);
        }
    } catch (const std::logic_error&) {
        throw ConfigError("--grid expects M or MtxMy, got '" + s + "'");
    }
}

ExperimentConfig resolve(ExperimentKind kind, const Overrides& o) {
    ExperimentConfig c = o.config.empty() ? default_config(kind) : load_config(o.config);
    if (c.kind != kind)
        throw ConfigError("config kind '" + kind_name(c.kind) + "' does not match this subcommand ('" +
                          kind_name(kind) + "')");
    if (o.seed) c.seed = *o.seed;
    if (o.replicas) c.replicas = *o.replicas;
    if (o.n) {
        c.scaling.n = *o.n;
        if (!c.n_values.empty()) c.n_values = {*o.n};
    }
    if (o.alpha) c.scaling.alpha = *o.alpha;
    if (o.eps) c.eps = *o.eps;
    if (o.threads) c.threads = *o.threads;
    if (!o.grid.empty()) parse_grid(o.grid, c);
    if (!o.out.empty()) c.output = o.out;
    c.validate();
    return c;
}

void report(std::ostream& out, const ExperimentResult& r) {
    for (const auto& t : r.tables) {
        if (t.rows.size() > 60) {
            out << "# table " << t.name << ": " << t.rows.size() << " rows (see output directory)\n";
            continue;
        }
        out << "# table " << t.name << '\n';
        for (std::size_t i = 0; i < t.columns.size(); ++i) out << (i ? "\t" : "") << t.columns[i];
        out << '\n' << std::setprecision(10);
        for (const auto& row : t.rows) {
            for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "\t" : "") << row[i];
            out << '\n';
        }
    }
    for (const auto& c : r.checks) {
        out << (c.passed ? "PASS  " : "FAIL  ") << c.name << "  value=" << std::setprecision(8) << c.value
            << "  threshold=" << c.threshold;
        if (!c.detail.empty()) out << "  (" << c.detail << ')';
        out << '\n';
    }
    out << (r.passed() ? "all checks passed" : "some checks failed") << " [" << r.kind << ", "
        << std::setprecision(4) << r.wall_seconds << " s]\n";
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Boundary-driven exclusion process: simulation, exact oracles and rate functionals", "ssepld"};
    app.require_subcommand(1);
    app.set_version_flag("--version", toolkit_version());

    struct Command {
        const char* name;
        ExperimentKind kind;
        const char* help;
    };
    const Command commands[] = {
        {"simulate", ExperimentKind::HydroConvergence, "Quasi-static limit trend over lattice sizes"},
        {"rate", ExperimentKind::RateEval, "Evaluate the rate functional"},
        {"bd", ExperimentKind::BdScan, "Scan the Bodineau-Derrida functional"},
        {"oracle-check", ExperimentKind::OracleCheck, "Simulator against the exact master equation"},
        {"martingale-check", ExperimentKind::MartingaleCheck, "Exponential martingale has unit mean"},
        {"entropy-scan", ExperimentKind::TiltedEntropy, "Relative entropy of the tilted law over lattice sizes"},
        {"fluctuation-check", ExperimentKind::FluctuationCheck, "Fluctuation and variational identities"},
        {"regularize", ExperimentKind::RegularizationScan, "Regularisation scan and resolvent identity"},
    };

    Overrides o;
    std::optional<ExperimentKind> chosen;
    for (const auto& cmd : commands) {
        CLI::App* sub = app.add_subcommand(cmd.name, cmd.help);
        sub->add_option("--config", o.config, "JSON experiment config (or a run manifest)")->check(CLI::ExistingFile);
        sub->add_option("--seed", o.seed, "Base seed");
        sub->add_option("--replicas", o.replicas, "Replica count")->check(CLI::PositiveNumber);
        sub->add_option("--out", o.out, "Output directory");
        sub->add_option("--n", o.n, "Lattice half-width N")->check(CLI::PositiveNumber);
        sub->add_option("--alpha", o.alpha, "Quasi-static exponent")->check(CLI::PositiveNumber);
        sub->add_option("--eps", o.eps, "Local-average radius")->check(CLI::Range(0.0, 1.0));
        sub->add_option("--grid", o.grid, "Grid resolution M or MtxMy");
        sub->add_option("--threads", o.threads, "Worker threads (0 = all cores)");
        const ExperimentKind kind = cmd.kind;
        sub->callback([&chosen, kind] { chosen = kind; });
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::Success& e) {
        app.exit(e, out, err);
        return kExitPass;
    } catch (const CLI::ParseError& e) {
        app.exit(e, out, err);
        return kExitUsage;
    }
    if (!chosen) return kExitUsage;

    ExperimentConfig cfg;
    try {
        cfg = resolve(*chosen, o);
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << '\n';
        return kExitUsage;
    }

    try {
        out << "# " << toolkit_version() << ", kernels " << simd::isa_name(simd::active().isa) << '\n';
        const ExperimentResult r = run_experiment(cfg);
        report(out, r);
        if (!cfg.output.empty()) {
            write_outputs(cfg.output, cfg.to_json(), r);
            out << "# outputs written to " << cfg.output << '\n';
        }
        return r.passed() ? kExitPass : kExitCheckFailure;
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const std::length_error& e) {
        err << "refused: " << e.what() << '\n';
        return kExitUsage;
    } catch (const std::invalid_argument& e) {
        err << "invalid input: " << e.what() << '\n';
        return kExitUsage;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitCheckFailure;
    }
}

}  // namespace ssepld::harness
