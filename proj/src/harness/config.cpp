#include "ssepld/harness/config.hpp"

#include <array>
#include <fstream>
#include <sstream>
#include <utility>

#include "ssepld/oracle.hpp"

namespace ssepld::harness {

namespace {

constexpr std::array<std::pair<ExperimentKind, const char*>, 8> kKinds{{
    {ExperimentKind::HydroConvergence, "hydro-convergence"},
    {ExperimentKind::OracleCheck, "oracle-check"},
    {ExperimentKind::MartingaleCheck, "martingale-check"},
    {ExperimentKind::TiltedEntropy, "tilted-entropy"},
    {ExperimentKind::RateEval, "rate-eval"},
    {ExperimentKind::BdScan, "bd-scan"},
    {ExperimentKind::FluctuationCheck, "fluctuation-check"},
    {ExperimentKind::RegularizationScan, "regularization-scan"},
}};

const char* initial_name(InitialCondition::Kind k) {
    switch (k) {
        case InitialCondition::Kind::Empty: return "empty";
        case InitialCondition::Kind::Full: return "full";
        case InitialCondition::Kind::Bernoulli: return "bernoulli";
        case InitialCondition::Kind::Explicit: return "explicit";
    }
    return "bernoulli";
}

InitialCondition::Kind parse_initial(const std::string& s) {
    if (s == "empty") return InitialCondition::Kind::Empty;
    if (s == "full") return InitialCondition::Kind::Full;
    if (s == "bernoulli") return InitialCondition::Kind::Bernoulli;
    throw ConfigError("unknown initial condition '" + s + "' (expected empty, full or bernoulli)");
}

BoundaryProtocol sinusoidal_left(double horizon) {
    constexpr double kTwoPi = 6.283185307179586;
    return BoundaryProtocol(SinusoidSchedule{0.5, 0.2, kTwoPi, 0.0}, ConstantSchedule{0.5}, horizon);
}

template <class T>
T get_or(const nlohmann::json& j, const char* key, T fallback) {
    if (!j.contains(key)) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("field '") + key + "': " + e.what());
    }
}

}  // namespace

std::string kind_name(ExperimentKind k) {
    for (const auto& [kind, name] : kKinds)
        if (kind == k) return name;
    return "unknown";
}

ExperimentKind parse_kind(const std::string& s) {
    for (const auto& [kind, name] : kKinds)
        if (s == name) return kind;
    std::string known;
    for (const auto& [kind, name] : kKinds) known += (known.empty() ? "" : ", ") + std::string(name);
    throw ConfigError("unknown experiment kind '" + s + "' (known: " + known + ")");
}

double ExperimentConfig::tolerance(const std::string& key, double fallback) const {
    auto it = tolerances.find(key);
    return it == tolerances.end() ? fallback : it->second;
}

const BoundaryProtocol& ExperimentConfig::boundary() const {
    if (!protocol) throw ConfigError("experiment needs a protocol");
    return *protocol;
}

ExperimentConfig default_config(ExperimentKind kind) {
    ExperimentConfig c;
    c.kind = kind;
    switch (kind) {
        case ExperimentKind::HydroConvergence:
            c.n_values = {8, 16, 32};
            c.protocol = sinusoidal_left(1.0);
            c.replicas = 50;
            c.windows = 20;
            break;
        case ExperimentKind::OracleCheck:
            c.scaling.n = 3;
            c.protocol = BoundaryProtocol::constant(0.2, 0.8, 1.0);
            c.replicas = 10000;
            break;
        case ExperimentKind::MartingaleCheck:
            c.scaling.n = 3;
            c.protocol = BoundaryProtocol(SinusoidSchedule{0.5, 0.2, 6.283185307179586, 0.0},
                                          ConstantSchedule{0.3}, 1.0);
            c.replicas = 10000;
            break;
        case ExperimentKind::TiltedEntropy:
            c.n_values = {8, 16, 32};
            c.protocol = BoundaryProtocol::constant(0.2, 0.8, 1.0);
            c.replicas = 100;
            c.windows = 10;
            c.time_steps = 20;
            c.space_steps = 256;
            break;
        case ExperimentKind::RateEval:
            c.protocol = sinusoidal_left(1.0);
            break;
        case ExperimentKind::BdScan:
            c.protocol = BoundaryProtocol::constant(0.2, 0.8, 1.0);
            c.space_steps = 400;
            break;
        case ExperimentKind::FluctuationCheck:
            c.protocol = sinusoidal_left(1.0);
            c.replicas = 20;
            c.time_steps = 20;
            c.space_steps = 200;
            break;
        case ExperimentKind::RegularizationScan:
            c.protocol = BoundaryProtocol::constant(0.2, 0.8, 1.0);
            c.time_steps = 20;
            c.space_steps = 200;
            break;
    }
    return c;
}

ExperimentConfig config_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw ConfigError("config must be a JSON object");
    if (!j.contains("kind")) throw ConfigError("config lacks 'kind'");
    ExperimentConfig c = default_config(parse_kind(get_or<std::string>(j, "kind", "")));
    c.version = get_or(j, "version", kConfigVersion);
    if (c.version != kConfigVersion)
        throw ConfigError("unsupported config version " + std::to_string(c.version));

    if (j.contains("scaling")) {
        const auto& s = j.at("scaling");
        c.scaling.n = get_or(s, "n", c.scaling.n);
        c.scaling.alpha = get_or(s, "alpha", c.scaling.alpha);
        c.scaling.gamma = get_or(s, "gamma", c.scaling.gamma);
    }
    c.n_values = get_or(j, "n_values", c.n_values);
    if (j.contains("protocol")) {
        try {
            c.protocol = BoundaryProtocol::from_json(j.at("protocol"));
        } catch (const std::exception& e) {
            throw ConfigError(std::string("protocol: ") + e.what());
        }
    }
    c.replicas = get_or(j, "replicas", c.replicas);
    c.seed = get_or(j, "seed", c.seed);
    c.threads = get_or(j, "threads", c.threads);
    c.windows = get_or(j, "windows", c.windows);
    c.eps = get_or(j, "eps", c.eps);
    if (j.contains("initial")) c.initial = parse_initial(get_or<std::string>(j, "initial", "bernoulli"));
    if (j.contains("grid")) {
        const auto& g = j.at("grid");
        c.time_steps = get_or(g, "time_steps", c.time_steps);
        c.space_steps = get_or(g, "space_steps", c.space_steps);
    }
    if (j.contains("target")) c.current_shift = get_or(j.at("target"), "current_shift", c.current_shift);
    c.tolerances = get_or(j, "tolerances", c.tolerances);
    c.output = get_or(j, "output", c.output);
    c.inputs = get_or(j, "inputs", c.inputs);
    c.validate();
    return c;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config '" + path + "'");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError("config '" + path + "': " + e.what());
    }
    // A run manifest carries its config under "config".
    if (j.is_object() && !j.contains("kind") && j.contains("config")) return config_from_json(j.at("config"));
    return config_from_json(j);
}

void ExperimentConfig::validate() const {
    try {
        scaling.validate();
    } catch (const std::exception& e) {
        throw ConfigError(std::string("scaling: ") + e.what());
    }
    for (int n : n_values)
        if (n < 1) throw ConfigError("n_values entries must be >= 1");
    if (replicas < 1) throw ConfigError("replicas must be >= 1");
    if (windows < 1) throw ConfigError("windows must be >= 1");
    if (!(eps > 0.0 && eps < 1.0)) throw ConfigError("eps must lie in (0, 1)");
    if (time_steps < 2) throw ConfigError("grid time_steps must be >= 2");
    if (space_steps < 2) throw ConfigError("grid space_steps must be >= 2");
    if (!protocol) throw ConfigError("experiment needs a protocol");
    if ((kind == ExperimentKind::OracleCheck || kind == ExperimentKind::MartingaleCheck) && scaling.n > kOracleMaxN)
        throw ConfigError("oracle experiments need N <= " + std::to_string(kOracleMaxN));
}

nlohmann::json ExperimentConfig::to_json() const {
    nlohmann::json j;
    j["version"] = version;
    j["kind"] = kind_name(kind);
    j["scaling"] = {{"n", scaling.n}, {"alpha", scaling.alpha}, {"gamma", scaling.gamma}};
    j["n_values"] = n_values;
    if (protocol) j["protocol"] = protocol->to_json();
    j["replicas"] = replicas;
    j["seed"] = seed;
    j["threads"] = threads;
    j["windows"] = windows;
    j["eps"] = eps;
    j["initial"] = initial_name(initial);
    j["grid"] = {{"time_steps", time_steps}, {"space_steps", space_steps}};
    j["target"] = {{"current_shift", current_shift}};
    j["tolerances"] = tolerances;
    j["output"] = output;
    j["inputs"] = inputs;
    return j;
}

}  // namespace ssepld::harness
