#pragma once

// Experiment configuration: a versioned JSON document,
//
//   {
//     "version": 1,
//     "kind": "hydro-convergence",
//     "scaling": {"n": 8, "alpha": 1.0, "gamma": 1.0},
//     "n_values": [8, 16, 32],
//     "protocol": {"horizon": 1.0, "left": {...}, "right": {...}},
//     "replicas": 50, "seed": 2024, "threads": 0,
//     "windows": 20, "eps": 0.1, "initial": "bernoulli",
//     "grid": {"time_steps": 200, "space_steps": 200},
//     "target": {"current_shift": -0.2},
//     "tolerances": {"l1_max": 0.05},
//     "output": "out"
//   }
//
// Every field except "kind" has a per-kind default.

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "ssepld/protocol.hpp"
#include "ssepld/simulator.hpp"

namespace ssepld::harness {

inline constexpr int kConfigVersion = 1;

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class ExperimentKind {
    HydroConvergence,
    OracleCheck,
    MartingaleCheck,
    TiltedEntropy,
    RateEval,
    BdScan,
    FluctuationCheck,
    RegularizationScan,
};

std::string kind_name(ExperimentKind k);
ExperimentKind parse_kind(const std::string& s);  // throws ConfigError

struct ExperimentConfig {
    int version = kConfigVersion;
    ExperimentKind kind = ExperimentKind::RateEval;
    ScalingParameters scaling;
    std::vector<int> n_values;
    std::optional<BoundaryProtocol> protocol;
    std::uint64_t replicas = 1;
    std::uint64_t seed = 1;
    unsigned threads = 0;  // 0 means hardware concurrency
    int windows = 20;
    double eps = 0.1;
    InitialCondition::Kind initial = InitialCondition::Kind::Bernoulli;
    int time_steps = 200;
    int space_steps = 200;
    double current_shift = -0.2;
    std::map<std::string, double> tolerances;
    std::string output;
    std::vector<std::string> inputs;  // optional grid files for rate-eval / regularization-scan

    double tolerance(const std::string& key, double fallback) const;
    const BoundaryProtocol& boundary() const;

    void validate() const;  // throws ConfigError
    nlohmann::json to_json() const;
};

// Defaults for the kind, then the document's fields.
ExperimentConfig default_config(ExperimentKind kind);
ExperimentConfig config_from_json(const nlohmann::json& j);
ExperimentConfig load_config(const std::string& path);

}  // namespace ssepld::harness
