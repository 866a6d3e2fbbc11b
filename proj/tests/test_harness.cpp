#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "ssepld/harness/cli.hpp"
#include "ssepld/harness/config.hpp"
#include "ssepld/harness/experiments.hpp"
#include "ssepld/harness/runner.hpp"
#include "ssepld/oracle.hpp"
#include "ssepld/random.hpp"

using namespace ssepld;
using namespace ssepld::harness;
namespace fs = std::filesystem;

namespace {

struct CliRun {
    int code;
    std::string out, err;
};

CliRun cli(std::vector<std::string> args) {
    args.insert(args.begin(), "ssepld");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("ssepld_harness_" + name);
    fs::remove_all(p);
    return p;
}

void write_json(const fs::path& p, const nlohmann::json& j) { std::ofstream(p) << j.dump(2); }

}  // namespace

TEST_CASE("config documents are validated") {
    CHECK_THROWS_AS(parse_kind("nope"), ConfigError);
    CHECK_THROWS_AS(config_from_json(nlohmann::json::array()), ConfigError);
    CHECK_THROWS_AS(config_from_json({{"replicas", 3}}), ConfigError);
    CHECK_THROWS_AS(config_from_json({{"kind", "rate-eval"}, {"version", 2}}), ConfigError);
    CHECK_THROWS_AS(config_from_json({{"kind", "rate-eval"}, {"replicas", "many"}}), ConfigError);
    CHECK_THROWS_AS(config_from_json({{"kind", "rate-eval"}, {"protocol", {{"horizon", -1.0}}}}), ConfigError);
    ExperimentConfig c = default_config(ExperimentKind::OracleCheck);
    CHECK_NOTHROW(c.validate());
    c.scaling.n = kOracleMaxN + 1;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = default_config(ExperimentKind::HydroConvergence);
    c.eps = 1.5;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    CHECK_THROWS_AS(load_config("/nonexistent/config.json"), ConfigError);
}

TEST_CASE("every default config survives a JSON round trip") {
    for (ExperimentKind k : {ExperimentKind::HydroConvergence, ExperimentKind::OracleCheck, ExperimentKind::MartingaleCheck,
                             ExperimentKind::TiltedEntropy, ExperimentKind::RateEval, ExperimentKind::BdScan,
                             ExperimentKind::FluctuationCheck, ExperimentKind::RegularizationScan}) {
        ExperimentConfig c = default_config(k);
        c.tolerances["z_max"] = 2.5;
        c.seed = 77;
        const nlohmann::json j = c.to_json();
        const ExperimentConfig back = config_from_json(j);
        CHECK(back.to_json() == j);
        CHECK(parse_kind(kind_name(k)) == k);
        CHECK(back.tolerance("z_max", 0.0) == 2.5);
        CHECK(back.tolerance("missing", 4.0) == 4.0);
    }
}

TEST_CASE("a manifest can be loaded as a config") {
    const fs::path dir = scratch("manifest");
    fs::create_directories(dir);
    ExperimentConfig c = default_config(ExperimentKind::BdScan);
    c.seed = 5;
    write_json(dir / "manifest.json", {{"toolkit_version", toolkit_version()}, {"config", c.to_json()}});
    CHECK(load_config((dir / "manifest.json").string()).to_json() == c.to_json());
    std::ofstream(dir / "broken.json") << "{ not json";
    CHECK_THROWS_AS(load_config((dir / "broken.json").string()), ConfigError);
    fs::remove_all(dir);
}

TEST_CASE("fan_out is independent of the worker count") {
    auto work = [](std::size_t i) { return static_cast<double>(splitmix64(i)) * 1e-19; };
    const auto one = fan_out<double>(1000, 1, work);
    const auto four = fan_out<double>(1000, 4, work);
    CHECK(one == four);
    CHECK(fan_out<double>(0, 4, work).empty());
    CHECK_THROWS_AS(fan_out<int>(100, 4,
                                 [](std::size_t i) {
                                     if (i == 37) throw std::runtime_error("boom");
                                     return 1;
                                 }),
                    std::runtime_error);
    CHECK(block_seed(3, 4) == splitmix64(7));
}

TEST_CASE("experiment results do not depend on the thread count") {
    ExperimentConfig c = default_config(ExperimentKind::OracleCheck);
    c.scaling.n = 1;
    c.replicas = 300;
    c.tolerances["chi_square_replicas"] = 0;
    c.threads = 1;
    const ExperimentResult a = run_experiment(c);
    c.threads = 4;
    const ExperimentResult b = run_experiment(c);
    CHECK(summary_json(a) == summary_json(b));
    REQUIRE(a.replicas.size() == b.replicas.size());
    for (std::size_t i = 0; i < a.replicas.size(); ++i) CHECK(a.replicas[i].seed == b.replicas[i].seed);
}

TEST_CASE("cli exit codes") {
    CHECK(cli({"rate"}).code == kExitPass);
    CHECK(cli({"--version"}).code == kExitPass);
    CHECK(cli({"rate", "--n", "-3"}).code == kExitUsage);
    CHECK(cli({"bd", "--grid", "12xq"}).code == kExitUsage);
    CHECK(cli({"frobnicate"}).code == kExitUsage);
    CHECK(cli({}).code == kExitUsage);
    CHECK(cli({"oracle-check", "--n", "9"}).code == kExitUsage);
    CHECK(cli({"rate", "--config", "/nonexistent.json"}).code == kExitUsage);

    const fs::path dir = scratch("cli");
    fs::create_directories(dir);
    write_json(dir / "bd.json", default_config(ExperimentKind::BdScan).to_json());
    const CliRun mismatch = cli({"rate", "--config", (dir / "bd.json").string()});
    CHECK(mismatch.code == kExitUsage);
    CHECK(mismatch.err.find("does not match") != std::string::npos);

    // A check that cannot pass: no simulated z-score is exactly zero.
    nlohmann::json strict = default_config(ExperimentKind::OracleCheck).to_json();
    strict["scaling"]["n"] = 1;
    strict["replicas"] = 200;
    strict["tolerances"] = {{"z_max", 0.0}, {"chi_square_replicas", 0}};
    write_json(dir / "strict.json", strict);
    const CliRun fail = cli({"oracle-check", "--config", (dir / "strict.json").string()});
    CHECK(fail.code == kExitCheckFailure);
    CHECK(fail.out.find("FAIL") != std::string::npos);
    fs::remove_all(dir);
}

TEST_CASE("outputs are written and a manifest reproduces the summary bit for bit") {
    const fs::path a = scratch("run_a"), b = scratch("run_b");
    const CliRun first = cli({"oracle-check", "--n", "1", "--replicas", "200", "--seed", "5", "--out", a.string()});
    REQUIRE(first.code == kExitPass);
    for (const char* f : {"manifest.json", "summary.json", "seeds.tsv"}) CHECK(fs::exists(a / f));
    const nlohmann::json manifest = nlohmann::json::parse(slurp(a / "manifest.json"));
    CHECK(manifest.at("seed_rule") == kSeedRule);
    CHECK(manifest.at("config").at("seed") == 5);
    for (const auto& t : manifest.at("tables")) CHECK(fs::exists(a / t.get<std::string>()));

    const CliRun again = cli({"oracle-check", "--config", (a / "manifest.json").string(), "--out", b.string()});
    REQUIRE(again.code == kExitPass);
    CHECK(slurp(a / "summary.json") == slurp(b / "summary.json"));
    for (const auto& t : manifest.at("tables")) CHECK(slurp(a / t.get<std::string>()) == slurp(b / t.get<std::string>()));

    // Seeds agree; only the timing column may differ.
    std::ifstream sa(a / "seeds.tsv"), sb(b / "seeds.tsv");
    std::string la, lb;
    int lines = 0;
    while (std::getline(sa, la) && std::getline(sb, lb)) {
        CHECK(la.substr(0, la.rfind('\t')) == lb.substr(0, lb.rfind('\t')));
        ++lines;
    }
    CHECK(lines > 200);
    fs::remove_all(a);
    fs::remove_all(b);
}
