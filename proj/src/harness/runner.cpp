#include "ssepld/harness/runner.hpp"

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <stdexcept>

#include "ssepld/random.hpp"

namespace ssepld::harness {

unsigned worker_count(unsigned requested) {
    if (requested > 0) return requested;
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : hw;
}

bool ExperimentResult::passed() const {
    for (const auto& c : checks)
        if (!c.passed) return false;
    return true;
}

std::uint64_t block_seed(std::uint64_t base, int block) {
    return splitmix64(base + static_cast<std::uint64_t>(block));
}

std::string toolkit_version() { return "ssepld 1.0.0"; }

void write_table(const std::string& path, const Table& t) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot write '" + path + "'");
    for (std::size_t c = 0; c < t.columns.size(); ++c) os << (c ? "\t" : "") << t.columns[c];
    os << '\n' << std::setprecision(17);
    for (const auto& row : t.rows) {
        for (std::size_t c = 0; c < row.size(); ++c) os << (c ? "\t" : "") << row[c];
        os << '\n';
    }
}

nlohmann::json summary_json(const ExperimentResult& r) {
    nlohmann::json checks = nlohmann::json::array();
    for (const auto& c : r.checks) {
        checks.push_back({{"name", c.name},
                          {"passed", c.passed},
                          {"value", c.value},
                          {"threshold", c.threshold},
                          {"detail", c.detail}});
    }
    return {{"kind", r.kind}, {"passed", r.passed()}, {"checks", checks}, {"statistics", r.summary}};
}

void write_outputs(const std::string& dir, const nlohmann::json& config_echo, const ExperimentResult& r) {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw std::runtime_error("cannot create output directory '" + dir + "': " + ec.message());

    for (const auto& t : r.tables) write_table((fs::path(dir) / (t.name + ".tsv")).string(), t);

    {
        std::ofstream os(fs::path(dir) / "seeds.tsv");
        os << "block\treplica\tseed\twall_seconds\n";
        for (const auto& s : r.replicas)
            os << s.block << '\t' << s.index << '\t' << s.seed << '\t' << std::setprecision(6) << s.wall_seconds
               << '\n';
    }

    nlohmann::json manifest;
    manifest["toolkit_version"] = toolkit_version();
    manifest["config"] = config_echo;
    manifest["seed_rule"] = kSeedRule;
    manifest["replica_count"] = r.replicas.size();
    manifest["seeds_file"] = "seeds.tsv";
    double replica_wall = 0.0;
    for (const auto& s : r.replicas) replica_wall += s.wall_seconds;
    manifest["wall_seconds"] = {{"total", r.wall_seconds}, {"replicas", replica_wall}};
    manifest["statistics"] = r.summary;
    std::vector<std::string> tables;
    for (const auto& t : r.tables) tables.push_back(t.name + ".tsv");
    manifest["tables"] = tables;

    std::ofstream(fs::path(dir) / "manifest.json") << manifest.dump(2) << '\n';
    std::ofstream(fs::path(dir) / "summary.json") << summary_json(r).dump(2) << '\n';
}

}  // namespace ssepld::harness
