#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"

namespace ssepld::harness {

unsigned worker_count(unsigned requested);

// Runs f(i) for i = 0..count-1 on up to `threads` workers. Results land in
// index order, so any later reduction is independent of scheduling. The first
// exception thrown by a worker is rethrown after all workers stop.
template <class R, class F>
std::vector<R> fan_out(std::size_t count, unsigned threads, F&& f) {
    std::vector<R> out(count);
    const unsigned workers = std::min<std::size_t>(worker_count(threads), std::max<std::size_t>(count, 1));
    if (workers <= 1) {
        for (std::size_t i = 0; i < count; ++i) out[i] = f(i);
        return out;
    }
    std::atomic<std::size_t> next{0};
    std::atomic<bool> failed{false};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto work = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= count || failed.load()) return;
            try {
                out[i] = f(i);
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (!error) error = std::current_exception();
                failed = true;
            }
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
    return out;
}

struct Table {
    std::string name;
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;
};

struct CheckLine {
    std::string name;
    bool passed = false;
    double value = 0.0;
    double threshold = 0.0;
    std::string detail;
};

struct ReplicaInfo {
    int block = 0;  // lattice size or field index the replica belongs to
    std::uint64_t index = 0;
    std::uint64_t seed = 0;
    double wall_seconds = 0.0;
};

struct ExperimentResult {
    std::string kind;
    std::vector<CheckLine> checks;
    std::vector<Table> tables;
    std::vector<ReplicaInfo> replicas;
    nlohmann::json summary = nlohmann::json::object();
    double wall_seconds = 0.0;

    bool passed() const;
};

// Seed of the block (one lattice size, one tilt field) that replica seeds derive from.
std::uint64_t block_seed(std::uint64_t base, int block);
inline constexpr const char* kSeedRule =
    "seed(block, r) = splitmix64(splitmix64(base + block) ^ splitmix64(r + 1))";

void write_table(const std::string& path, const Table& t);
// Writes <dir>/<table>.tsv, <dir>/seeds.tsv, <dir>/manifest.json and
// <dir>/summary.json, creating the directory if needed.
void write_outputs(const std::string& dir, const nlohmann::json& config_echo, const ExperimentResult& r);
nlohmann::json summary_json(const ExperimentResult& r);

std::string toolkit_version();

}  // namespace ssepld::harness
