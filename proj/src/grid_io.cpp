#include "ssepld/grid_io.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace ssepld {

namespace {

void write_header(std::ostream& os, double horizon, int mt, int my) {
    os << std::setprecision(17);
    os << "# horizon " << horizon << "\n# time_steps " << mt << "\n";
    if (my > 0) os << "# space_steps " << my << "\n";
}

void write_grid(std::ostream& os, const GridSpec& g, const std::vector<double>& v) {
    write_header(os, g.horizon, g.time_steps, g.space_steps);
    os << "t y value\n";
    std::size_t k = 0;
    for (int i = 0; i < g.time_nodes(); ++i) {
        for (int j = 0; j < g.space_nodes(); ++j) os << g.t(i) << ' ' << g.y(j) << ' ' << v[k++] << '\n';
    }
}

struct Parsed {
    std::map<std::string, double> header;
    std::vector<std::vector<double>> rows;
};

[[noreturn]] void fail(int line, const std::string& what) {
    throw std::runtime_error("grid file line " + std::to_string(line) + ": " + what);
}

Parsed parse(std::istream& is, std::size_t columns) {
    Parsed out;
    std::string line;
    int lineno = 0;
    bool seen_columns = false;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::istringstream ss(line);
        if (line[0] == '#') {
            std::string hash, key;
            double value;
            if (!(ss >> hash >> key >> value)) fail(lineno, "malformed header");
            out.header[key] = value;
            continue;
        }
        if (!seen_columns) {
            seen_columns = true;
            if (line[0] == 't') continue;
        }
        std::vector<double> row(columns);
        for (auto& x : row) {
            if (!(ss >> x)) fail(lineno, "expected " + std::to_string(columns) + " numeric columns");
        }
        std::string extra;
        if (ss >> extra) fail(lineno, "trailing data");
        out.rows.push_back(std::move(row));
    }
    for (const char* key : {"horizon", "time_steps"}) {
        if (!out.header.count(key)) fail(lineno, std::string("missing header '") + key + "'");
    }
    return out;
}

int header_int(const Parsed& p, const std::string& key) {
    auto it = p.header.find(key);
    if (it == p.header.end()) throw std::runtime_error("grid file: missing header '" + key + "'");
    const double v = it->second;
    if (v != std::floor(v) || v < 1) throw std::runtime_error("grid file: header '" + key + "' must be a positive integer");
    return static_cast<int>(v);
}

std::pair<GridSpec, std::vector<double>> read_grid(std::istream& is) {
    Parsed p = parse(is, 3);
    GridSpec g{p.header.at("horizon"), header_int(p, "time_steps"), header_int(p, "space_steps")};
    g.validate();
    const std::size_t expected = static_cast<std::size_t>(g.time_nodes()) * g.space_nodes();
    if (p.rows.size() != expected) {
        throw std::runtime_error("grid file: expected " + std::to_string(expected) + " rows, found " +
                                 std::to_string(p.rows.size()));
    }
    std::vector<double> v(expected);
    const double tol = 1e-9;
    for (std::size_t k = 0; k < expected; ++k) {
        const int i = static_cast<int>(k) / g.space_nodes();
        const int j = static_cast<int>(k) % g.space_nodes();
        if (std::abs(p.rows[k][0] - g.t(i)) > tol * std::max(1.0, g.horizon) || std::abs(p.rows[k][1] - g.y(j)) > tol) {
            throw std::runtime_error("grid file: row " + std::to_string(k) + " is off the declared grid");
        }
        v[k] = p.rows[k][2];
    }
    return {g, std::move(v)};
}

template <class T, class Reader>
T load(const std::string& path, Reader reader) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open grid file '" + path + "'");
    return reader(in);
}

}  // namespace

void write_density(std::ostream& os, const DensityField& f) { write_grid(os, f.grid(), f.values()); }

void write_tilt(std::ostream& os, const TiltField& f) { write_grid(os, f.grid(), f.values()); }

void write_current(std::ostream& os, const CurrentPath& j) {
    write_header(os, j.horizon(), j.time_steps(), 0);
    os << "t value\n";
    for (int i = 0; i <= j.time_steps(); ++i) {
        const double t = i == j.time_steps() ? j.horizon() : i * j.dt();
        os << t << ' ' << j.at(i) << '\n';
    }
}

DensityField read_density(std::istream& is) {
    auto [g, v] = read_grid(is);
    return DensityField(g, std::move(v));
}

TiltField read_tilt(std::istream& is) {
    auto [g, v] = read_grid(is);
    return TiltField(g, std::move(v));
}

CurrentPath read_current(std::istream& is) {
    Parsed p = parse(is, 2);
    const int mt = header_int(p, "time_steps");
    if (p.rows.size() != static_cast<std::size_t>(mt) + 1) throw std::runtime_error("current file: wrong number of rows");
    std::vector<double> v;
    v.reserve(p.rows.size());
    for (const auto& r : p.rows) v.push_back(r[1]);
    return CurrentPath(p.header.at("horizon"), std::move(v));
}

DensityField load_density(const std::string& path) { return load<DensityField>(path, [](std::istream& s) { return read_density(s); }); }
TiltField load_tilt(const std::string& path) { return load<TiltField>(path, [](std::istream& s) { return read_tilt(s); }); }
CurrentPath load_current(const std::string& path) { return load<CurrentPath>(path, [](std::istream& s) { return read_current(s); }); }

}  // namespace ssepld
