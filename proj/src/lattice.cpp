#include "ssepld/lattice.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace ssepld {

IndexSet::IndexSet(int capacity) : pos_(static_cast<std::size_t>(capacity), -1) {
    items_.reserve(static_cast<std::size_t>(capacity));
}

void IndexSet::insert(int i) {
    auto& p = pos_[static_cast<std::size_t>(i)];
    if (p >= 0) return;
    p = static_cast<int>(items_.size());
    items_.push_back(i);
}

void IndexSet::erase(int i) {
    auto& p = pos_[static_cast<std::size_t>(i)];
    if (p < 0) return;
    const int last = items_.back();
    items_[static_cast<std::size_t>(p)] = last;
    pos_[static_cast<std::size_t>(last)] = p;
    items_.pop_back();
    p = -1;
}

LatticeState::LatticeState(int n, std::vector<std::uint8_t> occupancy)
    : n_(n), occ_(std::move(occupancy)), active_(2 * n) {
    if (n < 1) throw std::invalid_argument("lattice needs N >= 1");
    if (occ_.size() != static_cast<std::size_t>(sites())) {
        throw std::invalid_argument("occupancy has " + std::to_string(occ_.size()) + " sites, expected " +
                                    std::to_string(sites()));
    }
    for (auto v : occ_) {
        if (v > 1) throw std::invalid_argument("occupancy entries must be 0 or 1");
    }
    for (int b = 0; b < bonds(); ++b) refresh_bond(b);
}

LatticeState LatticeState::empty(int n) { return LatticeState(n, std::vector<std::uint8_t>(static_cast<std::size_t>(2 * n + 1), 0)); }

LatticeState LatticeState::full(int n) { return LatticeState(n, std::vector<std::uint8_t>(static_cast<std::size_t>(2 * n + 1), 1)); }

int LatticeState::particles() const {
    int s = 0;
    for (auto v : occ_) s += v;
    return s;
}

void LatticeState::refresh_bond(int b) {
    if (bond_active(b)) {
        active_.insert(b);
    } else {
        active_.erase(b);
    }
}

void LatticeState::exchange(int bond) {
    std::swap(occ_[static_cast<std::size_t>(bond)], occ_[static_cast<std::size_t>(bond) + 1]);
    // The bond itself stays active; only its neighbours can change.
    if (bond > 0) refresh_bond(bond - 1);
    if (bond + 1 < bonds()) refresh_bond(bond + 1);
}

void LatticeState::flip(int x) {
    const int k = x + n_;
    occ_[static_cast<std::size_t>(k)] ^= 1u;
    if (k > 0) refresh_bond(k - 1);
    if (k < bonds()) refresh_bond(k);
}

bool LatticeState::audit() const {
    int count = 0;
    for (int b = 0; b < bonds(); ++b) {
        if (bond_active(b) != active_.contains(b)) return false;
        count += bond_active(b) ? 1 : 0;
    }
    return count == active_.size();
}

CurrentCounters::CurrentCounters(int n)
    : n_(n), plus_(static_cast<std::size_t>(2 * n + 2), 0), minus_(static_cast<std::size_t>(2 * n + 2), 0) {}

std::vector<std::int64_t> CurrentCounters::net_all() const {
    std::vector<std::int64_t> h(plus_.size());
    for (std::size_t c = 0; c < h.size(); ++c) h[c] = plus_[c] - minus_[c];
    return h;
}

CountInvariantReport check_count_invariants(const LatticeState& initial, const LatticeState& current,
                                            std::span<const std::int64_t> net_current) {
    const int n = current.n();
    if (net_current.size() != static_cast<std::size_t>(2 * n + 2)) {
        throw std::invalid_argument("current vector has the wrong number of channels");
    }
    CountInvariantReport r;
    for (int x = -n; x <= n; ++x) {
        const std::int64_t lhs = current.at(x) - initial.at(x);
        const std::int64_t rhs = net_current[static_cast<std::size_t>(x + n)] - net_current[static_cast<std::size_t>(x + n + 1)];
        if (lhs != rhs) r.conservation = false;
    }
    // Channels x = -N..N; the left reservoir channel is excluded.
    const auto [lo, hi] = std::minmax_element(net_current.begin() + 1, net_current.end());
    r.max_spread = *hi - *lo;
    r.homogeneity = r.max_spread <= 2 * n;
    return r;
}

ChannelMobility mobility(const LatticeState& eta, int channel, double rho_minus, double rho_plus) {
    const int n = eta.n();
    if (channel < 0 || channel > 2 * n + 1) throw std::out_of_range("channel index out of range");
    if (channel == 0) {
        const int e = eta.at(-n);
        return {rho_minus * (1 - e), (1.0 - rho_minus) * e};
    }
    if (channel == 2 * n + 1) {
        const int e = eta.at(n);
        return {(1.0 - rho_plus) * e, rho_plus * (1 - e)};
    }
    const int x = channel - n - 1;
    const int a = eta.at(x), b = eta.at(x + 1);
    return {static_cast<double>(a * (1 - b)), static_cast<double>(b * (1 - a))};
}

}  // namespace ssepld
