#pragma once

// Configuration eta on sites -N..N, the set of active bonds, and the
// integrated-current counters h_+-(t, x) on channels x = -N-1..N.

#include <cstdint>
#include <span>
#include <vector>

namespace ssepld {

// Indices 0..capacity-1 with O(1) insert, erase, membership and k-th element.
class IndexSet {
public:
    explicit IndexSet(int capacity = 0);

    void insert(int i);
    void erase(int i);
    bool contains(int i) const { return pos_[static_cast<std::size_t>(i)] >= 0; }
    int size() const { return static_cast<int>(items_.size()); }
    int at(int k) const { return items_[static_cast<std::size_t>(k)]; }

private:
    std::vector<int> items_;
    std::vector<int> pos_;
};

class LatticeState {
public:
    LatticeState() = default;
    // occupancy[k] is eta(k - N); entries must be 0 or 1.
    LatticeState(int n, std::vector<std::uint8_t> occupancy);

    static LatticeState empty(int n);
    static LatticeState full(int n);

    int n() const { return n_; }
    int sites() const { return 2 * n_ + 1; }
    int bonds() const { return 2 * n_; }
    int at(int x) const { return occ_[static_cast<std::size_t>(x + n_)]; }
    std::span<const std::uint8_t> occupancy() const { return occ_; }
    int particles() const;

    // Bond b joins sites x = b - N and x + 1; it is active when they differ.
    const IndexSet& active_bonds() const { return active_; }
    bool bond_active(int b) const { return occ_[static_cast<std::size_t>(b)] != occ_[static_cast<std::size_t>(b) + 1]; }

    void exchange(int bond);  // swaps the two sites of the bond
    void flip(int x);         // boundary creation/annihilation at x = -N or N

    // Full recomputation of the active set compared with the incremental one.
    bool audit() const;

private:
    void refresh_bond(int b);

    int n_ = 0;
    std::vector<std::uint8_t> occ_;
    IndexSet active_;
};

// h_+(t,x) and h_-(t,x) for channel c = x + N + 1, c = 0..2N+1.
class CurrentCounters {
public:
    CurrentCounters() = default;
    explicit CurrentCounters(int n);

    int n() const { return n_; }
    int channels() const { return 2 * n_ + 2; }
    static int channel(int n, int x) { return x + n + 1; }

    void record_plus(int c) { ++plus_[static_cast<std::size_t>(c)]; }
    void record_minus(int c) { ++minus_[static_cast<std::size_t>(c)]; }

    std::int64_t plus(int c) const { return plus_[static_cast<std::size_t>(c)]; }
    std::int64_t minus(int c) const { return minus_[static_cast<std::size_t>(c)]; }
    std::int64_t net(int c) const { return plus(c) - minus(c); }
    std::vector<std::int64_t> net_all() const;

private:
    int n_ = 0;
    std::vector<std::int64_t> plus_;
    std::vector<std::int64_t> minus_;
};

struct CountInvariantReport {
    bool conservation = true;      // eta_t(x) - eta_0(x) = h(x-1) - h(x)
    bool homogeneity = true;       // |h(x) - h(x')| <= 2N for x, x' in -N..N
    std::int64_t max_spread = 0;   // max - min of h over x = -N..N
};

CountInvariantReport check_count_invariants(const LatticeState& initial, const LatticeState& current,
                                            std::span<const std::int64_t> net_current);

// Mobilities phi_+-(eta, x, t) of the channel c = x + N + 1 at reservoir
// densities (rho_minus, rho_plus).
struct ChannelMobility {
    double plus = 0.0;
    double minus = 0.0;
};
ChannelMobility mobility(const LatticeState& eta, int channel, double rho_minus, double rho_plus);

}  // namespace ssepld
