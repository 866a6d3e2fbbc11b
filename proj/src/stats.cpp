#include "ssepld/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include <boost/math/distributions/chi_squared.hpp>

namespace ssepld {

void RunningStats::add(double x) {
    ++n_;
    const double d = x - mean_;
    mean_ += d / static_cast<double>(n_);
    m2_ += d * (x - mean_);
}

void RunningStats::merge(const RunningStats& o) {
    if (o.n_ == 0) return;
    if (n_ == 0) {
        *this = o;
        return;
    }
    const double total = static_cast<double>(n_ + o.n_);
    const double d = o.mean_ - mean_;
    mean_ += d * static_cast<double>(o.n_) / total;
    m2_ += o.m2_ + d * d * static_cast<double>(n_) * static_cast<double>(o.n_) / total;
    n_ += o.n_;
}

double RunningStats::variance() const { return n_ > 1 ? m2_ / static_cast<double>(n_ - 1) : 0.0; }

double RunningStats::standard_error() const {
    return n_ > 1 ? std::sqrt(variance() / static_cast<double>(n_)) : 0.0;
}

double mean_of(std::span<const double> x) {
    RunningStats s;
    for (double v : x) s.add(v);
    return s.mean();
}

double standard_error_of(std::span<const double> x) {
    RunningStats s;
    for (double v : x) s.add(v);
    return s.standard_error();
}

ChiSquareResult chi_square_test(std::span<const std::uint64_t> observed, std::span<const double> probabilities,
                                double min_expected) {
    if (observed.size() != probabilities.size()) throw std::invalid_argument("chi-square: size mismatch");
    const double n = static_cast<double>(std::accumulate(observed.begin(), observed.end(), std::uint64_t{0}));
    if (n <= 0.0) throw std::invalid_argument("chi-square: no observations");
    std::vector<std::size_t> order(observed.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return probabilities[a] < probabilities[b]; });

    std::vector<double> exp_bins, obs_bins;
    double e_acc = 0.0, o_acc = 0.0;
    for (std::size_t k : order) {
        e_acc += n * probabilities[k];
        o_acc += static_cast<double>(observed[k]);
        if (e_acc >= min_expected) {
            exp_bins.push_back(e_acc);
            obs_bins.push_back(o_acc);
            e_acc = o_acc = 0.0;
        }
    }
    if (e_acc > 0.0 || o_acc > 0.0) {
        if (exp_bins.empty()) {
            exp_bins.push_back(e_acc);
            obs_bins.push_back(o_acc);
        } else {
            exp_bins.back() += e_acc;
            obs_bins.back() += o_acc;
        }
    }
    ChiSquareResult r;
    r.bins = static_cast<int>(exp_bins.size());
    for (std::size_t b = 0; b < exp_bins.size(); ++b) {
        const double d = obs_bins[b] - exp_bins[b];
        r.statistic += d * d / exp_bins[b];
    }
    r.degrees_of_freedom = r.bins - 1;
    if (r.degrees_of_freedom < 1) {
        r.p_value = 1.0;
        return r;
    }
    const boost::math::chi_squared dist(r.degrees_of_freedom);
    r.p_value = boost::math::cdf(boost::math::complement(dist, r.statistic));
    return r;
}

}  // namespace ssepld
