#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace ssepld {

// Running mean and variance (Welford).
class RunningStats {
public:
    void add(double x);
    void merge(const RunningStats& other);

    std::size_t count() const { return n_; }
    double mean() const { return mean_; }
    double variance() const;  // unbiased
    double standard_error() const;

private:
    std::size_t n_ = 0;
    double mean_ = 0.0;
    double m2_ = 0.0;
};

double mean_of(std::span<const double> x);
double standard_error_of(std::span<const double> x);

struct ChiSquareResult {
    double statistic = 0.0;
    int degrees_of_freedom = 0;
    double p_value = 1.0;
    int bins = 0;  // after pooling
};

// Pearson test of observed counts against expected probabilities. Categories
// with expected count below min_expected are pooled, in order of increasing
// probability, until every bin reaches it.
ChiSquareResult chi_square_test(std::span<const std::uint64_t> observed, std::span<const double> probabilities,
                                double min_expected = 5.0);

}  // namespace ssepld
