#include <algorithm>
#include <cmath>

#include "ssepld/simd/kernels.hpp"

namespace ssepld::simd {

namespace {

constexpr double kTinyCell = 1e-7;

void pattern_flip(const double* p, double* dp, std::size_t n, unsigned shift, unsigned pattern_mask,
                  std::size_t partner, const double* gain, const double* loss) {
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t pat = (i >> shift) & pattern_mask;
        dp[i] += gain[pat] * p[i ^ partner] - loss[pat] * p[i];
    }
}

void diagonal_sub(const double* c, const double* p, double* dp, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) dp[i] -= c[i] * p[i];
}

void axpy(double a, const double* x, double* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

double scaled_error_max(const double* err, const double* y0, const double* y1, double atol,
                        double rtol, std::size_t n) {
    double worst = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double scale = atol + rtol * std::max(std::abs(y0[i]), std::abs(y1[i]));
        worst = std::max(worst, std::abs(err[i]) / scale);
    }
    return worst;
}

double sum(const double* x, std::size_t n) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += x[i];
    return s;
}

CellSums cell_rate_terms(const double* rho, const double* logit_rho, std::size_t cells,
                         double current_derivative, double dy) {
    CellSums out;
    double inv_phi_sum = 0.0;
    double grad = 0.0;
    double dl_sum = 0.0;
    for (std::size_t j = 0; j < cells; ++j) {
        const double d = rho[j + 1] - rho[j];
        const double dl = logit_rho[j + 1] - logit_rho[j];
        double mean_inv_phi;
        if (std::abs(d) > kTinyCell) {
            mean_inv_phi = dl / d;
        } else {
            const double m = 0.5 * (rho[j] + rho[j + 1]);
            mean_inv_phi = 1.0 / (m * (1.0 - m));
        }
        inv_phi_sum += mean_inv_phi;
        grad += d * dl;
        dl_sum += dl;
    }
    out.current_sq = 0.25 * current_derivative * current_derivative * dy * inv_phi_sum;
    out.gradient_sq = 0.25 * grad / dy;
    out.cross = 0.5 * current_derivative * dl_sum;
    return out;
}

constexpr KernelTable kScalar{Isa::Scalar,     &pattern_flip, &diagonal_sub, &axpy,
                              &scaled_error_max, &sum,        &cell_rate_terms};

}  // namespace

const KernelTable& scalar_kernels() { return kScalar; }

}  // namespace ssepld::simd
