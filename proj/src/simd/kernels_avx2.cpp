// Compiled with -mavx2 -mfma; only reached through avx2_kernels() after a
// runtime CPU check.

#include <immintrin.h>

#include <algorithm>
#include <cmath>
#include <cstdint>

#include "ssepld/simd/kernels.hpp"

namespace ssepld::simd::detail {

namespace {

constexpr double kTinyCell = 1e-7;

inline double hsum(__m256d v) {
    __m128d lo = _mm256_castpd256_pd128(v);
    __m128d hi = _mm256_extractf128_pd(v, 1);
    lo = _mm_add_pd(lo, hi);
    __m128d sh = _mm_unpackhi_pd(lo, lo);
    return _mm_cvtsd_f64(_mm_add_sd(lo, sh));
}

inline double hmax(__m256d v) {
    __m128d lo = _mm256_castpd256_pd128(v);
    __m128d hi = _mm256_extractf128_pd(v, 1);
    lo = _mm_max_pd(lo, hi);
    __m128d sh = _mm_unpackhi_pd(lo, lo);
    return _mm_cvtsd_f64(_mm_max_sd(lo, sh));
}

void pattern_flip(const double* p, double* dp, std::size_t n, unsigned shift, unsigned pattern_mask,
                  std::size_t partner, const double* gain, const double* loss) {
    std::size_t i = 0;
    if (n >= 4) {
        const __m256i lane = _mm256_set_epi64x(3, 2, 1, 0);
        const __m256i pmask = _mm256_set1_epi64x(static_cast<long long>(pattern_mask));
        const __m256i pxor = _mm256_set1_epi64x(static_cast<long long>(partner));
        const __m128i sh = _mm_cvtsi32_si128(static_cast<int>(shift));
        // Partner of an aligned block of four is itself a contiguous block
        // when the xor leaves the two low index bits alone.
        const bool contiguous = (partner & 3u) == 0;
        for (; i + 4 <= n; i += 4) {
            const __m256i idx = _mm256_add_epi64(_mm256_set1_epi64x(static_cast<long long>(i)), lane);
            const __m256i pat = _mm256_and_si256(_mm256_srl_epi64(idx, sh), pmask);
            const __m256d g = _mm256_i64gather_pd(gain, pat, 8);
            const __m256d l = _mm256_i64gather_pd(loss, pat, 8);
            __m256d other;
            if (contiguous) {
                other = _mm256_loadu_pd(p + (i ^ partner));
            } else {
                other = _mm256_i64gather_pd(p, _mm256_xor_si256(idx, pxor), 8);
            }
            const __m256d self = _mm256_loadu_pd(p + i);
            __m256d acc = _mm256_loadu_pd(dp + i);
            acc = _mm256_fmadd_pd(g, other, acc);
            acc = _mm256_fnmadd_pd(l, self, acc);
            _mm256_storeu_pd(dp + i, acc);
        }
    }
    for (; i < n; ++i) {
        const std::size_t pat = (i >> shift) & pattern_mask;
        dp[i] += gain[pat] * p[i ^ partner] - loss[pat] * p[i];
    }
}

void diagonal_sub(const double* c, const double* p, double* dp, std::size_t n) {
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d acc = _mm256_loadu_pd(dp + i);
        acc = _mm256_fnmadd_pd(_mm256_loadu_pd(c + i), _mm256_loadu_pd(p + i), acc);
        _mm256_storeu_pd(dp + i, acc);
    }
    for (; i < n; ++i) dp[i] -= c[i] * p[i];
}

void axpy(double a, const double* x, double* y, std::size_t n) {
    const __m256d va = _mm256_set1_pd(a);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        _mm256_storeu_pd(y + i, _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
    }
    for (; i < n; ++i) y[i] += a * x[i];
}

double scaled_error_max(const double* err, const double* y0, const double* y1, double atol,
                        double rtol, std::size_t n) {
    const __m256d sign = _mm256_set1_pd(-0.0);
    const __m256d va = _mm256_set1_pd(atol);
    const __m256d vr = _mm256_set1_pd(rtol);
    __m256d worst = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d a0 = _mm256_andnot_pd(sign, _mm256_loadu_pd(y0 + i));
        const __m256d a1 = _mm256_andnot_pd(sign, _mm256_loadu_pd(y1 + i));
        const __m256d scale = _mm256_fmadd_pd(vr, _mm256_max_pd(a0, a1), va);
        const __m256d e = _mm256_andnot_pd(sign, _mm256_loadu_pd(err + i));
        worst = _mm256_max_pd(worst, _mm256_div_pd(e, scale));
    }
    double w = hmax(worst);
    for (; i < n; ++i) {
        const double scale = atol + rtol * std::max(std::abs(y0[i]), std::abs(y1[i]));
        w = std::max(w, std::abs(err[i]) / scale);
    }
    return w;
}

double sum(const double* x, std::size_t n) {
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) acc = _mm256_add_pd(acc, _mm256_loadu_pd(x + i));
    double s = hsum(acc);
    for (; i < n; ++i) s += x[i];
    return s;
}

CellSums cell_rate_terms(const double* rho, const double* logit_rho, std::size_t cells,
                         double current_derivative, double dy) {
    const __m256d sign = _mm256_set1_pd(-0.0);
    const __m256d tiny = _mm256_set1_pd(kTinyCell);
    const __m256d half = _mm256_set1_pd(0.5);
    const __m256d one = _mm256_set1_pd(1.0);
    __m256d inv_phi = _mm256_setzero_pd();
    __m256d grad = _mm256_setzero_pd();
    __m256d dlsum = _mm256_setzero_pd();
    std::size_t j = 0;
    for (; j + 4 <= cells; j += 4) {
        const __m256d r0 = _mm256_loadu_pd(rho + j);
        const __m256d r1 = _mm256_loadu_pd(rho + j + 1);
        const __m256d l0 = _mm256_loadu_pd(logit_rho + j);
        const __m256d l1 = _mm256_loadu_pd(logit_rho + j + 1);
        const __m256d d = _mm256_sub_pd(r1, r0);
        const __m256d dl = _mm256_sub_pd(l1, l0);
        const __m256d big = _mm256_cmp_pd(_mm256_andnot_pd(sign, d), tiny, _CMP_GT_OQ);
        // Guard the division in lanes that take the midpoint branch.
        const __m256d safe_d = _mm256_blendv_pd(one, d, big);
        const __m256d quotient = _mm256_div_pd(dl, safe_d);
        const __m256d m = _mm256_mul_pd(half, _mm256_add_pd(r0, r1));
        const __m256d mid = _mm256_div_pd(one, _mm256_mul_pd(m, _mm256_sub_pd(one, m)));
        inv_phi = _mm256_add_pd(inv_phi, _mm256_blendv_pd(mid, quotient, big));
        grad = _mm256_fmadd_pd(d, dl, grad);
        dlsum = _mm256_add_pd(dlsum, dl);
    }
    double inv_phi_sum = hsum(inv_phi);
    double grad_sum = hsum(grad);
    double dl_sum = hsum(dlsum);
    for (; j < cells; ++j) {
        const double d = rho[j + 1] - rho[j];
        const double dl = logit_rho[j + 1] - logit_rho[j];
        if (std::abs(d) > kTinyCell) {
            inv_phi_sum += dl / d;
        } else {
            const double m = 0.5 * (rho[j] + rho[j + 1]);
            inv_phi_sum += 1.0 / (m * (1.0 - m));
        }
        grad_sum += d * dl;
        dl_sum += dl;
    }
    CellSums out;
    out.current_sq = 0.25 * current_derivative * current_derivative * dy * inv_phi_sum;
    out.gradient_sq = 0.25 * grad_sum / dy;
    out.cross = 0.5 * current_derivative * dl_sum;
    return out;
}

}  // namespace

extern const KernelTable kAvx2Table;
const KernelTable kAvx2Table{Isa::Avx2,        &pattern_flip, &diagonal_sub, &axpy,
                             &scaled_error_max, &sum,         &cell_rate_terms};

}  // namespace ssepld::simd::detail
