#pragma once

// Data-parallel inner loops shared by the master-equation oracle and the
// rate-functional evaluators. Every kernel has a scalar reference version and,
// on x86-64 hosts that report AVX2+FMA at runtime, a vectorised version. The
// two are equivalence-tested in tests/test_kernels.cpp.

#include <cstddef>
#include <string_view>

namespace ssepld::simd {

enum class Isa { Scalar, Avx2 };

struct CellSums {
    double current_sq = 0.0;   // 1/4 int J'^2 / phi
    double gradient_sq = 0.0;  // 1/4 int (d_y rho)^2 / phi
    double cross = 0.0;        // 1/2 int J' d_y rho / phi
};

struct KernelTable {
    Isa isa;

    // dp[i] += gain[pat] * p[i ^ partner] - loss[pat] * p[i],
    // pat = (i >> shift) & pattern_mask. Tables are indexed by pat.
    void (*pattern_flip)(const double* p, double* dp, std::size_t n, unsigned shift,
                         unsigned pattern_mask, std::size_t partner, const double* gain,
                         const double* loss);

    // dp[i] -= c[i] * p[i]
    void (*diagonal_sub)(const double* c, const double* p, double* dp, std::size_t n);

    // y[i] += a * x[i]
    void (*axpy)(double a, const double* x, double* y, std::size_t n);

    // max_i |err[i]| / (atol + rtol * max(|y0[i]|, |y1[i]|))
    double (*scaled_error_max)(const double* err, const double* y0, const double* y1,
                               double atol, double rtol, std::size_t n);

    double (*sum)(const double* x, std::size_t n);

    // Exact integrals over the cells of a piecewise-linear profile; rho and
    // logit_rho hold cells+1 node values.
    CellSums (*cell_rate_terms)(const double* rho, const double* logit_rho, std::size_t cells,
                                double current_derivative, double dy);
};

const KernelTable& scalar_kernels();
// nullptr when the build or the host lacks AVX2+FMA.
const KernelTable* avx2_kernels();

// Table used by the library. Defaults to the best the host supports; the
// environment variable SSEPLD_SIMD=scalar forces the reference kernels.
const KernelTable& active();
void force_isa(Isa isa);  // throws if unavailable
std::string_view isa_name(Isa isa);

}  // namespace ssepld::simd
