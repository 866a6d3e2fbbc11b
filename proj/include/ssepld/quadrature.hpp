#pragma once

#include <functional>

namespace ssepld {

// Adaptive 15-point Gauss-Kronrod integration of f over [a, b] to the given
// relative tolerance.
double integrate_adaptive(const std::function<double(double)>& f, double a, double b,
                          double rel_tol = 1e-10, unsigned max_depth = 30);

// Two-point Gauss-Legendre rule on [a, b]; exact for cubics.
template <class F>
double gauss2(F&& f, double a, double b) {
    constexpr double kNode = 0.57735026918962576451;  // 1/sqrt(3)
    const double mid = 0.5 * (a + b);
    const double half = 0.5 * (b - a);
    return half * (f(mid - half * kNode) + f(mid + half * kNode));
}

}  // namespace ssepld
