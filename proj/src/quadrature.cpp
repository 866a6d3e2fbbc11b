#include "ssepld/quadrature.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

namespace ssepld {

double integrate_adaptive(const std::function<double(double)>& f, double a, double b,
                          double rel_tol, unsigned max_depth) {
    if (a == b) return 0.0;
    double error = 0.0;
    return boost::math::quadrature::gauss_kronrod<double, 15>::integrate(f, a, b, max_depth,
                                                                         rel_tol, &error);
}

}  // namespace ssepld
