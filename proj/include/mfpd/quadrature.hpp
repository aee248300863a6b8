#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include <boost/math/quadrature/gauss_kronrod.hpp>

namespace mfpd::quad {

struct QuadratureError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Adaptive Gauss-Kronrod integration over [0, inf).
/// Split at t = 1 so an integrable endpoint singularity at 0 (log t) and the
/// tail are refined independently. The built-in error estimator is far too
/// conservative near endpoint singularities, so convergence is certified by
/// agreement between two refinement depths; disagreement beyond the
/// tolerance is a numerical error carrying the achieved value.
template <class F>
double integrate_halfline(F&& f, double rel_tol = 1e-8) {
    using gk = boost::math::quadrature::gauss_kronrod<double, 15>;
    const double inf = std::numeric_limits<double>::infinity();
    auto run = [&](double tol, unsigned depth) {
        return gk::integrate(f, 0.0, 1.0, depth, tol) + gk::integrate(f, 1.0, inf, depth, tol);
    };
    const double coarse = run(1e-10, 20);
    const double val = run(1e-11, 22);
    const double achieved = std::abs(val - coarse) / std::max(1.0, std::abs(val));
    if (!(achieved <= rel_tol)) {
        char buf[64];
        std::snprintf(buf, sizeof buf, "%.3e", achieved);
        throw QuadratureError(std::string("half-line quadrature did not converge; achieved "
                                          "tolerance ") + buf);
    }
    return val;
}

} // namespace mfpd::quad
