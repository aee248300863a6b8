#pragma once

#include <cmath>
#include <stdexcept>

#include "mfpd/geometry.hpp"

namespace mfpd::greens {

namespace detail {
inline void require_interior(const Point& p, const char* who) {
    if (!(p.norm2() < 1.0))
        throw std::domain_error(std::string(who) + ": point not strictly inside the unit disk");
}
} // namespace detail

/// Regular part H(x,y) of the Dirichlet Green function of -Delta on the unit
/// disk, harmonic in x with H(x,y) = (1/2pi) log|x-y| for |x| = 1.
///
/// Evaluated as (1/4pi) log(|x|^2|y|^2 - 2 x.y + 1), which equals
/// (1/2pi) log(|y| |x - y/|y|^2|) and stays finite at y = 0, where the
/// continuous limit H(x,0) = 0 is taken (hole centers may sit at the origin).
inline double regular_part(const Point& x, const Point& y) {
    if (!(x.norm2() <= 1.0 + 1e-12))
        throw std::domain_error("regular_part: x outside the closed unit disk");
    if (!(y.norm2() < 1.0))
        throw std::domain_error("regular_part: y not strictly inside the unit disk");
    const double q = x.norm2() * y.norm2() - 2.0 * x.dot(y) + 1.0;
    return std::log(q) / (4.0 * pi);
}

/// Green function of -Delta on the unit disk with Dirichlet boundary values:
/// G(x,y) = -(1/2pi) log|x-y| + H(x,y). Symmetric, +inf on the diagonal,
/// zero on the boundary.
inline double green(const Point& x, const Point& y) {
    detail::require_interior(x, "green");
    detail::require_interior(y, "green");
    const double r2 = (x - y).norm2();
    if (r2 == 0.0)
        throw std::domain_error("green: coincident points (diagonal singularity)");
    const double q = x.norm2() * y.norm2() - 2.0 * x.dot(y) + 1.0;
    return std::log(q / r2) / (4.0 * pi);
}

/// Robin function: H on the diagonal, (1/2pi) log(1 - |x|^2).
inline double robin(const Point& x) {
    detail::require_interior(x, "robin");
    return std::log(1.0 - x.norm2()) / (2.0 * pi);
}

} // namespace mfpd::greens
