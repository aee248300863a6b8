#pragma once

#include <cmath>
#include <stdexcept>

namespace mfpd {

inline constexpr double pi = 3.14159265358979323846;

struct Point {
    double x = 0.0;
    double y = 0.0;

    Point() = default;
    Point(double x_, double y_) : x(x_), y(y_) {}

    Point operator+(const Point& q) const { return {x + q.x, y + q.y}; }
    Point operator-(const Point& q) const { return {x - q.x, y - q.y}; }
    Point operator*(double s) const { return {s * x, s * y}; }
    Point operator/(double s) const { return {x / s, y / s}; }

    double dot(const Point& q) const { return x * q.x + y * q.y; }
    double norm2() const { return x * x + y * y; }
    double norm() const { return std::sqrt(norm2()); }
};

inline Point operator*(double s, const Point& p) { return {s * p.x, s * p.y}; }

inline double dist(const Point& p, const Point& q) { return (p - q).norm(); }

/// Cross product z-component of (b-a) x (c-a); twice the signed triangle area.
inline double cross(const Point& a, const Point& b, const Point& c) {
    return (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x);
}

/// Base domain. Fixed to the unit disk: every Green-function quantity is
/// closed form, so the only discretization error left lives in the PDE solves.
struct DiskDomain {
    static constexpr double radius = 1.0;
    static bool contains(const Point& p) { return p.norm2() < 1.0; }
    static double boundary_dist(const Point& p) { return 1.0 - p.norm(); }
};

} // namespace mfpd
