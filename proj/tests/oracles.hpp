// Independent oracles used by the test suite: finite-difference operators,
// a Shortley-Weller Poisson solver on the disk for Green-function values,
// and manufactured solutions with exact Laplacians.
#pragma once

#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/Sparse>

#include "mfpd/geometry.hpp"

namespace oracles {

using mfpd::Point;

/// 5-point finite-difference Laplacian of a callable.
template <class F>
double fd_laplacian(const F& f, const Point& p, double h) {
    return (f(Point{p.x + h, p.y}) + f(Point{p.x - h, p.y}) + f(Point{p.x, p.y + h}) +
            f(Point{p.x, p.y - h}) - 4.0 * f(p)) /
           (h * h);
}

/// Observed convergence order of a residual under h-halving.
inline double observed_order(double res_h, double res_h2) {
    return std::log2(std::abs(res_h) / std::abs(res_h2));
}

/// Dirichlet Poisson solve of -lap u = f on the unit disk with the
/// Shortley-Weller boundary treatment (second order at the curved boundary).
/// Returns the grid solution and exposes bilinear evaluation.
class DiskPoissonFD {
public:
    explicit DiskPoissonFD(int n) : n_(n), h_(2.0 / n), idx_((n + 1) * (n + 1), -1) {
        for (int j = 0; j <= n_; ++j)
            for (int i = 0; i <= n_; ++i)
                if (coord(i, j).norm2() < 1.0) {
                    idx_[node(i, j)] = n_unknowns_;
                    ++n_unknowns_;
                }
    }

    /// Solve with a point source at the grid node nearest to y.
    std::vector<double> solve_point_source(const Point& y) {
        Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n_unknowns_);
        int bi = 0, bj = 0;
        double best = 1e300;
        for (int j = 0; j <= n_; ++j)
            for (int i = 0; i <= n_; ++i) {
                if (idx_[node(i, j)] < 0) continue;
                const double d = (coord(i, j) - y).norm2();
                if (d < best) {
                    best = d;
                    bi = i;
                    bj = j;
                }
            }
        rhs[idx_[node(bi, bj)]] = 1.0 / (h_ * h_);
        return solve(rhs);
    }

    double value_near(const std::vector<double>& u, const Point& p) const {
        // bilinear interpolation on the grid cell containing p
        const double fx = (p.x + 1.0) / h_, fy = (p.y + 1.0) / h_;
        const int i = static_cast<int>(fx), j = static_cast<int>(fy);
        const double ax = fx - i, ay = fy - j;
        auto val = [&](int ii, int jj) {
            const int id = idx_[node(ii, jj)];
            return id >= 0 ? u[id] : 0.0;
        };
        return (1 - ax) * (1 - ay) * val(i, j) + ax * (1 - ay) * val(i + 1, j) +
               (1 - ax) * ay * val(i, j + 1) + ax * ay * val(i + 1, j + 1);
    }

private:
    int n_;
    double h_;
    std::vector<int> idx_;
    int n_unknowns_ = 0;

    int node(int i, int j) const { return j * (n_ + 1) + i; }
    Point coord(int i, int j) const { return {-1.0 + i * h_, -1.0 + j * h_}; }

    // fraction of h to the circle along direction (dx,dy), in (0,1]
    double cut(const Point& p, double dx, double dy) const {
        const double b = p.x * dx + p.y * dy;
        const double c = p.norm2() - 1.0;
        const double t = (-b + std::sqrt(b * b - c)) / 1.0; // unit direction
        return std::min(1.0, t / h_);
    }

    std::vector<double> solve(const Eigen::VectorXd& rhs) {
        std::vector<Eigen::Triplet<double>> trips;
        for (int j = 0; j <= n_; ++j)
            for (int i = 0; i <= n_; ++i) {
                const int row = idx_[node(i, j)];
                if (row < 0) continue;
                const Point p = coord(i, j);
                const int nb[4][2] = {{i + 1, j}, {i - 1, j}, {i, j + 1}, {i, j - 1}};
                const double dir[4][2] = {{1, 0}, {-1, 0}, {0, 1}, {0, -1}};
                double th[4];
                bool nb_in[4];
                for (int k = 0; k < 4; ++k) {
                    nb_in[k] = nb[k][0] >= 0 && nb[k][0] <= n_ && nb[k][1] >= 0 &&
                               nb[k][1] <= n_ && idx_[node(nb[k][0], nb[k][1])] >= 0;
                    th[k] = nb_in[k] ? 1.0
                                     : std::max(1e-6, cut(p, dir[k][0], dir[k][1]));
                }
                double diag = 0.0;
                for (int axis = 0; axis < 2; ++axis) {
                    const double tp = th[2 * axis], tm = th[2 * axis + 1];
                    const double cp = 2.0 / (tp * (tp + tm)) / (h_ * h_);
                    const double cm = 2.0 / (tm * (tp + tm)) / (h_ * h_);
                    diag += cp + cm;
                    for (int s = 0; s < 2; ++s) {
                        if (!nb_in[2 * axis + s]) continue; // boundary value zero
                        trips.emplace_back(row, idx_[node(nb[2 * axis + s][0], nb[2 * axis + s][1])],
                                           -(s == 0 ? cp : cm));
                    }
                }
                trips.emplace_back(row, row, diag);
            }
        Eigen::SparseMatrix<double> A(n_unknowns_, n_unknowns_);
        A.setFromTriplets(trips.begin(), trips.end());
        Eigen::BiCGSTAB<Eigen::SparseMatrix<double>, Eigen::IncompleteLUT<double>> solver;
        solver.setTolerance(1e-10);
        solver.compute(A);
        Eigen::VectorXd x = solver.solve(rhs);
        return {x.data(), x.data() + x.size()};
    }
};

/// Scalar factor with exact value, gradient and Laplacian, composable by the
/// product rule; used to manufacture Poisson solutions on the pierced disk.
struct Factor {
    std::function<double(Point)> v;
    std::function<Point(Point)> grad;
    std::function<double(Point)> lap;
};

inline Factor disk_factor() {
    return {[](Point p) { return (1.0 - p.norm2()) / 4.0; },
            [](Point p) { return Point{-p.x / 2.0, -p.y / 2.0}; },
            [](Point) { return -1.0; }};
}

inline Factor ring_factor(Point c, double r0) {
    return {[=](Point p) { return (p - c).norm2() - r0 * r0; },
            [=](Point p) { return Point{2.0 * (p.x - c.x), 2.0 * (p.y - c.y)}; },
            [](Point) { return 4.0; }};
}

inline Factor product(const Factor& a, const Factor& b) {
    return {[=](Point p) { return a.v(p) * b.v(p); },
            [=](Point p) {
                const Point ga = a.grad(p), gb = b.grad(p);
                return Point{ga.x * b.v(p) + a.v(p) * gb.x, ga.y * b.v(p) + a.v(p) * gb.y};
            },
            [=](Point p) {
                return a.lap(p) * b.v(p) + 2.0 * a.grad(p).dot(b.grad(p)) + a.v(p) * b.lap(p);
            }};
}

} // namespace oracles
