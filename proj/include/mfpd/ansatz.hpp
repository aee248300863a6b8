#pragma once

#include <cmath>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mfpd/geometry.hpp"
#include "mfpd/greens.hpp"

namespace mfpd {

enum class HoleSign { positive, negative };

struct Hole {
    Point center;
    double alpha = 3.0;
    HoleSign sign = HoleSign::positive;
};

/// One problem instance: hole centers, weights, split index m1 (positive-sign
/// holes first), tau, and the two potentials. The intensities are derived:
/// lambda1 = 4 pi (a_1+...+a_m1), lambda2 tau^2 = 4 pi (a_{m1+1}+...+a_m),
/// which puts lambda1 > 8 pi m1 and lambda2 tau^2 > 8 pi (m - m1) for free.
struct BlowupConfig {
    std::vector<Hole> holes;
    double tau = 1.0;
    std::function<double(Point)> V1 = [](Point) { return 1.0; };
    std::function<double(Point)> V2 = [](Point) { return 1.0; };

    int m() const { return static_cast<int>(holes.size()); }
    int m1() const {
        int k = 0;
        while (k < m() && holes[k].sign == HoleSign::positive) ++k;
        return k;
    }
    double lambda1() const {
        double s = 0.0;
        for (int i = 0; i < m1(); ++i) s += holes[i].alpha;
        return 4.0 * pi * s;
    }
    double lambda2() const {
        double s = 0.0;
        for (int i = m1(); i < m(); ++i) s += holes[i].alpha;
        return 4.0 * pi * s / (tau * tau);
    }

    /// Minimal distance from hole i to the other centers (inf when m = 1).
    double separation(int i) const {
        double s = std::numeric_limits<double>::infinity();
        for (int j = 0; j < m(); ++j)
            if (j != i) s = std::min(s, dist(holes[i].center, holes[j].center));
        return s;
    }
    double boundary_dist(int i) const { return 1.0 - holes[i].center.norm(); }

    void validate() const {
        if (holes.empty()) throw std::invalid_argument("config: at least one hole required");
        if (!(tau > 0.0)) throw std::invalid_argument("config: tau must be positive");
        for (int i = 0; i < m(); ++i) {
            if (!(holes[i].alpha > 2.0))
                throw std::invalid_argument("config: alpha_" + std::to_string(i + 1) +
                                            " must exceed 2");
            if (!(holes[i].center.norm2() < 1.0))
                throw std::invalid_argument("config: center " + std::to_string(i + 1) +
                                            " not inside the unit disk");
            for (int j = i + 1; j < m(); ++j)
                if (dist(holes[i].center, holes[j].center) == 0.0)
                    throw std::invalid_argument("config: coincident hole centers " +
                                                std::to_string(i + 1) + "," + std::to_string(j + 1));
        }
        for (int i = m1(); i < m(); ++i)
            if (holes[i].sign == HoleSign::positive)
                throw std::invalid_argument("config: positive-sign holes must be listed first");
    }
};

/// Per-epsilon derived quantities of the construction.
struct ScaleParams {
    double eps = 0.0;
    std::vector<double> delta;        // delta_i^alpha_i = d_i eps
    std::vector<double> hole_radius;  // eps_i^((alpha_i-2)/2) = r_i eps
    std::vector<double> d, r, rho;
    double lambda1 = 0.0, lambda2 = 0.0;
    Eigen::MatrixXd beta;             // matching coefficients of the linear system
};

namespace ansatz {

/// The signed Green-sum constants rho_i; branch by the sign split.
inline std::vector<double> compute_rho(const BlowupConfig& cfg) {
    const int m = cfg.m(), m1 = cfg.m1();
    std::vector<double> rho(m);
    for (int i = 0; i < m; ++i) {
        const Point xi = cfg.holes[i].center;
        double s = (cfg.holes[i].alpha + 2.0) * greens::regular_part(xi, xi);
        for (int j = 0; j < m; ++j) {
            if (j == i) continue;
            const double g = (cfg.holes[j].alpha + 2.0) * greens::green(xi, cfg.holes[j].center);
            if (i < m1)
                s += (j < m1) ? g : -g / cfg.tau;
            else
                s += (j < m1) ? -cfg.tau * g : g;
        }
        rho[i] = s;
    }
    return rho;
}

/// delta_i, eps_i, d_i, r_i from the scaling laws, with the geometric
/// validity rule eps_i <= min(delta_i, sep_i, dist_i)/4 and
/// delta_i <= min(sep_i/2, dist_i)/4, so the annuli around each hole stay
/// well separated from each other and from the outer boundary.
inline ScaleParams compute_scales(const BlowupConfig& cfg, double eps) {
    cfg.validate();
    if (!(eps > 0.0)) throw std::invalid_argument("compute_scales: eps must be positive");
    const int m = cfg.m(), m1 = cfg.m1();
    ScaleParams s;
    s.eps = eps;
    s.rho = compute_rho(cfg);
    s.d.resize(m);
    s.r.resize(m);
    s.delta.resize(m);
    s.hole_radius.resize(m);
    s.lambda1 = cfg.lambda1();
    s.lambda2 = cfg.lambda2();
    for (int i = 0; i < m; ++i) {
        const double a = cfg.holes[i].alpha;
        const Point xi = cfg.holes[i].center;
        const double v = (i < m1) ? cfg.V1(xi) : cfg.V2(xi);
        if (!(v > 0.0))
            throw std::invalid_argument("compute_scales: potential not positive at center " +
                                        std::to_string(i + 1));
        s.d[i] = v * std::exp(2.0 * pi * s.rho[i]) / (a * a);
        s.r[i] = v * std::exp(pi * s.rho[i]) / (a * a);
        s.delta[i] = std::pow(s.d[i] * eps, 1.0 / a);
        s.hole_radius[i] = std::pow(s.r[i] * eps, 2.0 / (a - 2.0));
    }
    for (int i = 0; i < m; ++i) {
        const double sep = cfg.separation(i), bd = cfg.boundary_dist(i);
        const double ei = s.hole_radius[i], di = s.delta[i];
        if (!(ei <= std::min({di, sep, bd}) / 4.0))
            throw std::runtime_error("compute_scales: eps too large for hole " +
                                     std::to_string(i + 1) + " (hole radius " +
                                     std::to_string(ei) + " violates the /4 separation rule)");
        if (!(di <= std::min(sep / 2.0, bd) / 4.0))
            throw std::runtime_error("compute_scales: eps too large for hole " +
                                     std::to_string(i + 1) + " (bubble scale delta " +
                                     std::to_string(di) + " exceeds a quarter of its annulus)");
    }
    return s;
}

/// Matching coefficients beta_ij. One symmetric m x m matrix serves all rows:
///   M(j,k) = delta_jk ((1/2pi) log eps_j - H(xi_j,xi_j)) - (1-delta_jk) G(xi_j,xi_k),
/// right-hand side b_i(j) = -4 pi a_i H(xi_i,xi_j) + 2 a_i log(delta_i or |xi_i-xi_j|).
inline Eigen::MatrixXd solve_beta(const BlowupConfig& cfg, const ScaleParams& s) {
    const int m = cfg.m();
    Eigen::MatrixXd M(m, m), rhs(m, m);
    for (int j = 0; j < m; ++j) {
        const Point xj = cfg.holes[j].center;
        M(j, j) = std::log(s.hole_radius[j]) / (2.0 * pi) - greens::regular_part(xj, xj);
        for (int k = 0; k < m; ++k)
            if (k != j) M(j, k) = -greens::green(xj, cfg.holes[k].center);
    }
    for (int j = 0; j < m; ++j) {
        double off = 0.0;
        for (int k = 0; k < m; ++k)
            if (k != j) off += std::abs(M(j, k));
        if (!(std::abs(M(j, j)) > off))
            throw std::runtime_error("solve_beta: system lost diagonal dominance (eps too large)");
    }
    for (int i = 0; i < m; ++i) {
        const double a = cfg.holes[i].alpha;
        const Point xi = cfg.holes[i].center;
        for (int j = 0; j < m; ++j) {
            const Point xj = cfg.holes[j].center;
            rhs(j, i) = -4.0 * pi * a * greens::regular_part(xi, xj) +
                        2.0 * a * ((i == j) ? std::log(s.delta[i]) : std::log(dist(xi, xj)));
        }
    }
    Eigen::MatrixXd X = M.partialPivLu().solve(rhs); // column i = beta_{i.}
    const double res = (M * X - rhs).norm() / std::max(1.0, rhs.norm());
    if (!(res <= 1e-12))
        throw std::runtime_error("solve_beta: linear-system residual " + std::to_string(res));
    return X.transpose();
}

/// The m signed column combinations that the scaling choice makes exactly
/// equal to 2 pi (alpha_i - 2).
inline std::vector<double> check_balance(const BlowupConfig& cfg, const ScaleParams&,
                                         const Eigen::MatrixXd& beta) {
    const int m = cfg.m(), m1 = cfg.m1();
    std::vector<double> out(m);
    for (int i = 0; i < m; ++i) {
        double sp = 0.0, sn = 0.0;
        for (int j = 0; j < m1; ++j) sp += beta(j, i);
        for (int j = m1; j < m; ++j) sn += beta(j, i);
        out[i] = (i < m1) ? sp - sn / cfg.tau : -cfg.tau * sp + sn;
    }
    return out;
}

/// compute_scales + beta in one call.
inline ScaleParams make_scales(const BlowupConfig& cfg, double eps) {
    ScaleParams s = compute_scales(cfg, eps);
    s.beta = solve_beta(cfg, s);
    return s;
}

} // namespace ansatz
} // namespace mfpd
