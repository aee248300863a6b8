#pragma once

#include <cmath>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mfpd/construct.hpp"
#include "mfpd/solver.hpp"

namespace mfpd {

/// The gamma and gamma-tilde matching systems of the linear theory and the
/// combination gamma_j^*. Both systems share one diagonally dominant matrix.
struct GammaSystems {
    Eigen::MatrixXd gamma, gamma_tilde;
    std::vector<double> gamma_star;
};

/// A fitted log-log rate: slope of log(value) against log(eps).
struct RateFit {
    std::string quantity;
    std::vector<std::pair<double, double>> pairs; // (eps, value) actually used
    double slope = 0.0;
    double r2 = 0.0;
    int n_excluded = 0;
};

struct NearKernelReport {
    double inv_norm = 0.0;       // discrete ||L^{-1}|| in the H^1_0 pencil sense
    bool eig_converged = false;
    std::vector<double> rq_proj_kernel; // Rayleigh quotients on interpolated P_eps Z0j
    std::vector<double> rq_random;      // quotients on random zero-trace fields
    double l_const_rel = 0.0;           // ||L(1)|| relative to ||K1+K2||, mass identity
    double intK1 = 0.0, intK2 = 0.0;    // should track lambda1 and lambda2 tau^2
    Eigen::MatrixXd ctilde;             // ctilde_j(P_eps Z0l), m rows x 2 columns
};

namespace diag {

inline GammaSystems solve_gammas(const BlowupConfig& cfg, const ScaleParams& s) {
    const int m = cfg.m();
    Eigen::MatrixXd M(m, m);
    for (int i = 0; i < m; ++i) {
        const Point xi = cfg.holes[i].center;
        M(i, i) = -std::log(s.hole_radius[i]) / (2.0 * pi) + greens::regular_part(xi, xi);
        for (int k = 0; k < m; ++k)
            if (k != i) M(i, k) = greens::green(cfg.holes[k].center, xi);
    }
    for (int i = 0; i < m; ++i) {
        double off = 0.0;
        for (int k = 0; k < m; ++k)
            if (k != i) off += std::abs(M(i, k));
        if (!(std::abs(M(i, i)) > off))
            throw std::runtime_error("solve_gammas: system lost diagonal dominance");
    }
    Eigen::MatrixXd rg = Eigen::MatrixXd::Zero(m, m), rt(m, m);
    for (int j = 0; j < m; ++j) {
        rg(j, j) = 2.0;
        const double aj = cfg.holes[j].alpha;
        const Point xj = cfg.holes[j].center;
        for (int i = 0; i < m; ++i) {
            rt(i, j) = (i == j)
                           ? (4.0 / 3.0) * aj * std::log(s.delta[j]) + 8.0 / 3.0 +
                                 (8.0 * pi / 3.0) * aj * greens::regular_part(xj, xj)
                           : (8.0 * pi / 3.0) * aj * greens::green(cfg.holes[i].center, xj);
        }
    }
    GammaSystems gs;
    auto lu = M.partialPivLu();
    gs.gamma = lu.solve(rg);
    gs.gamma_tilde = lu.solve(rt);
    const double res = ((M * gs.gamma - rg).norm() + (M * gs.gamma_tilde - rt).norm()) /
                       std::max(1.0, rg.norm() + rt.norm());
    if (!(res <= 1e-12))
        throw std::runtime_error("solve_gammas: residual " + std::to_string(res));

    for (int j = 0; j < m; ++j) {
        const double aj = cfg.holes[j].alpha;
        const Point xj = cfg.holes[j].center;
        const double H = greens::regular_part(xj, xj);
        double num = gs.gamma_tilde(j, j) / (2.0 * pi) * std::log(s.delta[j]) +
                     (8.0 * pi / 3.0 * aj - gs.gamma_tilde(j, j)) * H;
        double den = 1.0 - gs.gamma(j, j) * H + gs.gamma(j, j) / (2.0 * pi) * std::log(s.delta[j]);
        for (int i = 0; i < m; ++i) {
            if (i == j) continue;
            const double G = greens::green(cfg.holes[i].center, xj);
            num -= gs.gamma_tilde(i, j) * G;
            den -= gs.gamma(i, j) * G;
        }
        gs.gamma_star.push_back(num / den);
    }
    return gs;
}

/// Least-squares slope of log(value) vs log(eps). Nonpositive values are
/// excluded; fewer than four surviving points is an error.
inline RateFit fit_rate(const std::string& quantity,
                        const std::vector<std::pair<double, double>>& pairs) {
    RateFit fit;
    fit.quantity = quantity;
    for (const auto& [e, v] : pairs) {
        if (e > 0.0 && v > 0.0)
            fit.pairs.emplace_back(e, v);
        else
            fit.n_excluded += 1;
    }
    const int n = static_cast<int>(fit.pairs.size());
    if (n < 4)
        throw std::runtime_error("fit_rate(" + quantity + "): fewer than 4 positive points");
    double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
    for (const auto& [e, v] : fit.pairs) {
        const double x = std::log(e), y = std::log(v);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
        syy += y * y;
    }
    const double den = n * sxx - sx * sx;
    fit.slope = (n * sxy - sx * sy) / den;
    const double ss_tot = syy - sy * sy / n;
    const double intercept = (sy - fit.slope * sx) / n;
    double ss_res = 0.0;
    for (const auto& [e, v] : fit.pairs) {
        const double d = std::log(v) - (intercept + fit.slope * std::log(e));
        ss_res += d * d;
    }
    fit.r2 = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 1.0;
    return fit;
}

/// Discrete operator of the linear theory at the ansatz (weak form of -L,
/// bubble weights K1, K2 plus the two nonlocal rank-one corrections).
inline void build_linear_operator(const Assembly& as, const BlowupConfig& cfg,
                                  const ScaleParams& s, solver::RankTwoOperator& B) {
    solver::ansatz_operator(as, cfg, s, B);
}

/// Smallest |eigenvalue| of the pencil B phi = nu A phi by inverse power
/// iteration; the discrete inverse norm is 1/|nu_min|.
inline double pencil_inverse_norm(const solver::RankTwoOperator& B, const Assembly& as,
                                  unsigned seed, bool* converged, int max_iter = 80) {
    std::mt19937 rng(seed);
    std::normal_distribution<double> gauss;
    Eigen::VectorXd x(as.n_interior());
    for (int i = 0; i < as.n_interior(); ++i) x[i] = gauss(rng);
    double nu = 0.0, nu_prev = 0.0;
    if (converged) *converged = false;
    for (int it = 0; it < max_iter; ++it) {
        Eigen::VectorXd y = as.stiffness_int * x;
        x = B.solve(y);
        const double xa = std::sqrt(std::max(1e-300, x.dot(as.stiffness_int * x)));
        x /= xa;
        nu = x.dot(B.apply(x)) / x.dot(as.stiffness_int * x);
        if (it > 4 && std::abs(nu - nu_prev) <= 1e-5 * std::abs(nu)) {
            if (converged) *converged = true;
            break;
        }
        nu_prev = nu;
    }
    return 1.0 / std::max(std::abs(nu), 1e-300);
}

inline NearKernelReport near_kernel_study(const fem::PoissonSolver& poisson,
                                          const BlowupConfig& cfg, const ScaleParams& s,
                                          unsigned seed = 12345) {
    const Assembly& as = poisson.assembly();
    const Mesh& mesh = *as.mesh;
    NearKernelReport rep;

    solver::RankTwoOperator B;
    build_linear_operator(as, cfg, s, B);

    auto rayleigh = [&](const Eigen::VectorXd& phi) {
        return phi.dot(B.apply(phi)) / phi.dot(as.stiffness_int * phi);
    };

    // Interpolated projected kernel candidates P_eps Z0j.
    std::vector<Field> pz;
    for (int j = 0; j < cfg.m(); ++j) {
        const Bubble b = construct::hole_bubble(cfg, s, j);
        Field corr = poisson.harmonic_extension(
            [&](int, const Point& x) { return -bubble::test_functions(b, x).Z0; });
        Field pzj(mesh);
        for (int v = 0; v < mesh.n_vertices(); ++v)
            pzj.values[v] = mesh.is_boundary(v)
                                ? 0.0
                                : bubble::test_functions(b, mesh.vertices[v]).Z0 + corr.values[v];
        rep.rq_proj_kernel.push_back(std::abs(rayleigh(as.restrict_interior(pzj.values))));
        pz.push_back(std::move(pzj));
    }

    std::mt19937 rng(seed);
    std::normal_distribution<double> gauss;
    for (int k = 0; k < 10; ++k) {
        Eigen::VectorXd r(as.n_interior());
        for (int i = 0; i < as.n_interior(); ++i) r[i] = gauss(rng);
        rep.rq_random.push_back(std::abs(rayleigh(r)));
    }

    rep.inv_norm = pencil_inverse_norm(B, as, seed + 1, &rep.eig_converged);

    // Mass identities and the action of L on constants.
    auto k_fn = [&](int branch, const Point& x) {
        double v = 0.0;
        for (int i = 0; i < cfg.m(); ++i) {
            if ((i < cfg.m1()) != (branch == 1)) continue;
            v += bubble::source(construct::hole_bubble(cfg, s, i), x);
        }
        return v;
    };
    rep.intK1 = fem::integrate_fn(mesh, [&](Point x) { return k_fn(1, x); });
    rep.intK2 = fem::integrate_fn(mesh, [&](Point x) { return k_fn(2, x); });
    const double l2tau2 = s.lambda2 * cfg.tau * cfg.tau;
    const double c1 = s.lambda1 > 0.0 ? 1.0 - rep.intK1 / s.lambda1 : 0.0;
    const double c2 = l2tau2 > 0.0 ? 1.0 - rep.intK2 / l2tau2 : 0.0;
    const double num = std::sqrt(fem::integrate_fn(mesh, [&](Point x) {
        const double v = k_fn(1, x) * c1 + k_fn(2, x) * c2;
        return v * v;
    }));
    const double den = std::sqrt(fem::integrate_fn(mesh, [&](Point x) {
        const double v = k_fn(1, x) + k_fn(2, x);
        return v * v;
    }));
    rep.l_const_rel = num / den;

    // ctilde_j on the near-kernel directions, reported without a threshold.
    rep.ctilde.resize(cfg.m(), 2);
    for (int l = 0; l < cfg.m(); ++l)
        for (int j = 0; j < 2; ++j) {
            const double lam = (j == 0) ? s.lambda1 : l2tau2;
            double integral = fem::integrate_over(
                mesh, [&](int t, const Point& x, double l0, double l1, double l2) {
                    const auto& tr = mesh.triangles[t];
                    const double phi = l0 * pz[l].values[tr[0]] + l1 * pz[l].values[tr[1]] +
                                       l2 * pz[l].values[tr[2]];
                    return k_fn(j + 1, x) * phi;
                });
            rep.ctilde(l, j) = lam > 0.0 ? -integral / lam : 0.0;
        }
    return rep;
}

/// Control: the same inverse-norm machinery with the plain Laplacian
/// (B = A), which is exactly 1 for every mesh.
inline double laplacian_inverse_norm(const Assembly& as, unsigned seed = 321) {
    solver::RankTwoOperator B;
    B.local = as.stiffness_int;
    B.ca = B.cb = 0.0;
    B.a = Eigen::VectorXd::Zero(as.n_interior());
    B.b = Eigen::VectorXd::Zero(as.n_interior());
    B.factor();
    bool conv = false;
    return pencil_inverse_norm(B, as, seed, &conv, 8);
}

} // namespace diag
} // namespace mfpd
