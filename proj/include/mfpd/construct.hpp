#pragma once

#include <cmath>
#include <vector>

#include "mfpd/ansatz.hpp"
#include "mfpd/bubble.hpp"
#include "mfpd/discrete.hpp"
#include "mfpd/greens.hpp"

namespace mfpd {

/// Projected ansatz and the quantities measured on it. `d1_scaled` is
/// D1 * 2 eps / lambda1 (and the tau-branch analogue), which the expansion
/// sends to 1. `gap_pui[i]` is the sup-norm of the discrete harmonic
/// extension of the exact boundary mismatch between P_eps U_i and its
/// Green-function expansion; by the maximum principle this is the sharp
/// discrete measure of the expansion error, free of the FEM interpolation
/// floor (`gap_naive` keeps the direct vertex-wise comparison for reference).
struct AnsatzBundle {
    std::vector<Bubble> bubbles;
    std::vector<double> weight;      // +1 on the positive branch, -1/tau after
    std::vector<Field> proj;
    Field pu;
    Field psi_sum;                   // signed sum of the expansion remainders
    std::vector<Point> centers;
    std::vector<double> const_part;  // signed -log(2 a_i^2 delta_i^a_i)
    std::vector<double> h_coef;      // signed 4 pi a_i
    std::vector<double> g_coef;      // combined -sum_i w_i beta_ik per hole k
    double D1 = 0.0, D2 = 0.0;
    double d1_scaled = 0.0, d2_scaled = 0.0;
    std::vector<double> gap_pui;
    std::vector<double> mass_scaled; // annulus mass * eps / (2 pi alpha_i), own branch
    std::vector<double> cross_mass;  // opposite-branch annulus integral, stays O(1)
    std::vector<double> cor22_err;   // near-hole expansion error at the bubble scale

    /// Signed bubble sum at an arbitrary point (exact).
    double bubble_part(const Point& x) const {
        double v = 0.0;
        for (std::size_t i = 0; i < bubbles.size(); ++i)
            v += weight[i] * bubble::eval_u(bubbles[i], x);
        return v;
    }

    /// Closed-form harmonic part of PU - sum w_i U_i (interior points only).
    double smooth_part(const Point& x) const {
        double v = 0.0;
        for (std::size_t i = 0; i < bubbles.size(); ++i)
            v += const_part[i] + h_coef[i] * greens::regular_part(x, centers[i]) +
                 g_coef[i] * greens::green(x, centers[i]);
        return v;
    }
};

namespace construct {

inline Bubble hole_bubble(const BlowupConfig& cfg, const ScaleParams& s, int i) {
    return Bubble(cfg.holes[i].center, s.delta[i], cfg.holes[i].alpha);
}

/// P_eps U_i: the bubble plus the discrete harmonic correction enforcing the
/// zero trace, so the projected field keeps the exact bubble Laplacian.
inline Field project_bubble(const fem::PoissonSolver& solver, const Mesh& mesh, const Bubble& b) {
    Field h = solver.harmonic_extension(
        [&](int, const Point& x) { return -bubble::eval_u(b, x); });
    Field out(mesh);
    for (int v = 0; v < mesh.n_vertices(); ++v)
        out.values[v] = mesh.is_boundary(v) ? 0.0 : bubble::eval_u(b, mesh.vertices[v]) + h.values[v];
    return out;
}

/// Value of the Green-function expansion of P_eps U_i at x (away from the
/// boundaries G vanishes on the outer circle, which `on_outer` encodes).
inline double pui_expansion(const BlowupConfig& cfg, const ScaleParams& s, int i, const Point& x,
                            bool on_outer) {
    const Bubble b = hole_bubble(cfg, s, i);
    const double a = b.alpha;
    double v = bubble::eval_u(b, x) - std::log(2.0 * a * a * std::pow(b.delta, a)) +
               4.0 * pi * a * greens::regular_part(x, b.center);
    for (int k = 0; k < cfg.m(); ++k)
        if (!on_outer) v -= s.beta(i, k) * greens::green(x, cfg.holes[k].center);
    return v;
}

/// Remainder of P_eps U_i over its Green-function expansion: the discrete
/// harmonic extension of the exact boundary mismatch (the expansion itself
/// vanishes on no boundary, P_eps U_i does). Its sup norm is the sharp
/// discrete measure of the expansion error.
inline Field expansion_remainder(const fem::PoissonSolver& solver, const BlowupConfig& cfg,
                                 const ScaleParams& s, int i) {
    return solver.harmonic_extension([&](int tag, const Point& x) {
        return -pui_expansion(cfg, s, i, x, tag == 0);
    });
}

template <class G>
inline double integrate_patch(const Mesh& mesh, int patch, const G& g) {
    const auto [lo, hi] = mesh.patch_range[patch];
    double total = 0.0;
    for (int t = lo; t < hi; ++t) {
        const auto& tr = mesh.triangles[t];
        const Point& p0 = mesh.vertices[tr[0]];
        const Point& p1 = mesh.vertices[tr[1]];
        const Point& p2 = mesh.vertices[tr[2]];
        const double area = 0.5 * cross(p0, p1, p2);
        for (const auto& nd : fem::quad7::nodes) {
            const Point x = nd.l0 * p0 + nd.l1 * p1 + nd.l2 * p2;
            total += area * nd.w * g(t, x, nd.l0, nd.l1, nd.l2);
        }
    }
    return total;
}

inline AnsatzBundle assemble_ansatz(const fem::PoissonSolver& solver, const BlowupConfig& cfg,
                                    const ScaleParams& s) {
    const Mesh& mesh = *solver.assembly().mesh;
    const int m = cfg.m(), m1 = cfg.m1();
    AnsatzBundle bundle;
    bundle.pu = Field(mesh);
    bundle.psi_sum = Field(mesh);
    bundle.g_coef.assign(m, 0.0);
    // Each projection is represented as bubble + closed-form expansion part +
    // discrete remainder psi_i, so the FEM error lives only on the O(eps)
    // remainder instead of the O(1) harmonic correction.
    for (int i = 0; i < m; ++i) {
        bundle.bubbles.push_back(hole_bubble(cfg, s, i));
        bundle.centers.push_back(cfg.holes[i].center);
        const double w = (i < m1) ? 1.0 : -1.0 / cfg.tau;
        bundle.weight.push_back(w);
        const double ai = cfg.holes[i].alpha;
        bundle.const_part.push_back(
            -w * std::log(2.0 * ai * ai * std::pow(s.delta[i], ai)));
        bundle.h_coef.push_back(w * 4.0 * pi * ai);
        for (int k = 0; k < m; ++k) bundle.g_coef[k] -= w * s.beta(i, k);

        Field psi = expansion_remainder(solver, cfg, s, i);
        bundle.gap_pui.push_back(psi.values.cwiseAbs().maxCoeff());
        Field proj(mesh);
        for (int v = 0; v < mesh.n_vertices(); ++v)
            proj.values[v] = mesh.is_boundary(v)
                                 ? 0.0
                                 : pui_expansion(cfg, s, i, mesh.vertices[v], false) +
                                       psi.values[v];
        bundle.psi_sum.values += w * psi.values;
        bundle.pu.values += w * proj.values;
        bundle.proj.push_back(std::move(proj));
    }

    // Exponential integrals: bubble and expansion parts are evaluated exactly
    // at the quadrature points, only the small remainder is interpolated.
    auto pu_at = [&](int t, const Point& x, double l0, double l1, double l2) {
        const auto& tr = mesh.triangles[t];
        return bundle.bubble_part(x) + bundle.smooth_part(x) +
               l0 * bundle.psi_sum.values[tr[0]] + l1 * bundle.psi_sum.values[tr[1]] +
               l2 * bundle.psi_sum.values[tr[2]];
    };
    bundle.D1 = fem::integrate_over(mesh, [&](int t, const Point& x, double l0, double l1, double l2) {
        return cfg.V1(x) * std::exp(pu_at(t, x, l0, l1, l2));
    });
    bundle.D2 = fem::integrate_over(mesh, [&](int t, const Point& x, double l0, double l1, double l2) {
        return cfg.V2(x) * std::exp(-cfg.tau * pu_at(t, x, l0, l1, l2));
    });
    bundle.d1_scaled = bundle.D1 * 2.0 * s.eps / s.lambda1;
    bundle.d2_scaled = bundle.D2 * 2.0 * s.eps / (s.lambda2 * cfg.tau * cfg.tau);

    for (int i = 0; i < m; ++i) {
        const double ai = cfg.holes[i].alpha;
        auto mass1 = [&](int t, const Point& x, double l0, double l1, double l2) {
            return cfg.V1(x) * std::exp(pu_at(t, x, l0, l1, l2));
        };
        auto mass2 = [&](int t, const Point& x, double l0, double l1, double l2) {
            return cfg.V2(x) * std::exp(-cfg.tau * pu_at(t, x, l0, l1, l2));
        };
        if (i < m1) {
            bundle.mass_scaled.push_back(integrate_patch(mesh, i, mass1) * s.eps / (2.0 * pi * ai));
            bundle.cross_mass.push_back(integrate_patch(mesh, i, mass2));
        } else {
            bundle.mass_scaled.push_back(integrate_patch(mesh, i, mass2) * s.eps / (2.0 * pi * ai));
            bundle.cross_mass.push_back(integrate_patch(mesh, i, mass1));
        }

        // near-hole expansion at the bubble scale
        const Bubble& b = bundle.bubbles[i];
        double err = 0.0;
        for (int v = 0; v < mesh.n_vertices(); ++v) {
            const double r = dist(mesh.vertices[v], b.center);
            if (r < 0.5 * s.delta[i] || r > 2.0 * s.delta[i]) continue;
            const double lhs = (i < m1) ? bundle.pu.values[v] : -cfg.tau * bundle.pu.values[v];
            const double rhs = bubble::eval_u(b, mesh.vertices[v]) -
                               std::log(2.0 * ai * ai * std::pow(b.delta, ai)) +
                               (ai - 2.0) * std::log(r) + 2.0 * pi * s.rho[i];
            err = std::max(err, std::abs(lhs - rhs));
        }
        bundle.cor22_err.push_back(err);
    }
    return bundle;
}

/// Analytic Laplacian of the projected ansatz (the projection keeps the
/// bubble Laplacian, so no discrete differentiation enters the residual).
inline double laplacian_pu(const AnsatzBundle& bundle, const BlowupConfig& cfg, const Point& x) {
    double v = 0.0;
    for (int i = 0; i < cfg.m(); ++i) {
        const double src = bubble::source(bundle.bubbles[i], x);
        v += (i < cfg.m1()) ? -src : src / cfg.tau;
    }
    return v;
}

/// Nodal error term R = Delta PU + lambda1 V1 e^PU / D1 - lambda2 tau V2 e^{-tau PU} / D2.
inline Field residual_field(const AnsatzBundle& bundle, const BlowupConfig& cfg,
                            const ScaleParams& s) {
    const Mesh& mesh = *bundle.pu.mesh;
    Field r(mesh);
    for (int v = 0; v < mesh.n_vertices(); ++v) {
        const Point& x = mesh.vertices[v];
        const double pu = bundle.pu.values[v];
        r.values[v] = laplacian_pu(bundle, cfg, x) +
                      s.lambda1 * cfg.V1(x) * std::exp(pu) / bundle.D1 -
                      s.lambda2 * cfg.tau * cfg.V2(x) * std::exp(-cfg.tau * pu) / bundle.D2;
    }
    return r;
}

// --- far-field probes --------------------------------------------------------

/// Sixteen probes on |x| = 0.85 plus the midpoints between hole pairs.
inline std::vector<Point> probe_points(const BlowupConfig& cfg, int n_ring = 16) {
    std::vector<Point> pts;
    for (int q = 0; q < n_ring; ++q) {
        const double th = 2.0 * pi * q / n_ring;
        pts.push_back({0.85 * std::cos(th), 0.85 * std::sin(th)});
    }
    for (int i = 0; i < cfg.m(); ++i)
        for (int j = i + 1; j < cfg.m(); ++j)
            pts.push_back((cfg.holes[i].center + cfg.holes[j].center) / 2.0);
    return pts;
}

/// The limiting Green superposition 2 pi sum (a_i+2) G(x, xi_i) with the
/// -2 pi / tau weight on the negative-sign holes.
inline double green_superposition(const BlowupConfig& cfg, const Point& x) {
    double v = 0.0;
    for (int i = 0; i < cfg.m(); ++i) {
        const double g = (cfg.holes[i].alpha + 2.0) * greens::green(x, cfg.holes[i].center);
        v += (i < cfg.m1()) ? 2.0 * pi * g : -2.0 * pi * g / cfg.tau;
    }
    return v;
}

/// Max far-field deviation of a field from the Green superposition over the
/// probe ring.
inline double farfield_error(const Field& u, const BlowupConfig& cfg, int n_ring = 16) {
    double e = 0.0;
    for (int q = 0; q < n_ring; ++q) {
        const double th = 2.0 * pi * q / n_ring;
        const Point p{0.85 * std::cos(th), 0.85 * std::sin(th)};
        e = std::max(e, std::abs(fem::eval_at(u, p) - green_superposition(cfg, p)));
    }
    return e;
}

/// Same comparison with the bubble and expansion parts evaluated exactly at
/// the probes; only the given nodal remainder is interpolated. `extra` is
/// psi_sum for the ansatz itself, or psi_sum + (u - PU) for a solution.
inline double farfield_error(const AnsatzBundle& bundle, const Field& extra,
                             const BlowupConfig& cfg, int n_ring = 16) {
    double e = 0.0;
    for (int q = 0; q < n_ring; ++q) {
        const double th = 2.0 * pi * q / n_ring;
        const Point p{0.85 * std::cos(th), 0.85 * std::sin(th)};
        const double val =
            bundle.bubble_part(p) + bundle.smooth_part(p) + fem::eval_at(extra, p);
        e = std::max(e, std::abs(val - green_superposition(cfg, p)));
    }
    return e;
}

} // namespace construct
} // namespace mfpd
