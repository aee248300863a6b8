#pragma once

#include <chrono>
#include <cmath>
#include <optional>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseLU>

#include "mfpd/construct.hpp"
#include "mfpd/discrete.hpp"

namespace mfpd {

struct SolverOptions {
    double newton_tol = 1e-10; // relative to the initial dual residual
    int max_iter = 25;
    int max_backtracks = 30;
};

struct SolveReport {
    bool converged = false;
    bool diverged = false;
    bool used_bordered_solve = false;
    bool overflow_clipped = false;
    int iters = 0;           // fixed-point + Newton steps together
    int fixed_point_steps = 0;
    std::vector<double> history; // dual residual per iteration, history[0] = seed
    double phi_inf = 0.0, phi_h1 = 0.0;
    double D1 = 0.0, D2 = 0.0;
    double wall_time_s = 0.0;
    bool quadratic_observed = false;
};

namespace solver {

/// Symmetric operator  local + ca a a^T + cb b b^T  with a sparse local part.
/// Solves go through the factored local part and a 2x2 Woodbury correction;
/// when the local factorization is unavailable or inaccurate (indefinite
/// local part past fold points) a bordered sparse LU takes over.
struct RankTwoOperator {
    Eigen::SparseMatrix<double> local;
    Eigen::VectorXd a, b;
    double ca = 0.0, cb = 0.0; // rank-one coefficients, zero when inactive
    std::optional<Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>>> ldlt;
    Eigen::VectorXd qa, qb;
    bool woodbury = false;
    mutable std::optional<Eigen::SparseLU<Eigen::SparseMatrix<double>>> lu;
    mutable Eigen::SparseMatrix<double> bordered;

    void factor() {
        ldlt.emplace();
        ldlt->compute(local);
        woodbury = (ldlt->info() == Eigen::Success);
        if (woodbury) {
            if (ca > 0.0) qa = ldlt->solve(a);
            if (cb > 0.0) qb = ldlt->solve(b);
        }
        lu.reset();
    }

    Eigen::VectorXd apply(const Eigen::VectorXd& x) const {
        Eigen::VectorXd y = local * x;
        if (ca > 0.0) y += ca * a * a.dot(x);
        if (cb > 0.0) y += cb * b * b.dot(x);
        return y;
    }

    Eigen::VectorXd solve(const Eigen::VectorXd& r, bool* fell_back = nullptr) const {
        if (woodbury) {
            Eigen::VectorXd p = ldlt->solve(r);
            const bool ra = ca > 0.0, rb = cb > 0.0;
            if (!ra && !rb) return p;
            Eigen::Matrix2d K = Eigen::Matrix2d::Identity();
            Eigen::Vector2d rhs = Eigen::Vector2d::Zero();
            if (ra) {
                K(0, 0) = 1.0 / ca + a.dot(qa);
                rhs[0] = a.dot(p);
            }
            if (rb) {
                K(1, 1) = 1.0 / cb + b.dot(qb);
                rhs[1] = b.dot(p);
            }
            if (ra && rb) {
                K(0, 1) = a.dot(qb);
                K(1, 0) = b.dot(qa);
            }
            const Eigen::Vector2d y = K.fullPivLu().solve(rhs);
            Eigen::VectorXd x = p;
            if (ra) x -= y[0] * qa;
            if (rb) x -= y[1] * qb;
            const double rn = r.norm();
            if (rn == 0.0 || (apply(x) - r).norm() <= 1e-8 * rn) return x;
        }
        if (fell_back) *fell_back = true;
        const int n = static_cast<int>(local.rows());
        if (!lu) {
            std::vector<Eigen::Triplet<double>> trips;
            for (int k = 0; k < local.outerSize(); ++k)
                for (Eigen::SparseMatrix<double>::InnerIterator it(local, k); it; ++it)
                    trips.emplace_back(static_cast<int>(it.row()), static_cast<int>(it.col()),
                                       it.value());
            for (int i = 0; i < n; ++i) {
                if (ca > 0.0 && a[i] != 0.0) {
                    trips.emplace_back(i, n, a[i]);
                    trips.emplace_back(n, i, a[i]);
                }
                if (cb > 0.0 && b[i] != 0.0) {
                    trips.emplace_back(i, n + 1, b[i]);
                    trips.emplace_back(n + 1, i, b[i]);
                }
            }
            trips.emplace_back(n, n, ca > 0.0 ? -1.0 / ca : 1.0);
            trips.emplace_back(n + 1, n + 1, cb > 0.0 ? -1.0 / cb : 1.0);
            bordered.resize(n + 2, n + 2);
            bordered.setFromTriplets(trips.begin(), trips.end());
            lu.emplace();
            lu->compute(bordered);
            if (lu->info() != Eigen::Success)
                throw std::runtime_error("rank-two operator: bordered factorization failed");
        }
        Eigen::VectorXd rb2 = Eigen::VectorXd::Zero(n + 2);
        rb2.head(n) = r;
        return lu->solve(rb2).head(n);
    }
};

/// Discrete two-exponential mean field problem in weak form:
///   F(u)_i = (A u)_i - m_i [ l1 V1 e^u / D1 - l2 tau V2 e^{-tau u} / D2 ]_i
/// with the denominators evaluated by the same lumped quadrature every time
/// the residual is formed, so the Jacobian stays exactly consistent.
/// Exponentials are taken in max-shifted form; the shift cancels between the
/// numerator and the denominator.
class NonlinearProblem {
public:
    NonlinearProblem(const fem::PoissonSolver& poisson, const BlowupConfig& cfg,
                     const ScaleParams& s)
        : poisson_(&poisson), as_(&poisson.assembly()), cfg_(&cfg), s_(&s) {
        const Mesh& mesh = *as_->mesh;
        v1_.resize(mesh.n_vertices());
        v2_.resize(mesh.n_vertices());
        for (int v = 0; v < mesh.n_vertices(); ++v) {
            v1_[v] = cfg.V1(mesh.vertices[v]);
            v2_[v] = cfg.V2(mesh.vertices[v]);
        }
    }

    const Assembly& assembly() const { return *as_; }

    struct State {
        Eigen::VectorXd w1, w2;   // l1 V1 e^u / D1 and l2 tau^2 V2 e^{-tau u} / D2
        Eigen::VectorXd residual; // interior
        double D1 = 0.0, D2 = 0.0;
        bool clipped = false;
    };

    State eval(const Eigen::VectorXd& u_full) const {
        const auto& m = as_->lumped_mass;
        State st;
        const double c1 = u_full.maxCoeff();
        const double c2 = (-cfg_->tau * u_full).maxCoeff();
        Eigen::VectorXd e1 = (u_full.array() - c1).exp().matrix().cwiseProduct(v1_);
        Eigen::VectorXd e2 =
            ((-cfg_->tau * u_full).array() - c2).exp().matrix().cwiseProduct(v2_);
        const double d1s = m.dot(e1), d2s = m.dot(e2);
        st.D1 = d1s * std::exp(c1);
        st.D2 = d2s * std::exp(c2);
        st.clipped = u_full.cwiseAbs().maxCoeff() > 700.0;
        st.w1 = (s_->lambda1 / d1s) * e1;
        st.w2 = (s_->lambda2 * cfg_->tau * cfg_->tau / d2s) * e2;
        const Eigen::VectorXd f = st.w1 - st.w2 / cfg_->tau;
        const Eigen::VectorXd full = as_->stiffness * u_full - m.cwiseProduct(f);
        st.residual = as_->restrict_interior(full);
        return st;
    }

    /// Dual (H^-1-type) norm of an interior residual through the stiffness.
    double dual_norm(const Eigen::VectorXd& r_int) const {
        return std::sqrt(std::max(0.0, r_int.dot(poisson_->solve_interior(r_int))));
    }

    using Jacobian = RankTwoOperator;

    /// Jacobian of F at a state: local part A - diag(m (w1+w2)) plus two
    /// rank-one nonlocal corrections (1/l1) a a^T + (1/(l2 tau^2)) b b^T with
    /// a = m w1, b = m w2 restricted to the interior. Factorizations are not
    /// movable, so the operator is filled in place.
    void jacobian(const State& st, Jacobian& J) const {
        const auto& m = as_->lumped_mass;
        Eigen::VectorXd diag_full = m.cwiseProduct(st.w1 + st.w2);
        J.local = as_->stiffness_int;
        for (int k = 0; k < as_->n_interior(); ++k)
            J.local.coeffRef(k, k) -= diag_full[as_->interior[k]];
        J.a = as_->restrict_interior(m.cwiseProduct(st.w1));
        J.b = as_->restrict_interior(m.cwiseProduct(st.w2));
        J.ca = s_->lambda1 > 0.0 ? 1.0 / s_->lambda1 : 0.0;
        J.cb = s_->lambda2 > 0.0 ? 1.0 / (s_->lambda2 * cfg_->tau * cfg_->tau) : 0.0;
        J.factor();
    }

private:
    const fem::PoissonSolver* poisson_;
    const Assembly* as_;
    const BlowupConfig* cfg_;
    const ScaleParams* s_;
    Eigen::VectorXd v1_, v2_;
};

/// Weak-form residual as a field (interior entries; zero on the boundary).
inline Field nonlinear_residual(const fem::PoissonSolver& poisson, const BlowupConfig& cfg,
                                const ScaleParams& s, const Field& u) {
    NonlinearProblem prob(poisson, cfg, s);
    const auto st = prob.eval(u.values);
    return {*u.mesh, poisson.assembly().extend_zero(st.residual)};
}

/// Discrete linearized operator at the ansatz: bubble weights K1, K2 with
/// their two nonlocal rank-one corrections (the weak form of -L).
inline void ansatz_operator(const Assembly& as, const BlowupConfig& cfg, const ScaleParams& s,
                            RankTwoOperator& B) {
    const Mesh& mesh = *as.mesh;
    Eigen::VectorXd k1 = Eigen::VectorXd::Zero(mesh.n_vertices());
    Eigen::VectorXd k2 = Eigen::VectorXd::Zero(mesh.n_vertices());
    for (int i = 0; i < cfg.m(); ++i) {
        const Bubble b(cfg.holes[i].center, s.delta[i], cfg.holes[i].alpha);
        for (int v = 0; v < mesh.n_vertices(); ++v) {
            const double src = bubble::source(b, mesh.vertices[v]);
            (i < cfg.m1() ? k1[v] : k2[v]) += src;
        }
    }
    const auto& m = as.lumped_mass;
    B.local = as.stiffness_int;
    Eigen::VectorXd diag_full = m.cwiseProduct(k1 + k2);
    for (int k = 0; k < as.n_interior(); ++k)
        B.local.coeffRef(k, k) -= diag_full[as.interior[k]];
    B.a = as.restrict_interior(m.cwiseProduct(k1));
    B.b = as.restrict_interior(m.cwiseProduct(k2));
    B.ca = s.lambda1 > 0.0 ? 1.0 / s.lambda1 : 0.0;
    B.cb = s.lambda2 > 0.0 ? 1.0 / (s.lambda2 * cfg.tau * cfg.tau) : 0.0;
    B.factor();
}

inline bool quadratic_regime(const std::vector<double>& history) {
    if (history.empty() || history[0] <= 0.0) return false;
    for (std::size_t k = 0; k + 1 < history.size(); ++k) {
        const double rk = history[k] / history[0], rk1 = history[k + 1] / history[0];
        if (rk <= 1e-2 && rk1 <= std::pow(rk, 1.7)) return true;
    }
    return false;
}

/// Solve the discrete problem seeded by the projected ansatz. Opens with
/// full steps of the frozen linearized operator at the ansatz (the paper's
/// fixed-point map, which contracts while damped Newton paths can stall on
/// the near-kernel singular set), then switches to damped Newton with
/// backtracking for the terminal quadratic phase.
inline std::pair<Field, SolveReport> newton_solve(const fem::PoissonSolver& poisson,
                                                  const AnsatzBundle& seed,
                                                  const BlowupConfig& cfg, const ScaleParams& s,
                                                  const SolverOptions& opts = {}) {
    const auto t_start = std::chrono::steady_clock::now();
    NonlinearProblem prob(poisson, cfg, s);
    const Assembly& as = poisson.assembly();
    const Mesh& mesh = *as.mesh;
    auto anorm = [&](const Eigen::VectorXd& v) {
        return std::sqrt(std::max(0.0, v.dot(as.stiffness_int * v)));
    };

    Eigen::VectorXd u = seed.pu.values;
    auto st = prob.eval(u);
    double r = prob.dual_norm(st.residual);
    const double r0 = r;
    SolveReport rep;
    rep.history.push_back(r);
    rep.overflow_clipped = st.clipped;

    // fixed-point phase: full steps while the increments contract
    {
        RankTwoOperator B;
        ansatz_operator(as, cfg, s, B);
        Eigen::VectorXd u_best = u;
        double r_best = r, inc_prev = std::numeric_limits<double>::infinity();
        for (int k = 0; k < 8 && !(r <= 0.02 * r0); ++k) {
            Eigen::VectorXd dx = B.solve(-st.residual, nullptr);
            const double inc = anorm(dx);
            if (!(inc <= inc_prev)) break;
            u += as.extend_zero(dx);
            st = prob.eval(u);
            r = prob.dual_norm(st.residual);
            rep.fixed_point_steps += 1;
            rep.iters += 1;
            rep.history.push_back(r);
            rep.overflow_clipped = rep.overflow_clipped || st.clipped;
            if (r < r_best) {
                r_best = r;
                u_best = u;
            }
            inc_prev = inc;
        }
        if (r > r_best) {
            u = u_best;
            st = prob.eval(u);
            r = r_best;
        }
    }

    NonlinearProblem::Jacobian J;
    while (rep.iters < opts.max_iter && !(r <= opts.newton_tol * r0)) {
        prob.jacobian(st, J);
        bool fell_back = false;
        const Eigen::VectorXd dx = J.solve(-st.residual, &fell_back);
        rep.used_bordered_solve = rep.used_bordered_solve || fell_back;

        double t = 1.0;
        bool accepted = false;
        for (int bt = 0; bt <= opts.max_backtracks; ++bt, t *= 0.5) {
            Eigen::VectorXd u_try = u + t * as.extend_zero(dx);
            auto st_try = prob.eval(u_try);
            const double r_try = prob.dual_norm(st_try.residual);
            if (r_try < (1.0 - 1e-4 * t) * r) {
                u = std::move(u_try);
                st = std::move(st_try);
                r = r_try;
                accepted = true;
                break;
            }
        }
        rep.iters += 1;
        if (!accepted) {
            rep.diverged = r > 10.0 * r0;
            break;
        }
        rep.overflow_clipped = rep.overflow_clipped || st.clipped;
        rep.history.push_back(r);
    }

    rep.converged = r <= opts.newton_tol * r0;
    rep.quadratic_observed = quadratic_regime(rep.history);

    Field uf(mesh, u);
    Field phi(mesh, u - seed.pu.values);
    rep.phi_inf = fem::linf_norm(phi);
    rep.phi_h1 = fem::h1_seminorm(as, phi);
    rep.D1 = fem::integrate_over(mesh, [&](int t, const Point& x, double l0, double l1, double l2) {
        const auto& tr = mesh.triangles[t];
        return cfg.V1(x) * std::exp(l0 * u[tr[0]] + l1 * u[tr[1]] + l2 * u[tr[2]]);
    });
    rep.D2 = fem::integrate_over(mesh, [&](int t, const Point& x, double l0, double l1, double l2) {
        const auto& tr = mesh.triangles[t];
        return cfg.V2(x) *
               std::exp(-cfg.tau * (l0 * u[tr[0]] + l1 * u[tr[1]] + l2 * u[tr[2]]));
    });
    rep.wall_time_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    return {std::move(uf), rep};
}

/// Independent solves along a descending eps list, each seeded by its own
/// ansatz so the reports stay comparable.
inline std::vector<SolveReport> continuation(const BlowupConfig& cfg,
                                             const std::vector<double>& eps_list,
                                             const GradingSpec& grading,
                                             const SolverOptions& opts = {}) {
    std::vector<SolveReport> out;
    for (double eps : eps_list) {
        ScaleParams s = ansatz::make_scales(cfg, eps);
        Mesh mesh = triangulate(cfg, s, grading);
        Assembly as = fem::assemble(mesh);
        fem::PoissonSolver poisson(as);
        AnsatzBundle bundle = construct::assemble_ansatz(poisson, cfg, s);
        out.push_back(newton_solve(poisson, bundle, cfg, s, opts).second);
    }
    return out;
}

} // namespace solver
} // namespace mfpd
