#pragma once

#include <cmath>
#include <functional>
#include <memory>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include "mfpd/mesh.hpp"

namespace mfpd {

/// Nodal P1 scalar field on a mesh.
struct Field {
    const Mesh* mesh = nullptr;
    Eigen::VectorXd values;

    Field() = default;
    explicit Field(const Mesh& m) : mesh(&m), values(Eigen::VectorXd::Zero(m.n_vertices())) {}
    Field(const Mesh& m, Eigen::VectorXd v) : mesh(&m), values(std::move(v)) {
        if (values.size() != m.n_vertices())
            throw std::invalid_argument("Field: value count does not match the mesh");
    }
    double operator[](int v) const { return values[v]; }
};

/// Assembled discrete operators: full P1 stiffness of -Delta (all vertices),
/// lumped mass (row sums of the consistent mass matrix), and the interior
/// block after Dirichlet elimination.
struct Assembly {
    const Mesh* mesh = nullptr;
    Eigen::SparseMatrix<double> stiffness;       // full, symmetric
    Eigen::VectorXd lumped_mass;                 // full
    std::vector<int> interior;                   // interior vertex ids
    std::vector<int> interior_index;             // vertex -> interior position or -1
    Eigen::SparseMatrix<double> stiffness_int;   // interior block

    int n_interior() const { return static_cast<int>(interior.size()); }

    Eigen::VectorXd restrict_interior(const Eigen::VectorXd& full) const {
        Eigen::VectorXd out(n_interior());
        for (int k = 0; k < n_interior(); ++k) out[k] = full[interior[k]];
        return out;
    }
    Eigen::VectorXd extend_zero(const Eigen::VectorXd& inner) const {
        Eigen::VectorXd out = Eigen::VectorXd::Zero(mesh->n_vertices());
        for (int k = 0; k < n_interior(); ++k) out[interior[k]] = inner[k];
        return out;
    }
};

namespace fem {

inline Assembly assemble(const Mesh& mesh) {
    Assembly as;
    as.mesh = &mesh;
    const int n = mesh.n_vertices();
    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(9 * mesh.n_triangles());
    as.lumped_mass = Eigen::VectorXd::Zero(n);
    for (int t = 0; t < mesh.n_triangles(); ++t) {
        const auto& tr = mesh.triangles[t];
        const Point& p0 = mesh.vertices[tr[0]];
        const Point& p1 = mesh.vertices[tr[1]];
        const Point& p2 = mesh.vertices[tr[2]];
        const double area = 0.5 * cross(p0, p1, p2);
        if (!(area > 0.0))
            throw std::runtime_error("assemble: degenerate triangle " + std::to_string(t));
        // gradients of the barycentric basis
        const Point g[3] = {{(p1.y - p2.y) / (2 * area), (p2.x - p1.x) / (2 * area)},
                            {(p2.y - p0.y) / (2 * area), (p0.x - p2.x) / (2 * area)},
                            {(p0.y - p1.y) / (2 * area), (p1.x - p0.x) / (2 * area)}};
        for (int i = 0; i < 3; ++i) {
            as.lumped_mass[tr[i]] += area / 3.0;
            for (int j = 0; j < 3; ++j)
                trips.emplace_back(tr[i], tr[j], area * g[i].dot(g[j]));
        }
    }
    as.stiffness.resize(n, n);
    as.stiffness.setFromTriplets(trips.begin(), trips.end());

    as.interior_index.assign(n, -1);
    for (int v = 0; v < n; ++v)
        if (!mesh.is_boundary(v)) {
            as.interior_index[v] = static_cast<int>(as.interior.size());
            as.interior.push_back(v);
        }
    std::vector<Eigen::Triplet<double>> itrips;
    for (int k = 0; k < as.stiffness.outerSize(); ++k)
        for (Eigen::SparseMatrix<double>::InnerIterator it(as.stiffness, k); it; ++it) {
            const int i = as.interior_index[it.row()], j = as.interior_index[it.col()];
            if (i >= 0 && j >= 0) itrips.emplace_back(i, j, it.value());
        }
    as.stiffness_int.resize(as.n_interior(), as.n_interior());
    as.stiffness_int.setFromTriplets(itrips.begin(), itrips.end());
    return as;
}

/// Sparse SPD factorization of the interior stiffness, reused across solves.
class PoissonSolver {
public:
    explicit PoissonSolver(const Assembly& as) : as_(&as) {
        ldlt_.compute(as.stiffness_int);
        if (ldlt_.info() != Eigen::Success)
            throw std::runtime_error("poisson: factorization of the stiffness failed");
    }

    const Assembly& assembly() const { return *as_; }

    /// Solve A_int x = load_int with zero trace; `load` is a full-length
    /// assembled load vector. Checks the algebraic residual.
    Field solve_load(const Eigen::VectorXd& load) const {
        const Eigen::VectorXd b = as_->restrict_interior(load);
        const Eigen::VectorXd x = ldlt_.solve(b);
        const double nb = b.norm();
        if (nb > 0.0) {
            const double res = (as_->stiffness_int * x - b).norm() / nb;
            if (!(res <= 1e-10))
                throw std::runtime_error("poisson: relative residual " + std::to_string(res));
        }
        return {*as_->mesh, as_->extend_zero(x)};
    }

    /// Discrete harmonic extension of prescribed boundary values.
    Field harmonic_extension(const std::function<double(int, const Point&)>& bc) const {
        const Mesh& mesh = *as_->mesh;
        Eigen::VectorXd full = Eigen::VectorXd::Zero(mesh.n_vertices());
        for (int v = 0; v < mesh.n_vertices(); ++v)
            if (mesh.is_boundary(v)) full[v] = bc(mesh.tag[v], mesh.vertices[v]);
        Eigen::VectorXd rhs = -(as_->stiffness * full);
        const Eigen::VectorXd b = as_->restrict_interior(rhs);
        const Eigen::VectorXd x = ldlt_.solve(b);
        for (int k = 0; k < as_->n_interior(); ++k) full[as_->interior[k]] = x[k];
        return {mesh, std::move(full)};
    }

    Eigen::VectorXd solve_interior(const Eigen::VectorXd& b) const { return ldlt_.solve(b); }

private:
    const Assembly* as_;
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt_;
};

/// One-shot Dirichlet Poisson solve from an assembled load vector.
inline Field poisson_solve(const Assembly& as, const Eigen::VectorXd& load) {
    return PoissonSolver(as).solve_load(load);
}

/// Assemble the P1 load vector of a function f: int f phi_i dx (7-point rule).
inline Eigen::VectorXd load_vector(const Mesh& mesh, const std::function<double(Point)>& f);

// --- quadrature ------------------------------------------------------------

namespace quad7 {
// Degree-5 rule (Radon): barycentric points and weights summing to one.
inline constexpr double w0 = 9.0 / 40.0;
inline const double a1 = (6.0 + std::sqrt(15.0)) / 21.0;
inline const double a2 = (6.0 - std::sqrt(15.0)) / 21.0;
inline const double w1 = (155.0 + std::sqrt(15.0)) / 1200.0;
inline const double w2 = (155.0 - std::sqrt(15.0)) / 1200.0;

struct Node {
    double l0, l1, l2, w;
};

inline const std::array<Node, 7> nodes = {{
    {1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0, w0},
    {a1, a1, 1.0 - 2.0 * a1, w1},
    {a1, 1.0 - 2.0 * a1, a1, w1},
    {1.0 - 2.0 * a1, a1, a1, w1},
    {a2, a2, 1.0 - 2.0 * a2, w2},
    {a2, 1.0 - 2.0 * a2, a2, w2},
    {1.0 - 2.0 * a2, a2, a2, w2},
}};
} // namespace quad7

/// Integrate g(x, interpolated field values...) over the mesh with the
/// 7-point rule. `g` receives the quadrature point and the field value.
template <class G>
double integrate_over(const Mesh& mesh, const G& g) {
    double total = 0.0;
    for (int t = 0; t < mesh.n_triangles(); ++t) {
        const auto& tr = mesh.triangles[t];
        const Point& p0 = mesh.vertices[tr[0]];
        const Point& p1 = mesh.vertices[tr[1]];
        const Point& p2 = mesh.vertices[tr[2]];
        const double area = 0.5 * cross(p0, p1, p2);
        for (const auto& nd : quad7::nodes) {
            const Point x = nd.l0 * p0 + nd.l1 * p1 + nd.l2 * p2;
            total += area * nd.w * g(t, x, nd.l0, nd.l1, nd.l2);
        }
    }
    return total;
}

inline double integrate_fn(const Mesh& mesh, const std::function<double(Point)>& f) {
    return integrate_over(mesh, [&](int, const Point& x, double, double, double) { return f(x); });
}

inline double integrate(const Field& u) {
    const Mesh& mesh = *u.mesh;
    return integrate_over(mesh, [&](int t, const Point&, double l0, double l1, double l2) {
        const auto& tr = mesh.triangles[t];
        return l0 * u.values[tr[0]] + l1 * u.values[tr[1]] + l2 * u.values[tr[2]];
    });
}

inline double lp_norm(const Field& u, double p) {
    if (!(p >= 1.0)) throw std::invalid_argument("lp_norm: p must be >= 1");
    const Mesh& mesh = *u.mesh;
    const double s =
        integrate_over(mesh, [&](int t, const Point&, double l0, double l1, double l2) {
            const auto& tr = mesh.triangles[t];
            const double v = l0 * u.values[tr[0]] + l1 * u.values[tr[1]] + l2 * u.values[tr[2]];
            return std::pow(std::abs(v), p);
        });
    return std::pow(s, 1.0 / p);
}

/// Weighted L^p norm, int w(x) |u|^p, for the paper's weighted spaces.
inline double lp_norm_weighted(const Field& u, double p,
                               const std::function<double(Point)>& weight) {
    const Mesh& mesh = *u.mesh;
    const double s =
        integrate_over(mesh, [&](int t, const Point& x, double l0, double l1, double l2) {
            const auto& tr = mesh.triangles[t];
            const double v = l0 * u.values[tr[0]] + l1 * u.values[tr[1]] + l2 * u.values[tr[2]];
            return weight(x) * std::pow(std::abs(v), p);
        });
    return std::pow(s, 1.0 / p);
}

inline double linf_norm(const Field& u) { return u.values.cwiseAbs().maxCoeff(); }

inline double h1_seminorm(const Assembly& as, const Field& u) {
    return std::sqrt(std::max(0.0, u.values.dot(as.stiffness * u.values)));
}

inline Eigen::VectorXd load_vector_impl(const Mesh& mesh, const std::function<double(Point)>& f) {
    Eigen::VectorXd load = Eigen::VectorXd::Zero(mesh.n_vertices());
    for (int t = 0; t < mesh.n_triangles(); ++t) {
        const auto& tr = mesh.triangles[t];
        const Point& p0 = mesh.vertices[tr[0]];
        const Point& p1 = mesh.vertices[tr[1]];
        const Point& p2 = mesh.vertices[tr[2]];
        const double area = 0.5 * cross(p0, p1, p2);
        for (const auto& nd : quad7::nodes) {
            const Point x = nd.l0 * p0 + nd.l1 * p1 + nd.l2 * p2;
            const double fx = f(x);
            load[tr[0]] += area * nd.w * fx * nd.l0;
            load[tr[1]] += area * nd.w * fx * nd.l1;
            load[tr[2]] += area * nd.w * fx * nd.l2;
        }
    }
    return load;
}

inline Eigen::VectorXd load_vector(const Mesh& mesh, const std::function<double(Point)>& f) {
    return load_vector_impl(mesh, f);
}

/// Nodal interpolation of a callable.
inline Field interpolate(const Mesh& mesh, const std::function<double(Point)>& f) {
    Field u(mesh);
    for (int v = 0; v < mesh.n_vertices(); ++v) u.values[v] = f(mesh.vertices[v]);
    return u;
}

/// Point evaluation of the interpolant (brute-force triangle location).
inline double eval_at(const Field& u, const Point& x) {
    const Mesh& mesh = *u.mesh;
    double best = std::numeric_limits<double>::quiet_NaN();
    double best_viol = std::numeric_limits<double>::infinity();
    for (int t = 0; t < mesh.n_triangles(); ++t) {
        const auto& tr = mesh.triangles[t];
        const Point& p0 = mesh.vertices[tr[0]];
        const Point& p1 = mesh.vertices[tr[1]];
        const Point& p2 = mesh.vertices[tr[2]];
        const double a = cross(p0, p1, p2);
        const double l0 = cross(p1, p2, x) / a;
        const double l1 = cross(p2, p0, x) / a;
        const double l2 = 1.0 - l0 - l1;
        const double viol = -std::min({l0, l1, l2});
        if (viol < best_viol) {
            best_viol = viol;
            best = l0 * u.values[tr[0]] + l1 * u.values[tr[1]] + l2 * u.values[tr[2]];
            if (viol <= 0.0) break;
        }
    }
    if (best_viol > 1e-6)
        throw std::domain_error("eval_at: point outside the mesh");
    return best;
}

} // namespace fem
} // namespace mfpd
