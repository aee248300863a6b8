#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <ostream>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "mfpd/ansatz.hpp"
#include "mfpd/geometry.hpp"

namespace mfpd {

/// Mesh grading toward the holes. `growth` is the geometric ring-radius
/// ratio; `layers = 0` derives the ring count from growth and the ratio of
/// patch radius to hole radius, which puts the first layer thickness at
/// roughly a quarter of the hole radius.
struct GradingSpec {
    double target_h_far = 0.04;
    int layers = 0;
    double growth = 1.2;
    int max_vertices = 500000;
};

/// Conforming triangulation of the pierced disk. Triangles are CCW; vertex
/// tags: -1 interior, 0 outer circle, 1..m hole rim. `patch_range[i]` is the
/// triangle index range of the structured annulus around hole i, used for
/// the per-hole annulus integrals.
struct Mesh {
    std::vector<Point> vertices;
    std::vector<int> tag;
    std::vector<std::array<int, 3>> triangles;
    std::vector<Point> hole_centers;
    std::vector<double> hole_radii;
    std::vector<double> patch_radii;
    std::vector<std::pair<int, int>> patch_range;
    int max_vertices = 500000;

    int n_vertices() const { return static_cast<int>(vertices.size()); }
    int n_triangles() const { return static_cast<int>(triangles.size()); }
    bool is_boundary(int v) const { return tag[v] >= 0; }

    double tri_area(int t) const {
        const auto& tr = triangles[t];
        return 0.5 * cross(vertices[tr[0]], vertices[tr[1]], vertices[tr[2]]);
    }
    Point tri_centroid(int t) const {
        const auto& tr = triangles[t];
        return (vertices[tr[0]] + vertices[tr[1]] + vertices[tr[2]]) / 3.0;
    }
};

struct MeshStats {
    double min_angle_deg = 0.0;
    int euler_char = 0;
    int n_boundary_edges = 0;
};

namespace mesh_detail {

inline std::uint64_t edge_key(int a, int b) {
    if (a > b) std::swap(a, b);
    return (static_cast<std::uint64_t>(a) << 32) | static_cast<std::uint32_t>(b);
}

inline double hash01(std::uint64_t v) {
    v += 0x9e3779b97f4a7c15ull;
    v = (v ^ (v >> 30)) * 0xbf58476d1ce4e5b9ull;
    v = (v ^ (v >> 27)) * 0x94d049bb133111ebull;
    v = v ^ (v >> 31);
    return static_cast<double>(v >> 11) * 0x1.0p-53;
}

inline double tri_min_angle(const Point& a, const Point& b, const Point& c) {
    const double la = (b - c).norm(), lb = (a - c).norm(), lc = (a - b).norm();
    auto ang = [](double opp, double s1, double s2) {
        double x = (s1 * s1 + s2 * s2 - opp * opp) / (2.0 * s1 * s2);
        return std::acos(std::clamp(x, -1.0, 1.0));
    };
    return std::min({ang(la, lb, lc), ang(lb, la, lc), ang(lc, la, lb)});
}

// ---------------------------------------------------------------------------
// Incremental Bowyer-Watson triangulation for the stitch band.
// ---------------------------------------------------------------------------
class Delaunay {
public:
    explicit Delaunay(const std::vector<Point>& pts) : pts_(pts) {
        const int n = static_cast<int>(pts_.size());
        if (n < 3) throw std::runtime_error("delaunay: fewer than 3 points");
        const double big = 1e4;
        pts_.push_back({0.0, big});
        pts_.push_back({-big, -big});
        pts_.push_back({big, -big});
        tris_.push_back({{n, n + 1, n + 2}, {-1, -1, -1}, true});
        for (int i = 0; i < n; ++i) insert(i);
    }

    /// Alive triangles not touching the bounding super-triangle.
    std::vector<std::array<int, 3>> triangles() const {
        const int n = static_cast<int>(pts_.size()) - 3;
        std::vector<std::array<int, 3>> out;
        for (const auto& t : tris_) {
            if (!t.alive) continue;
            if (t.v[0] >= n || t.v[1] >= n || t.v[2] >= n) continue;
            out.push_back({t.v[0], t.v[1], t.v[2]});
        }
        return out;
    }

private:
    struct Tri {
        std::array<int, 3> v;
        std::array<int, 3> adj; // adj[i] faces the edge opposite v[i]
        bool alive;
    };

    std::vector<Point> pts_;
    std::vector<Tri> tris_;
    int hint_ = 0;

    static double orient(const Point& a, const Point& b, const Point& p) {
        return cross(a, b, p);
    }

    bool in_circumcircle(const Tri& t, const Point& p) const {
        const Point& a = pts_[t.v[0]];
        const Point& b = pts_[t.v[1]];
        const Point& c = pts_[t.v[2]];
        const long double ax = a.x - p.x, ay = a.y - p.y;
        const long double bx = b.x - p.x, by = b.y - p.y;
        const long double cx = c.x - p.x, cy = c.y - p.y;
        const long double t1 = (ax * ax + ay * ay) * (bx * cy - by * cx);
        const long double t2 = (bx * bx + by * by) * (cx * ay - cy * ax);
        const long double t3 = (cx * cx + cy * cy) * (ax * by - ay * bx);
        const long double det = t1 + t2 + t3;
        const long double scale = std::abs(t1) + std::abs(t2) + std::abs(t3);
        return det > 1e-12L * scale; // ties count as outside
    }

    int locate(const Point& p) const {
        int cur = hint_;
        if (!tris_[cur].alive) {
            cur = -1;
            for (int i = static_cast<int>(tris_.size()) - 1; i >= 0; --i)
                if (tris_[i].alive) { cur = i; break; }
        }
        const int cap = 4 * static_cast<int>(tris_.size()) + 64;
        for (int step = 0; step < cap; ++step) {
            const Tri& t = tris_[cur];
            int next = -1;
            for (int i = 0; i < 3; ++i) {
                const Point& a = pts_[t.v[(i + 1) % 3]];
                const Point& b = pts_[t.v[(i + 2) % 3]];
                if (orient(a, b, p) < 0.0) {
                    next = t.adj[i];
                    break;
                }
            }
            if (next == -1) return cur;
            cur = next;
        }
        // Walk cycled on a degenerate configuration; fall back to a scan.
        for (int i = 0; i < static_cast<int>(tris_.size()); ++i) {
            if (!tris_[i].alive) continue;
            const Tri& t = tris_[i];
            bool inside = true;
            for (int k = 0; k < 3 && inside; ++k)
                inside = orient(pts_[t.v[(k + 1) % 3]], pts_[t.v[(k + 2) % 3]], p) >= 0.0;
            if (inside) return i;
        }
        throw std::runtime_error("delaunay: point location failed");
    }

    void insert(int ip) {
        const Point& p = pts_[ip];
        const int t0 = locate(p);

        // Grow the cavity of circumcircle violations around the seed.
        std::vector<int> cavity{t0};
        std::vector<char> in_cavity(tris_.size(), 0);
        in_cavity[t0] = 1;
        for (std::size_t head = 0; head < cavity.size(); ++head) {
            const Tri t = tris_[cavity[head]];
            for (int i = 0; i < 3; ++i) {
                const int nb = t.adj[i];
                if (nb < 0 || in_cavity[nb]) continue;
                if (in_circumcircle(tris_[nb], p)) {
                    in_cavity[nb] = 1;
                    cavity.push_back(nb);
                }
            }
        }

        struct BEdge {
            int a, b, outer;
        };
        std::vector<BEdge> boundary;
        for (int ct : cavity) {
            const Tri& t = tris_[ct];
            for (int i = 0; i < 3; ++i) {
                const int nb = t.adj[i];
                if (nb >= 0 && in_cavity[nb]) continue;
                boundary.push_back({t.v[(i + 1) % 3], t.v[(i + 2) % 3], nb});
            }
        }
        for (int ct : cavity) tris_[ct].alive = false;

        std::unordered_map<int, int> start_at; // new tri whose edge (p,a) starts at a
        std::vector<int> created;
        created.reserve(boundary.size());
        for (const BEdge& e : boundary) {
            tris_.push_back({{ip, e.a, e.b}, {e.outer, -1, -1}, true});
            const int id = static_cast<int>(tris_.size()) - 1;
            created.push_back(id);
            start_at[e.a] = id;
            if (e.outer >= 0) {
                Tri& o = tris_[e.outer];
                for (int i = 0; i < 3; ++i) {
                    const int oa = o.v[(i + 1) % 3], ob = o.v[(i + 2) % 3];
                    if ((oa == e.b && ob == e.a) || (oa == e.a && ob == e.b)) o.adj[i] = id;
                }
            }
        }
        for (int id : created) {
            Tri& t = tris_[id];
            t.adj[1] = start_at.at(t.v[2]); // across (b,p): triangle starting at b
        }
        // adj[2] of triangle (p,a,b) faces edge (p,a) and is the triangle with b == a.
        std::unordered_map<int, int> end_at;
        for (int id : created) end_at[tris_[id].v[2]] = id;
        for (int id : created) tris_[id].adj[2] = end_at.at(tris_[id].v[1]);

        hint_ = created.empty() ? hint_ : created.back();
    }
};

// ---------------------------------------------------------------------------
// Builder
// ---------------------------------------------------------------------------

struct PatchLayout {
    double R;           // patch radius
    int n;              // vertices per ring
    int K;              // ring count
    int first_vertex;   // rings stored ring-major starting here
};

inline void lawson_flips(Mesh& mesh, int band_begin, int sweeps = 12) {
    for (int sweep = 0; sweep < sweeps; ++sweep) {
        std::unordered_map<std::uint64_t, std::pair<int, int>> edges;
        for (int t = band_begin; t < mesh.n_triangles(); ++t) {
            const auto& tr = mesh.triangles[t];
            for (int i = 0; i < 3; ++i) {
                const auto key = edge_key(tr[i], tr[(i + 1) % 3]);
                auto it = edges.find(key);
                if (it == edges.end())
                    edges[key] = {t, -1};
                else
                    it->second.second = t;
            }
        }
        int flips = 0;
        for (const auto& [key, pr] : edges) {
            const auto [t1, t2] = pr;
            if (t2 < 0) continue;
            const int va = static_cast<int>(key >> 32);
            const int vb = static_cast<int>(key & 0xffffffffu);
            auto opposite = [&](int t) {
                for (int v : mesh.triangles[t])
                    if (v != va && v != vb) return v;
                return -1;
            };
            auto has_edge = [&](int t) {
                int hits = 0;
                for (int v : mesh.triangles[t]) hits += (v == va || v == vb);
                return hits == 2;
            };
            if (!has_edge(t1) || !has_edge(t2)) continue; // stale after an earlier flip
            const int c = opposite(t1), d = opposite(t2);
            if (c < 0 || d < 0 || c == d) continue;
            const Point &A = mesh.vertices[va], &B = mesh.vertices[vb];
            const Point &C = mesh.vertices[c], &D = mesh.vertices[d];
            if (cross(C, A, D) <= 0.0 || cross(D, B, C) <= 0.0) continue; // quad not convex
            const double before = std::min(tri_min_angle(A, B, C), tri_min_angle(A, B, D));
            const double after = std::min(tri_min_angle(C, A, D), tri_min_angle(D, B, C));
            if (after <= before + 1e-12) continue;
            mesh.triangles[t1] = {va, d, c};
            mesh.triangles[t2] = {d, vb, c};
            // restore CCW if needed
            for (int t : {t1, t2})
                if (mesh.tri_area(t) < 0.0) std::swap(mesh.triangles[t][1], mesh.triangles[t][2]);
            ++flips;
        }
        if (flips == 0) break;
    }
}

inline void smooth_band(Mesh& mesh, const std::vector<char>& movable, int sweeps = 4) {
    for (int sweep = 0; sweep < sweeps; ++sweep) {
        std::vector<Point> sum(mesh.n_vertices(), Point{0, 0});
        std::vector<int> cnt(mesh.n_vertices(), 0);
        for (const auto& tr : mesh.triangles)
            for (int i = 0; i < 3; ++i)
                for (int j = 0; j < 3; ++j)
                    if (i != j) {
                        sum[tr[i]] = sum[tr[i]] + mesh.vertices[tr[j]];
                        cnt[tr[i]] += 1;
                    }
        std::vector<std::vector<int>> incident(mesh.n_vertices());
        for (int t = 0; t < mesh.n_triangles(); ++t)
            for (int v : mesh.triangles[t]) incident[v].push_back(t);
        for (int v = 0; v < mesh.n_vertices(); ++v) {
            if (!movable[v] || cnt[v] == 0) continue;
            const Point old = mesh.vertices[v];
            mesh.vertices[v] = sum[v] / static_cast<double>(cnt[v]);
            for (int t : incident[v])
                if (mesh.tri_area(t) <= 1e-14) {
                    mesh.vertices[v] = old;
                    break;
                }
        }
    }
}

inline MeshStats validate_mesh(const Mesh& mesh) {
    MeshStats st;
    st.min_angle_deg = 180.0;
    for (int t = 0; t < mesh.n_triangles(); ++t) {
        if (!(mesh.tri_area(t) > 0.0))
            throw std::runtime_error("mesh: non-positive triangle " + std::to_string(t));
        const auto& tr = mesh.triangles[t];
        st.min_angle_deg = std::min(
            st.min_angle_deg, tri_min_angle(mesh.vertices[tr[0]], mesh.vertices[tr[1]],
                                            mesh.vertices[tr[2]]) *
                                  180.0 / pi);
    }
    std::unordered_map<std::uint64_t, int> edge_count;
    for (const auto& tr : mesh.triangles)
        for (int i = 0; i < 3; ++i) edge_count[edge_key(tr[i], tr[(i + 1) % 3])] += 1;
    std::vector<int> boundary_deg(mesh.n_vertices(), 0);
    for (const auto& [key, cnt] : edge_count) {
        if (cnt > 2) throw std::runtime_error("mesh: edge shared by more than two triangles");
        if (cnt == 1) {
            const int a = static_cast<int>(key >> 32), b = static_cast<int>(key & 0xffffffffu);
            if (mesh.tag[a] < 0 || mesh.tag[a] != mesh.tag[b])
                throw std::runtime_error("mesh: boundary edge with inconsistent tags");
            boundary_deg[a] += 1;
            boundary_deg[b] += 1;
            st.n_boundary_edges += 1;
        }
    }
    for (int v = 0; v < mesh.n_vertices(); ++v) {
        if (mesh.tag[v] >= 0 && boundary_deg[v] != 2)
            throw std::runtime_error("mesh: boundary vertex without exactly two boundary edges");
        if (mesh.tag[v] < 0 && boundary_deg[v] != 0)
            throw std::runtime_error("mesh: interior vertex on a boundary edge");
    }
    const int holes = static_cast<int>(mesh.hole_centers.size());
    st.euler_char = mesh.n_vertices() - static_cast<int>(edge_count.size()) + mesh.n_triangles();
    if (st.euler_char != 1 - holes)
        throw std::runtime_error("mesh: Euler characteristic " + std::to_string(st.euler_char) +
                                 " (expected " + std::to_string(1 - holes) + ")");
    for (int i = 0; i < holes; ++i) {
        int rim = 0;
        for (int v = 0; v < mesh.n_vertices(); ++v) rim += (mesh.tag[v] == i + 1);
        if (rim < 32) throw std::runtime_error("mesh: hole rim with fewer than 32 vertices");
    }
    if (st.min_angle_deg < 15.0)
        throw std::runtime_error("mesh: minimum angle " + std::to_string(st.min_angle_deg) +
                                 " below 15 degrees");
    return st;
}

/// Core builder shared by the pierced and unpierced entry points.
inline Mesh build_mesh(const std::vector<Point>& centers, const std::vector<double>& radii,
                       const GradingSpec& grading) {
    const int m = static_cast<int>(centers.size());
    const double h = grading.target_h_far;
    if (!(h > 0.0 && h < 0.5)) throw std::invalid_argument("mesh: target_h_far out of range");
    if (!(grading.growth > 1.0 && grading.growth <= 2.0))
        throw std::invalid_argument("mesh: growth must lie in (1, 2]");

    Mesh mesh;
    mesh.hole_centers = centers;
    mesh.hole_radii = radii;
    mesh.max_vertices = grading.max_vertices;

    // Patch layouts and budget estimate.
    std::vector<PatchLayout> patches(m);
    long long budget = 0;
    for (int i = 0; i < m; ++i) {
        double sep = std::numeric_limits<double>::infinity();
        for (int j = 0; j < m; ++j)
            if (j != i) sep = std::min(sep, dist(centers[i], centers[j]));
        const double eta = std::min(sep / 2.0, 1.0 - centers[i].norm());
        PatchLayout& P = patches[i];
        P.R = eta / 2.0;
        if (!(radii[i] > 0.0 && radii[i] < P.R / 4.0))
            throw std::runtime_error("mesh: hole " + std::to_string(i + 1) +
                                     " radius incompatible with its patch");
        if (radii[i] < 1e-12)
            throw std::runtime_error(
                "mesh: hole " + std::to_string(i + 1) + " radius " + std::to_string(radii[i]) +
                " is below the coordinate resolution; increase eps (weights close to 2 shrink "
                "the hole radius like eps^(2/(alpha-2)))");
        P.n = std::max(32, 8 * static_cast<int>(std::lround(2.0 * pi * P.R / (8.0 * h))));
        const double g = std::min(grading.growth, 1.0 + 2.0 * pi / P.n);
        P.K = grading.layers > 0
                  ? grading.layers
                  : static_cast<int>(std::ceil(std::log(P.R / radii[i]) / std::log(g)));
        P.K = std::max(P.K, 2);
        budget += static_cast<long long>(P.K + 1) * P.n;
        mesh.patch_radii.push_back(P.R);
    }
    budget += static_cast<long long>(pi / (0.866 * h * h)) + static_cast<long long>(2.0 * pi / h) + 16;
    if (budget > grading.max_vertices)
        throw std::runtime_error(
            "mesh: estimated vertex count " + std::to_string(budget) + " exceeds budget " +
            std::to_string(grading.max_vertices) + "; increase eps or coarsen target_h_far");

    // Structured annular patches, ring-major.
    for (int i = 0; i < m; ++i) {
        PatchLayout& P = patches[i];
        P.first_vertex = mesh.n_vertices();
        for (int k = 0; k <= P.K; ++k) {
            const double frac = static_cast<double>(k) / P.K;
            const double rad = radii[i] * std::pow(P.R / radii[i], frac);
            for (int q = 0; q < P.n; ++q) {
                const double th = 2.0 * pi * q / P.n;
                mesh.vertices.push_back(
                    {centers[i].x + rad * std::cos(th), centers[i].y + rad * std::sin(th)});
                mesh.tag.push_back(k == 0 ? i + 1 : -1);
            }
        }
        const int begin = mesh.n_triangles();
        for (int k = 0; k < P.K; ++k) {
            const int lo = P.first_vertex + k * P.n;
            const int hi = lo + P.n;
            for (int q = 0; q < P.n; ++q) {
                // quad in CCW order: inner_q, outer_q, outer_q1, inner_q1
                const int a = lo + q, d = lo + (q + 1) % P.n;
                const int b = hi + q, c = hi + (q + 1) % P.n;
                if ((q + k) % 2 == 0) {
                    mesh.triangles.push_back({a, b, c});
                    mesh.triangles.push_back({a, c, d});
                } else {
                    mesh.triangles.push_back({a, b, d});
                    mesh.triangles.push_back({b, c, d});
                }
            }
        }
        mesh.patch_range.emplace_back(begin, mesh.n_triangles());
    }

    // Far-field point cloud: jittered hex lattice avoiding patches and rim zones.
    std::vector<int> band_ids; // global vertex ids fed to the band triangulation
    for (int i = 0; i < m; ++i) {
        const int lo = patches[i].first_vertex + patches[i].K * patches[i].n;
        for (int q = 0; q < patches[i].n; ++q) band_ids.push_back(lo + q);
    }
    const int lattice_first = mesh.n_vertices();
    const double row = h * std::sqrt(3.0) / 2.0;
    const int J = static_cast<int>(std::ceil(1.0 / row)) + 1;
    const int I = static_cast<int>(std::ceil(1.0 / h)) + 1;
    for (int j = -J; j <= J; ++j) {
        for (int i = -I; i <= I; ++i) {
            Point p{i * h + ((j & 1) ? h / 2.0 : 0.0), j * row};
            const std::uint64_t id =
                (static_cast<std::uint64_t>(static_cast<std::uint32_t>(i + I)) << 32) |
                static_cast<std::uint32_t>(j + J);
            p.x += h * 1e-3 * (hash01(id) - 0.5);
            p.y += h * 1e-3 * (hash01(~id) - 0.5);
            if (p.norm() > 1.0 - 0.55 * h) continue;
            bool clear = true;
            for (int k = 0; k < m && clear; ++k)
                clear = dist(p, centers[k]) > patches[k].R + 0.55 * h;
            if (!clear) continue;
            band_ids.push_back(mesh.n_vertices());
            mesh.vertices.push_back(p);
            mesh.tag.push_back(-1);
        }
    }
    const int lattice_last = mesh.n_vertices();
    const int n_out = std::max(64, static_cast<int>(std::ceil(2.0 * pi / h)));
    const int outer_first = mesh.n_vertices();
    for (int q = 0; q < n_out; ++q) {
        const double th = 2.0 * pi * q / n_out;
        band_ids.push_back(mesh.n_vertices());
        mesh.vertices.push_back({std::cos(th), std::sin(th)});
        mesh.tag.push_back(0);
    }

    // Band triangulation over the interface rings, lattice, and outer circle.
    std::vector<Point> band_pts(band_ids.size());
    for (std::size_t k = 0; k < band_ids.size(); ++k) band_pts[k] = mesh.vertices[band_ids[k]];
    Delaunay dt(band_pts);
    const int band_begin = mesh.n_triangles();
    for (const auto& tr : dt.triangles()) {
        const std::array<int, 3> g{band_ids[tr[0]], band_ids[tr[1]], band_ids[tr[2]]};
        const Point c = (mesh.vertices[g[0]] + mesh.vertices[g[1]] + mesh.vertices[g[2]]) / 3.0;
        bool keep = true;
        for (int i = 0; i < m && keep; ++i) keep = dist(c, centers[i]) > patches[i].R;
        if (!keep) continue;
        std::array<int, 3> out = g;
        if (cross(mesh.vertices[out[0]], mesh.vertices[out[1]], mesh.vertices[out[2]]) < 0.0)
            std::swap(out[1], out[2]);
        mesh.triangles.push_back(out);
    }

    // Every interface ring edge and outer polygon edge must be present.
    {
        std::unordered_map<std::uint64_t, int> band_edges;
        for (int t = band_begin; t < mesh.n_triangles(); ++t)
            for (int i = 0; i < 3; ++i)
                band_edges[edge_key(mesh.triangles[t][i], mesh.triangles[t][(i + 1) % 3])] += 1;
        for (int i = 0; i < m; ++i) {
            const int lo = patches[i].first_vertex + patches[i].K * patches[i].n;
            for (int q = 0; q < patches[i].n; ++q)
                if (!band_edges.count(edge_key(lo + q, lo + (q + 1) % patches[i].n)))
                    throw std::runtime_error("mesh: band failed to recover a patch interface edge");
        }
        for (int q = 0; q < n_out; ++q)
            if (!band_edges.count(edge_key(outer_first + q, outer_first + (q + 1) % n_out)))
                throw std::runtime_error("mesh: band failed to recover an outer boundary edge");
    }

    // Only lattice vertices may move during smoothing.
    std::vector<char> movable(mesh.n_vertices(), 0);
    for (int v = lattice_first; v < lattice_last; ++v) movable[v] = 1;

    lawson_flips(mesh, band_begin);
    smooth_band(mesh, movable);
    lawson_flips(mesh, band_begin);
    validate_mesh(mesh);
    return mesh;
}

} // namespace mesh_detail

using mesh_detail::validate_mesh;

/// Pierced-disk triangulation for a configured instance.
inline Mesh triangulate(const BlowupConfig& cfg, const ScaleParams& scales,
                        const GradingSpec& grading) {
    std::vector<Point> centers(cfg.m());
    for (int i = 0; i < cfg.m(); ++i) centers[i] = cfg.holes[i].center;
    return mesh_detail::build_mesh(centers, scales.hole_radius, grading);
}

/// Raw entry point (tests and the unpierced control).
inline Mesh triangulate_raw(const std::vector<Point>& centers, const std::vector<double>& radii,
                            const GradingSpec& grading) {
    return mesh_detail::build_mesh(centers, radii, grading);
}

inline Mesh triangulate_disk(const GradingSpec& grading) {
    return mesh_detail::build_mesh({}, {}, grading);
}

/// Uniform midpoint refinement; boundary midpoints snapped back to their
/// exact circles. Children of triangle t land at indices 4t..4t+3, so the
/// per-hole patch ranges stay valid after scaling by 4.
inline Mesh refine(const Mesh& coarse) {
    Mesh fine;
    fine.hole_centers = coarse.hole_centers;
    fine.hole_radii = coarse.hole_radii;
    fine.patch_radii = coarse.patch_radii;
    fine.max_vertices = coarse.max_vertices;
    fine.vertices = coarse.vertices;
    fine.tag = coarse.tag;

    std::unordered_map<std::uint64_t, int> edge_count;
    for (const auto& tr : coarse.triangles)
        for (int i = 0; i < 3; ++i)
            edge_count[mesh_detail::edge_key(tr[i], tr[(i + 1) % 3])] += 1;

    if (coarse.n_vertices() + static_cast<int>(edge_count.size()) > coarse.max_vertices)
        throw std::runtime_error("refine: vertex budget exceeded");

    std::unordered_map<std::uint64_t, int> midpoint;
    auto mid_of = [&](int a, int b) {
        const auto key = mesh_detail::edge_key(a, b);
        auto it = midpoint.find(key);
        if (it != midpoint.end()) return it->second;
        Point p = (fine.vertices[a] + fine.vertices[b]) / 2.0;
        int tg = -1;
        if (edge_count.at(key) == 1 && fine.tag[a] == fine.tag[b] && fine.tag[a] >= 0) {
            tg = fine.tag[a];
            if (tg == 0) {
                p = p / p.norm();
            } else {
                const Point c = fine.hole_centers[tg - 1];
                const Point d = p - c;
                p = c + d * (fine.hole_radii[tg - 1] / d.norm());
            }
        }
        const int id = fine.n_vertices();
        fine.vertices.push_back(p);
        fine.tag.push_back(tg);
        midpoint[key] = id;
        return id;
    };

    for (const auto& tr : coarse.triangles) {
        const int a = tr[0], b = tr[1], c = tr[2];
        const int ab = mid_of(a, b), bc = mid_of(b, c), ca = mid_of(c, a);
        fine.triangles.push_back({a, ab, ca});
        fine.triangles.push_back({b, bc, ab});
        fine.triangles.push_back({c, ca, bc});
        fine.triangles.push_back({ab, bc, ca});
    }
    for (const auto& [lo, hi] : coarse.patch_range) fine.patch_range.emplace_back(4 * lo, 4 * hi);
    validate_mesh(fine);
    return fine;
}

/// Plain-text export: "vertices N triangles M", N lines "x y tag",
/// M lines "i j k" (0-based).
inline void write_mesh(std::ostream& os, const Mesh& mesh) {
    os << "vertices " << mesh.n_vertices() << " triangles " << mesh.n_triangles() << "\n";
    char buf[96];
    for (int v = 0; v < mesh.n_vertices(); ++v) {
        std::snprintf(buf, sizeof buf, "%.17g %.17g %d\n", mesh.vertices[v].x, mesh.vertices[v].y,
                      mesh.tag[v]);
        os << buf;
    }
    for (const auto& tr : mesh.triangles) os << tr[0] << " " << tr[1] << " " << tr[2] << "\n";
}

} // namespace mfpd
