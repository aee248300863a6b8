#pragma once

#include <atomic>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "mfpd/config.hpp"
#include "mfpd/construct.hpp"
#include "mfpd/diagnostics.hpp"
#include "mfpd/solver.hpp"
#include "mfpd/svg.hpp"

namespace mfpd {

enum class RunMode { Ansatz, Solve, Sweep, Verify };

/// One line of the sweep table. The CSV columns are the stable schema; the
/// remaining members feed report.json and the acceptance suite.
struct SweepRow {
    double eps = 0.0;
    int n_vertices = 0;
    double res_p105 = 0.0, res_p2 = 0.0;
    double phi_inf = 0.0, phi_h1 = 0.0;
    double d1_scaled = 0.0, d2_scaled = 0.0;
    std::vector<double> mass; // annulus masses scaled by eps/(2 pi alpha_i)
    double farfield_err = 0.0;
    int newton_iters = 0;
    bool converged = true;

    double gap_pui = 0.0, cor22_max = 0.0, cross_mass_max = 0.0;
    double inv_norm = 0.0, rq_pz_max = 0.0, rq_rand_med = 0.0;
    double intK1 = 0.0, intK2 = 0.0, l_const_rel = 0.0;
    double u_pos_max = 0.0, u_neg_min = 0.0;
    bool quadratic = false, used_bordered = false, eig_converged = false;
    std::vector<double> history;
    std::string error;

    std::shared_ptr<Mesh> mesh;          // retained for plotting
    std::shared_ptr<Field> u_field, pu_field;
};

struct RunResult {
    int exit_code = 0;
    std::vector<SweepRow> rows;
    nlohmann::ordered_json report;
    std::string csv_text;
};

namespace runner {

namespace detail {

inline std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

inline SweepRow compute_row(const RunConfig& rc, double eps, RunMode mode) {
    SweepRow row;
    row.eps = eps;
    const BlowupConfig& cfg = rc.blowup;
    ScaleParams scales = ansatz::make_scales(cfg, eps);
    auto mesh = std::make_shared<Mesh>(triangulate(cfg, scales, rc.grading));
    row.mesh = mesh;
    row.n_vertices = mesh->n_vertices();
    Assembly as = fem::assemble(*mesh);
    fem::PoissonSolver poisson(as);

    AnsatzBundle bundle = construct::assemble_ansatz(poisson, cfg, scales);
    row.pu_field = std::make_shared<Field>(bundle.pu);
    Field R = construct::residual_field(bundle, cfg, scales);
    row.res_p105 = fem::lp_norm(R, 1.05);
    row.res_p2 = fem::lp_norm(R, 2.0);
    row.d1_scaled = bundle.d1_scaled;
    row.d2_scaled = bundle.d2_scaled;
    row.mass = bundle.mass_scaled;
    for (double g : bundle.gap_pui) row.gap_pui = std::max(row.gap_pui, g);
    for (double g : bundle.cor22_err) row.cor22_max = std::max(row.cor22_max, g);
    for (double g : bundle.cross_mass) row.cross_mass_max = std::max(row.cross_mass_max, g);
    row.farfield_err = construct::farfield_error(bundle, bundle.psi_sum, cfg);

    if (mode == RunMode::Solve || mode == RunMode::Sweep) {
        auto [u, rep] = solver::newton_solve(poisson, bundle, cfg, scales, rc.solver);
        row.u_field = std::make_shared<Field>(u);
        row.converged = rep.converged;
        row.newton_iters = rep.iters;
        row.history = rep.history;
        row.quadratic = rep.quadratic_observed;
        row.used_bordered = rep.used_bordered_solve;
        row.phi_inf = rep.phi_inf;
        row.phi_h1 = rep.phi_h1;
        // interpolated part of u on top of the exact bubble + expansion sum
        Eigen::VectorXd smooth = u.values - bundle.pu.values + bundle.psi_sum.values;
        row.farfield_err = construct::farfield_error(bundle, Field(*mesh, smooth), cfg);
        auto u_at = [&](int t, const Point& x, double l0, double l1, double l2) {
            const auto& tr = mesh->triangles[t];
            return bundle.bubble_part(x) + bundle.smooth_part(x) + l0 * smooth[tr[0]] +
                   l1 * smooth[tr[1]] + l2 * smooth[tr[2]];
        };
        auto f1 = [&](int t, const Point& x, double l0, double l1, double l2) {
            return cfg.V1(x) * std::exp(u_at(t, x, l0, l1, l2));
        };
        auto f2 = [&](int t, const Point& x, double l0, double l1, double l2) {
            return cfg.V2(x) * std::exp(-cfg.tau * u_at(t, x, l0, l1, l2));
        };
        const double D1 = fem::integrate_over(*mesh, f1);
        const double D2 = fem::integrate_over(*mesh, f2);
        row.d1_scaled = D1 * 2.0 * eps / scales.lambda1;
        row.d2_scaled = D2 * 2.0 * eps / (scales.lambda2 * cfg.tau * cfg.tau);
        for (int i = 0; i < cfg.m(); ++i) {
            const double ai = cfg.holes[i].alpha;
            row.mass[i] = (i < cfg.m1() ? construct::integrate_patch(*mesh, i, f1)
                                        : construct::integrate_patch(*mesh, i, f2)) *
                          eps / (2.0 * pi * ai);
        }
        row.u_pos_max = -1e300;
        row.u_neg_min = 1e300;
        for (int v = 0; v < mesh->n_vertices(); ++v)
            for (int i = 0; i < cfg.m(); ++i) {
                if (dist(mesh->vertices[v], cfg.holes[i].center) > mesh->patch_radii[i]) continue;
                if (i < cfg.m1())
                    row.u_pos_max = std::max(row.u_pos_max, u.values[v]);
                else
                    row.u_neg_min = std::min(row.u_neg_min, u.values[v]);
            }
    }

    if (mode == RunMode::Sweep || mode == RunMode::Verify) {
        NearKernelReport nk = diag::near_kernel_study(poisson, cfg, scales);
        row.inv_norm = nk.inv_norm;
        row.eig_converged = nk.eig_converged;
        for (double q : nk.rq_proj_kernel) row.rq_pz_max = std::max(row.rq_pz_max, q);
        std::vector<double> rq = nk.rq_random;
        std::sort(rq.begin(), rq.end());
        row.rq_rand_med = rq.empty() ? 0.0 : rq[rq.size() / 2];
        row.intK1 = nk.intK1;
        row.intK2 = nk.intK2;
        row.l_const_rel = nk.l_const_rel;
    }
    return row;
}

inline std::string make_csv(const RunConfig& rc, const std::vector<SweepRow>& rows) {
    std::string csv = "eps,n_vertices,res_L1.05,res_L2,phi_inf,phi_h1,D1_scaled,D2_scaled";
    for (int i = 0; i < rc.blowup.m(); ++i) csv += ",mass_" + std::to_string(i + 1);
    csv += ",farfield_err,newton_iters,converged\n";
    for (const auto& r : rows) {
        csv += fmt(r.eps) + "," + std::to_string(r.n_vertices) + "," + fmt(r.res_p105) + "," +
               fmt(r.res_p2) + "," + fmt(r.phi_inf) + "," + fmt(r.phi_h1) + "," +
               fmt(r.d1_scaled) + "," + fmt(r.d2_scaled);
        for (int i = 0; i < rc.blowup.m(); ++i)
            csv += "," + (i < static_cast<int>(r.mass.size()) ? fmt(r.mass[i]) : "nan");
        csv += "," + fmt(r.farfield_err) + "," + std::to_string(r.newton_iters) + "," +
               (r.converged ? "1" : "0") + "\n";
    }
    return csv;
}

inline nlohmann::ordered_json row_json(const SweepRow& r) {
    nlohmann::ordered_json j;
    j["eps"] = r.eps;
    j["n_vertices"] = r.n_vertices;
    j["res_L1.05"] = r.res_p105;
    j["res_L2"] = r.res_p2;
    j["phi_inf"] = r.phi_inf;
    j["phi_h1"] = r.phi_h1;
    j["D1_scaled"] = r.d1_scaled;
    j["D2_scaled"] = r.d2_scaled;
    j["mass"] = r.mass;
    j["farfield_err"] = r.farfield_err;
    j["newton_iters"] = r.newton_iters;
    j["converged"] = r.converged;
    j["gap_pui"] = r.gap_pui;
    j["cor22_max"] = r.cor22_max;
    j["cross_mass_max"] = r.cross_mass_max;
    j["inv_norm"] = r.inv_norm;
    j["rq_proj_kernel_max"] = r.rq_pz_max;
    j["rq_random_median"] = r.rq_rand_med;
    j["intK1"] = r.intK1;
    j["intK2"] = r.intK2;
    j["l_const_rel"] = r.l_const_rel;
    j["u_pos_max"] = r.u_pos_max;
    j["u_neg_min"] = r.u_neg_min;
    j["quadratic_observed"] = r.quadratic;
    j["used_bordered_solve"] = r.used_bordered;
    j["newton_history"] = r.history;
    if (!r.error.empty()) j["error"] = r.error;
    return j;
}

inline void add_fit(nlohmann::ordered_json& fits, const std::string& name,
                    const std::vector<std::pair<double, double>>& pairs) {
    try {
        RateFit f = diag::fit_rate(name, pairs);
        fits[name] = {{"slope", f.slope}, {"r2", f.r2}, {"points", f.pairs.size()}};
    } catch (const std::exception& e) {
        fits[name] = {{"error", e.what()}};
    }
}

inline void write_plots(const RunConfig& rc, const std::vector<SweepRow>& rows,
                        const std::filesystem::path& dir, RunMode mode) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    auto collect = [&](auto get) {
        svg::Series s;
        for (const auto& r : rows)
            if (r.error.empty()) s.pts.emplace_back(r.eps, get(r));
        return s;
    };
    {
        auto s1 = collect([](const SweepRow& r) { return r.res_p105; });
        auto s2 = collect([](const SweepRow& r) { return r.res_p2; });
        s1.label = "||R||_1.05";
        s2.label = "||R||_2";
        svg::write_line_plot((dir / "residual_rates.svg").string(), "residual decay", "eps",
                             "norm", {s1, s2}, true, true);
    }
    if (mode != RunMode::Ansatz) {
        auto s1 = collect([](const SweepRow& r) { return r.phi_inf; });
        auto s2 = collect([](const SweepRow& r) { return r.phi_h1; });
        s1.label = "|phi|_inf";
        s2.label = "|phi|_H1";
        svg::write_line_plot((dir / "phi_decay.svg").string(), "remainder decay", "eps", "norm",
                             {s1, s2}, true, true);
    }

    // cross-section and far-field comparison at the smallest eps
    const SweepRow* best = nullptr;
    for (const auto& r : rows)
        if (r.error.empty() && r.mesh && (!best || r.eps < best->eps)) best = &r;
    if (!best) return;
    const Field* u = best->u_field ? best->u_field.get() : best->pu_field.get();
    if (!u) return;

    {
        const BlowupConfig& cfg = rc.blowup;
        Point c = cfg.holes[0].center, d{1.0, 0.0};
        if (cfg.m() > 1) {
            d = cfg.holes[1].center - cfg.holes[0].center;
            c = (cfg.holes[0].center + cfg.holes[1].center) / 2.0;
            d = d / d.norm();
        }
        svg::Series s;
        s.label = "u";
        for (int k = 0; k <= 600; ++k) {
            const double t = -1.2 + 2.4 * k / 600.0;
            const Point p = c + t * d;
            if (p.norm2() >= 1.0) continue;
            try {
                s.pts.emplace_back(t, fem::eval_at(*u, p));
            } catch (const std::exception&) {
            }
        }
        svg::write_line_plot((dir / "cross_section.svg").string(),
                             "solution through the hole centers, eps=" + detail::fmt(best->eps),
                             "t", "u", {s}, false, false);
    }
    {
        svg::Series su, sg;
        su.label = "u(probe)";
        sg.label = "Green superposition";
        for (int q = 0; q < 64; ++q) {
            const double th = 2.0 * pi * q / 64;
            const Point p{0.85 * std::cos(th), 0.85 * std::sin(th)};
            try {
                su.pts.emplace_back(th, fem::eval_at(*u, p));
                sg.pts.emplace_back(th, construct::green_superposition(rc.blowup, p));
            } catch (const std::exception&) {
            }
        }
        svg::write_line_plot((dir / "farfield.svg").string(), "far-field law on |x|=0.85",
                             "angle", "u", {su, sg}, false, false);
    }
}

} // namespace detail

/// Execute a run: per-eps pipeline (concurrently), results.csv + report.json
/// (+ SVG plots), exit code 0 = clean, 2 = partial failures.
inline RunResult run(const RunConfig& rc, RunMode mode, std::ostream& log) {
    namespace fs = std::filesystem;
    RunResult result;
    const int n = static_cast<int>(rc.eps_list.size());
    result.rows.resize(n);

    int jobs = rc.jobs > 0 ? rc.jobs : static_cast<int>(std::thread::hardware_concurrency());
    if (const char* env = std::getenv("MFPD_JOBS")) jobs = std::max(1, std::atoi(env));
    jobs = std::max(1, std::min(jobs, n));

    std::atomic<int> next{0};
    auto worker = [&]() {
        while (true) {
            const int i = next.fetch_add(1);
            if (i >= n) return;
            try {
                result.rows[i] = detail::compute_row(rc, rc.eps_list[i], mode);
            } catch (const std::exception& e) {
                result.rows[i].eps = rc.eps_list[i];
                result.rows[i].converged = false;
                result.rows[i].error = e.what();
            }
        }
    };
    std::vector<std::thread> pool;
    for (int t = 0; t < jobs; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();

    for (const auto& r : result.rows) {
        if (!r.error.empty())
            log << "eps=" << detail::fmt(r.eps) << "  FAILED: " << r.error << "\n";
        else
            log << "eps=" << detail::fmt(r.eps) << "  vertices=" << r.n_vertices
                << "  res_L1.05=" << detail::fmt(r.res_p105)
                << (mode == RunMode::Ansatz || mode == RunMode::Verify
                        ? ""
                        : "  phi_inf=" + detail::fmt(r.phi_inf) + "  iters=" +
                              std::to_string(r.newton_iters) +
                              (r.converged ? "" : "  NOT CONVERGED"))
                << "\n";
    }

    nlohmann::ordered_json report;
    {
        nlohmann::ordered_json cj;
        nlohmann::ordered_json holes = nlohmann::ordered_json::array();
        for (const auto& h : rc.blowup.holes)
            holes.push_back({{"center", {h.center.x, h.center.y}},
                             {"alpha", h.alpha},
                             {"sign", h.sign == HoleSign::positive ? "positive" : "negative"}});
        cj["holes"] = holes;
        cj["tau"] = rc.blowup.tau;
        cj["V1"] = rc.v1_src;
        cj["V2"] = rc.v2_src;
        cj["eps"] = rc.eps_list;
        cj["mesh"] = {{"target_h_far", rc.grading.target_h_far},
                      {"growth", rc.grading.growth},
                      {"layers", rc.grading.layers}};
        cj["solver"] = {{"newton_tol", rc.solver.newton_tol},
                        {"max_iter", rc.solver.max_iter}};
        report["config"] = cj;
    }
    report["mode"] = mode == RunMode::Ansatz   ? "ansatz"
                     : mode == RunMode::Solve  ? "solve"
                     : mode == RunMode::Sweep  ? "sweep"
                                               : "verify";
    report["rows"] = nlohmann::ordered_json::array();
    for (const auto& r : result.rows) report["rows"].push_back(detail::row_json(r));

    // log-log rate fits across the sweep
    std::vector<const SweepRow*> ok;
    for (const auto& r : result.rows)
        if (r.error.empty()) ok.push_back(&r);
    if (ok.size() >= 4) {
        nlohmann::ordered_json fits;
        auto pairs = [&](auto get) {
            std::vector<std::pair<double, double>> p;
            for (const auto* r : ok) p.emplace_back(r->eps, get(*r));
            return p;
        };
        detail::add_fit(fits, "res_L1.05", pairs([](const SweepRow& r) { return r.res_p105; }));
        detail::add_fit(fits, "res_L2", pairs([](const SweepRow& r) { return r.res_p2; }));
        detail::add_fit(fits, "gap_pui", pairs([](const SweepRow& r) { return r.gap_pui; }));
        detail::add_fit(fits, "farfield_err",
                        pairs([](const SweepRow& r) { return r.farfield_err; }));
        detail::add_fit(fits, "d1_gap",
                        pairs([](const SweepRow& r) { return std::abs(r.d1_scaled - 1.0); }));
        detail::add_fit(fits, "d2_gap",
                        pairs([](const SweepRow& r) { return std::abs(r.d2_scaled - 1.0); }));
        if (mode == RunMode::Solve || mode == RunMode::Sweep) {
            detail::add_fit(fits, "phi_inf_over_logeps", pairs([](const SweepRow& r) {
                                return r.phi_inf / std::abs(std::log(r.eps));
                            }));
            detail::add_fit(fits, "phi_h1", pairs([](const SweepRow& r) { return r.phi_h1; }));
        }
        if (mode == RunMode::Sweep || mode == RunMode::Verify) {
            // growth of the inverse norm against |log eps|
            std::vector<std::pair<double, double>> p;
            for (const auto* r : ok) p.emplace_back(std::abs(std::log(r->eps)), r->inv_norm);
            detail::add_fit(fits, "inv_norm_vs_logeps", p);
        }
        report["fits"] = fits;
    }

    if (mode == RunMode::Verify) {
        nlohmann::ordered_json vj;
        bool all_ok = true;
        // closed-form radial identities for the configured weights
        nlohmann::ordered_json idj = nlohmann::ordered_json::array();
        for (const auto& h : rc.blowup.holes) {
            const double a = h.alpha;
            const auto got = bubble::radial_identities(a);
            const std::array<double, 6> want{2.0 * pi / a, 4.0 * pi / 3.0 * a, -4.0 * pi,
                                             -2.0 * pi * a, 2.0 * pi * a, 0.0};
            double worst = 0.0;
            for (int k = 0; k < 6; ++k)
                worst = std::max(worst, std::abs(got[k] - want[k]) /
                                            std::max(1.0, std::abs(want[k])));
            idj.push_back({{"alpha", a}, {"max_rel_err", worst}});
            all_ok = all_ok && worst <= 1e-8;
        }
        vj["radial_identities"] = idj;
        // balance exactness at every eps
        double worst_balance = 0.0;
        for (double eps : rc.eps_list) {
            ScaleParams s = ansatz::make_scales(rc.blowup, eps);
            const auto bal = ansatz::check_balance(rc.blowup, s, s.beta);
            for (int i = 0; i < rc.blowup.m(); ++i)
                worst_balance = std::max(
                    worst_balance,
                    std::abs(bal[i] - 2.0 * pi * (rc.blowup.holes[i].alpha - 2.0)));
        }
        vj["balance_max_abs_err"] = worst_balance;
        all_ok = all_ok && worst_balance <= 1e-9;
        // gamma systems at the smallest eps
        {
            ScaleParams s = ansatz::make_scales(rc.blowup,
                                                *std::min_element(rc.eps_list.begin(),
                                                                  rc.eps_list.end()));
            GammaSystems gs = diag::solve_gammas(rc.blowup, s);
            nlohmann::ordered_json gj;
            gj["gamma_star"] = gs.gamma_star;
            for (int i = 0; i < rc.blowup.m(); ++i) {
                gj["gamma_diag"].push_back(gs.gamma(i, i));
                gj["gamma_tilde_diag"].push_back(gs.gamma_tilde(i, i));
            }
            vj["gamma"] = gj;
        }
        vj["pass"] = all_ok;
        report["verify"] = vj;
        if (!all_ok) result.exit_code = 2;
    }

    result.csv_text = detail::make_csv(rc, result.rows);
    fs::create_directories(rc.output_dir);
    {
        std::ofstream csv(fs::path(rc.output_dir) / "results.csv", std::ios::binary);
        csv << result.csv_text;
    }
    {
        std::ofstream rj(fs::path(rc.output_dir) / "report.json", std::ios::binary);
        rj << report.dump(2) << "\n";
    }
    if (rc.plots && mode != RunMode::Verify)
        detail::write_plots(rc, result.rows, fs::path(rc.output_dir) / "plots", mode);

    for (const auto& r : result.rows)
        if (!r.error.empty() || ((mode == RunMode::Solve || mode == RunMode::Sweep) && !r.converged))
            result.exit_code = std::max(result.exit_code, 2);
    result.report = std::move(report);
    return result;
}

} // namespace runner
} // namespace mfpd
