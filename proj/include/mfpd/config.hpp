#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "mfpd/ansatz.hpp"
#include "mfpd/bubble.hpp"
#include "mfpd/expr.hpp"
#include "mfpd/mesh.hpp"
#include "mfpd/solver.hpp"

namespace mfpd {

/// A run: problem instance, eps schedule, mesh and solver options, outputs.
struct RunConfig {
    BlowupConfig blowup;
    std::string v1_src = "1", v2_src = "1";
    std::vector<double> eps_list;
    GradingSpec grading;
    SolverOptions solver;
    std::string output_dir = "out";
    bool plots = false;
    int jobs = 0; // 0 = hardware concurrency
};

struct Violation {
    std::string path;    // JSON-pointer-style
    std::string message;
};

struct ConfigParse {
    std::optional<RunConfig> config;
    std::vector<Violation> violations;
    std::vector<std::string> warnings;
    bool ok() const { return violations.empty() && config.has_value(); }
};

namespace config {

/// Deterministic sunflower sample of the open unit disk.
inline std::vector<Point> disk_samples(int n) {
    std::vector<Point> pts;
    const double golden = pi * (3.0 - std::sqrt(5.0));
    for (int k = 0; k < n; ++k) {
        const double r = 0.999 * std::sqrt((k + 0.5) / n);
        pts.push_back({r * std::cos(golden * k), r * std::sin(golden * k)});
    }
    return pts;
}

/// Parse and validate a JSON run configuration, collecting every violation
/// rather than stopping at the first.
inline ConfigParse parse_config(const std::string& text) {
    using nlohmann::json;
    ConfigParse out;
    json j;
    try {
        j = json::parse(text);
    } catch (const std::exception& e) {
        out.violations.push_back({"", std::string("invalid JSON: ") + e.what()});
        return out;
    }
    if (!j.is_object()) {
        out.violations.push_back({"", "top-level value must be an object"});
        return out;
    }
    auto bad = [&](const std::string& path, const std::string& msg) {
        out.violations.push_back({path, msg});
    };

    RunConfig rc;

    if (j.contains("domain")) {
        if (!j["domain"].is_string() || j["domain"] != "unit_disk")
            bad("/domain", "only \"unit_disk\" is supported");
    }

    // holes
    if (!j.contains("holes") || !j["holes"].is_array() || j["holes"].empty()) {
        bad("/holes", "a non-empty array of holes is required");
    } else {
        bool seen_negative = false;
        for (std::size_t i = 0; i < j["holes"].size(); ++i) {
            const std::string base = "/holes/" + std::to_string(i);
            const auto& h = j["holes"][i];
            Hole hole;
            if (!h.is_object()) {
                bad(base, "hole must be an object");
                continue;
            }
            if (!h.contains("center") || !h["center"].is_array() || h["center"].size() != 2 ||
                !h["center"][0].is_number() || !h["center"][1].is_number()) {
                bad(base + "/center", "center must be [x, y]");
            } else {
                hole.center = {h["center"][0].get<double>(), h["center"][1].get<double>()};
                if (!(hole.center.norm2() < 1.0))
                    bad(base + "/center", "center must lie strictly inside the unit disk");
            }
            if (!h.contains("alpha") || !h["alpha"].is_number()) {
                bad(base + "/alpha", "alpha must be a number");
            } else {
                hole.alpha = h["alpha"].get<double>();
                if (!(hole.alpha > 2.0)) bad(base + "/alpha", "alpha must exceed 2");
                if (Bubble::alpha_near_even(hole.alpha))
                    out.warnings.push_back(base + "/alpha: alpha within 1e-9 of an even integer; "
                                                  "the linear theory assumes alpha outside 2N");
            }
            const std::string sign = h.value("sign", "positive");
            if (sign == "positive") {
                hole.sign = HoleSign::positive;
                if (seen_negative)
                    bad(base + "/sign", "positive-sign holes must be listed before negative ones");
            } else if (sign == "negative") {
                hole.sign = HoleSign::negative;
                seen_negative = true;
            } else {
                bad(base + "/sign", "sign must be \"positive\" or \"negative\"");
            }
            rc.blowup.holes.push_back(hole);
        }
        for (std::size_t i = 0; i < rc.blowup.holes.size(); ++i)
            for (std::size_t k = i + 1; k < rc.blowup.holes.size(); ++k)
                if (dist(rc.blowup.holes[i].center, rc.blowup.holes[k].center) < 1e-12)
                    bad("/holes/" + std::to_string(k) + "/center", "coincides with hole " +
                                                                       std::to_string(i));
    }

    if (!j.contains("tau") || !j["tau"].is_number()) {
        bad("/tau", "tau must be a number");
    } else {
        rc.blowup.tau = j["tau"].get<double>();
        if (!(rc.blowup.tau > 0.0)) bad("/tau", "tau is a positive parameter");
    }

    // potentials
    for (const char* key : {"V1", "V2"}) {
        const std::string path = std::string("/") + key;
        std::string src = "1";
        if (j.contains(key)) {
            if (!j[key].is_string()) {
                bad(path, "potential must be an expression string");
                continue;
            }
            src = j[key].get<std::string>();
        }
        try {
            auto pe = expr::PotentialExpr::parse(src);
            int bad_pts = 0;
            for (const Point& p : disk_samples(1000)) {
                const double v = pe(p);
                if (!(v > 0.0) || !std::isfinite(v)) ++bad_pts;
            }
            if (bad_pts > 0)
                bad(path, "potential must be strictly positive on the closed disk (failed at " +
                              std::to_string(bad_pts) + " of 1000 sample points)");
            if (std::string(key) == "V1") {
                rc.v1_src = src;
                rc.blowup.V1 = [pe](Point p) { return pe(p); };
            } else {
                rc.v2_src = src;
                rc.blowup.V2 = [pe](Point p) { return pe(p); };
            }
        } catch (const expr::ParseError& e) {
            bad(path, std::string("parse error: ") + e.what());
        }
    }

    // eps schedule
    if (!j.contains("eps")) {
        bad("/eps", "eps (number or {start, end, points}) is required");
    } else if (j["eps"].is_number()) {
        const double e = j["eps"].get<double>();
        if (!(e > 0.0))
            bad("/eps", "eps must be positive");
        else
            rc.eps_list.push_back(e);
    } else if (j["eps"].is_object()) {
        const auto& e = j["eps"];
        const bool has = e.contains("start") && e.contains("end") && e.contains("points") &&
                         e["start"].is_number() && e["end"].is_number() &&
                         e["points"].is_number_integer();
        if (!has) {
            bad("/eps", "sweep must provide numeric start, end and integer points");
        } else {
            const double a = e["start"].get<double>(), b = e["end"].get<double>();
            const int n = e["points"].get<int>();
            if (!(a > 0.0) || !(b > 0.0))
                bad("/eps/start", "sweep endpoints must be positive");
            else if (n < 1)
                bad("/eps/points", "at least one point required");
            else
                for (int k = 0; k < n; ++k)
                    rc.eps_list.push_back(
                        n == 1 ? a
                               : std::exp(std::log(a) +
                                          (std::log(b) - std::log(a)) * k / (n - 1)));
        }
    } else {
        bad("/eps", "eps must be a number or an object");
    }

    if (j.contains("mesh")) {
        const auto& mj = j["mesh"];
        if (!mj.is_object()) {
            bad("/mesh", "mesh options must be an object");
        } else {
            rc.grading.target_h_far = mj.value("target_h_far", rc.grading.target_h_far);
            rc.grading.growth = mj.value("growth", rc.grading.growth);
            rc.grading.layers = mj.value("layers", rc.grading.layers);
            rc.grading.max_vertices = mj.value("max_vertices", rc.grading.max_vertices);
            if (!(rc.grading.target_h_far > 0.0 && rc.grading.target_h_far < 0.5))
                bad("/mesh/target_h_far", "target_h_far must lie in (0, 0.5)");
            if (!(rc.grading.growth > 1.0 && rc.grading.growth <= 2.0))
                bad("/mesh/growth", "growth must lie in (1, 2]");
            if (rc.grading.layers < 0) bad("/mesh/layers", "layers must be >= 0");
        }
    }

    if (j.contains("solver")) {
        const auto& sj = j["solver"];
        if (!sj.is_object()) {
            bad("/solver", "solver options must be an object");
        } else {
            rc.solver.newton_tol = sj.value("newton_tol", rc.solver.newton_tol);
            rc.solver.max_iter = sj.value("max_iter", rc.solver.max_iter);
            if (!(rc.solver.newton_tol > 0.0)) bad("/solver/newton_tol", "must be positive");
            if (rc.solver.max_iter < 1) bad("/solver/max_iter", "must be >= 1");
        }
    }

    rc.output_dir = j.value("output_dir", rc.output_dir);
    if (j.contains("plots")) {
        if (!j["plots"].is_boolean())
            bad("/plots", "plots must be a boolean");
        else
            rc.plots = j["plots"].get<bool>();
    }
    rc.jobs = j.value("jobs", 0);
    if (rc.jobs < 0) bad("/jobs", "jobs must be >= 0");

    if (!out.violations.empty()) return out;
    try {
        rc.blowup.validate();
    } catch (const std::exception& e) {
        bad("/holes", e.what());
        return out;
    }
    out.config = std::move(rc);
    return out;
}

} // namespace config
} // namespace mfpd
