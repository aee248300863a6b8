// Command-line front end: batch construction, solves, sweeps and the
// verification suite for the pierced-disk mean field solver.

#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "mfpd/mfpd.hpp"

namespace {

int load_config(const std::string& path, mfpd::RunConfig& rc) {
    std::ifstream in(path);
    if (!in) {
        std::cerr << "error: cannot open config file '" << path << "'\n";
        return 3;
    }
    std::stringstream ss;
    ss << in.rdbuf();
    auto parsed = mfpd::config::parse_config(ss.str());
    for (const auto& w : parsed.warnings) std::cerr << "warning: " << w << "\n";
    if (!parsed.ok()) {
        for (const auto& v : parsed.violations)
            std::cerr << "config error at " << (v.path.empty() ? "/" : v.path) << ": "
                      << v.message << "\n";
        return 3;
    }
    rc = *parsed.config;
    return 0;
}

int run_mode(const std::string& config_path, mfpd::RunMode mode, int jobs, bool dump_mesh) {
    mfpd::RunConfig rc;
    if (int rcode = load_config(config_path, rc); rcode != 0) return rcode;
    if (jobs > 0) rc.jobs = jobs;
    try {
        auto result = mfpd::runner::run(rc, mode, std::cout);
        if (dump_mesh) {
            for (const auto& row : result.rows) {
                if (!row.mesh) continue;
                char name[64];
                std::snprintf(name, sizeof name, "mesh_%.6g.txt", row.eps);
                std::ofstream os(std::filesystem::path(rc.output_dir) / name);
                mfpd::write_mesh(os, *row.mesh);
            }
        }
        return result.exit_code;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 4;
    }
}

bool parse_point(const std::string& s, mfpd::Point& p) {
    std::istringstream is(s);
    char comma = 0;
    is >> p.x >> comma >> p.y;
    return static_cast<bool>(is) && comma == ',';
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"numerical construction of blowing-up mean field solutions on the pierced disk"};
    app.require_subcommand(1);

    std::string config_path;
    int jobs = 0;
    bool dump_mesh = false;

    auto add_run = [&](const char* name, const char* desc) {
        CLI::App* sub = app.add_subcommand(name, desc);
        sub->add_option("config", config_path, "JSON run configuration")->required();
        sub->add_option("--jobs", jobs, "concurrent per-eps solves (default: physical cores)");
        return sub;
    };
    CLI::App* c_ansatz = add_run("ansatz", "construct the projected ansatz and its error term");
    c_ansatz->add_flag("--dump-mesh", dump_mesh, "export the mesh per eps");
    CLI::App* c_solve = add_run("solve", "Newton solve seeded by the ansatz");
    CLI::App* c_sweep = add_run("sweep", "solve across the eps schedule and fit rates");
    CLI::App* c_verify = add_run("verify", "closed-form identity and linear-theory diagnostics");

    std::string xs, ys;
    CLI::App* c_greens = app.add_subcommand("greens", "evaluate the disk Green function");
    c_greens->add_option("--x", xs, "evaluation point, e.g. 0.3,0.1")->required();
    c_greens->add_option("--y", ys, "source point, e.g. -0.2,0.4")->required();

    CLI11_PARSE(app, argc, argv);

    if (c_greens->parsed()) {
        mfpd::Point x, y;
        if (!parse_point(xs, x) || !parse_point(ys, y)) {
            std::cerr << "error: points must be given as a,b\n";
            return 3;
        }
        try {
            std::cout << "G(x,y) = " << mfpd::greens::green(x, y) << "\n"
                      << "H(x,y) = " << mfpd::greens::regular_part(x, y) << "\n"
                      << "robin(x) = " << mfpd::greens::robin(x) << "\n";
            return 0;
        } catch (const std::exception& e) {
            std::cerr << "error: " << e.what() << "\n";
            return 3;
        }
    }

    // MFPD_JOBS overrides --jobs (handled again inside the runner for safety)
    if (const char* env = std::getenv("MFPD_JOBS")) jobs = std::max(1, std::atoi(env));

    if (c_ansatz->parsed()) return run_mode(config_path, mfpd::RunMode::Ansatz, jobs, dump_mesh);
    if (c_solve->parsed()) return run_mode(config_path, mfpd::RunMode::Solve, jobs, false);
    if (c_sweep->parsed()) return run_mode(config_path, mfpd::RunMode::Sweep, jobs, false);
    if (c_verify->parsed()) return run_mode(config_path, mfpd::RunMode::Verify, jobs, false);
    return 0;
}
