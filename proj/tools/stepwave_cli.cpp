// Command-line driver: solve runs, absorber sweeps, the diagnostic suite,
// and field export over key=value run configs.
//
// Exit codes: 0 success, 2 config error, 3 solver error, 4 diagnostic
// failure, 1 anything else (I/O and the like).  STEPWAVE_THREADS caps the
// solver pool used by sweeps; there is no flag for it.

#include <CLI11.hpp>

#include <cstdarg>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "stepwave/runner.hpp"

using namespace stepwave;
namespace fs = std::filesystem;

namespace {

std::string read_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw ConfigError("cannot read config file '" + path + "'");
    std::ostringstream s;
    s << f.rdbuf();
    return s.str();
}

RunConfig load_config(const std::string& path, const std::vector<std::string>& sets) {
    RunConfig c = parse_config(read_file(path), sets);
    c.validate();
    return c;
}

Incidence parse_incidence_arg(const std::string& text) {
    RunConfig t;
    detail::apply_key(t, "incidence", text);
    return t.incidence;
}

int cmd_solve(const RunConfig& c, const std::string& outdir) {
    RunArtifacts art = run_solve(c, outdir);
    for (const auto& name : art.files) std::printf("wrote %s/%s\n", art.dir.c_str(), name.c_str());
    std::printf("system %d, matching residual %.3e, condition ~%.1e, surface trace %.3e\n",
                art.system_size, art.matching_residual, art.condition_estimate,
                art.surface_trace);
    return 0;
}

int cmd_sweep(const RunConfig& c, const std::string& outdir,
              const std::vector<std::string>& also) {
    std::vector<Incidence> incs{c.incidence};
    for (const auto& text : also) incs.push_back(parse_incidence_arg(text));
    if (c.sweep_thickness.empty() && c.sweep_sigma.empty())
        throw ConfigError("sweep-pml: config has neither sweep.thickness nor sweep.sigma");
    fs::create_directories(outdir);

    for (SweepKind kind : {SweepKind::Thickness, SweepKind::Sigma}) {
        const auto& values = kind == SweepKind::Thickness ? c.sweep_thickness : c.sweep_sigma;
        if (values.empty()) continue;
        SweepTable t = run_pml_sweep(c, kind, incs);
        std::string file = (fs::path(outdir) / ("sweep_" + t.parameter + ".csv")).string();
        write_sweep_file(t, file);
        std::printf("wrote %s\n", file.c_str());
        for (const auto& curve : t.curves) {
            std::printf("  %s vs %s:", curve.label.c_str(), t.parameter.c_str());
            for (size_t j = 0; j < t.values.size(); ++j)
                std::printf(" %g->%.3e", t.values[j], curve.errors[j]);
            std::printf("\n");
            try {
                CurveFit fit = fit_error_curve(t.values, curve.errors);
                std::printf("  fit over %d points: slope %.3f, R^2 %.3f\n", fit.used, fit.slope,
                            fit.r2);
            } catch (const DiagnosticError& e) {
                std::printf("  fit skipped: %s\n", e.what());
            }
        }
    }
    return 0;
}

int cmd_export(const RunConfig& c, const std::string& outfile, bool scattered) {
    if (!c.window.enabled())
        throw ConfigError("export: config needs a positive export.resolution");
    Solution sol = solve_problem(c.problem());
    FieldGrid g = sample_grid(sol, c.window.x1_lo, c.window.x1_hi, c.window.n1, c.window.x2_lo,
                              c.window.x2_hi, c.window.n2, !scattered);
    if (!fs::path(outfile).parent_path().empty())
        fs::create_directories(fs::path(outfile).parent_path());
    write_field_file(c, g, outfile);
    fs::path helper = fs::path(outfile).parent_path() / "plot_field.py";
    write_plot_helper(helper.string());
    std::printf("wrote %s\nwrote %s\n", outfile.c_str(), helper.string().c_str());
    return 0;
}

struct CheckLog {
    std::string text;
    bool all_pass = true;

    void add(bool pass, const char* name, const char* fmt, ...) {
        char buf[256];
        va_list ap;
        va_start(ap, fmt);
        std::vsnprintf(buf, sizeof buf, fmt, ap);
        va_end(ap);
        char line[320];
        std::snprintf(line, sizeof line, "%s %s: %s\n", pass ? "PASS" : "FAIL", name, buf);
        text += line;
        std::fputs(line, stdout);
        if (!pass) all_pass = false;
    }
};

int cmd_verify(const RunConfig& c, const std::string& outdir) {
    Solution sol = solve_problem(c.problem());
    CheckLog log;

    double lo = c.window.enabled() ? c.window.x1_lo : -2.5;
    double hi = c.window.enabled() ? c.window.x1_hi : 2.5;
    double trace = surface_residual(sol, lo, hi);
    log.add(trace <= 1e-3, "surface-trace", "max |u| on the surface %.3e (want <= 1e-3)", trace);

    // interior probes for the difference-quotient check: config probes may
    // sit on interfaces, so generate points and nudge them off breakpoints
    double gmax = *std::max_element(c.surface.ground_heights.begin(),
                                    c.surface.ground_heights.end());
    double step = 2e-2 / c.k() * 2.0 * pi;
    std::vector<Point> probes;
    {
        double x2 = gmax + 0.61803 * (c.pml.entrance - gmax);
        for (int i = 0; i < 5; ++i) {
            double x1 = lo + (hi - lo) * (i + 0.5) / 5.0;
            for (double b : c.surface.breakpoints)
                if (std::abs(x1 - b) < 0.15) x1 = b + (x1 >= b ? 0.15 : -0.15);
            probes.push_back({x1, x2});
        }
    }
    try {
        double r1 = helmholtz_fd_residual(sol, probes, step);
        double r2 = helmholtz_fd_residual(sol, probes, step / 2.0);
        double ratio = r1 / r2;
        log.add(ratio >= 2.5, "helmholtz-order", "residual ratio %.2f under halving (want >= 2.5)",
                ratio);
    } catch (const DiagnosticError& e) {
        log.add(false, "helmholtz-order", "%s", e.what());
    }

    if (std::holds_alternative<PlaneWave>(c.incidence)) {
        try {
            auto frame = detail::sector_frame(sol);
            if (frame.h == 0.0)
                throw ConfigError("the surface is flat, the outgoing remainder is zero");
            try {
                JumpReport jr = jump_identity_check(sol);
                log.add(jr.value_rel <= 1e-3 && jr.deriv_rel <= 1e-2, "sector-jumps",
                        "value %.3e (<= 1e-3), normal derivative %.3e (<= 1e-2)", jr.value_rel,
                        jr.deriv_rel);
            } catch (const ConfigError& e) {
                std::printf("skip sector-jumps: %s\n", e.what());
            } catch (const DiagnosticError& e) {
                log.add(false, "sector-jumps", "%s", e.what());
            }
            double rmax = 0.95 * (c.pml.entrance - 10.0 * 1e-4 * 2.0 * pi / c.k() -
                                  frame.anchor.x2) /
                          std::sin(frame.theta);
            double ct = std::cos(frame.theta);
            double rlo = std::max(1.2 * frame.h / (ct * ct), rmax / 4.0);
            if (!(rlo < rmax))
                throw ConfigError("the strip is too shallow for expanding arcs");
            auto arcs = radiation_arc_integrals(sol, frame.theta, frame.h,
                                                {rlo, std::sqrt(rlo * rmax), rmax});
            bool decaying = arcs.first[1] < arcs.first[0] && arcs.first[2] < arcs.first[1];
            log.add(decaying, "radiation-arcs", "first integral %.3e -> %.3e -> %.3e",
                    arcs.first[0], arcs.first[1], arcs.first[2]);
        } catch (const ConfigError& e) {
            std::printf("skip sector diagnostics: %s\n", e.what());
        } catch (const DiagnosticError& e) {
            log.add(false, "radiation-arcs", "%s", e.what());
        }
    } else {
        try {
            double a = gmax + 0.5 * (c.pml.entrance - gmax);
            Point z = std::get<PointSource>(c.incidence).z;
            double x2 = a + 0.6 * (c.pml.entrance - a);
            double dev = asr_check(sol, a, {{z.x1 - 1.0, x2}, {z.x1, x2}, {z.x1 + 1.0, x2}});
            log.add(dev <= 5e-2, "angular-spectrum", "deviation %.3e (want <= 5e-2)", dev);
        } catch (const DiagnosticError& e) {
            log.add(false, "angular-spectrum", "%s", e.what());
        }
    }

    fs::create_directories(outdir);
    std::ofstream f(fs::path(outdir) / "verify.txt", std::ios::binary);
    f << log.text;
    return log.all_pass ? 0 : 4;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"stepped sound-soft surface scattering via vertical mode matching"};
    app.require_subcommand(1);

    std::string cfg, outdir = "out", outfile = "field.csv";
    std::vector<std::string> sets, also;
    bool scattered = false;

    auto add_common = [&](CLI::App* s) {
        s->add_option("-c,--config", cfg, "key=value config file")->required();
        s->add_option("--set", sets, "override a config key, e.g. --set pml.sigma=40");
    };
    CLI::App* solve = app.add_subcommand("solve", "solve and write run artifacts");
    add_common(solve);
    solve->add_option("-o,--out", outdir, "output directory");
    CLI::App* sweep = app.add_subcommand("sweep-pml", "absorber convergence sweeps");
    add_common(sweep);
    sweep->add_option("-o,--out", outdir, "output directory");
    sweep->add_option("--also", also, "extra incidence curve, e.g. --also 'point 0.2 0.2'");
    CLI::App* verify = app.add_subcommand("verify", "run the diagnostic suite");
    add_common(verify);
    verify->add_option("-o,--out", outdir, "output directory");
    CLI::App* exp = app.add_subcommand("export", "solve and export the field window");
    add_common(exp);
    exp->add_option("-o,--out", outfile, "output file");
    exp->add_flag("--scattered", scattered, "export the scattered part instead of the total");

    CLI11_PARSE(app, argc, argv);

    try {
        RunConfig c = load_config(cfg, sets);
        if (solve->parsed()) return cmd_solve(c, outdir);
        if (sweep->parsed()) return cmd_sweep(c, outdir, also);
        if (verify->parsed()) return cmd_verify(c, outdir);
        return cmd_export(c, outfile, scattered);
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const SolverError& e) {
        std::fprintf(stderr, "solver error: %s\n", e.what());
        return 3;
    } catch (const DiagnosticError& e) {
        std::fprintf(stderr, "diagnostic error: %s\n", e.what());
        return 4;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
}
