#pragma once

// Run orchestration: deterministic solve artifacts, PML error sweeps over
// thickness or absorption strength, and the byte-stable field-file format.
//
// Everything written here except run.log is a pure function of the config
// (fixed build), so re-running a config reproduces the artifacts bitwise;
// timings live in run.log only.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "stepwave/config.hpp"
#include "stepwave/evaluate.hpp"
#include "stepwave/verify.hpp"

namespace stepwave {

inline constexpr const char* version_string = "0.1.0";

namespace detail {

inline uint64_t fnv1a(const std::string& s) {
    uint64_t h = 1469598103934665603ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

inline std::string geometry_hash(const RunConfig& c) {
    std::string t = num_list(c.surface.breakpoints);
    t += '|';
    t += num_list(c.surface.ground_heights);
    for (const auto& q : c.inclusions)
        t += '|' + num_list({q.x1_lo, q.x1_hi, q.x2_lo, q.x2_hi, q.n});
    char buf[24];
    std::snprintf(buf, sizeof buf, "%016llx", (unsigned long long)fnv1a(t));
    return buf;
}

inline std::string incidence_text(const Incidence& inc) {
    if (const auto* pw = std::get_if<PlaneWave>(&inc)) return "plane " + num(pw->theta);
    const Point z = std::get<PointSource>(inc).z;
    return "point " + num(z.x1) + ' ' + num(z.x2);
}

inline std::ofstream open_out(const std::string& path) {
    std::ofstream f(path, std::ios::binary);  // binary keeps \n endings stable
    if (!f) throw std::runtime_error("cannot write " + path);
    return f;
}

}  // namespace detail

inline void write_field_file(const RunConfig& c, const FieldGrid& g, const std::string& path) {
    auto f = detail::open_out(path);
    char buf[160];
    f << "# stepwave field " << version_string << '\n';
    f << "# k = " << detail::num(c.k()) << '\n';
    f << "# incidence = " << detail::incidence_text(c.incidence) << '\n';
    f << "# rect = " << detail::num(g.x1.front()) << ' ' << detail::num(g.x1.back()) << ' '
      << detail::num(g.x2.front()) << ' ' << detail::num(g.x2.back()) << '\n';
    f << "# resolution = " << g.x1.size() << ' ' << g.x2.size() << '\n';
    f << "# geometry = " << detail::geometry_hash(c) << '\n';
    f << "x1,x2,re,im,mask\n";
    for (size_t i2 = 0; i2 < g.x2.size(); ++i2)
        for (size_t i1 = 0; i1 < g.x1.size(); ++i1) {
            size_t at = i2 * g.x1.size() + i1;
            std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%d\n", g.x1[i1], g.x2[i2],
                          g.values[at].real(), g.values[at].imag(), int(g.mask[at]));
            f << buf;
        }
    if (!f) throw std::runtime_error("write failed on " + path);
}

inline void write_plot_helper(const std::string& path) {
    auto f = detail::open_out(path);
    f << R"PY(#!/usr/bin/env python3
"""Render a stepwave field export: python3 plot_field.py FIELD.csv [OUT.png]"""
import sys

import numpy as np
import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

src = sys.argv[1]
out = sys.argv[2] if len(sys.argv) > 2 else src.rsplit(".", 1)[0] + ".png"

meta = {}
rows = []
with open(src) as f:
    for line in f:
        line = line.strip()
        if line.startswith("#"):
            if "=" in line:
                key, _, val = line.lstrip("# ").partition("=")
                meta[key.strip()] = val.strip()
        elif line and not line.startswith("x1"):
            rows.append([float(t) for t in line.split(",")])

n1, n2 = (int(t) for t in meta["resolution"].split())
data = np.asarray(rows)
x1 = data[:n1, 0]
x2 = data[::n1, 1]
field = (data[:, 2] + 1j * data[:, 3]).reshape(n2, n1)
mask = data[:, 4].reshape(n2, n1) > 0

mag = np.ma.masked_array(np.abs(field), mask)
fig, ax = plt.subplots(figsize=(9, 4))
pc = ax.pcolormesh(x1, x2, mag, shading="nearest", cmap="viridis")
pc.cmap.set_bad("0.35")
fig.colorbar(pc, ax=ax, label="|u|")
ax.set_xlabel("x1")
ax.set_ylabel("x2")
ax.set_title(f"k = {meta.get('k', '?')}, incidence = {meta.get('incidence', '?')}")
fig.tight_layout()
fig.savefig(out, dpi=160)
print(out)
)PY";
}

struct RunArtifacts {
    std::string dir;
    std::vector<std::string> files;  // relative names, deterministic order
    double matching_residual = 0.0;
    double condition_estimate = 1.0;
    int system_size = 0;
    double surface_trace = 0.0;
    double solve_seconds = 0.0;
};

inline RunArtifacts run_solve(const RunConfig& c, const std::string& outdir) {
    c.validate();
    namespace fs = std::filesystem;
    fs::create_directories(outdir);
    auto path = [&](const char* name) { return (fs::path(outdir) / name).string(); };

    RunArtifacts art;
    art.dir = outdir;

    auto t0 = std::chrono::steady_clock::now();
    Solution sol = solve_problem(c.problem());
    art.solve_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    art.matching_residual = sol.matching_residual;
    art.condition_estimate = sol.condition_estimate;
    art.system_size = sol.system_size;

    double trace_lo = c.window.enabled() ? c.window.x1_lo : -2.5;
    double trace_hi = c.window.enabled() ? c.window.x1_hi : 2.5;
    art.surface_trace = surface_residual(sol, trace_lo, trace_hi);

    {
        auto f = detail::open_out(path("metadata.txt"));
        f << "stepwave " << version_string << '\n';
        f << "geometry = " << detail::geometry_hash(c) << '\n';
        f << serialize_config(c);
        art.files.push_back("metadata.txt");
    }
    {
        auto f = detail::open_out(path("residuals.txt"));
        f << "matching_residual = " << detail::num(art.matching_residual) << '\n';
        f << "condition_estimate = " << detail::num(art.condition_estimate) << '\n';
        f << "system_size = " << art.system_size << '\n';
        f << "surface_trace = " << detail::num(art.surface_trace) << '\n';
        art.files.push_back("residuals.txt");
    }
    if (c.window.enabled()) {
        auto gt = sample_grid(sol, c.window.x1_lo, c.window.x1_hi, c.window.n1, c.window.x2_lo,
                              c.window.x2_hi, c.window.n2, true);
        write_field_file(c, gt, path("field_total.csv"));
        art.files.push_back("field_total.csv");
        auto gs = sample_grid(sol, c.window.x1_lo, c.window.x1_hi, c.window.n1, c.window.x2_lo,
                              c.window.x2_hi, c.window.n2, false);
        write_field_file(c, gs, path("field_scattered.csv"));
        art.files.push_back("field_scattered.csv");
        write_plot_helper(path("plot_field.py"));
        art.files.push_back("plot_field.py");
    }
    if (!c.probes.empty()) {
        auto f = detail::open_out(path("probes.csv"));
        f << "x1,x2,re,im\n";
        char buf[120];
        for (const Point& p : c.probes) {
            cdouble u = eval_total(sol, p);
            std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g\n", p.x1, p.x2, u.real(),
                          u.imag());
            f << buf;
        }
        art.files.push_back("probes.csv");
    }
    {
        auto f = detail::open_out(path("run.log"));
        char buf[64];
        std::snprintf(buf, sizeof buf, "solve_s = %.3f\n", art.solve_seconds);
        f << buf;
        art.files.push_back("run.log");
    }
    return art;
}

enum class SweepKind { Thickness, Sigma };

struct SweepCurve {
    std::string label;           // incidence in config syntax
    std::vector<double> errors;  // E_rel per sweep value
};

struct SweepTable {
    std::string parameter;  // "thickness" or "sigma"
    std::vector<double> values;
    std::vector<SweepCurve> curves;
};

namespace detail {

inline int env_threads() {
    if (const char* s = std::getenv("STEPWAVE_THREADS")) {
        int v = std::atoi(s);
        if (v > 0) return v;
    }
    unsigned hc = std::thread::hardware_concurrency();
    return hc ? int(hc > 8 ? 8 : hc) : 1;
}

// Index-ordered parallel map; the first exception wins and is rethrown.
inline std::vector<Solution> solve_all(const std::vector<Problem>& probs) {
    std::vector<Solution> sols(probs.size());
    std::atomic<size_t> next{0};
    std::exception_ptr err;
    std::mutex err_mx;
    auto worker = [&] {
        for (size_t i; (i = next.fetch_add(1)) < probs.size();) {
            try {
                sols[i] = solve_problem(probs[i]);
            } catch (...) {
                std::lock_guard<std::mutex> lk(err_mx);
                if (!err) err = std::current_exception();
                return;
            }
        }
    };
    int nt = env_threads();
    if (nt > int(probs.size())) nt = int(probs.size());
    if (nt <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < nt; ++t) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    if (err) std::rethrow_exception(err);
    return sols;
}

}  // namespace detail

// Solves the reference configuration and every sweep point for each listed
// incidence, reporting E_rel on the config's probe set.
inline SweepTable run_pml_sweep(const RunConfig& c, SweepKind kind,
                                std::vector<Incidence> incidences = {}) {
    c.validate();
    const std::vector<double>& values =
        kind == SweepKind::Thickness ? c.sweep_thickness : c.sweep_sigma;
    if (values.empty()) throw ConfigError("sweep: no values configured for this parameter");
    if (c.probes.empty()) throw ConfigError("sweep: probe set is empty");
    if (incidences.empty()) incidences.push_back(c.incidence);

    SweepTable table;
    table.parameter = kind == SweepKind::Thickness ? "thickness" : "sigma";
    table.values = values;

    std::vector<Problem> probs;
    for (const Incidence& inc : incidences) {
        Problem ref = c.problem();
        ref.incidence = inc;
        ref.validate();
        probs.push_back(ref);
        for (double v : values) {
            Problem p = ref;
            (kind == SweepKind::Thickness ? p.pml.thickness : p.pml.sigma) = v;
            p.validate();
            probs.push_back(p);
        }
    }
    std::vector<Solution> sols = detail::solve_all(probs);

    size_t at = 0;
    for (const Incidence& inc : incidences) {
        const Solution& ref = sols[at++];
        std::vector<cdouble> want;
        for (const Point& p : c.probes) want.push_back(eval_total(ref, p));
        SweepCurve curve;
        curve.label = detail::incidence_text(inc);
        for (size_t j = 0; j < values.size(); ++j) {
            const Solution& sol = sols[at++];
            std::vector<cdouble> got;
            for (const Point& p : c.probes) got.push_back(eval_total(sol, p));
            curve.errors.push_back(relative_error(want, got));
        }
        table.curves.push_back(std::move(curve));
    }
    return table;
}

inline void write_sweep_file(const SweepTable& t, const std::string& path) {
    auto f = detail::open_out(path);
    f << "# stepwave sweep " << t.parameter << '\n';
    f << t.parameter;
    for (const auto& c : t.curves) f << ",E_rel(" << c.label << ')';
    f << '\n';
    for (size_t j = 0; j < t.values.size(); ++j) {
        f << detail::num(t.values[j]);
        for (const auto& c : t.curves) f << ',' << detail::num(c.errors[j]);
        f << '\n';
    }
    if (!f) throw std::runtime_error("write failed on " + path);
}

struct CurveFit {
    double slope = 0.0;  // d log(E) / d parameter
    double r2 = 0.0;
    int used = 0;  // leading points kept before the plateau
};

// Semilog least squares with plateau exclusion: trailing points within a
// factor 2 of the curve minimum are dropped.  A strongly absorbing layer can
// bottom out by the second sweep point, so the kept prefix may shrink to 2;
// the fit through 2 points is exact and its slope still reports the decay.
inline CurveFit fit_error_curve(const std::vector<double>& x, const std::vector<double>& e) {
    if (x.size() != e.size() || x.size() < 3)
        throw DiagnosticError("curve fit: need at least 3 points");
    double emin = e[0];
    for (double v : e) {
        if (!(v > 0.0)) throw DiagnosticError("curve fit: errors must be positive");
        emin = std::min(emin, v);
    }
    int n = int(e.size());
    while (n > 2 && e[n - 1] <= 2.0 * emin) --n;

    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (int i = 0; i < n; ++i) {
        double y = std::log(e[i]);
        sx += x[i], sy += y, sxx += x[i] * x[i], sxy += x[i] * y, syy += y * y;
    }
    double vxx = sxx - sx * sx / n, vxy = sxy - sx * sy / n, vyy = syy - sy * sy / n;
    if (!(vxx > 0.0) || !(vyy > 0.0))
        throw DiagnosticError("curve fit: degenerate abscissa or flat data");
    CurveFit fit;
    fit.slope = vxy / vxx;
    fit.r2 = (vxy * vxy) / (vxx * vyy);
    fit.used = n;
    return fit;
}

}  // namespace stepwave
