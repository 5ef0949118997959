#pragma once

// Run configuration as a structured key=value text: parsing with field-level
// messages, validation, and a deterministic serialization that round-trips
// every field exactly.
//
// One key per line, '#' starts a comment.  Scalar keys take the last
// occurrence (so appended override lines win); `inclusion` and `probe` lines
// accumulate.  All lengths share the unit of the wavelength key.

#include <cstdio>
#include <cstdlib>
#include <string>
#include <vector>

#include "stepwave/solver.hpp"

namespace stepwave {

struct ExportSpec {
    double x1_lo = -2.5, x1_hi = 2.5;
    double x2_lo = 0.0, x2_hi = 2.5;
    int n1 = 0, n2 = 0;  // 0 disables the field export

    bool enabled() const { return n1 > 0 && n2 > 0; }
};

struct RunConfig {
    double wavelength = 1.0;
    SteppedSurface surface{{}, {0.0}};
    std::vector<Inclusion> inclusions;
    Incidence incidence = PlaneWave{pi / 6.0};
    PmlParams pml{2.5, 1.0, 70.0};
    NodeBudget budget{280, 140};
    ExportSpec window;
    std::vector<Point> probes;
    std::vector<double> sweep_thickness;
    std::vector<double> sweep_sigma;

    double k() const { return 2.0 * pi / wavelength; }

    Problem problem() const {
        Problem p;
        p.surface = surface;
        p.inclusions = inclusions;
        p.incidence = incidence;
        p.k = k();
        p.pml = pml;
        p.budget = budget;
        return p;
    }

    void validate() const {
        if (!(wavelength > 0.0)) throw ConfigError("config: wavelength must be positive");
        problem().validate();
        if ((window.n1 > 0) != (window.n2 > 0))
            throw ConfigError("config: export.resolution needs both counts positive");
        if (window.n1 < 0 || window.n2 < 0)
            throw ConfigError("config: export.resolution must be non-negative");
        if (window.enabled()) {
            if (window.n1 > 1 && !(window.x1_hi > window.x1_lo))
                throw ConfigError("config: export.rect has an empty horizontal extent");
            if (window.n2 > 1 && !(window.x2_hi > window.x2_lo))
                throw ConfigError("config: export.rect has an empty vertical extent");
        }
        for (double d : sweep_thickness)
            if (!(d > 0.0)) throw ConfigError("config: sweep.thickness entries must be positive");
        for (double s : sweep_sigma)
            if (!(s > 0.0)) throw ConfigError("config: sweep.sigma entries must be positive");
    }
};

inline bool operator==(const Point& a, const Point& b) { return a.x1 == b.x1 && a.x2 == b.x2; }
inline bool operator==(const Inclusion& a, const Inclusion& b) {
    return a.x1_lo == b.x1_lo && a.x1_hi == b.x1_hi && a.x2_lo == b.x2_lo &&
           a.x2_hi == b.x2_hi && a.n == b.n;
}
inline bool operator==(const SteppedSurface& a, const SteppedSurface& b) {
    return a.breakpoints == b.breakpoints && a.ground_heights == b.ground_heights;
}
inline bool operator==(const PmlParams& a, const PmlParams& b) {
    return a.entrance == b.entrance && a.thickness == b.thickness && a.sigma == b.sigma;
}
inline bool operator==(const NodeBudget& a, const NodeBudget& b) {
    return a.shared == b.shared && a.below == b.below;
}
inline bool operator==(const ExportSpec& a, const ExportSpec& b) {
    return a.x1_lo == b.x1_lo && a.x1_hi == b.x1_hi && a.x2_lo == b.x2_lo &&
           a.x2_hi == b.x2_hi && a.n1 == b.n1 && a.n2 == b.n2;
}
inline bool operator==(const PlaneWave& a, const PlaneWave& b) { return a.theta == b.theta; }
inline bool operator==(const PointSource& a, const PointSource& b) { return a.z == b.z; }
inline bool operator==(const RunConfig& a, const RunConfig& b) {
    return a.wavelength == b.wavelength && a.surface == b.surface &&
           a.inclusions == b.inclusions && a.incidence == b.incidence && a.pml == b.pml &&
           a.budget == b.budget && a.window == b.window && a.probes == b.probes &&
           a.sweep_thickness == b.sweep_thickness && a.sweep_sigma == b.sweep_sigma;
}

namespace detail {

inline void key_error(const std::string& key, const char* what) {
    throw ConfigError("config: key '" + key + "' " + what);
}

inline std::vector<std::string> split_tokens(const std::string& s) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (c == ' ' || c == '\t' || c == ',') {
            if (!cur.empty()) out.push_back(std::move(cur)), cur.clear();
        } else {
            cur += c;
        }
    }
    if (!cur.empty()) out.push_back(std::move(cur));
    return out;
}

inline double parse_number(const std::string& key, const std::string& tok) {
    const char* s = tok.c_str();
    char* end = nullptr;
    double v = std::strtod(s, &end);
    if (end != s + tok.size() || tok.empty()) key_error(key, "has a malformed number");
    return v;
}

inline int parse_count(const std::string& key, const std::string& tok) {
    double v = parse_number(key, tok);
    int n = int(v);
    if (double(n) != v) key_error(key, "expects an integer");
    return n;
}

inline std::vector<double> parse_numbers(const std::string& key, const std::string& value,
                                         int want = -1) {
    auto toks = split_tokens(value);
    if (want >= 0 && int(toks.size()) != want) key_error(key, "has the wrong number of values");
    std::vector<double> out;
    for (const auto& t : toks) out.push_back(parse_number(key, t));
    return out;
}

inline void apply_key(RunConfig& c, const std::string& key, const std::string& value) {
    auto one = [&] {
        auto toks = split_tokens(value);
        if (toks.size() != 1) key_error(key, "expects one value");
        return parse_number(key, toks[0]);
    };
    if (key == "wavelength") {
        c.wavelength = one();
    } else if (key == "surface.breakpoints") {
        c.surface.breakpoints = parse_numbers(key, value);
    } else if (key == "surface.grounds") {
        c.surface.ground_heights = parse_numbers(key, value);
        if (c.surface.ground_heights.empty()) key_error(key, "must not be empty");
    } else if (key == "inclusion") {
        auto v = parse_numbers(key, value, 5);
        c.inclusions.push_back({v[0], v[1], v[2], v[3], v[4]});
    } else if (key == "incidence") {
        auto toks = split_tokens(value);
        if (toks.size() == 2 && toks[0] == "plane")
            c.incidence = PlaneWave{parse_number(key, toks[1])};
        else if (toks.size() == 3 && toks[0] == "point")
            c.incidence = PointSource{{parse_number(key, toks[1]), parse_number(key, toks[2])}};
        else
            key_error(key, "expects 'plane <theta>' or 'point <x1> <x2>'");
    } else if (key == "pml.entrance") {
        c.pml.entrance = one();
    } else if (key == "pml.thickness") {
        c.pml.thickness = one();
    } else if (key == "pml.sigma") {
        c.pml.sigma = one();
    } else if (key == "nodes.shared") {
        c.budget.shared = parse_count(key, value);
    } else if (key == "nodes.below") {
        c.budget.below = parse_count(key, value);
    } else if (key == "export.rect") {
        auto v = parse_numbers(key, value, 4);
        c.window.x1_lo = v[0], c.window.x1_hi = v[1];
        c.window.x2_lo = v[2], c.window.x2_hi = v[3];
    } else if (key == "export.resolution") {
        auto toks = split_tokens(value);
        if (toks.size() != 2) key_error(key, "expects two counts");
        c.window.n1 = parse_count(key, toks[0]);
        c.window.n2 = parse_count(key, toks[1]);
    } else if (key == "probe") {
        auto v = parse_numbers(key, value, 2);
        c.probes.push_back({v[0], v[1]});
    } else if (key == "sweep.thickness") {
        c.sweep_thickness = parse_numbers(key, value);
    } else if (key == "sweep.sigma") {
        c.sweep_sigma = parse_numbers(key, value);
    } else {
        key_error(key, "is not recognized");
    }
}

inline std::string trim(const std::string& s) {
    size_t b = s.find_first_not_of(" \t\r");
    size_t e = s.find_last_not_of(" \t\r");
    return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
}

}  // namespace detail

inline RunConfig parse_config(const std::string& text) {
    RunConfig c;
    size_t pos = 0;
    int lineno = 0;
    while (pos <= text.size()) {
        size_t nl = text.find('\n', pos);
        std::string line = text.substr(pos, nl == std::string::npos ? nl : nl - pos);
        pos = nl == std::string::npos ? text.size() + 1 : nl + 1;
        ++lineno;
        if (size_t hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = detail::trim(line);
        if (line.empty()) continue;
        size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config: line " + std::to_string(lineno) + " has no '='");
        detail::apply_key(c, detail::trim(line.substr(0, eq)),
                          detail::trim(line.substr(eq + 1)));
    }
    return c;
}

// Each entry is one "key=value" line appended after the file body, so scalar
// overrides win and list keys accumulate.
inline RunConfig parse_config(std::string text, const std::vector<std::string>& overrides) {
    for (const auto& kv : overrides) {
        text += '\n';
        text += kv;
    }
    return parse_config(text);
}

namespace detail {

inline std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline std::string num_list(const std::vector<double>& v) {
    std::string s;
    for (size_t i = 0; i < v.size(); ++i) {
        if (i) s += ' ';
        s += num(v[i]);
    }
    return s;
}

}  // namespace detail

inline std::string serialize_config(const RunConfig& c) {
    using detail::num;
    std::string s;
    auto line = [&](const char* key, const std::string& v) {
        s += key;
        s += " = ";
        s += v;
        s += '\n';
    };
    line("wavelength", num(c.wavelength));
    if (const auto* pw = std::get_if<PlaneWave>(&c.incidence))
        line("incidence", "plane " + num(pw->theta));
    else {
        const Point z = std::get<PointSource>(c.incidence).z;
        line("incidence", "point " + num(z.x1) + ' ' + num(z.x2));
    }
    if (!c.surface.breakpoints.empty())
        line("surface.breakpoints", detail::num_list(c.surface.breakpoints));
    line("surface.grounds", detail::num_list(c.surface.ground_heights));
    for (const auto& q : c.inclusions)
        line("inclusion", num(q.x1_lo) + ' ' + num(q.x1_hi) + ' ' + num(q.x2_lo) + ' ' +
                              num(q.x2_hi) + ' ' + num(q.n));
    line("pml.entrance", num(c.pml.entrance));
    line("pml.thickness", num(c.pml.thickness));
    line("pml.sigma", num(c.pml.sigma));
    line("nodes.shared", std::to_string(c.budget.shared));
    line("nodes.below", std::to_string(c.budget.below));
    line("export.rect", num(c.window.x1_lo) + ' ' + num(c.window.x1_hi) + ' ' +
                            num(c.window.x2_lo) + ' ' + num(c.window.x2_hi));
    line("export.resolution",
         std::to_string(c.window.n1) + ' ' + std::to_string(c.window.n2));
    for (const auto& p : c.probes) line("probe", num(p.x1) + ' ' + num(p.x2));
    if (!c.sweep_thickness.empty()) line("sweep.thickness", detail::num_list(c.sweep_thickness));
    if (!c.sweep_sigma.empty()) line("sweep.sigma", detail::num_list(c.sweep_sigma));
    return s;
}

}  // namespace stepwave
