#pragma once

// Stepped sound-soft surfaces, the column regions they induce, and the
// sector decomposition used by the outgoing-field diagnostics.
//
// A surface is a piecewise-constant height profile: ground_heights[r] on the
// open column between breakpoints[r-1] and breakpoints[r], joined by vertical
// walls.  Penetrable rectangles may sit on or above the local ground; their
// x-edges split columns into further regions so that every region has a
// pure layered (x2-only) medium profile.

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "stepwave/errors.hpp"
#include "stepwave/specfun.hpp"

namespace stepwave {

struct Point {
    double x1 = 0.0, x2 = 0.0;
};

enum class Sector { Left, Middle, Right };

struct SteppedSurface {
    std::vector<double> breakpoints;     // ascending; may be empty (flat)
    std::vector<double> ground_heights;  // one per column, size breakpoints+1

    void validate() const {
        if (ground_heights.size() != breakpoints.size() + 1)
            throw ConfigError("surface: need one ground height per column");
        for (size_t i = 1; i < breakpoints.size(); ++i)
            if (!(breakpoints[i] > breakpoints[i - 1]))
                throw ConfigError("surface: breakpoints must be strictly ascending");
    }

    // Ground height of the column containing x1; at a breakpoint the higher
    // adjacent ground (the wall belongs to the surface).
    double ground_at(double x1) const {
        size_t i = std::upper_bound(breakpoints.begin(), breakpoints.end(), x1) -
                   breakpoints.begin();
        double g = ground_heights[i];
        if (i > 0 && breakpoints[i - 1] == x1) g = std::max(g, ground_heights[i - 1]);
        return g;
    }
};

struct Inclusion {
    double x1_lo = 0.0, x1_hi = 0.0;
    double x2_lo = 0.0, x2_hi = 0.0;
    double n = 1.0;
};

struct MediumLayer {
    double lo = 0.0;
    double hi = 0.0;  // +inf on the last layer
    double n = 1.0;
};

struct Region {
    double x1_lo = 0.0, x1_hi = 0.0;  // +-inf at the outer columns
    double ground = 0.0;
    std::vector<MediumLayer> layers;  // contiguous cover of [ground, inf)

    bool uniform() const {
        for (const auto& l : layers)
            if (l.n != 1.0) return false;
        return true;
    }
    double n_at(double x2) const {
        if (x2 < ground) throw std::invalid_argument("Region::n_at: below the ground");
        for (const auto& l : layers)
            if (x2 < l.hi) return l.n;
        return layers.back().n;
    }
    // Heights (above ground, below +inf) where n jumps.
    std::vector<double> profile_breaks() const {
        std::vector<double> b;
        for (size_t i = 0; i + 1 < layers.size(); ++i) b.push_back(layers[i].hi);
        return b;
    }
};

inline std::vector<Region> build_regions(const SteppedSurface& surface,
                                         const std::vector<Inclusion>& inclusions) {
    surface.validate();
    for (const auto& inc : inclusions) {
        if (!(inc.x1_hi > inc.x1_lo) || !(inc.x2_hi > inc.x2_lo))
            throw ConfigError("inclusion: empty rectangle");
        if (!(inc.n > 0.0)) throw ConfigError("inclusion: refractive index must be positive");
    }

    std::vector<double> edges(surface.breakpoints);
    for (const auto& inc : inclusions) {
        edges.push_back(inc.x1_lo);
        edges.push_back(inc.x1_hi);
    }
    std::sort(edges.begin(), edges.end());
    edges.erase(std::unique(edges.begin(), edges.end()), edges.end());

    const double inf = std::numeric_limits<double>::infinity();
    std::vector<Region> regions;
    for (size_t r = 0; r <= edges.size(); ++r) {
        Region reg;
        reg.x1_lo = r == 0 ? -inf : edges[r - 1];
        reg.x1_hi = r == edges.size() ? inf : edges[r];
        double probe = std::isfinite(reg.x1_lo)
                           ? (std::isfinite(reg.x1_hi) ? 0.5 * (reg.x1_lo + reg.x1_hi)
                                                       : reg.x1_lo + 1.0)
                           : (std::isfinite(reg.x1_hi) ? reg.x1_hi - 1.0 : 0.0);
        size_t col = std::upper_bound(surface.breakpoints.begin(), surface.breakpoints.end(),
                                      probe) -
                     surface.breakpoints.begin();
        reg.ground = surface.ground_heights[col];

        std::vector<Inclusion> local;
        for (const auto& inc : inclusions)
            if (inc.x1_lo < reg.x1_hi && inc.x1_hi > reg.x1_lo) local.push_back(inc);
        std::sort(local.begin(), local.end(),
                  [](const Inclusion& a, const Inclusion& b) { return a.x2_lo < b.x2_lo; });
        double cursor = reg.ground;
        for (const auto& inc : local) {
            if (inc.x2_lo < reg.ground) throw ConfigError("inclusion: extends below the ground");
            if (inc.x2_lo < cursor) throw ConfigError("inclusion: vertically overlapping rectangles");
            if (inc.x2_lo > cursor) reg.layers.push_back({cursor, inc.x2_lo, 1.0});
            reg.layers.push_back({inc.x2_lo, inc.x2_hi, inc.n});
            cursor = inc.x2_hi;
        }
        reg.layers.push_back({cursor, inf, 1.0});
        regions.push_back(std::move(reg));
    }

    // A surface breakpoint with equal grounds must carry a material contrast,
    // otherwise the wall is empty and the breakpoint spurious.
    for (double b : surface.breakpoints) {
        size_t i = std::lower_bound(edges.begin(), edges.end(), b) - edges.begin();
        const Region& a = regions[i];
        const Region& c = regions[i + 1];
        if (a.ground == c.ground) {
            bool same = a.layers.size() == c.layers.size();
            if (same)
                for (size_t l = 0; l < a.layers.size(); ++l)
                    same = same && a.layers[l].lo == c.layers[l].lo &&
                           a.layers[l].hi == c.layers[l].hi && a.layers[l].n == c.layers[l].n;
            if (same)
                throw ConfigError("surface: zero-height wall without a material interface");
        }
    }
    return regions;
}

/// Sector of a point relative to the two rays of direction (cos t, sin t):
/// one through `anchor`, the other shifted down by h/cos^2 t.  Points exactly
/// on a ray belong to the sector on the ray's left.  Angles in (pi/2, pi) are
/// handled by mirroring x1.
inline Sector classify_point(Point x, double theta, double h, Point anchor = {0.0, 0.0}) {
    if (!(theta > 0.0) || !(theta < pi)) throw std::invalid_argument("classify_point: theta outside (0, pi)");
    if (theta == 0.5 * pi) throw std::invalid_argument("classify_point: theta = pi/2 has no transverse rays");
    if (h < 0.0) throw std::invalid_argument("classify_point: negative step height");
    if (theta > 0.5 * pi) {
        Sector s = classify_point({-x.x1, x.x2}, pi - theta, h, {-anchor.x1, anchor.x2});
        if (s == Sector::Left) return Sector::Right;
        if (s == Sector::Right) return Sector::Left;
        return s;
    }
    double t = std::tan(theta);
    double drop = h / (std::cos(theta) * std::cos(theta));
    double rel = (x.x2 - anchor.x2) - (x.x1 - anchor.x1) * t;
    if (rel >= 0.0) return Sector::Left;
    if (rel >= -drop) return Sector::Middle;
    return Sector::Right;
}

}  // namespace stepwave
