#pragma once

// Point evaluation of a solved field.
//
// The scattered part in a region is  sum_j phi_j(x2) (a_j e^{i r_j (x1-l)}
// + b_j e^{i r_j (rgt-x1)}); vertical profiles are interpolated
// barycentrically on the collocation panels.  Inside the absorber the grid
// coordinate is the real parameter of the deformed contour, so values there
// are the analytic continuation, not a physical field; vertical derivatives
// are returned with respect to the deformed coordinate (below the absorber
// entrance that is the plain d/dx2).

#include "stepwave/solver.hpp"

namespace stepwave {

struct FieldSample {
    cdouble u;
    cdouble du1;
    cdouble du2;
};

namespace detail {

struct ModalTrace {
    Eigen::RowVectorXcd vals;    // phi_j(x2)
    Eigen::RowVectorXcd dvals;   // phi_j'(x2), deformed coordinate
};

inline ModalTrace modal_trace(const ModeSet& modes, double x2, bool with_deriv) {
    const auto& g = modes.grid;
    const int p = g.find_panel(x2);
    const auto& panel = g.panels[p];
    const int c = int(panel.nodes.size());
    const auto block = modes.phi.block(g.panel_offset[p], 0, c, modes.phi.cols());
    Eigen::VectorXd w = cheb_interp_weights(panel, x2);
    ModalTrace t;
    t.vals = w.cast<cdouble>().transpose() * block;
    if (with_deriv)
        t.dvals = (panel.deriv.transpose() * w).cast<cdouble>().transpose() * block;
    return t;
}

inline void check_height(const Solution& sol, const RegionSolution& rs, double x2) {
    if (x2 < rs.geom.ground) throw ConfigError("evaluate: point below the surface");
    if (x2 > sol.problem.pml.top()) throw ConfigError("evaluate: point above the absorber top");
}

}  // namespace detail

// The `region` overloads evaluate a chosen region's expansion regardless of
// x1; the modal propagators extend continuously onto the region's closed
// edges, which is what wall traces and interface re-checks need.
inline FieldSample eval_scattered_grad(const Solution& sol, Point x, int region) {
    const RegionSolution& rs = sol.regions[region];
    detail::check_height(sol, rs, x.x2);
    FieldSample out{0.0, 0.0, 0.0};
    if (!rs.basis.rightgoing && !rs.basis.leftgoing) return out;
    auto t = detail::modal_trace(*rs.basis.modes, x.x2, true);
    const cdouble iu(0.0, 1.0);
    const int n = rs.basis.count();
    for (int j = 0; j < n; ++j) {
        cdouble a = 0.0, da = 0.0;
        cdouble r = rs.basis.modes->root(j);
        if (rs.basis.rightgoing) {
            cdouble e = rs.coef_right(j) * std::exp(iu * r * (x.x1 - rs.basis.left_edge));
            a += e;
            da += iu * r * e;
        }
        if (rs.basis.leftgoing) {
            cdouble e = rs.coef_left(j) * std::exp(iu * r * (rs.basis.right_edge - x.x1));
            a += e;
            da -= iu * r * e;
        }
        out.u += t.vals(j) * a;
        out.du1 += t.vals(j) * da;
        out.du2 += t.dvals(j) * a;
    }
    out.du2 /= cdouble(1.0, sol.problem.pml.profile(x.x2));
    return out;
}

inline FieldSample eval_scattered_grad(const Solution& sol, Point x) {
    return eval_scattered_grad(sol, x, sol.region_of(x.x1));
}

inline cdouble eval_scattered(const Solution& sol, Point x, int region) {
    const RegionSolution& rs = sol.regions[region];
    detail::check_height(sol, rs, x.x2);
    if (!rs.basis.rightgoing && !rs.basis.leftgoing) return 0.0;
    auto t = detail::modal_trace(*rs.basis.modes, x.x2, false);
    const cdouble iu(0.0, 1.0);
    cdouble u = 0.0;
    for (int j = 0; j < rs.basis.count(); ++j) {
        cdouble a = 0.0;
        cdouble r = rs.basis.modes->root(j);
        if (rs.basis.rightgoing)
            a += rs.coef_right(j) * std::exp(iu * r * (x.x1 - rs.basis.left_edge));
        if (rs.basis.leftgoing)
            a += rs.coef_left(j) * std::exp(iu * r * (rs.basis.right_edge - x.x1));
        u += t.vals(j) * a;
    }
    return u;
}

inline cdouble eval_scattered(const Solution& sol, Point x) {
    return eval_scattered(sol, x, sol.region_of(x.x1));
}

inline cdouble eval_total(const Solution& sol, Point x, int region) {
    const RegionSolution& rs = sol.regions[region];
    cdouble x2hat = sol.problem.pml.stretched(x.x2);
    return eval_scattered(sol, x, region) + rs.wfield.value(x.x1, x2hat);
}

inline cdouble eval_total(const Solution& sol, Point x) {
    return eval_total(sol, x, sol.region_of(x.x1));
}

inline FieldSample eval_total_grad(const Solution& sol, Point x) {
    const RegionSolution& rs = sol.regions[sol.region_of(x.x1)];
    cdouble x2hat = sol.problem.pml.stretched(x.x2);
    FieldSample s = eval_scattered_grad(sol, x);
    s.u += rs.wfield.value(x.x1, x2hat);
    s.du1 += rs.wfield.dx1(x.x1, x2hat);
    s.du2 += rs.wfield.dx2(x.x1, x2hat);
    return s;
}

namespace detail {

// Upstream/downstream frame for the sector decomposition: the transverse
// rays anchor at the top corner of the wall nearest the incoming wave.
struct SectorFrame {
    double theta = 0.0, h = 0.0;
    double g_up = 0.0, g_dn = 0.0;
    Point anchor{0.0, 0.0};
    bool rightward = true;
    Sector upstream = Sector::Left;
};

inline SectorFrame sector_frame(const Solution& sol) {
    const PlaneWave* pw = std::get_if<PlaneWave>(&sol.problem.incidence);
    if (!pw) throw ConfigError("outgoing remainder: needs plane-wave incidence");
    if (pw->theta == 0.5 * pi)
        throw ConfigError("outgoing remainder: undefined at normal incidence");
    SectorFrame f;
    f.theta = pw->theta;
    f.rightward = pw->theta < 0.5 * pi;
    f.upstream = f.rightward ? Sector::Left : Sector::Right;
    f.g_up = f.rightward ? sol.regions.front().geom.ground : sol.regions.back().geom.ground;
    f.g_dn = f.rightward ? sol.regions.back().geom.ground : sol.regions.front().geom.ground;
    f.h = f.g_up - f.g_dn;
    if (f.h < 0.0)
        throw ConfigError("outgoing remainder: upstream ground must not lie below the downstream one");
    f.anchor = {0.0, f.g_up};
    if (sol.regions.size() > 1)
        f.anchor.x1 = f.rightward ? sol.regions.front().geom.x1_hi : sol.regions.back().geom.x1_lo;
    return f;
}

}  // namespace detail

// Outgoing remainder v: the total field minus the upstream half-plane
// reference on the upstream side of the transverse ray through the wall's
// top corner, minus the downstream reference elsewhere.  `shifted` selects
// the companion v' whose ray is dropped by h/cos^2(theta), so the middle
// sector keeps the upstream reference instead.  v jumps across the ray;
// callers probing the jump take one-sided limits themselves.
inline cdouble eval_outgoing_v(const Solution& sol, Point x, bool shifted = false) {
    detail::SectorFrame f = detail::sector_frame(sol);
    Sector sec = classify_point(x, f.theta, f.h, f.anchor);
    bool use_up = sec == f.upstream || (shifted && sec == Sector::Middle);
    ReferenceField ref =
        ReferenceField::plane_uniform(sol.problem.k, f.theta, use_up ? f.g_up : f.g_dn);
    return eval_total(sol, x) - ref.value(x.x1, sol.problem.pml.stretched(x.x2));
}

struct FieldGrid {
    std::vector<double> x1, x2;
    std::vector<cdouble> values;       // values[i2 * x1.size() + i1]
    std::vector<unsigned char> mask;   // 1 inside the substrate (value zeroed)
};

inline FieldGrid sample_grid(const Solution& sol, double x1_lo, double x1_hi, int n1,
                             double x2_lo, double x2_hi, int n2, bool total = true) {
    if (n1 < 1 || n2 < 1) throw ConfigError("sample grid: need at least 1 point per axis");
    if ((n1 > 1 && !(x1_hi > x1_lo)) || (n2 > 1 && !(x2_hi > x2_lo)))
        throw ConfigError("sample grid: empty extent");
    if (x2_hi > sol.problem.pml.top())
        throw ConfigError("sample grid: extent reaches above the absorber top");
    FieldGrid g;
    // a single-point axis collapses onto its lower bound
    for (int i = 0; i < n1; ++i)
        g.x1.push_back(n1 == 1 ? x1_lo : x1_lo + (x1_hi - x1_lo) * i / (n1 - 1));
    for (int i = 0; i < n2; ++i)
        g.x2.push_back(n2 == 1 ? x2_lo : x2_lo + (x2_hi - x2_lo) * i / (n2 - 1));
    g.values.assign(size_t(n1) * n2, 0.0);
    g.mask.assign(size_t(n1) * n2, 0);
    for (int i2 = 0; i2 < n2; ++i2)
        for (int i1 = 0; i1 < n1; ++i1) {
            size_t at = size_t(i2) * n1 + i1;
            Point x{g.x1[i1], g.x2[i2]};
            if (x.x2 < sol.problem.surface.ground_at(x.x1)) {
                g.mask[at] = 1;
                continue;
            }
            g.values[at] = total ? eval_total(sol, x) : eval_scattered(sol, x);
        }
    return g;
}

}  // namespace stepwave
