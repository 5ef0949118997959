#pragma once

// Numerical diagnostics around the solver: radiation-condition arc
// integrals, the angular-spectrum consistency check, the oscillatory ray
// integrals behind the far-field limit, reciprocity, and surface traces.
// Everything here reports numbers; thresholds live with the callers.

#include <unsupported/Eigen/FFT>

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <vector>

#include "stepwave/evaluate.hpp"
#include "stepwave/specfun.hpp"

namespace stepwave {

namespace detail {

struct GaussRule {
    std::vector<double> x, w;  // nodes/weights on [-1, 1]
};

inline GaussRule gauss_rule(int n) {
    GaussRule g;
    g.x.resize(n);
    g.w.resize(n);
    for (int i = 0; i < (n + 1) / 2; ++i) {
        double x = std::cos(pi * (i + 0.75) / (n + 0.5));
        double slope = 0.0;
        for (int it = 0; it < 64; ++it) {
            double p0 = 1.0, p1 = 0.0;
            for (int j = 0; j < n; ++j) {
                double p2 = p1;
                p1 = p0;
                p0 = ((2 * j + 1) * x * p1 - j * p2) / (j + 1);
            }
            slope = n * (x * p0 - p1) / (x * x - 1.0);
            double dx = p0 / slope;
            x -= dx;
            if (std::abs(dx) < 1e-15) break;
        }
        g.x[i] = -x;
        g.x[n - 1 - i] = x;
        g.w[i] = g.w[n - 1 - i] = 2.0 / ((1.0 - x * x) * slope * slope);
    }
    return g;
}

inline const GaussRule& gauss16() {
    static const GaussRule g = gauss_rule(16);
    return g;
}

// Composite 16-point Gauss quadrature over [a, b] in `nseg` equal panels.
template <class F>
auto integrate_panels(F&& f, double a, double b, int nseg) {
    const GaussRule& g = gauss16();
    using R = decltype(f(a) * 1.0);
    R acc{};
    const double hseg = (b - a) / nseg;
    for (int s = 0; s < nseg; ++s) {
        const double lo = a + s * hseg;
        for (size_t q = 0; q < g.x.size(); ++q) {
            double t = lo + 0.5 * hseg * (1.0 + g.x[q]);
            acc += (0.5 * hseg * g.w[q]) * f(t);
        }
    }
    return acc;
}

inline int panels_for(double span, double max_len) {
    return std::max(1, int(std::ceil(span / max_len)));
}

// Polar angle (about `anchor`) where the circle of radius r crosses the
// lower transverse ray, the one shifted down by drop = h / cos^2(theta).
inline double lower_ray_angle(double theta, double drop, double r) {
    double s = drop * std::sin(theta) +
               std::sqrt(r * r - drop * drop * std::cos(theta) * std::cos(theta));
    return std::atan2(s * std::sin(theta) - drop, s * std::cos(theta));
}

}  // namespace detail

inline double relative_error(const std::vector<cdouble>& ref, const std::vector<cdouble>& num) {
    if (ref.size() != num.size() || ref.empty())
        throw DiagnosticError("relative error: mismatched probe sets");
    double mref = 0.0, mdiff = 0.0;
    for (size_t i = 0; i < ref.size(); ++i) {
        mref = std::max(mref, std::abs(ref[i]));
        mdiff = std::max(mdiff, std::abs(ref[i] - num[i]));
    }
    if (mref == 0.0) throw DiagnosticError("relative error: reference vanishes on the probe set");
    return mdiff / mref;
}

template <class FRef, class FNum>
double relative_error(FRef&& ref, FNum&& num, const std::vector<Point>& probes) {
    std::vector<cdouble> a, b;
    a.reserve(probes.size());
    b.reserve(probes.size());
    for (Point p : probes) {
        a.push_back(ref(p));
        b.push_back(num(p));
    }
    return relative_error(a, b);
}

struct ArcIntegralReport {
    std::vector<double> radii;
    std::vector<double> first;   // int |d_r v - i k v|^2 ds over the arc
    std::vector<double> second;  // int |v|^2 ds over the arc
};

// Arc integrals for the closed-form middle-sector jump
// w = (c_h - 1) e^{i k r cos(theta - phi)}.  The radial derivative is
// analytic, so this needs no solver: the first integrand reduces to
// |c_h-1|^2 k^2 (cos(theta-phi) - 1)^2 and the second to |c_h-1|^2,
// integrated over the wedge between the two transverse rays.
inline ArcIntegralReport lemma_arc_integrals(double k, double theta, double h,
                                             const std::vector<double>& radii) {
    if (!(theta > 0.0 && theta < 0.5 * pi))
        throw DiagnosticError("lemma arcs: incidence angle must be in (0, pi/2)");
    if (h < 0.0) throw DiagnosticError("lemma arcs: negative step height");
    const double beta = k * std::sin(theta);
    const double amp2 = std::norm(std::exp(cdouble(0.0, 2.0 * beta * h)) - 1.0);
    const double drop = h / (std::cos(theta) * std::cos(theta));
    ArcIntegralReport rep;
    for (double r : radii) {
        if (!(r > drop)) throw DiagnosticError("lemma arcs: radius does not clear the lower ray");
        double tstar = detail::lower_ray_angle(theta, drop, r);
        auto f1 = [&](double phi) {
            double c = std::cos(theta - phi) - 1.0;
            return c * c;
        };
        int nseg = detail::panels_for(theta - tstar, 0.05);
        rep.radii.push_back(r);
        rep.first.push_back(amp2 * k * k * r * detail::integrate_panels(f1, tstar, theta, nseg));
        rep.second.push_back(amp2 * r *
                             detail::integrate_panels([](double) { return 1.0; }, tstar, theta, nseg));
    }
    return rep;
}

// Large-r limit of the second arc integral, |c_h-1|^2 h / cos(theta).
inline double lemma_second_limit(double k, double theta, double h) {
    const double beta = k * std::sin(theta);
    return std::norm(std::exp(cdouble(0.0, 2.0 * beta * h)) - 1.0) * h / std::cos(theta);
}

// Radiation-condition integrands for the solved outgoing remainder v,
// integrated over the upper half-circle of radius r about the wall's top
// corner, clipped to the strip below the absorber entrance.  The radial
// derivative is a two-point difference along each ray; both difference
// points reuse the reference picked at the arc point, so ray sampling never
// straddles the sector jump.
inline ArcIntegralReport radiation_arc_integrals(const Solution& sol, double theta, double h,
                                                 const std::vector<double>& radii) {
    detail::SectorFrame f = detail::sector_frame(sol);
    if (!f.rightward) throw DiagnosticError("arc report: incidence must travel rightward");
    if (std::abs(f.theta - theta) > 1e-12 || std::abs(f.h - h) > 1e-9)
        throw DiagnosticError("arc report: angle or step height disagrees with the solution");
    const double k = sol.problem.k;
    const double delta = 1e-4 * (2.0 * pi / k);
    const double top = sol.problem.pml.entrance - 10.0 * delta;
    const double drop = f.h / (std::cos(theta) * std::cos(theta));
    const ReferenceField ref_up = ReferenceField::plane_uniform(k, theta, f.g_up);
    const ReferenceField ref_dn = ReferenceField::plane_uniform(k, theta, f.g_dn);

    auto v_at = [&](Point p, const ReferenceField& ref) {
        return eval_total(sol, p) - ref.value(p.x1, sol.problem.pml.stretched(p.x2));
    };

    ArcIntegralReport rep;
    for (double r : radii) {
        if (!(r * std::sin(theta) < top - f.anchor.x2))
            throw DiagnosticError("arc report: radius leaves the computable strip");
        if (f.h > 0.0 && !(r > drop))
            throw DiagnosticError("arc report: radius does not clear the lower ray");

        // Arc pieces below the absorber: either the whole half-circle, or
        // two side pieces when the crown pokes past the entrance (the loop
        // below strides by 2 to skip the excluded crown span).
        std::vector<double> edges{0.0};
        double c = (top - f.anchor.x2) / r;
        if (c < 1.0) {
            edges.push_back(std::asin(c));
            edges.push_back(pi - std::asin(c));
        }
        edges.push_back(pi);
        double tstar = f.h > 0.0 ? detail::lower_ray_angle(theta, drop, r) : theta;
        std::vector<double> breaks{tstar, theta};
        double i1 = 0.0, i2 = 0.0;
        for (size_t piece = 0; piece + 1 < edges.size(); piece += (c < 1.0 ? 2 : 1)) {
            double lo = edges[piece], hi = edges[piece + 1];
            std::vector<double> seg{lo};
            for (double b : breaks)
                if (b > lo + 1e-12 && b < hi - 1e-12) seg.push_back(b);
            seg.push_back(hi);
            std::sort(seg.begin(), seg.end());
            for (size_t s = 0; s + 1 < seg.size(); ++s) {
                int nseg = detail::panels_for(seg[s + 1] - seg[s], pi / (2.0 * k * r));
                const detail::GaussRule& g = detail::gauss16();
                double hseg = (seg[s + 1] - seg[s]) / nseg;
                for (int ps = 0; ps < nseg; ++ps) {
                    double lo = seg[s] + ps * hseg;
                    for (size_t q = 0; q < g.x.size(); ++q) {
                        double phi = lo + 0.5 * hseg * (1.0 + g.x[q]);
                        double wq = 0.5 * hseg * g.w[q] * r;
                        Point x{f.anchor.x1 + r * std::cos(phi),
                                f.anchor.x2 + r * std::sin(phi)};
                        Sector sec = classify_point(x, theta, f.h, f.anchor);
                        const ReferenceField& ref = sec == Sector::Left ? ref_up : ref_dn;
                        Point xp{f.anchor.x1 + (r + delta) * std::cos(phi),
                                 f.anchor.x2 + (r + delta) * std::sin(phi)};
                        Point xm{f.anchor.x1 + (r - delta) * std::cos(phi),
                                 f.anchor.x2 + (r - delta) * std::sin(phi)};
                        cdouble vc = v_at(x, ref);
                        cdouble dr = (v_at(xp, ref) - v_at(xm, ref)) / (2.0 * delta);
                        i1 += wq * std::norm(dr - cdouble(0.0, k) * vc);
                        i2 += wq * std::norm(vc);
                    }
                }
            }
        }
        rep.radii.push_back(r);
        rep.first.push_back(i1);
        rep.second.push_back(i2);
    }
    return rep;
}

struct AppendixIntegralReport {
    double y1 = 0.0, theta = 0.0, s0 = 0.0, k = 0.0;
    std::vector<double> l;
    std::vector<cdouble> i1, i2, i3;        // cumulative values at each upper limit
    std::vector<double> cauchy1, cauchy2, cauchy3;  // |I_j^{l_{i+1}} - I_j^{l_i}|
};

// The three oscillatory ray integrals with d(s, y1) =
// sqrt((s - y1 cos t)^2 + y1^2 sin^2 t), integrated from s0 up through each
// requested limit with composite Gauss panels an eighth of a wavelength
// long (phase advance pi/4 per panel, far below the rule's resolution).
inline AppendixIntegralReport appendix_integrals(double y1, double theta, double s0,
                                                 const std::vector<double>& l_list,
                                                 double k = 2.0 * pi) {
    if (!(theta > 1e-3) || !(theta < pi - 1e-3))
        throw DiagnosticError("appendix integrals: angle too close to the surface direction");
    if (!(s0 > 0.0)) throw DiagnosticError("appendix integrals: lower limit must be positive");
    for (size_t i = 0; i < l_list.size(); ++i)
        if (!(l_list[i] > (i == 0 ? s0 : l_list[i - 1])))
            throw DiagnosticError("appendix integrals: upper limits must ascend past s0");

    const double ct = std::cos(theta), st = std::sin(theta);
    const double lam = 2.0 * pi / k;
    AppendixIntegralReport rep;
    rep.y1 = y1;
    rep.theta = theta;
    rep.s0 = s0;
    rep.k = k;
    const detail::GaussRule& g = detail::gauss16();
    cdouble a1 = 0.0, a2 = 0.0, a3 = 0.0;
    double prev = s0;
    for (double l : l_list) {
        int nseg = detail::panels_for(l - prev, lam / 8.0);
        double hseg = (l - prev) / nseg;
        for (int s = 0; s < nseg; ++s) {
            double lo = prev + s * hseg;
            for (size_t q = 0; q < g.x.size(); ++q) {
                double t = lo + 0.5 * hseg * (1.0 + g.x[q]);
                double wq = 0.5 * hseg * g.w[q];
                double d = std::hypot(t - y1 * ct, y1 * st);
                cdouble h1 = hankel1(1, k * d);
                cdouble h1p = hankel1(0, k * d) - h1 / (k * d);
                cdouble e = std::exp(cdouble(0.0, k * t));
                a1 += wq * (k * t * y1 * st * st / (d * d)) * h1p * e;
                a2 += wq * (ct / d) * h1 * e;
                a3 -= wq * (t * y1 * st * st / (d * d * d)) * h1 * e;
            }
        }
        rep.l.push_back(l);
        rep.i1.push_back(a1);
        rep.i2.push_back(a2);
        rep.i3.push_back(a3);
        prev = l;
    }
    for (size_t i = 0; i + 1 < rep.l.size(); ++i) {
        rep.cauchy1.push_back(std::abs(rep.i1[i + 1] - rep.i1[i]));
        rep.cauchy2.push_back(std::abs(rep.i2[i + 1] - rep.i2[i]));
        rep.cauchy3.push_back(std::abs(rep.i3[i + 1] - rep.i3[i]));
    }
    return rep;
}

namespace detail {

// Upward propagation of a sampled horizontal line trace: zero-pad the
// (already tapered) samples, FFT, multiply by e^{i gamma(xi) (x2 - a)} with
// gamma = sqrt(k^2 - xi^2) on the propagating band and i sqrt(xi^2 - k^2)
// beyond it, and sum the spectrum at each probe.  Padding pushes the FFT's
// periodic images far away; without it they dominate the error.
inline std::vector<cdouble> asr_propagate(const std::vector<cdouble>& samples, double x1_first,
                                          double dx, double a, double k,
                                          const std::vector<Point>& probes, int pad = 32) {
    const int n = int(samples.size()) * std::max(1, pad);
    std::vector<cdouble> padded(n, 0.0);
    std::copy(samples.begin(), samples.end(), padded.begin());
    Eigen::FFT<double> fft;
    std::vector<cdouble> spectrum;
    fft.fwd(spectrum, padded);
    std::vector<cdouble> out(probes.size(), 0.0);
    for (size_t p = 0; p < probes.size(); ++p) {
        const double dy = probes[p].x2 - a;
        cdouble acc = 0.0;
        for (int m = 0; m < n; ++m) {
            int mm = m < n / 2 ? m : m - n;
            double xi = 2.0 * pi * mm / (n * dx);
            cdouble gamma = std::abs(xi) <= k
                                ? cdouble(std::sqrt(k * k - xi * xi), 0.0)
                                : cdouble(0.0, std::sqrt(xi * xi - k * k));
            acc += spectrum[m] * std::exp(cdouble(0.0, 1.0) * gamma * dy) *
                   std::exp(cdouble(0.0, xi * (probes[p].x1 - x1_first)));
        }
        out[p] = acc / double(n);
    }
    return out;
}

inline double tukey_taper(double dist_from_center, double half_window, double taper) {
    double excess = dist_from_center - (half_window - taper);
    if (excess <= 0.0) return 1.0;
    if (excess >= taper) return 0.0;
    double c = std::cos(0.5 * pi * excess / taper);
    return c * c;
}

}  // namespace detail

// Compares the solved scattered field above the line x2 = a with its
// angular-spectrum reconstruction from that line.  Windowed and tapered, so
// this is a consistency check, exact only as the window grows; plane-wave
// incidence is rejected because its reflected spectrum is a delta line the
// taper cannot represent.
inline double asr_check(const Solution& sol, double a, const std::vector<Point>& probes,
                        double half_window = 100.0, double taper = 50.0, int n = 4096) {
    const PointSource* ps = std::get_if<PointSource>(&sol.problem.incidence);
    if (!ps)
        throw ConfigError("asr: needs a point-source field (a reflected plane wave has a "
                          "singular line spectrum)");
    const double k = sol.problem.k;
    if (!(a < sol.problem.pml.entrance))
        throw DiagnosticError("asr: sampling line inside the absorber");
    if (!(ps->z.x2 < a)) throw DiagnosticError("asr: source must sit below the sampling line");
    for (const auto& rs : sol.regions) {
        if (!(a > rs.geom.ground)) throw DiagnosticError("asr: sampling line hits the surface");
        for (double b : rs.geom.profile_breaks())
            if (b > a) throw DiagnosticError("asr: medium must be homogeneous above the line");
        if (rs.geom.n_at(a) != 1.0)
            throw DiagnosticError("asr: medium must be homogeneous above the line");
    }
    for (Point p : probes) {
        if (!(p.x2 > a)) throw DiagnosticError("asr: probe below the sampling line");
        if (!(p.x2 < sol.problem.pml.entrance))
            throw DiagnosticError("asr: probe inside the absorber");
    }

    const double center = ps->z.x1;
    const double dx = 2.0 * half_window / n;
    auto scattered = [&](Point p) {
        return eval_total(sol, p) - incident_field(k, sol.problem.incidence, p);
    };
    std::vector<cdouble> samples(n);
    const double x1_first = center - half_window;
    for (int i = 0; i < n; ++i) {
        double x1 = x1_first + i * dx;
        samples[i] =
            scattered({x1, a}) * detail::tukey_taper(std::abs(x1 - center), half_window, taper);
    }
    std::vector<cdouble> up = detail::asr_propagate(samples, x1_first, dx, a, k, probes);
    double mref = 0.0, mdiff = 0.0;
    for (size_t p = 0; p < probes.size(); ++p) {
        cdouble direct = scattered(probes[p]);
        mref = std::max(mref, std::abs(direct));
        mdiff = std::max(mdiff, std::abs(up[p] - direct));
    }
    return mref > 0.0 ? mdiff / mref : mdiff;
}

struct RayLimitReport {
    std::vector<double> r1;
    std::vector<cdouble> value;   // (1 - c_h) int_{s_lo}^{r1} e^{iks} dnu Phi ds
    std::vector<double> cauchy;   // successive |value_{i+1} - value_i|
};

// Truncations of the far-field ray limit: one point-source solve with the
// source at x, then the phase-weighted normal derivative of the solved
// Green function integrated along the upper transverse ray out to each r1.
// The normal derivative is a centered difference across the ray.  When
// c_h = 1 the prefactor kills the limit and no solve is run.
inline RayLimitReport f_limit_check(Point x, double theta, double h,
                                    const std::vector<double>& r1_list, double k = 2.0 * pi,
                                    double s_lo = 1.0, NodeBudget budget = NodeBudget{},
                                    double entrance = 0.0) {
    if (!(theta > 0.0) || !(theta < 0.5 * pi))
        throw DiagnosticError("ray limit: incidence angle must be in (0, pi/2)");
    if (h < 0.0) throw DiagnosticError("ray limit: negative step height");
    for (size_t i = 0; i < r1_list.size(); ++i)
        if (!(r1_list[i] > (i == 0 ? s_lo : r1_list[i - 1])))
            throw DiagnosticError("ray limit: truncation radii must ascend past the inner cutoff");

    RayLimitReport rep;
    rep.r1 = r1_list;
    const double beta = k * std::sin(theta);
    const cdouble pref = 1.0 - std::exp(cdouble(0.0, 2.0 * beta * h));
    // 2 beta h at a multiple of 2 pi cancels only to roundoff
    if (std::abs(pref) < 1e-14 || r1_list.empty()) {
        rep.value.assign(r1_list.size(), 0.0);
        rep.cauchy.assign(r1_list.empty() ? 0 : r1_list.size() - 1, 0.0);
        return rep;
    }

    const double r_max = r1_list.back();
    double L = entrance > 0.0 ? entrance : std::max(2.5, r_max * std::sin(theta) + 0.75);
    if (!(r_max * std::sin(theta) < L - 0.1))
        throw DiagnosticError("ray limit: truncation radius beyond the computable strip");
    Problem prob;
    prob.surface = h > 0.0 ? SteppedSurface{{0.0}, {0.0, -h}} : SteppedSurface{{}, {0.0}};
    prob.incidence = PointSource{x};
    prob.k = k;
    prob.pml = PmlParams{L, 1.0, 70.0};
    prob.budget = budget;
    Solution sol = solve_problem(prob);

    const double ct = std::cos(theta), st = std::sin(theta);
    const Point nu{st, -ct};
    const double delta = 1e-4 * (2.0 * pi / k);
    auto integrand = [&](double s) {
        Point y{s * ct, s * st};
        cdouble dphi = (eval_total(sol, {y.x1 + delta * nu.x1, y.x2 + delta * nu.x2}) -
                        eval_total(sol, {y.x1 - delta * nu.x1, y.x2 - delta * nu.x2})) /
                       (2.0 * delta);
        return std::exp(cdouble(0.0, k * s)) * dphi;
    };
    const double lam = 2.0 * pi / k;
    cdouble acc = 0.0;
    double prev = s_lo;
    for (double r1 : r1_list) {
        acc += detail::integrate_panels(integrand, prev, r1,
                                        detail::panels_for(r1 - prev, lam / 8.0));
        rep.value.push_back(pref * acc);
        prev = r1;
    }
    for (size_t i = 0; i + 1 < rep.value.size(); ++i)
        rep.cauchy.push_back(std::abs(rep.value[i + 1] - rep.value[i]));
    return rep;
}

namespace detail {

inline double point_segment_distance(Point p, Point a, Point b) {
    double vx = b.x1 - a.x1, vy = b.x2 - a.x2;
    double wx = p.x1 - a.x1, wy = p.x2 - a.x2;
    double t = (vx * vx + vy * vy) > 0.0 ? (wx * vx + wy * vy) / (vx * vx + vy * vy) : 0.0;
    t = std::clamp(t, 0.0, 1.0);
    return std::hypot(wx - t * vx, wy - t * vy);
}

inline double distance_to_surface(const std::vector<Region>& regions, Point p) {
    const double far = 1e6;
    double best = std::numeric_limits<double>::infinity();
    for (size_t i = 0; i < regions.size(); ++i) {
        double lo = std::max(regions[i].x1_lo, -far);
        double hi = std::min(regions[i].x1_hi, far);
        best = std::min(best, point_segment_distance(p, {lo, regions[i].ground},
                                                     {hi, regions[i].ground}));
        if (i + 1 < regions.size()) {
            double b = regions[i].x1_hi;
            double g0 = std::min(regions[i].ground, regions[i + 1].ground);
            double g1 = std::max(regions[i].ground, regions[i + 1].ground);
            if (g1 > g0) best = std::min(best, point_segment_distance(p, {b, g0}, {b, g1}));
        }
    }
    return best;
}

}  // namespace detail

// Solves the same geometry twice with the point source at x and then at z
// and compares the cross evaluations; the solved Green function must be
// symmetric.  Incidence in `base` is ignored.
inline double reciprocity_check(Problem base, Point x, Point z) {
    const double lam = 2.0 * pi / base.k;
    if (std::hypot(x.x1 - z.x1, x.x2 - z.x2) < 0.25 * lam)
        throw DiagnosticError("reciprocity: points closer than a quarter wavelength");
    auto regions = build_regions(base.surface, base.inclusions);
    if (detail::distance_to_surface(regions, x) < 0.25 * lam ||
        detail::distance_to_surface(regions, z) < 0.25 * lam)
        throw DiagnosticError("reciprocity: point too close to the surface");
    base.incidence = PointSource{z};
    cdouble at_x = eval_total(solve_problem(base), x);
    base.incidence = PointSource{x};
    cdouble at_z = eval_total(solve_problem(base), z);
    double scale = std::max(std::abs(at_x), std::abs(at_z));
    return scale > 0.0 ? std::abs(at_x - at_z) / scale : 0.0;
}

// Max |u^tot| over off-collocation probes on the sound-soft surface inside
// [x1_lo, x1_hi]: ground segments plus every exposed wall, walls sampled
// from the lower-ground side and always including their midpoint.
inline double surface_residual(const Solution& sol, double x1_lo, double x1_hi,
                               int probes_per_wavelength = 40) {
    if (!(x1_hi > x1_lo)) throw DiagnosticError("surface residual: empty window");
    const double lam = 2.0 * pi / sol.problem.k;
    const double off = 0.381966;  // keeps probes clear of collocation nodes
    double worst = 0.0;
    for (size_t r = 0; r < sol.regions.size(); ++r) {
        const Region& geom = sol.regions[r].geom;
        double lo = std::max(x1_lo, geom.x1_lo), hi = std::min(x1_hi, geom.x1_hi);
        if (!(hi > lo)) continue;
        int m = std::max(2, int(std::ceil((hi - lo) / lam * probes_per_wavelength)));
        for (int j = 0; j < m; ++j) {
            double x1 = lo + (j + off) / m * (hi - lo);
            worst = std::max(worst, std::abs(eval_total(sol, {x1, geom.ground}, int(r))));
        }
    }
    for (size_t r = 0; r + 1 < sol.regions.size(); ++r) {
        double b = sol.regions[r].geom.x1_hi;
        if (b < x1_lo || b > x1_hi) continue;
        double ga = sol.regions[r].geom.ground, gb = sol.regions[r + 1].geom.ground;
        if (ga == gb) continue;
        int lower = ga < gb ? int(r) : int(r + 1);
        double g0 = std::min(ga, gb), g1 = std::max(ga, gb);
        int m = std::max(3, int(std::ceil((g1 - g0) / lam * probes_per_wavelength)));
        for (int j = 0; j <= m; ++j) {
            double x2 = j == m ? 0.5 * (g0 + g1) : g0 + (j + off) / m * (g1 - g0);
            worst = std::max(worst, std::abs(eval_total(sol, {b, x2}, lower)));
        }
    }
    return worst;
}

struct JumpReport {
    double value_rel = 0.0;  // measured vs predicted jump of v across the ray
    double deriv_rel = 0.0;  // mismatch of the one-sided normal derivatives
};

// Checks the sector-jump identity on a solved field: across the upper
// transverse ray, v jumps by (refl_dn - refl_up) e^{i(alpha x1 + beta x2)}
// while its normal derivative stays continuous.  One-sided values use a
// fixed reference per side, so finite differencing never crosses the jump.
inline JumpReport jump_identity_check(const Solution& sol, int nprobes = 20,
                                      double delta_value = 1e-6, double delta_deriv = 1e-3) {
    detail::SectorFrame f = detail::sector_frame(sol);
    if (!f.rightward) throw DiagnosticError("jump check: incidence must travel rightward");
    const double k = sol.problem.k;
    const double alpha = k * std::cos(f.theta), beta = k * std::sin(f.theta);
    const ReferenceField ref_up = ReferenceField::plane_uniform(k, f.theta, f.g_up);
    const ReferenceField ref_dn = ReferenceField::plane_uniform(k, f.theta, f.g_dn);
    const cdouble jump_amp = ref_dn.reflection() - ref_up.reflection();
    // 2 beta h at a multiple of 2 pi degenerates the identity to 0 = 0 up to
    // roundoff, exactly like a flat surface
    if (std::abs(jump_amp) < 1e-14)
        throw ConfigError("jump check: the two reflections coincide; nothing to measure");

    auto v_up = [&](Point p) {
        return eval_total(sol, p) - ref_up.value(p.x1, sol.problem.pml.stretched(p.x2));
    };
    auto v_dn = [&](Point p) {
        return eval_total(sol, p) - ref_dn.value(p.x1, sol.problem.pml.stretched(p.x2));
    };
    const Point tau{std::cos(f.theta), std::sin(f.theta)};
    const Point nu{std::sin(f.theta), -std::cos(f.theta)};
    const double s_max =
        (sol.problem.pml.entrance - 3.0 * delta_deriv - f.anchor.x2) / std::sin(f.theta);

    JumpReport rep;
    double dscale = 0.0, dmiss = 0.0;
    for (int i = 0; i < nprobes; ++i) {
        double s = s_max * (0.2 + 0.75 * (i + 0.5) / nprobes);
        Point x{f.anchor.x1 + s * tau.x1, f.anchor.x2 + s * tau.x2};
        auto shift = [&](double t) { return Point{x.x1 + t * nu.x1, x.x2 + t * nu.x2}; };
        cdouble expected =
            jump_amp * std::exp(cdouble(0.0, alpha * x.x1 + beta * x.x2));
        cdouble measured = v_up(shift(-delta_value)) - v_dn(shift(delta_value));
        rep.value_rel =
            std::max(rep.value_rel, std::abs(measured - expected) / std::abs(expected));

        const double dd = delta_deriv;
        cdouble d_up =
            (3.0 * v_up(x) - 4.0 * v_up(shift(-dd)) + v_up(shift(-2.0 * dd))) / (2.0 * dd);
        cdouble d_dn =
            (-3.0 * v_dn(x) + 4.0 * v_dn(shift(dd)) - v_dn(shift(2.0 * dd))) / (2.0 * dd);
        dscale = std::max({dscale, std::abs(d_up), std::abs(d_dn)});
        dmiss = std::max(dmiss, std::abs(d_up - d_dn));
    }
    if (dscale == 0.0) throw DiagnosticError("jump check: vanishing normal derivatives");
    rep.deriv_rel = dmiss / dscale;
    return rep;
}

// Five-point finite-difference Helmholtz residual of the solved total field,
// relative to k^2 max |u| over the stencil.  Probes must keep the whole
// stencil inside one region, above its ground and below the absorber.
inline double helmholtz_fd_residual(const Solution& sol, const std::vector<Point>& probes,
                                    double step) {
    const double k = sol.problem.k;
    double worst = 0.0;
    for (Point p : probes) {
        int r = sol.region_of(p.x1);
        const Region& geom = sol.regions[r].geom;
        if (p.x1 - step < geom.x1_lo || p.x1 + step > geom.x1_hi ||
            p.x2 - step <= geom.ground || p.x2 + step >= sol.problem.pml.entrance)
            throw DiagnosticError("helmholtz probe: stencil leaves its region");
        for (double b : geom.profile_breaks())
            if (std::abs(p.x2 - b) <= step)
                throw DiagnosticError("helmholtz probe: stencil crosses a material layer");
        double n = geom.n_at(p.x2);
        cdouble uc = eval_total(sol, p);
        cdouble lap = (eval_total(sol, {p.x1 + step, p.x2}) + eval_total(sol, {p.x1 - step, p.x2}) +
                       eval_total(sol, {p.x1, p.x2 + step}) + eval_total(sol, {p.x1, p.x2 - step}) -
                       4.0 * uc) /
                      (step * step);
        double scale = k * k * std::max(std::abs(uc), 1e-30);
        worst = std::max(worst, std::abs(lap + k * k * n * n * uc) / scale);
    }
    return worst;
}

}  // namespace stepwave
