#pragma once

// Incident fields, free-space Green's function, and the per-region reference
// fields subtracted from the total wave to leave an outgoing remainder.
//
// Every reference field W satisfies the region's own layered Helmholtz
// equation and vanishes on the region's ground:
//   - plane incidence: W = e^{i alpha x1} w(x2), where w solves the 1-D
//     layered problem with unit-amplitude incoming wave; on a uniform region
//     this reduces to e^{i(a x1 - b x2)} - e^{-2 i b g} e^{i(a x1 + b x2)}.
//   - point source: W = G(x; z) - G(x; z*), z* the image of z across the
//     region's ground; on a region with a non-unit layer the reference is
//     zero instead (the total field itself is expanded there).
//
// Values accept a complex vertical coordinate so the same closures serve the
// PML-stretched collocation rows; above the layer stack the plane reference
// is kept in explicit incident + reflected form so interface differences
// cancel the (exponentially growing) incident part exactly.

#include <complex>
#include <variant>
#include <vector>

#include "stepwave/eigensolver.hpp"
#include "stepwave/geometry.hpp"
#include "stepwave/specfun.hpp"

namespace stepwave {

struct PlaneWave {
    double theta = 0.5;  // elevation in (0, pi), measured from the positive x1 axis
};

struct PointSource {
    Point z;
};

using Incidence = std::variant<PlaneWave, PointSource>;

inline double alpha_of(double k, double theta) { return k * std::cos(theta); }
inline double beta_of(double k, double theta) { return k * std::sin(theta); }

/// Phase factor e^{2 i beta h} relating the two half-line reflections of the
/// canonical step; equal to 1 exactly when the step height is resonant.
inline cdouble step_phase(double k, double theta, double h) {
    return std::exp(cdouble(0.0, 2.0 * beta_of(k, theta) * h));
}

/// Free-space Green's function (i/4) H0(k |x - z|).
inline cdouble green(double k, Point x, Point z) {
    double r = std::hypot(x.x1 - z.x1, x.x2 - z.x2);
    if (r == 0.0) throw std::invalid_argument("green: evaluation at the source point");
    return cdouble(0.0, 0.25) * hankel1(0, k * r);
}

namespace detail {

inline cdouble stretched_dist(double x1, cdouble x2hat, Point z) {
    cdouble dx2 = x2hat - z.x2;
    return std::sqrt(cdouble((x1 - z.x1) * (x1 - z.x1)) + dx2 * dx2);
}

}  // namespace detail

inline cdouble green_c(double k, double x1, cdouble x2hat, Point z) {
    cdouble r = detail::stretched_dist(x1, x2hat, z);
    if (std::abs(r) == 0.0) throw std::invalid_argument("green: evaluation at the source point");
    return cdouble(0.0, 0.25) * hankel1c(0, k * r);
}

inline cdouble green_dx1_c(double k, double x1, cdouble x2hat, Point z) {
    cdouble r = detail::stretched_dist(x1, x2hat, z);
    if (std::abs(r) == 0.0) throw std::invalid_argument("green: evaluation at the source point");
    return cdouble(0.0, -0.25) * k * hankel1c(1, k * r) * ((x1 - z.x1) / r);
}

// Derivative with respect to the complex vertical coordinate; at real heights
// this is the physical d/dx2.
inline cdouble green_dx2_c(double k, double x1, cdouble x2hat, Point z) {
    cdouble r = detail::stretched_dist(x1, x2hat, z);
    if (std::abs(r) == 0.0) throw std::invalid_argument("green: evaluation at the source point");
    return cdouble(0.0, -0.25) * k * hankel1c(1, k * r) * ((x2hat - z.x2) / r);
}

inline cdouble incident_field(double k, const Incidence& inc, Point x) {
    if (const auto* pw = std::get_if<PlaneWave>(&inc)) {
        double a = alpha_of(k, pw->theta), b = beta_of(k, pw->theta);
        return std::exp(cdouble(0.0, a * x.x1 - b * x.x2));
    }
    return green(k, x, std::get<PointSource>(inc).z);
}

class ReferenceField {
  public:
    enum class Kind { Plane, PointImages, Zero };

    static ReferenceField plane(double k, double theta, const Region& region) {
        if (!(theta > 0.0) || !(theta < pi))
            throw ConfigError("plane wave: theta outside (0, pi)");
        ReferenceField w;
        w.kind_ = Kind::Plane;
        w.k_ = k;
        w.alpha_ = alpha_of(k, theta);
        w.beta_ = beta_of(k, theta);
        w.build_layers(region);
        return w;
    }

    static ReferenceField plane_uniform(double k, double theta, double ground) {
        Region r;
        r.ground = ground;
        r.layers.push_back({ground, std::numeric_limits<double>::infinity(), 1.0});
        return plane(k, theta, r);
    }

    static ReferenceField point_source(double k, Point z, const Region& region) {
        ReferenceField w;
        w.k_ = k;
        if (!region.uniform()) {
            w.kind_ = Kind::Zero;
            return w;
        }
        w.kind_ = Kind::PointImages;
        w.z_ = z;
        w.zstar_ = {z.x1, 2.0 * region.ground - z.x2};
        return w;
    }

    static ReferenceField point_uniform(double k, Point z, double ground) {
        Region r;
        r.ground = ground;
        r.layers.push_back({ground, std::numeric_limits<double>::infinity(), 1.0});
        return point_source(k, z, r);
    }

    static ReferenceField make(double k, const Incidence& inc, const Region& region) {
        if (const auto* pw = std::get_if<PlaneWave>(&inc)) return plane(k, pw->theta, region);
        return point_source(k, std::get<PointSource>(inc).z, region);
    }

    Kind kind() const { return kind_; }
    bool is_zero() const { return kind_ == Kind::Zero; }
    /// Reflected-wave coefficient of the plane reference above its stack.
    cdouble reflection() const { return refl_; }

    cdouble value(double x1, cdouble x2hat) const {
        switch (kind_) {
            case Kind::Zero:
                return 0.0;
            case Kind::PointImages:
                return green_c(k_, x1, x2hat, z_) - green_c(k_, x1, x2hat, zstar_);
            case Kind::Plane:
            default:
                return std::exp(cdouble(0.0, alpha_ * x1)) * vertical(x2hat);
        }
    }
    cdouble value(Point x) const { return value(x.x1, cdouble(x.x2)); }

    cdouble dx1(double x1, cdouble x2hat) const {
        switch (kind_) {
            case Kind::Zero:
                return 0.0;
            case Kind::PointImages:
                return green_dx1_c(k_, x1, x2hat, z_) - green_dx1_c(k_, x1, x2hat, zstar_);
            case Kind::Plane:
            default:
                return cdouble(0.0, alpha_) * value(x1, x2hat);
        }
    }

    cdouble dx2(double x1, cdouble x2hat) const {
        switch (kind_) {
            case Kind::Zero:
                return 0.0;
            case Kind::PointImages:
                return green_dx2_c(k_, x1, x2hat, z_) - green_dx2_c(k_, x1, x2hat, zstar_);
            case Kind::Plane:
            default:
                return std::exp(cdouble(0.0, alpha_ * x1)) * vertical_d(x2hat);
        }
    }

    /// Upgoing part only (plane kind): R e^{i(alpha x1 + beta x2hat)}.
    cdouble reflected_part(double x1, cdouble x2hat) const {
        return refl_ * std::exp(cdouble(0.0, alpha_) * cdouble(x1) +
                                cdouble(0.0, beta_) * x2hat);
    }

    double alpha() const { return alpha_; }
    double beta() const { return beta_; }
    double stack_top() const { return stack_top_; }
    Point source() const { return z_; }
    Point image() const { return zstar_; }

  private:
    struct LayerWave {
        double lo, hi;
        cdouble kappa;   // vertical wavenumber in the layer
        cdouble w, wp;   // value and derivative at the layer bottom
    };

    void build_layers(const Region& region) {
        stack_top_ = region.ground;
        cdouble w(0.0, 0.0), wp(1.0, 0.0);
        std::vector<LayerWave> lw;
        for (const auto& l : region.layers) {
            if (!std::isfinite(l.hi)) {
                if (l.n != 1.0)
                    throw ConfigError("reference field: topmost medium must have n = 1");
                break;
            }
            cdouble kappa = sqrt_branch(cdouble(k_ * k_ * l.n * l.n - alpha_ * alpha_));
            lw.push_back({l.lo, l.hi, kappa, w, wp});
            cdouble c, s;
            propagate(kappa, l.hi - l.lo, c, s);
            cdouble w_top = w * c + wp * s;
            cdouble wp_top = -w * kappa * kappa * s + wp * c;
            w = w_top;
            wp = wp_top;
            stack_top_ = l.hi;
        }
        const cdouble iu(0.0, 1.0);
        cdouble denom = iu * beta_ * w - wp;
        if (std::abs(denom) == 0.0)
            throw SolverError("reference field: layered stack is degenerate at this angle");
        cdouble scale = 2.0 * iu * beta_ * std::exp(-iu * beta_ * stack_top_) / denom;
        refl_ = std::exp(-2.0 * iu * beta_ * stack_top_) * (iu * beta_ * w + wp) / denom;
        layers_ = std::move(lw);
        for (auto& l : layers_) {
            l.w *= scale;
            l.wp *= scale;
        }
    }

    // c = cos(kappa d), s = sin(kappa d)/kappa, stable as kappa -> 0.
    static void propagate(cdouble kappa, double d, cdouble& c, cdouble& s) {
        if (std::abs(kappa) * d < 1e-8) {
            c = 1.0 - 0.5 * kappa * kappa * d * d;
            s = d;
            return;
        }
        c = std::cos(kappa * cdouble(d));
        s = std::sin(kappa * cdouble(d)) / kappa;
    }

    cdouble vertical(cdouble x2hat) const {
        const cdouble iu(0.0, 1.0);
        if (layers_.empty() || x2hat.imag() != 0.0 || x2hat.real() >= stack_top_)
            return std::exp(-iu * beta_ * x2hat) + refl_ * std::exp(iu * beta_ * x2hat);
        double x2 = x2hat.real();
        for (const auto& l : layers_) {
            if (x2 <= l.hi || &l == &layers_.back()) {
                cdouble c, s;
                propagate(l.kappa, x2 - l.lo, c, s);
                return l.w * c + l.wp * s;
            }
        }
        return 0.0;  // unreachable: stack_top_ handled above
    }

    cdouble vertical_d(cdouble x2hat) const {
        const cdouble iu(0.0, 1.0);
        if (layers_.empty() || x2hat.imag() != 0.0 || x2hat.real() >= stack_top_)
            return -iu * beta_ * std::exp(-iu * beta_ * x2hat) +
                   iu * beta_ * refl_ * std::exp(iu * beta_ * x2hat);
        double x2 = x2hat.real();
        for (const auto& l : layers_) {
            if (x2 <= l.hi || &l == &layers_.back()) {
                cdouble c, s;
                propagate(l.kappa, x2 - l.lo, c, s);
                return -l.w * l.kappa * l.kappa * s + l.wp * c;
            }
        }
        return 0.0;
    }

    Kind kind_ = Kind::Zero;
    double k_ = 0.0, alpha_ = 0.0, beta_ = 0.0;
    double stack_top_ = 0.0;
    cdouble refl_{0.0, 0.0};
    std::vector<LayerWave> layers_;
    Point z_, zstar_;
};

struct JumpData {
    cdouble du;   // W_right - W_left
    cdouble dup;  // d/dx1 of the same
};

/// Interface jump data at abscissa b, height x2hat (possibly PML-stretched).
/// For plane references the common incident wave is cancelled analytically,
/// leaving only upgoing terms that stay bounded under the stretching.
inline JumpData interface_jump_data(const ReferenceField& left, const ReferenceField& right,
                                    double b, cdouble x2hat) {
    const bool lp = left.kind() == ReferenceField::Kind::Plane;
    const bool rp = right.kind() == ReferenceField::Kind::Plane;
    if (lp != rp && !(left.is_zero() || right.is_zero()))
        throw std::invalid_argument("interface_jump_data: mixed incidence kinds");
    if (lp && rp) {
        bool above = x2hat.imag() != 0.0 ||
                     x2hat.real() >= std::max(left.stack_top(), right.stack_top());
        if (above) {
            cdouble du = right.reflected_part(b, x2hat) - left.reflected_part(b, x2hat);
            return {du, cdouble(0.0, left.alpha()) * du};
        }
    }
    cdouble du = right.value(b, x2hat) - left.value(b, x2hat);
    cdouble dup = right.dx1(b, x2hat) - left.dx1(b, x2hat);
    return {du, dup};
}

}  // namespace stepwave
