#include <catch2/catch_amalgamated.hpp>

#include "stepwave/fields.hpp"

using namespace stepwave;

namespace {

const double inf = std::numeric_limits<double>::infinity();

Region uniform_region(double ground) {
    Region r;
    r.ground = ground;
    r.layers.push_back({ground, inf, 1.0});
    return r;
}

// Explicit half-plane reflection formula for a uniform region.
cdouble plane_formula(double k, double theta, double g, double x1, double x2) {
    double a = alpha_of(k, theta), b = beta_of(k, theta);
    cdouble iu(0.0, 1.0);
    return std::exp(iu * (a * x1 - b * x2)) -
           std::exp(-2.0 * iu * b * g) * std::exp(iu * (a * x1 + b * x2));
}

}  // namespace

TEST_CASE("free-space kernel matches the frozen reference value") {
    // (i/4) H0(2 * 1.06301458127346494), x = (0.3, 1.7), z = (-0.4, 0.9)
    cdouble g = green(2.0, {0.3, 1.7}, {-0.4, 0.9});
    CHECK(g.real() == Catch::Approx(-0.12986390536342492).epsilon(1e-13));
    CHECK(g.imag() == Catch::Approx(0.037962797336981792).epsilon(1e-13));
    CHECK(green(2.0, {-0.4, 0.9}, {0.3, 1.7}) == g);  // symmetric kernel
    CHECK_THROWS(green(2.0, {0.3, 1.7}, {0.3, 1.7}));
}

TEST_CASE("complexified kernel reduces to the real one on the real axis") {
    Point z{-0.4, 0.9};
    for (double x2 : {0.1, 1.3, 4.0}) {
        cdouble a = green_c(2.0, 0.3, cdouble(x2), z);
        cdouble b = green(2.0, {0.3, x2}, z);
        CHECK(std::abs(a - b) <= 1e-14 * std::abs(b));
    }
    // lateral derivative against central differences
    double d = 1e-6;
    cdouble fd = (green_c(2.0, 0.3 + d, cdouble(1.3), z) - green_c(2.0, 0.3 - d, cdouble(1.3), z)) /
                 (2.0 * d);
    cdouble an = green_dx1_c(2.0, 0.3, cdouble(1.3), z);
    CHECK(std::abs(fd - an) <= 1e-8 * std::abs(an));
}

TEST_CASE("complexified kernel decays along the stretched contour") {
    Point z{0.0, 0.5};
    double m0 = std::abs(green_c(2.0, 1.0, cdouble(3.0, 0.0), z));
    double m1 = std::abs(green_c(2.0, 1.0, cdouble(3.0, 0.5), z));
    double m2 = std::abs(green_c(2.0, 1.0, cdouble(3.0, 2.0), z));
    CHECK(m1 < m0);
    CHECK(m2 < 0.1 * m1);
}

TEST_CASE("incident field forms") {
    Incidence pw = PlaneWave{pi / 6.0};
    cdouble u = incident_field(2.0, pw, {0.7, 1.1});
    double a = 2.0 * std::cos(pi / 6.0), b = 2.0 * std::sin(pi / 6.0);
    cdouble want = std::exp(cdouble(0.0, a * 0.7 - b * 1.1));
    CHECK(std::abs(u - want) <= 1e-15);

    Incidence ps = PointSource{{-0.4, 0.9}};
    CHECK(incident_field(2.0, ps, {0.3, 1.7}) == green(2.0, {0.3, 1.7}, {-0.4, 0.9}));
}

TEST_CASE("step phase factor") {
    cdouble c = step_phase(2.0, pi / 6.0, 0.75);
    CHECK(std::abs(std::abs(c) - 1.0) <= 1e-15);
    CHECK(std::abs(c - std::exp(cdouble(0.0, 1.5))) <= 1e-15);  // beta = 1
    // resonant height: 2 beta h = 2 pi
    CHECK(std::abs(step_phase(2.0, pi / 6.0, pi) - 1.0) <= 1e-14);
}

TEST_CASE("uniform plane reference: reflection, trace, and formula") {
    const double k = 2.0, th = pi / 6.0, g = 0.25;
    auto w = ReferenceField::plane_uniform(k, th, g);
    CHECK(w.kind() == ReferenceField::Kind::Plane);
    CHECK_FALSE(w.is_zero());

    double b = beta_of(k, th);
    cdouble want_r = -std::exp(cdouble(0.0, -2.0 * b * g));
    CHECK(std::abs(w.reflection() - want_r) <= 1e-15);

    for (double x1 : {-2.0, 0.3, 5.0}) {
        CHECK(std::abs(w.value(x1, cdouble(g))) <= 1e-14);  // soft ground
        for (double x2 : {0.3, 1.9, 6.0}) {
            cdouble want = plane_formula(k, th, g, x1, x2);
            CHECK(std::abs(w.value(x1, cdouble(x2)) - want) <= 1e-13);
            CHECK(std::abs(w.dx1(x1, cdouble(x2)) - cdouble(0.0, w.alpha()) * want) <= 1e-13);
        }
    }

    // grazing and steep angles are accepted; the axis itself is not
    CHECK_THROWS_AS(ReferenceField::plane_uniform(k, 0.0, g), ConfigError);
    CHECK_THROWS_AS(ReferenceField::plane_uniform(k, pi, g), ConfigError);
}

TEST_CASE("uniform plane reference built from a region matches the direct form") {
    const double k = 2.0, th = 0.8, g = -0.5;
    auto wr = ReferenceField::plane(k, th, uniform_region(g));
    auto wu = ReferenceField::plane_uniform(k, th, g);
    for (double x2 : {-0.5, 0.2, 2.7})
        CHECK(std::abs(wr.value(1.1, cdouble(x2)) - wu.value(1.1, cdouble(x2))) <= 1e-14);
}

TEST_CASE("layered plane reference: frozen transfer-matrix values") {
    // ground 0, slab [0, 0.6] with n = 1.5, k = 2, theta = pi/3
    Region r;
    r.ground = 0.0;
    r.layers = {{0.0, 0.6, 1.5}, {0.6, inf, 1.0}};
    auto w = ReferenceField::plane(2.0, pi / 3.0, r);

    cdouble want_r(-0.098724033516249645, -0.99511485025914593);
    CHECK(std::abs(w.reflection() - want_r) <= 1e-13);
    CHECK(std::abs(std::abs(w.reflection()) - 1.0) <= 1e-13);  // lossless slab

    cdouble w_in(1.3287906374429528, -0.97872756250701153);
    CHECK(std::abs(w.value(0.2, cdouble(0.35)) - w_in) <= 1e-13);
    cdouble w_ab(0.77257304217624727, -0.56904263856257596);
    CHECK(std::abs(w.value(0.2, cdouble(1.1)) - w_ab) <= 1e-13);
    CHECK(std::abs(w.value(0.2, cdouble(0.0))) == 0.0);  // hard zero on the ground
}

TEST_CASE("layered plane reference is C^1 across the slab top and solves the ODE") {
    Region r;
    r.ground = 0.0;
    r.layers = {{0.0, 0.6, 1.5}, {0.6, inf, 1.0}};
    const double k = 2.0, th = pi / 3.0;
    auto w = ReferenceField::plane(k, th, r);

    double d = 1e-6;
    cdouble below = w.value(0.0, cdouble(0.6 - d));
    cdouble at = w.value(0.0, cdouble(0.6));
    CHECK(std::abs(below - at) <= 1e-5);
    cdouble slope_below = (at - w.value(0.0, cdouble(0.6 - d))) / d;
    cdouble slope_above = (w.value(0.0, cdouble(0.6 + d)) - at) / d;
    CHECK(std::abs(slope_below - slope_above) <= 1e-4 * std::abs(slope_above));

    // w'' + (k^2 n^2 - alpha^2) w = 0 inside the slab, via central differences
    double a = alpha_of(k, th);
    double h = 1e-4, x2 = 0.35;
    cdouble wm = w.value(0.0, cdouble(x2 - h)), w0 = w.value(0.0, cdouble(x2)),
            wp = w.value(0.0, cdouble(x2 + h));
    cdouble resid = (wm - 2.0 * w0 + wp) / (h * h) + (k * k * 2.25 - a * a) * w0;
    CHECK(std::abs(resid) <= 1e-6 * std::abs(w0) * (k * k * 2.25));
}

TEST_CASE("a slab of background material is no slab at all") {
    Region r;
    r.ground = 0.25;
    r.layers = {{0.25, 0.85, 1.0}, {0.85, inf, 1.0}};
    auto w = ReferenceField::plane(2.0, 0.6, r);
    auto wu = ReferenceField::plane_uniform(2.0, 0.6, 0.25);
    CHECK(std::abs(w.reflection() - wu.reflection()) <= 1e-14);
    for (double x2 : {0.4, 0.85, 2.0})
        CHECK(std::abs(w.value(-0.7, cdouble(x2)) - wu.value(-0.7, cdouble(x2))) <= 1e-13);
}

TEST_CASE("point-source reference: image pair over a uniform region") {
    Point z{0.4, 1.2};
    auto w = ReferenceField::point_uniform(2.0, z, 0.25);
    CHECK(w.kind() == ReferenceField::Kind::PointImages);
    CHECK(w.image().x1 == 0.4);
    CHECK(w.image().x2 == Catch::Approx(-0.7).margin(1e-15));

    for (double x1 : {-1.0, 2.0})
        CHECK(std::abs(w.value(x1, cdouble(0.25))) <= 1e-15);  // soft ground

    cdouble want = green(2.0, {1.0, 2.0}, z) - green(2.0, {1.0, 2.0}, {0.4, -0.7});
    CHECK(std::abs(w.value(1.0, cdouble(2.0)) - want) <= 1e-15);

    // stretched evaluation stays finite and decays
    double m0 = std::abs(w.value(1.0, cdouble(3.0, 0.0)));
    double m2 = std::abs(w.value(1.0, cdouble(3.0, 2.0)));
    CHECK(std::isfinite(m2));
    CHECK(m2 < m0);
}

TEST_CASE("point-source reference vanishes on regions with a slab") {
    Region r;
    r.ground = 0.0;
    r.layers = {{0.0, 0.6, 1.5}, {0.6, inf, 1.0}};
    auto w = ReferenceField::point_source(2.0, {0.4, 1.2}, r);
    CHECK(w.is_zero());
    CHECK(w.value(1.0, cdouble(2.0)) == cdouble(0.0, 0.0));
    CHECK(w.dx1(1.0, cdouble(2.0)) == cdouble(0.0, 0.0));
}

TEST_CASE("incidence dispatch picks the matching reference") {
    Region r = uniform_region(0.0);
    auto wp = ReferenceField::make(2.0, PlaneWave{0.7}, r);
    CHECK(wp.kind() == ReferenceField::Kind::Plane);
    auto ws = ReferenceField::make(2.0, PointSource{{0.0, 1.0}}, r);
    CHECK(ws.kind() == ReferenceField::Kind::PointImages);
}

TEST_CASE("plane interface jump: explicit cancellation equals direct difference") {
    const double k = 2.0, th = pi / 6.0, b = 0.8;
    auto wl = ReferenceField::plane_uniform(k, th, 0.5);
    auto wr = ReferenceField::plane_uniform(k, th, 0.0);

    // real heights above both grounds: compare with the direct difference
    for (double x2 : {0.6, 1.7, 4.2}) {
        JumpData j = interface_jump_data(wl, wr, b, cdouble(x2));
        cdouble direct = plane_formula(k, th, 0.0, b, x2) - plane_formula(k, th, 0.5, b, x2);
        CHECK(std::abs(j.du - direct) <= 1e-13);
        CHECK(std::abs(j.dup - cdouble(0.0, wl.alpha()) * direct) <= 1e-13);
    }

    // moderately stretched height: the direct difference is still computable
    cdouble x2hat(3.0, 0.7);
    JumpData j = interface_jump_data(wl, wr, b, x2hat);
    cdouble direct = wr.value(b, x2hat) - wl.value(b, x2hat);
    CHECK(std::abs(j.du - direct) <= 1e-12 * std::abs(direct));

    // deep in the absorber the jump stays bounded (the incident parts, taken
    // separately, would have blown up by e^{beta * 40})
    cdouble deep = interface_jump_data(wl, wr, b, cdouble(3.0, 40.0)).du;
    CHECK(std::isfinite(std::abs(deep)));
    CHECK(std::abs(deep) < 1.0);
}

TEST_CASE("point interface jump: free terms cancel, images remain") {
    Point z{0.3, 1.4};
    auto wl = ReferenceField::point_uniform(2.0, z, 0.5);
    auto wr = ReferenceField::point_uniform(2.0, z, 0.0);
    JumpData j = interface_jump_data(wl, wr, 0.8, cdouble(2.0));
    cdouble want = green(2.0, {0.8, 2.0}, wl.image()) - green(2.0, {0.8, 2.0}, wr.image());
    CHECK(std::abs(j.du - want) <= 1e-13);

    // one side carries no reference at all (slab column)
    Region slab;
    slab.ground = 0.0;
    slab.layers = {{0.0, 0.6, 1.5}, {0.6, inf, 1.0}};
    auto wz = ReferenceField::point_source(2.0, z, slab);
    JumpData jz = interface_jump_data(wz, wr, 0.8, cdouble(2.0));
    CHECK(std::abs(jz.du - wr.value(0.8, cdouble(2.0))) <= 1e-15);
}

TEST_CASE("mixed plane/point jumps are rejected") {
    auto wp = ReferenceField::plane_uniform(2.0, 0.7, 0.0);
    auto ws = ReferenceField::point_uniform(2.0, {0.0, 1.0}, 0.5);
    CHECK_THROWS(interface_jump_data(wp, ws, 0.0, cdouble(1.0)));
}
