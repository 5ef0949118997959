#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <complex>
#include <vector>

#include "stepwave/verify.hpp"

using namespace stepwave;

namespace {

double near(cdouble a, cdouble b) { return std::abs(a - b); }

Solution solve_half_step() {
    Problem prob;
    prob.surface = SteppedSurface{{0.0}, {0.0, -0.5}};
    prob.incidence = PlaneWave{pi / 6.0};
    prob.pml = PmlParams{2.5, 1.0, 70.0};
    prob.budget = NodeBudget{140, 70};
    return solve_problem(prob);
}

}  // namespace

TEST_CASE("relative error follows the max-ratio definition") {
    std::vector<cdouble> ref{cdouble(2.0, 0.0), cdouble(0.0, 1.0)};
    CHECK(relative_error(ref, ref) == 0.0);

    std::vector<cdouble> num{cdouble(1.0, 0.0), cdouble(0.0, 1.0)};
    CHECK(relative_error(ref, num) == Catch::Approx(0.5));

    auto fr = [](Point p) { return cdouble(p.x1, 0.0); };
    auto fn = [](Point p) { return cdouble(p.x1 + 0.1, 0.0); };
    CHECK(relative_error(fr, fn, {{2.0, 0.0}, {4.0, 0.0}}) == Catch::Approx(0.1 / 4.0));

    CHECK_THROWS_AS(relative_error(std::vector<cdouble>{0.0}, std::vector<cdouble>{1.0}),
                    DiagnosticError);
    CHECK_THROWS_AS(relative_error(ref, std::vector<cdouble>{1.0}), DiagnosticError);
}

TEST_CASE("gauss panels integrate polynomials and oscillations") {
    double poly = detail::integrate_panels([](double t) { return std::pow(t, 31); }, 0.0, 1.0, 1);
    CHECK(std::abs(poly - 1.0 / 32.0) < 1e-15);

    cdouble osc = detail::integrate_panels(
        [](double t) { return std::exp(cdouble(0.0, 10.0 * t)); }, 0.0, 2.0 * pi, 40);
    CHECK(std::abs(osc) < 1e-13);
}

TEST_CASE("closed-form arc integrals match the frozen quadrature values") {
    SECTION("half-wavelength step at pi/6") {
        auto rep = lemma_arc_integrals(2.0 * pi, pi / 6.0, 0.5, {5.0, 10.0, 20.0});
        REQUIRE(rep.radii.size() == 3);
        CHECK(rep.first[0] == Catch::Approx(8.1820736713812239e-4).epsilon(1e-12));
        CHECK(rep.first[1] == Catch::Approx(5.0771724491080044e-5).epsilon(1e-12));
        CHECK(rep.first[2] == Catch::Approx(3.1675625649687613e-6).epsilon(1e-12));
        CHECK(rep.second[0] == Catch::Approx(2.3145641177862545).epsilon(1e-13));
        CHECK(rep.second[1] == Catch::Approx(2.3106860056847372).epsilon(1e-13));
        CHECK(rep.second[2] == Catch::Approx(2.3097219472490561).epsilon(1e-13));
        CHECK(lemma_second_limit(2.0 * pi, pi / 6.0, 0.5) ==
              Catch::Approx(2.3094010767585031).epsilon(1e-13));

        // the first integral decays like 1/r^4, so halving twice gives ~16
        CHECK(rep.first[0] / rep.first[1] == Catch::Approx(16.0).margin(0.3));
        CHECK(rep.first[1] / rep.first[2] == Catch::Approx(16.0).margin(0.2));
    }

    SECTION("smaller step at pi/4") {
        auto rep = lemma_arc_integrals(2.0 * pi, pi / 4.0, 0.3, {5.0, 10.0});
        CHECK(rep.first[0] == Catch::Approx(1.6485759283830186e-4).epsilon(1e-12));
        CHECK(rep.first[1] == Catch::Approx(1.0263800533863359e-5).epsilon(1e-12));
        CHECK(rep.second[0] == Catch::Approx(1.60471249389489).epsilon(1e-13));
        CHECK(rep.second[1] == Catch::Approx(1.6032641207241727).epsilon(1e-13));
        CHECK(lemma_second_limit(2.0 * pi, pi / 4.0, 0.3) ==
              Catch::Approx(1.6027828959613327).epsilon(1e-13));
    }

    SECTION("flat limit and rejections") {
        auto rep = lemma_arc_integrals(2.0 * pi, pi / 6.0, 0.0, {3.0});
        CHECK(rep.first[0] == 0.0);
        CHECK(rep.second[0] == 0.0);
        CHECK_THROWS_AS(lemma_arc_integrals(2.0 * pi, 0.5 * pi, 0.5, {5.0}), DiagnosticError);
        CHECK_THROWS_AS(lemma_arc_integrals(2.0 * pi, pi / 6.0, 0.5, {0.5}), DiagnosticError);
    }
}

TEST_CASE("ray integrals reproduce the frozen values at l = 100") {
    SECTION("on-axis observation point") {
        auto rep = appendix_integrals(0.0, pi / 4.0, 1.0, {100.0});
        CHECK(rep.i1[0] == cdouble(0.0, 0.0));
        CHECK(rep.i3[0] == cdouble(0.0, 0.0));
        CHECK(near(rep.i2[0], cdouble(0.011814396265718888, -0.013279061081664477)) < 1e-10);
    }

    SECTION("offset observation point, pi/4") {
        auto rep = appendix_integrals(5.0, pi / 4.0, 1.0, {100.0});
        CHECK(near(rep.i1[0], cdouble(-0.05288796435181622, -0.010756094979308832)) < 1e-10);
        CHECK(near(rep.i2[0], cdouble(0.001884209329157813, 0.0092161836800022698)) < 1e-10);
        CHECK(near(rep.i3[0], cdouble(0.00049606772298867678, -0.0019247466059826017)) < 1e-10);
    }

    SECTION("offset observation point, pi/6") {
        auto rep = appendix_integrals(5.0, pi / 6.0, 2.0, {100.0});
        CHECK(near(rep.i1[0], cdouble(-0.10973053964096243, -0.063509060769264585)) < 1e-10);
        CHECK(near(rep.i2[0], cdouble(-0.004097784501242308, 0.02116816765263778)) < 1e-10);
        CHECK(near(rep.i3[0], cdouble(0.0035010624307731315, -0.0048876709398234711)) < 1e-10);
    }

    SECTION("incremental limits agree with a single shot") {
        auto two = appendix_integrals(5.0, pi / 4.0, 1.0, {50.0, 100.0});
        auto one = appendix_integrals(5.0, pi / 4.0, 1.0, {100.0});
        CHECK(near(two.i1[1], one.i1[0]) < 1e-13);
        CHECK(near(two.i2[1], one.i2[0]) < 1e-13);
        CHECK(near(two.i3[1], one.i3[0]) < 1e-13);
        REQUIRE(two.cauchy1.size() == 1);
        CHECK(two.cauchy2[0] == Catch::Approx(std::abs(two.i2[1] - two.i2[0])));
    }

    SECTION("rejections") {
        CHECK_THROWS_AS(appendix_integrals(5.0, 1e-5, 1.0, {10.0}), DiagnosticError);
        CHECK_THROWS_AS(appendix_integrals(5.0, pi / 4.0, 0.0, {10.0}), DiagnosticError);
        CHECK_THROWS_AS(appendix_integrals(5.0, pi / 4.0, 1.0, {10.0, 5.0}), DiagnosticError);
    }
}

TEST_CASE("angular spectrum propagation reproduces a free-space source") {
    const double k = 2.0 * pi, a = 1.2;
    const Point z{0.3, 0.5};
    const double half_window = 100.0, taper = 50.0;
    const int n = 4096;
    const double dx = 2.0 * half_window / n;
    const double x1_first = z.x1 - half_window;

    std::vector<cdouble> samples(n);
    for (int i = 0; i < n; ++i) {
        double x1 = x1_first + i * dx;
        samples[i] = green(k, {x1, a}, z) * detail::tukey_taper(std::abs(x1 - z.x1), half_window, taper);
    }
    std::vector<Point> probes{{0.7, 2.0}, {-1.3, 3.1}, {2.2, 1.5}};
    auto up = detail::asr_propagate(samples, x1_first, dx, a, k, probes);
    for (size_t p = 0; p < probes.size(); ++p) {
        cdouble direct = green(k, probes[p], z);
        CHECK(near(up[p], direct) / std::abs(direct) < 1e-3);
    }

    std::vector<cdouble> silent(n, 0.0);
    auto quiet = detail::asr_propagate(silent, x1_first, dx, a, k, probes);
    for (cdouble v : quiet) CHECK(v == cdouble(0.0, 0.0));

    CHECK(detail::tukey_taper(0.0, half_window, taper) == 1.0);
    CHECK(detail::tukey_taper(half_window - taper, half_window, taper) == 1.0);
    CHECK(detail::tukey_taper(half_window, half_window, taper) == 0.0);
    CHECK(detail::tukey_taper(half_window - 0.5 * taper, half_window, taper) ==
          Catch::Approx(0.5));
}

TEST_CASE("angular spectrum check on a solved point-source field") {
    Problem prob;
    prob.surface = SteppedSurface{{0.0}, {0.0, -1.0}};
    prob.incidence = PointSource{{0.2, 0.2}};
    prob.pml = PmlParams{2.5, 1.0, 70.0};
    prob.budget = NodeBudget{140, 70};
    Solution sol = solve_problem(prob);

    std::vector<Point> probes{{0.5, 2.0}, {-0.8, 1.9}};
    double dev_half = asr_check(sol, 1.5, probes, 50.0, 12.5, 2048);
    double dev_full = asr_check(sol, 1.5, probes, 100.0, 25.0, 4096);
    INFO("window 100: " << dev_half << "  window 200: " << dev_full);
    CHECK(dev_half < 5e-2);
    CHECK(dev_full < 5e-2);
    CHECK(dev_full < dev_half * 1.2 + 1e-4);

    CHECK_THROWS_AS(asr_check(sol, 1.5, {{0.5, 1.0}}), DiagnosticError);
    CHECK_THROWS_AS(asr_check(sol, 1.5, {{0.5, 2.6}}), DiagnosticError);
    CHECK_THROWS_AS(asr_check(sol, 0.1, probes), DiagnosticError);

    Problem plane = prob;
    plane.incidence = PlaneWave{pi / 6.0};
    CHECK_THROWS_AS(asr_check(solve_problem(plane), 1.5, probes), ConfigError);
}

TEST_CASE("solved step field satisfies the sector identities") {
    Solution sol = solve_half_step();

    SECTION("interfaces are watertight at the collocation nodes") {
        const auto& grid = sol.regions[0].basis.modes->grid;
        int checked = 0;
        for (int idx : grid.interior) {
            double x2 = grid.nodes(idx);
            if (x2 <= 0.0 || checked >= 6) continue;
            ++checked;
            cdouble left = eval_total(sol, {0.0, x2}, 0);
            cdouble right = eval_total(sol, {0.0, x2}, 1);
            CHECK(near(left, right) < 1e-9);
        }
        REQUIRE(checked == 6);

        // off the nodes the mismatch is truncation-level, not machine-level
        CHECK(near(eval_total(sol, {0.0, 0.9}, 0), eval_total(sol, {0.0, 0.9}, 1)) < 1e-3);
    }

    SECTION("value jump and continuous normal derivative across the ray") {
        JumpReport rep = jump_identity_check(sol);
        INFO("value " << rep.value_rel << "  deriv " << rep.deriv_rel);
        CHECK(rep.value_rel < 1e-3);
        CHECK(rep.deriv_rel < 1e-2);
    }

    SECTION("outgoing remainder and its shifted companion") {
        Point left{-1.5, 1.0}, right{3.0, 0.3}, middle{1.9, 0.45};
        CHECK(eval_outgoing_v(sol, left) == eval_outgoing_v(sol, left, true));
        CHECK(eval_outgoing_v(sol, right) == eval_outgoing_v(sol, right, true));

        const double k = sol.problem.k, th = pi / 6.0;
        cdouble refs = ReferenceField::plane_uniform(k, th, 0.0).reflection() -
                       ReferenceField::plane_uniform(k, th, -0.5).reflection();
        cdouble phase = std::exp(cdouble(0.0, k * std::cos(th) * middle.x1 +
                                                  k * std::sin(th) * middle.x2));
        cdouble diff = eval_outgoing_v(sol, middle) - eval_outgoing_v(sol, middle, true);
        CHECK(near(diff, refs * phase) < 1e-13);
    }

    SECTION("radiation arcs decay along doubling radii") {
        auto rep = radiation_arc_integrals(sol, pi / 6.0, 0.5, {2.0, 4.0});
        INFO("first " << rep.first[0] << " -> " << rep.first[1] << "  second " << rep.second[0]
                      << " -> " << rep.second[1]);
        REQUIRE(rep.first.size() == 2);
        CHECK(rep.first[0] >= 0.0);
        CHECK(std::isfinite(rep.first[0]));
        CHECK(std::isfinite(rep.second[1]));
        CHECK(rep.first[1] < rep.first[0]);

        CHECK_THROWS_AS(radiation_arc_integrals(sol, pi / 6.0, 0.5, {6.0}), DiagnosticError);
        CHECK_THROWS_AS(radiation_arc_integrals(sol, pi / 4.0, 0.5, {2.0}), DiagnosticError);
    }

    SECTION("surface traces stay small off the collocation nodes") {
        double worst = surface_residual(sol, -2.5, 2.5, 40);
        INFO("surface residual " << worst);
        CHECK(worst < 1e-3);
    }

    SECTION("finite-difference Helmholtz residual shrinks at second order") {
        std::vector<Point> probes{{0.9, 0.7}, {-1.1, 1.3}};
        double coarse = helmholtz_fd_residual(sol, probes, 0.04);
        double fine = helmholtz_fd_residual(sol, probes, 0.02);
        INFO("residuals " << coarse << " " << fine);
        CHECK(coarse / fine == Catch::Approx(4.0).margin(1.2));
        CHECK_THROWS_AS(helmholtz_fd_residual(sol, {{0.03, 0.5}}, 0.04), DiagnosticError);
        CHECK_THROWS_AS(helmholtz_fd_residual(sol, {{0.9, 2.48}}, 0.04), DiagnosticError);
    }
}

TEST_CASE("flat fields make every remainder diagnostic vanish") {
    Problem prob;
    prob.surface = SteppedSurface{{}, {0.0}};
    prob.incidence = PlaneWave{pi / 6.0};
    Solution sol = solve_problem(prob);

    CHECK(eval_outgoing_v(sol, {0.7, 1.1}) == cdouble(0.0, 0.0));
    CHECK(eval_outgoing_v(sol, {-0.7, 0.4}, true) == cdouble(0.0, 0.0));

    auto rep = radiation_arc_integrals(sol, pi / 6.0, 0.0, {1.5});
    CHECK(rep.first[0] == 0.0);
    CHECK(rep.second[0] == 0.0);

    CHECK(surface_residual(sol, -2.0, 2.0) == 0.0);

    Problem pt = prob;
    pt.incidence = PointSource{{0.4, 1.1}};
    CHECK(surface_residual(solve_problem(pt), -2.0, 2.0) == 0.0);
}

TEST_CASE("far-field ray limit") {
    SECTION("vanishes without a step or when the step phase cancels") {
        auto flat = f_limit_check({-1.0, 1.0}, pi / 4.0, 0.0, {2.0, 3.0});
        CHECK(flat.value[0] == cdouble(0.0, 0.0));
        CHECK(flat.value[1] == cdouble(0.0, 0.0));

        auto cancel = f_limit_check({-1.0, 1.0}, pi / 6.0, 1.0, {2.0, 3.0});
        CHECK(cancel.value[0] == cdouble(0.0, 0.0));
        CHECK(cancel.cauchy[0] == 0.0);
    }

    SECTION("desk-scale truncations converge") {
        const double st = std::sin(pi / 4.0);
        auto rep = f_limit_check({-1.0, 1.0}, pi / 4.0, 0.5, {2.0 / st, 3.0 / st, 4.0 / st});
        INFO("values " << std::abs(rep.value[0]) << " " << std::abs(rep.value[1]) << " "
                       << std::abs(rep.value[2]) << "  cauchy " << rep.cauchy[0] << " "
                       << rep.cauchy[1]);
        REQUIRE(rep.cauchy.size() == 2);
        CHECK(std::isfinite(std::abs(rep.value[2])));
        CHECK(rep.cauchy[1] < rep.cauchy[0]);
    }

    SECTION("rejections") {
        CHECK_THROWS_AS(f_limit_check({-1.0, 1.0}, 0.6 * pi, 0.5, {2.0}), DiagnosticError);
        CHECK_THROWS_AS(f_limit_check({-1.0, 1.0}, pi / 4.0, 0.5, {3.0, 2.0}), DiagnosticError);
        CHECK_THROWS_AS(f_limit_check({-1.0, 1.0}, pi / 4.0, 0.5, {2.0}, 2.0 * pi, 1.0,
                                      NodeBudget{}, 1.2),
                        DiagnosticError);
    }
}

TEST_CASE("reciprocity of the solved Green function") {
    SECTION("closed form on a flat surface") {
        Problem prob;
        prob.surface = SteppedSurface{{}, {0.0}};
        CHECK(reciprocity_check(prob, {-0.8, 1.0}, {0.9, 1.4}) < 1e-13);

        CHECK_THROWS_AS(reciprocity_check(prob, {0.5, 1.0}, {0.5, 1.0}), DiagnosticError);
        CHECK_THROWS_AS(reciprocity_check(prob, {0.5, 0.05}, {1.5, 1.0}), DiagnosticError);
    }

    SECTION("step geometry with two independent solves") {
        Problem prob;
        prob.surface = SteppedSurface{{0.0}, {0.0, -1.0}};
        prob.pml = PmlParams{2.5, 1.0, 70.0};
        prob.budget = NodeBudget{200, 100};
        double dev = reciprocity_check(prob, {-1.0, 1.0}, {1.5, 0.5});
        INFO("deviation " << dev);
        CHECK(dev < 5e-4);
    }

    SECTION("distance to the stepped surface") {
        auto regions = build_regions(SteppedSurface{{0.0}, {0.0, -1.0}}, {});
        CHECK(detail::distance_to_surface(regions, {-2.0, 0.7}) == Catch::Approx(0.7));
        CHECK(detail::distance_to_surface(regions, {0.3, -0.5}) == Catch::Approx(0.3));
        CHECK(detail::distance_to_surface(regions, {0.3, 0.4}) == Catch::Approx(0.5));
    }
}
