#include <catch2/catch_amalgamated.hpp>

#include "stepwave/eigensolver.hpp"

using namespace stepwave;

namespace {

PmlParams no_pml(double top) { return {top, 1.0, 0.0}; }

}  // namespace

TEST_CASE("multidomain grid bookkeeping") {
    auto g = cheb_grid({0.0, 1.4, 3.5}, {9, 12});
    CHECK(g.size() == 20);  // shared break node stored once
    CHECK(g.panel_offset == std::vector<int>{0, 8});
    CHECK(g.boundary == std::vector<int>{0, 8, 19});
    CHECK(g.interior_size() == 17);
    CHECK(g.nodes(0) == 0.0);
    CHECK(g.nodes(8) == 1.4);
    CHECK(g.nodes(19) == 3.5);
    for (int i = 1; i < g.size(); ++i) CHECK(g.nodes(i) > g.nodes(i - 1));
    CHECK(g.find_panel(0.5) == 0);
    CHECK(g.find_panel(1.4) == 0);
    CHECK(g.find_panel(2.0) == 1);
    CHECK_THROWS(g.find_panel(-0.1));
    CHECK_THROWS(cheb_grid({0.0, 1.0}, {5, 5}));
}

TEST_CASE("absorber ramp profile and its integral") {
    PmlParams p{2.5, 0.5, 10.0};
    p.validate();
    CHECK(p.top() == 3.0);
    CHECK(p.profile(1.0) == 0.0);
    CHECK(p.profile(2.5) == 0.0);
    CHECK(p.profile(2.75) == Catch::Approx(5.0));
    CHECK(p.profile(3.0) == Catch::Approx(10.0));
    CHECK(p.stretch_im(2.5) == 0.0);
    CHECK(p.stretch_im(3.0) == Catch::Approx(2.5));  // quadratic ramp integral
    CHECK(p.stretched(2.8).real() == 2.8);
    CHECK(p.stretched(2.8).imag() == Catch::Approx(0.9));
    CHECK_THROWS_AS((PmlParams{2.5, 0.0, 1.0}.validate()), ConfigError);
    CHECK_THROWS_AS((PmlParams{2.5, 0.5, -1.0}.validate()), ConfigError);
}

TEST_CASE("square-root branch keeps modes outgoing or decaying") {
    CHECK(sqrt_branch({4.0, 0.0}) == cdouble(2.0, 0.0));
    CHECK(std::abs(sqrt_branch({-4.0, 0.0}) - cdouble(0.0, 2.0)) <= 1e-15);
    cdouble a = sqrt_branch({0.0, 4.0});
    CHECK(a.real() == Catch::Approx(std::sqrt(2.0)));
    CHECK(a.imag() == Catch::Approx(std::sqrt(2.0)));
    cdouble b = sqrt_branch({0.0, -4.0});
    CHECK(b.real() == Catch::Approx(-std::sqrt(2.0)));
    CHECK(b.imag() == Catch::Approx(std::sqrt(2.0)));
    for (cdouble mu : {cdouble(3.0, 0.2), cdouble(-5.0, 1.0), cdouble(2.0, -0.3)}) {
        cdouble r = sqrt_branch(mu);
        CHECK(r.imag() >= 0.0);
        CHECK(std::abs(r * r - mu) <= 1e-14 * std::abs(mu));
    }
}

TEST_CASE("sound-soft channel spectrum matches the sine series") {
    // Dirichlet both ends on [0, 3.5], no absorption: mu_j = k^2 - (j pi / 3.5)^2
    const double k = 2.0 * pi, H = 3.5;
    auto grid = cheb_grid({0.0, 1.4, H}, {40, 56});
    auto vop = assemble_vertical_operator(grid, {1.0, 1.0}, no_pml(H), k,
                                          TopCondition::Dirichlet);
    auto ms = solve_modes(vop);
    REQUIRE(ms.mu.size() == grid.interior_size());
    CHECK(ms.max_residual <= 1e-8);

    for (int j = 1; j <= 20; ++j) {
        double want = k * k - (j * pi / H) * (j * pi / H);
        CHECK(std::abs(ms.mu(j - 1) - want) <= 1e-8);
    }
    // frozen anchors for the first, fifth, and twentieth eigenvalues
    CHECK(std::abs(ms.mu(0) - 38.672735612431773) <= 1e-9);
    CHECK(std::abs(ms.mu(4) - 19.336367806215886) <= 1e-9);
    CHECK(std::abs(ms.mu(19) - (-282.79437916590734)) <= 1e-9);

    // fundamental eigenfunction is the first sine, up to the normalization
    Eigen::VectorXcd phi = ms.phi.col(0);
    double scale = 0.0;
    for (int i = 0; i < grid.size(); ++i)
        scale = std::max(scale, std::abs(std::sin(pi * grid.nodes(i) / H)));
    for (int i = 0; i < grid.size(); ++i) {
        double want = std::sin(pi * grid.nodes(i) / H) / scale;
        CHECK(std::abs(phi(i) - want) <= 1e-9);
    }
}

TEST_CASE("spectrum is insensitive to the panel split") {
    const double k = 2.0 * pi, H = 3.5;
    auto a = solve_modes(assemble_vertical_operator(cheb_grid({0.0, H}, {64}), {1.0},
                                                    no_pml(H), k, TopCondition::Dirichlet));
    auto b = solve_modes(assemble_vertical_operator(cheb_grid({0.0, 0.9, 2.1, H}, {30, 30, 32}),
                                                    {1.0, 1.0, 1.0}, no_pml(H), k,
                                                    TopCondition::Dirichlet));
    for (int j = 0; j < 15; ++j) CHECK(std::abs(a.mu(j) - b.mu(j)) <= 1e-8);
}

TEST_CASE("stretched operator annihilates the outgoing exponential") {
    // v(t) = exp(i beta0 x2hat(t)) satisfies L v = (k^2 - beta0^2) v, the
    // stretched-flux continuity conditions, and the outgoing Robin row.
    const double k = 2.0 * pi, beta0 = 2.0;
    PmlParams pml{2.5, 0.6, 4.0};
    auto grid = cheb_grid({0.0, 1.3, 2.5, 3.1}, {17, 17, 15});
    auto vop = assemble_vertical_operator(grid, {1.0, 1.0, 1.0}, pml, k,
                                          TopCondition::RobinOutgoing, beta0);

    Eigen::VectorXcd v(grid.size());
    for (int i = 0; i < grid.size(); ++i)
        v(i) = std::exp(cdouble(0.0, 1.0) * beta0 * pml.stretched(grid.nodes(i)));

    Eigen::VectorXcd lv = vop.op_full * v;
    const double mu = k * k - beta0 * beta0;
    for (int i : grid.interior) CHECK(std::abs(lv(i) - mu * v(i)) <= 1e-7 * k * k);

    Eigen::VectorXcd cv = vop.constraints * v;
    CHECK(std::abs(cv(1)) <= 1e-7 * beta0);  // flux continuity at 1.3
    CHECK(std::abs(cv(2)) <= 1e-7 * beta0);  // flux continuity at the absorber entrance
    CHECK(std::abs(cv(3)) <= 1e-7 * beta0);  // outgoing Robin row at the top
    CHECK(std::abs(cv(0) - v(0)) == 0.0);    // bottom row is plain Dirichlet
}

TEST_CASE("absorbing eigensolve invariants") {
    const double k = 2.0 * pi, beta0 = pi;
    PmlParams pml{2.5, 0.5, 6.0};
    auto grid = cheb_grid({0.0, 2.5, 3.0}, {33, 17});
    auto vop = assemble_vertical_operator(grid, {1.0, 1.0}, pml, k,
                                          TopCondition::RobinOutgoing, beta0);
    auto ms = solve_modes(vop);

    REQUIRE(ms.mu.size() == grid.interior_size());
    CHECK(ms.max_residual <= 1e-8);
    double mu_scale = 0.0;
    for (int j = 0; j < ms.mu.size(); ++j) mu_scale = std::max(mu_scale, std::abs(ms.mu(j)));
    for (int j = 0; j < ms.mu.size(); ++j) {
        if (j > 0) CHECK(ms.mu(j).real() <= ms.mu(j - 1).real());
        CHECK(ms.mu(j).imag() >= -1e-8 * mu_scale);
        CHECK(ms.root(j).imag() >= 0.0);
        CHECK(std::abs(ms.root(j) * ms.root(j) - ms.mu(j)) <= 1e-12 * std::abs(ms.mu(j)));

        // normalization: unit sup norm, attained at a positive real entry
        int imax = 0;
        for (int i = 1; i < grid.size(); ++i)
            if (std::abs(ms.phi(i, j)) > std::abs(ms.phi(imax, j))) imax = i;
        CHECK(std::abs(ms.phi(imax, j)) == Catch::Approx(1.0).margin(1e-12));
        CHECK(ms.phi(imax, j).imag() == Catch::Approx(0.0).margin(1e-12));
        CHECK(ms.phi(imax, j).real() > 0.0);
        CHECK(std::abs(ms.phi(0, j)) <= 1e-10);  // soft bottom survives the lift
    }
}

TEST_CASE("operator assembly rejects mismatched inputs") {
    auto grid = cheb_grid({0.0, 1.0, 2.0}, {9, 9});
    CHECK_THROWS(assemble_vertical_operator(grid, {1.0}, no_pml(2.0), 1.0,
                                            TopCondition::Dirichlet));
}
