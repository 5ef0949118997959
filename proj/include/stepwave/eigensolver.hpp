#pragma once

// Vertical eigenproblem on a multidomain Chebyshev grid.
//
// The operator is the complex-stretched 1-D Helmholtz restriction
//     (1/s) d/dx2 ( (1/s) d phi/dx2 ) + k^2 n(x2)^2 phi = mu phi,
// s(x2) = 1 + i sigma2(x2), with a sound-soft bottom, an outgoing Robin (or
// Dirichlet) top at the end of the absorbing layer, and continuity of value
// and stretched flux at panel breaks.  Boundary and break rows are
// eliminated so a standard dense eigenproblem remains on the interior nodes.

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <complex>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "stepwave/chebyshev.hpp"
#include "stepwave/errors.hpp"

namespace stepwave {

// Linear absorber ramp: sigma2(t) = (t - entrance) * sigma / thickness above
// the entrance height, zero below.
struct PmlParams {
    double entrance = 2.5;   // height where absorption starts
    double thickness = 1.0;  // absorber depth; computational top = entrance + thickness
    double sigma = 70.0;     // ramp slope scale, >= 0

    double top() const { return entrance + thickness; }
    double profile(double t) const {
        return t >= entrance ? (t - entrance) * sigma / thickness : 0.0;
    }
    // Integral of the profile from 0 to t; the stretched coordinate is
    // t + i * stretch_im(t).
    double stretch_im(double t) const {
        return t >= entrance ? (t - entrance) * (t - entrance) * sigma / (2.0 * thickness) : 0.0;
    }
    cdouble stretched(double t) const { return {t, stretch_im(t)}; }

    void validate() const {
        if (!(thickness > 0.0)) throw ConfigError("pml: thickness must be > 0");
        if (sigma < 0.0) throw ConfigError("pml: sigma must be >= 0");
    }
};

struct CollocationGrid {
    std::vector<ChebPanel> panels;   // ascending, contiguous
    std::vector<int> panel_offset;   // global index of each panel's first node
    Eigen::VectorXd nodes;           // deduplicated global nodes, ascending
    std::vector<int> interior;       // global indices strictly inside a panel
    std::vector<int> boundary;       // bottom, panel breaks..., top

    int size() const { return int(nodes.size()); }
    int interior_size() const { return int(interior.size()); }

    int find_panel(double x2) const {
        if (x2 < panels.front().lo || x2 > panels.back().hi)
            throw std::invalid_argument("collocation grid: point outside the vertical span");
        for (int p = 0; p < int(panels.size()) - 1; ++p)
            if (x2 <= panels[p].hi) return p;
        return int(panels.size()) - 1;
    }
};

// breaks: strictly increasing panel edges (size P+1); counts: nodes per panel.
inline CollocationGrid cheb_grid(const std::vector<double>& breaks, const std::vector<int>& counts) {
    if (breaks.size() < 2 || counts.size() != breaks.size() - 1)
        throw std::invalid_argument("cheb_grid: breaks/counts size mismatch");
    CollocationGrid g;
    int total = 0;
    for (size_t p = 0; p < counts.size(); ++p) {
        g.panels.push_back(cheb_panel(breaks[p], breaks[p + 1], counts[p]));
        g.panel_offset.push_back(p == 0 ? 0 : g.panel_offset.back() + counts[p - 1] - 1);
        total += counts[p];
    }
    total -= int(counts.size()) - 1;  // shared break nodes counted once
    g.nodes.resize(total);
    for (size_t p = 0; p < g.panels.size(); ++p)
        g.nodes.segment(g.panel_offset[p], counts[p]) = g.panels[p].nodes;
    g.boundary.push_back(0);
    for (size_t p = 0; p + 1 < g.panels.size(); ++p)
        g.boundary.push_back(g.panel_offset[p + 1]);
    g.boundary.push_back(total - 1);
    size_t b = 0;
    for (int i = 0; i < total; ++i) {
        if (b < g.boundary.size() && g.boundary[b] == i) {
            ++b;
            continue;
        }
        g.interior.push_back(i);
    }
    return g;
}

enum class TopCondition {
    RobinOutgoing,  // phi'(top) = i (1 + i sigma2(top)) beta0 phi(top)
    Dirichlet       // phi(top) = 0
};

struct VerticalOperator {
    CollocationGrid grid;
    Eigen::MatrixXcd op_full;      // collocated operator; boundary rows zero
    Eigen::MatrixXcd constraints;  // one row per boundary node, all columns
    Eigen::MatrixXcd interior;     // eliminated dense eigenproblem matrix
    Eigen::MatrixXcd lift;         // boundary values = lift * interior values
};

// n_per_panel: constant refractive index on each panel (profile jumps must
// sit on panel breaks).
inline VerticalOperator assemble_vertical_operator(const CollocationGrid& grid,
                                                   const std::vector<double>& n_per_panel,
                                                   const PmlParams& pml, double k,
                                                   TopCondition top, double beta0 = 0.0) {
    if (n_per_panel.size() != grid.panels.size())
        throw std::invalid_argument("assemble_vertical_operator: one n per panel required");
    pml.validate();
    const int n = grid.size();
    VerticalOperator vop;
    vop.grid = grid;
    vop.op_full = Eigen::MatrixXcd::Zero(n, n);
    const cdouble iu(0.0, 1.0);

    std::vector<Eigen::MatrixXcd> panel_ops;
    for (size_t p = 0; p < grid.panels.size(); ++p) {
        const ChebPanel& pan = grid.panels[p];
        const int m = int(pan.nodes.size());
        Eigen::VectorXcd inv_s(m);
        for (int i = 0; i < m; ++i) inv_s(i) = 1.0 / (1.0 + iu * pml.profile(pan.nodes(i)));
        Eigen::MatrixXcd sd = inv_s.asDiagonal() * pan.deriv.cast<cdouble>();
        Eigen::MatrixXcd lp = sd * sd;
        lp.diagonal().array() += k * k * n_per_panel[p] * n_per_panel[p];
        panel_ops.push_back(std::move(lp));
    }
    for (size_t p = 0; p < grid.panels.size(); ++p) {
        const int off = grid.panel_offset[p];
        const int m = int(grid.panels[p].nodes.size());
        // interior rows only; break rows belong to the constraint set
        for (int i = 1; i < m - 1; ++i)
            vop.op_full.block(off + i, off, 1, m) = panel_ops[p].row(i);
    }

    const int nb = int(grid.boundary.size());
    vop.constraints = Eigen::MatrixXcd::Zero(nb, n);
    vop.constraints(0, 0) = 1.0;  // sound-soft bottom
    for (int b = 1; b + 1 < nb; ++b) {
        // stretched-flux continuity at the break between panels b-1 and b
        const int pl = b - 1, pr = b;
        const int gi = grid.boundary[b];
        const ChebPanel& left = grid.panels[pl];
        const ChebPanel& right = grid.panels[pr];
        const cdouble inv_s = 1.0 / (1.0 + iu * pml.profile(grid.nodes(gi)));
        const int ml = int(left.nodes.size());
        vop.constraints.block(b, grid.panel_offset[pl], 1, ml) +=
            inv_s * left.deriv.row(ml - 1).cast<cdouble>();
        vop.constraints.block(b, grid.panel_offset[pr], 1, int(right.nodes.size())) -=
            inv_s * right.deriv.row(0).cast<cdouble>();
    }
    {
        const ChebPanel& pan = grid.panels.back();
        const int m = int(pan.nodes.size());
        const int off = grid.panel_offset.back();
        if (top == TopCondition::Dirichlet) {
            vop.constraints(nb - 1, n - 1) = 1.0;
        } else {
            vop.constraints.block(nb - 1, off, 1, m) = pan.deriv.row(m - 1).cast<cdouble>();
            vop.constraints(nb - 1, n - 1) -= iu * (1.0 + iu * pml.profile(pan.hi)) * beta0;
        }
    }

    // Eliminate the boundary rows: interior eigenproblem plus the lift map
    // that reconstructs boundary values from interior ones.
    const auto& bi = grid.boundary;
    const auto& ii = grid.interior;
    Eigen::MatrixXcd cb(nb, nb), ci(nb, int(ii.size()));
    for (int r = 0; r < nb; ++r) {
        for (int c = 0; c < nb; ++c) cb(r, c) = vop.constraints(r, bi[c]);
        for (size_t c = 0; c < ii.size(); ++c) ci(r, int(c)) = vop.constraints(r, ii[c]);
    }
    vop.lift = -cb.partialPivLu().solve(ci);
    const int ni = int(ii.size());
    Eigen::MatrixXcd a_ii(ni, ni), a_ib(ni, nb);
    for (int r = 0; r < ni; ++r) {
        for (int c = 0; c < ni; ++c) a_ii(r, c) = vop.op_full(ii[r], ii[c]);
        for (int c = 0; c < nb; ++c) a_ib(r, c) = vop.op_full(ii[r], bi[c]);
    }
    vop.interior = a_ii + a_ib * vop.lift;
    return vop;
}

/// Square root with Im >= 0 enforced first, then Re >= 0: propagating modes
/// travel outward, evanescent ones decay.
inline cdouble sqrt_branch(cdouble mu) {
    cdouble w = std::sqrt(mu);
    if (w.imag() < 0.0 || (w.imag() == 0.0 && w.real() < 0.0)) w = -w;
    return w;
}

struct ModeSet {
    CollocationGrid grid;
    Eigen::VectorXcd mu;    // eigenvalues, descending real part
    Eigen::VectorXcd root;  // sqrt_branch(mu)
    Eigen::MatrixXcd phi;   // full nodal values, one column per mode, inf-norm 1
    double max_residual = 0.0;  // max_j ||A v_j - mu_j v_j||_2 over interior nodes
};

namespace detail {

// Parlett-Reinsch balancing with power-of-two factors.  The collocated
// operator mixes entries of size O(k^2) with derivative entries of size
// O(N^4); without this similarity the QR backward error, commensurate with
// the matrix norm, pollutes the physically small eigenvalues.  Returns the
// diagonal that maps balanced eigenvectors back to the original basis.
inline Eigen::VectorXd balance_in_place(Eigen::MatrixXcd& a) {
    const int n = int(a.rows());
    Eigen::VectorXd scale = Eigen::VectorXd::Ones(n);
    for (int pass = 0; pass < 100; ++pass) {
        bool converged = true;
        for (int i = 0; i < n; ++i) {
            double c = a.col(i).cwiseAbs().sum() - std::abs(a(i, i));
            double r = a.row(i).cwiseAbs().sum() - std::abs(a(i, i));
            if (c == 0.0 || r == 0.0) continue;
            const double s = c + r;
            double f = 1.0;
            while (c < 0.5 * r) { c *= 2.0; r *= 0.5; f *= 2.0; }
            while (c >= 2.0 * r) { c *= 0.5; r *= 2.0; f *= 0.5; }
            if (c + r < 0.95 * s) {
                converged = false;
                scale(i) *= f;
                a.col(i) *= f;
                a.row(i) /= f;
            }
        }
        if (converged) break;
    }
    return scale;
}

}  // namespace detail

inline ModeSet solve_modes(const VerticalOperator& vop) {
    const int ni = int(vop.grid.interior.size());
    Eigen::MatrixXcd balanced = vop.interior;
    Eigen::VectorXd bscale = detail::balance_in_place(balanced);
    Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(balanced);
    if (es.info() != Eigen::Success)
        throw SolverError("solve_modes: eigensolver failed to converge");
    Eigen::VectorXcd mu = es.eigenvalues();
    Eigen::MatrixXcd v = bscale.asDiagonal() * es.eigenvectors();
    for (int j = 0; j < ni; ++j) v.col(j) /= v.col(j).norm();

    std::vector<int> order(ni);
    for (int i = 0; i < ni; ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        if (mu(a).real() != mu(b).real()) return mu(a).real() > mu(b).real();
        return mu(a).imag() < mu(b).imag();
    });

    ModeSet ms;
    ms.grid = vop.grid;
    ms.mu.resize(ni);
    ms.root.resize(ni);
    ms.phi.resize(vop.grid.size(), ni);
    Eigen::MatrixXcd resid = vop.interior * v - v * mu.asDiagonal();
    for (int j = 0; j < ni; ++j)
        ms.max_residual = std::max(ms.max_residual, resid.col(j).norm() / v.col(j).norm());

    double mu_scale = 0.0;
    for (int i = 0; i < ni; ++i) mu_scale = std::max(mu_scale, std::abs(mu(i)));
    for (int j = 0; j < ni; ++j) {
        const int src = order[j];
        ms.mu(j) = mu(src);
        if (ms.mu(j).imag() < -1e-8 * mu_scale)
            throw SolverError("solve_modes: eigenvalue crossed into the lower half-plane");
        ms.root(j) = sqrt_branch(ms.mu(j));
        Eigen::VectorXcd full(vop.grid.size());
        Eigen::VectorXcd vb = vop.lift * v.col(src);
        for (size_t i = 0; i < vop.grid.interior.size(); ++i)
            full(vop.grid.interior[i]) = v(int(i), src);
        for (size_t i = 0; i < vop.grid.boundary.size(); ++i)
            full(vop.grid.boundary[i]) = vb(int(i));
        int imax = 0;
        for (int i = 1; i < full.size(); ++i)
            if (std::abs(full(i)) > std::abs(full(imax))) imax = i;
        ms.phi.col(j) = full / full(imax);
    }
    return ms;
}

}  // namespace stepwave
