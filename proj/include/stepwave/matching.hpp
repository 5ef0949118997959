#pragma once

// Dense mode-matching system.
//
// Each region carries a modal trial space; interior regions get a rightgoing
// block (anchored at their left edge) and a leftgoing block (anchored at the
// right edge), the half-infinite outer regions only the block that travels
// away from the steps.  Anchoring at the edges keeps every propagator factor
// at magnitude <= 1 (the branch rule puts Im sqrt(mu) >= 0).
//
// Rows, per interface and in deterministic order: value continuity at every
// interior node of the shared vertical span, then x1-derivative continuity
// (scaled by 1/k) at the same nodes, then soft-wall rows at the lower
// region's interior nodes inside the wall span.  The right-hand side carries
// the reference-field jump data.  Row and column counts agree by
// construction: an interface contributes N_left + N_right rows.

#include <Eigen/Dense>

#include <cstdio>
#include <limits>
#include <vector>

#include "stepwave/eigensolver.hpp"
#include "stepwave/errors.hpp"

namespace stepwave {

struct DirectedBasis {
    const ModeSet* modes = nullptr;
    double left_edge = 0.0, right_edge = 0.0;  // +-infinity on the outer regions
    bool rightgoing = false, leftgoing = false;
    int offset = 0;  // first column of this region's coefficient block

    int count() const { return int(modes->mu.size()); }
    int cols() const { return count() * (int(rightgoing) + int(leftgoing)); }
    double width() const { return right_edge - left_edge; }

    // Propagation factor across the region, e^{i sqrt(mu) width}; only
    // meaningful (and only used) when both edges are finite.
    cdouble decay(int j) const {
        return std::exp(cdouble(0.0, 1.0) * modes->root(j) * width());
    }
};

struct InterfaceData {
    int left = 0, right = 0;  // region indices
    double b = 0.0;           // interface abscissa

    // Shared-span collocation: the same physical nodes, indexed into each
    // side's grid, with their (possibly PML-stretched) heights.
    std::vector<int> nodes_left, nodes_right;
    std::vector<cdouble> du, dup;  // reference jump W_right - W_left and its x1 slope

    // Soft-wall rows on the lower side; empty when the grounds agree.
    int wall_side = -1;
    std::vector<int> wall_nodes;
    std::vector<cdouble> wall_rhs;  // -W_lower at those nodes
};

struct MatchingSystem {
    Eigen::MatrixXcd a;
    Eigen::VectorXcd rhs;
};

namespace detail {

// Value and x1-derivative factors of one directional block of `basis`,
// evaluated at one of its own edges.
struct EdgeFactors {
    bool at_right_edge;
    // block 0 = rightgoing, block 1 = leftgoing
    cdouble value(const DirectedBasis& b, int block, int j) {
        if (block == 0) return at_right_edge ? b.decay(j) : cdouble(1.0);
        return at_right_edge ? cdouble(1.0) : b.decay(j);
    }
    cdouble slope(const DirectedBasis& b, int block, int j) {
        cdouble ib = cdouble(0.0, 1.0) * b.modes->root(j);
        return (block == 0 ? ib : -ib) * value(b, block, j);
    }
};

}  // namespace detail

inline MatchingSystem assemble_matching_system(const std::vector<DirectedBasis>& bases,
                                               const std::vector<InterfaceData>& interfaces,
                                               double k) {
    int cols = 0, rows = 0;
    for (const auto& b : bases) cols += b.cols();
    for (const auto& f : interfaces) rows += 2 * int(f.nodes_left.size()) + int(f.wall_nodes.size());
    if (rows != cols)
        throw SolverError("matching: collocation rows and trial columns disagree");

    MatchingSystem sys;
    sys.a = Eigen::MatrixXcd::Zero(rows, cols);
    sys.rhs = Eigen::VectorXcd::Zero(rows);

    int row = 0;
    for (const auto& f : interfaces) {
        const DirectedBasis& A = bases[f.left];
        const DirectedBasis& B = bases[f.right];
        const int s = int(f.nodes_left.size());
        if (int(f.nodes_right.size()) != s || int(f.du.size()) != s || int(f.dup.size()) != s)
            throw SolverError("matching: inconsistent shared-span data");
        detail::EdgeFactors ea{true}, eb{false};  // interface is A's right, B's left edge

        auto fill_side = [&](const DirectedBasis& bas, detail::EdgeFactors& ef,
                             const std::vector<int>& nodes, double sgn) {
            int col = bas.offset;
            for (int block = 0; block < 2; ++block) {
                if ((block == 0 && !bas.rightgoing) || (block == 1 && !bas.leftgoing)) continue;
                for (int j = 0; j < bas.count(); ++j, ++col) {
                    cdouble val = sgn * ef.value(bas, block, j);
                    cdouble slp = sgn * ef.slope(bas, block, j) / k;
                    for (int m = 0; m < s; ++m) {
                        cdouble phi = bas.modes->phi(nodes[m], j);
                        sys.a(row + m, col) += val * phi;
                        sys.a(row + s + m, col) += slp * phi;
                    }
                }
            }
        };
        fill_side(A, ea, f.nodes_left, +1.0);
        fill_side(B, eb, f.nodes_right, -1.0);
        for (int m = 0; m < s; ++m) {
            sys.rhs(row + m) = f.du[m];
            sys.rhs(row + s + m) = f.dup[m] / k;
        }
        row += 2 * s;

        if (!f.wall_nodes.empty()) {
            const DirectedBasis& W = bases[f.wall_side];
            detail::EdgeFactors ew{f.wall_side == f.left};
            int col = W.offset;
            for (int block = 0; block < 2; ++block) {
                if ((block == 0 && !W.rightgoing) || (block == 1 && !W.leftgoing)) continue;
                for (int j = 0; j < W.count(); ++j, ++col) {
                    cdouble val = ew.value(W, block, j);
                    for (size_t m = 0; m < f.wall_nodes.size(); ++m)
                        sys.a(row + int(m), col) += val * W.modes->phi(f.wall_nodes[m], j);
                }
            }
            for (size_t m = 0; m < f.wall_nodes.size(); ++m)
                sys.rhs(row + int(m)) = f.wall_rhs[m];
            row += int(f.wall_nodes.size());
        }
    }
    return sys;
}

struct CoefficientSolve {
    Eigen::VectorXcd x;
    double residual = 0.0;       // ||A x - rhs|| / (||A||_F ||x|| + ||rhs||)
    double cond_estimate = 1.0;  // 1 / rcond from the LU factors
};

inline CoefficientSolve solve_coefficients(const MatchingSystem& sys, double tol = 1e-10) {
    CoefficientSolve out;
    if (sys.a.rows() == 0) {
        out.x.resize(0);
        return out;
    }
    Eigen::PartialPivLU<Eigen::MatrixXcd> lu(sys.a);
    // rcond() is blind to exact singularity (a consistent singular system
    // solves to a finite vector with a tiny residual), so gate on the pivots
    Eigen::ArrayXd piv = lu.matrixLU().diagonal().cwiseAbs();
    double pmax = piv.maxCoeff(), pmin = piv.minCoeff();
    if (!(pmin > 1e-15 * pmax)) {
        char msg[96];
        std::snprintf(msg, sizeof msg, "matching: system is numerically singular (pivot ratio %.2e)",
                      pmax > 0.0 ? pmin / pmax : 0.0);
        throw SolverError(msg);
    }
    double rc = lu.rcond();
    out.cond_estimate = rc > 0.0 ? 1.0 / rc : std::numeric_limits<double>::infinity();
    out.x = lu.solve(sys.rhs);
    double scale = sys.a.norm() * out.x.norm() + sys.rhs.norm();
    out.residual = scale > 0.0 ? (sys.a * out.x - sys.rhs).norm() / scale : 0.0;
    if (!std::isfinite(out.residual) || out.residual > tol)
        throw SolverError("matching: linear solve failed the residual check");
    return out;
}

}  // namespace stepwave
