#pragma once

// Chebyshev-Gauss-Lobatto panels: nodes, differentiation matrices and
// barycentric interpolation.  Nodes are stored ascending; the derivative
// matrix is built from the barycentric weights with the negative-sum trick
// for the diagonal.

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>

#include "stepwave/specfun.hpp"

namespace stepwave {

struct ChebPanel {
    double lo = 0.0, hi = 0.0;
    Eigen::VectorXd nodes;    // ascending, nodes(0) == lo, nodes(n-1) == hi
    Eigen::VectorXd barywts;  // barycentric weights for these nodes
    Eigen::MatrixXd deriv;    // first-derivative collocation matrix
};

inline ChebPanel cheb_panel(double lo, double hi, int n) {
    if (!(hi > lo)) throw std::invalid_argument("cheb_panel: degenerate subdomain");
    if (n < 3) throw std::invalid_argument("cheb_panel: need at least 3 nodes");
    ChebPanel p;
    p.lo = lo;
    p.hi = hi;
    p.nodes.resize(n);
    p.barywts.resize(n);
    const int m = n - 1;
    for (int j = 0; j <= m; ++j) {
        double t = -std::cos(pi * j / m);  // ascends from -1 to 1
        p.nodes(j) = lo + 0.5 * (hi - lo) * (t + 1.0);
        double w = (j % 2 == 0) ? 1.0 : -1.0;
        if (j == 0 || j == m) w *= 0.5;
        p.barywts(j) = w;
    }
    p.nodes(0) = lo;
    p.nodes(m) = hi;
    p.deriv.resize(n, n);
    for (int i = 0; i < n; ++i) {
        double rowsum = 0.0;
        for (int j = 0; j < n; ++j) {
            if (i == j) continue;
            double v = (p.barywts(j) / p.barywts(i)) / (p.nodes(i) - p.nodes(j));
            p.deriv(i, j) = v;
            rowsum += v;
        }
        p.deriv(i, i) = -rowsum;
    }
    return p;
}

// Barycentric evaluation of data given at the panel nodes.
template <typename Derived>
auto cheb_interp(const ChebPanel& p, const Eigen::MatrixBase<Derived>& values, double x) ->
    typename Derived::Scalar {
    using Scalar = typename Derived::Scalar;
    const int n = int(p.nodes.size());
    Scalar num = Scalar(0);
    double den = 0.0;
    for (int j = 0; j < n; ++j) {
        double dx = x - p.nodes(j);
        if (dx == 0.0) return values(j);
        double w = p.barywts(j) / dx;
        num += w * values(j);
        den += w;
    }
    return num / Scalar(den);
}

// Row of interpolation weights: f(x) ~ weights . values.
inline Eigen::VectorXd cheb_interp_weights(const ChebPanel& p, double x) {
    const int n = int(p.nodes.size());
    Eigen::VectorXd w = Eigen::VectorXd::Zero(n);
    double den = 0.0;
    for (int j = 0; j < n; ++j) {
        double dx = x - p.nodes(j);
        if (dx == 0.0) {
            w.setZero();
            w(j) = 1.0;
            return w;
        }
        w(j) = p.barywts(j) / dx;
        den += w(j);
    }
    return w / den;
}

}  // namespace stepwave
