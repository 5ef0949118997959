#pragma once

// Bessel/Hankel evaluations used by the field kernels.
//
// hankel1(nu, x) returns H_nu^(1)(x) = J_nu(x) + i Y_nu(x) for nu in {0,1} and
// real x > 0, accurate to <= 1e-12 relative (measured against the complex
// value) on [1e-8, 1e4].  Small arguments use the ascending series, large
// arguments the Hankel asymptotic expansion truncated at its minimal term.
// The series region is accumulated in double-double arithmetic: near the
// crossover the alternating terms grow to ~1e7 and plain double would lose
// five digits to cancellation.

#include <cmath>
#include <complex>
#include <limits>
#include <stdexcept>

namespace stepwave {

using cdouble = std::complex<double>;

inline constexpr double pi = 3.14159265358979323846;
inline constexpr double euler_gamma = 0.57721566490153286061;

namespace detail {

// ---- double-double primitives (error-free transforms) ----

struct dd {
    double hi = 0.0, lo = 0.0;
};

inline dd quick_two_sum(double a, double b) {
    double s = a + b;
    return {s, b - (s - a)};
}

inline dd two_sum(double a, double b) {
    double s = a + b;
    double v = s - a;
    return {s, (a - (s - v)) + (b - v)};
}

inline dd two_prod(double a, double b) {
    double p = a * b;
    return {p, std::fma(a, b, -p)};
}

inline dd dd_add(dd a, dd b) {
    dd s = two_sum(a.hi, b.hi);
    s.lo += a.lo + b.lo;
    return quick_two_sum(s.hi, s.lo);
}

inline dd dd_add(dd a, double b) {
    dd s = two_sum(a.hi, b);
    s.lo += a.lo;
    return quick_two_sum(s.hi, s.lo);
}

inline dd dd_mul(dd a, dd b) {
    dd p = two_prod(a.hi, b.hi);
    p.lo += a.hi * b.lo + a.lo * b.hi;
    return quick_two_sum(p.hi, p.lo);
}

inline dd dd_mul(dd a, double b) {
    dd p = two_prod(a.hi, b);
    p.lo += a.lo * b;
    return quick_two_sum(p.hi, p.lo);
}

inline dd dd_div(dd a, double b) {
    double q1 = a.hi / b;
    dd p = two_prod(q1, b);
    double q2 = ((a.hi - p.hi) - p.lo + a.lo) / b;
    return quick_two_sum(q1, q2);
}

inline dd dd_neg(dd a) { return {-a.hi, -a.lo}; }

// Ascending-series cutoff; beyond it the asymptotic expansion's minimal term
// is below 1e-17 relative.
inline constexpr double series_cutoff = 20.0;

// J0, J1 and the companion log-free sums of Y0, Y1 in one pass.  Outputs:
//   j0, j1,
//   s0 = sum_{m>=1} (-1)^{m+1} H_m q^m / (m!)^2,
//   s1 = sum_{m>=0} (-1)^m (H_m + H_{m+1}) q^m / (m! (m+1)!),
// with q = x^2/4.
inline void bessel_series(double x, double& j0, double& j1, double& s0, double& s1) {
    dd q = dd_mul(two_prod(x, x), 0.25);
    dd t{1.0, 0.0};   // (-1)^m q^m / (m!)^2
    dd s{1.0, 0.0};   // (-1)^m q^m / (m! (m+1)!)
    dd h{0.0, 0.0};   // harmonic number H_m
    dd sum_j0 = t;
    dd sum_j1 = s;
    dd sum_s0{0.0, 0.0};
    dd sum_s1 = s;    // m = 0 term: (H_0 + H_1) s_0 = 1
    for (int m = 1; m <= 96; ++m) {
        t = dd_neg(dd_div(dd_mul(t, q), double(m) * m));
        s = dd_neg(dd_div(dd_mul(s, q), double(m) * (m + 1.0)));
        h = dd_add(h, dd_div({1.0, 0.0}, double(m)));
        dd h_next = dd_add(h, dd_div({1.0, 0.0}, m + 1.0));
        sum_j0 = dd_add(sum_j0, t);
        sum_j1 = dd_add(sum_j1, s);
        sum_s0 = dd_add(sum_s0, dd_neg(dd_mul(t, h)));
        sum_s1 = dd_add(sum_s1, dd_mul(s, dd_add(h, h_next)));
        if (std::abs(t.hi) < 1e-40 && std::abs(s.hi) < 1e-40) break;
    }
    j0 = sum_j0.hi + sum_j0.lo;
    j1 = 0.5 * x * (sum_j1.hi + sum_j1.lo);
    s0 = sum_s0.hi + sum_s0.lo;
    s1 = sum_s1.hi + sum_s1.lo;
}

// Hankel asymptotic expansion, valid for |z| > series_cutoff, |arg z| < pi:
//   H_nu^(1)(z) ~ sqrt(2/(pi z)) e^{i(z - nu pi/2 - pi/4)} sum_k i^k a_k(nu)/z^k.
// The phase is assembled as e^{iz} times an exact constant so no precision is
// lost subtracting pi/4 from a large argument.
template <typename Z>
inline std::complex<double> hankel1_asymptotic(int nu, Z z) {
    std::complex<double> zc(z);
    std::complex<double> inv_z = 1.0 / zc;
    std::complex<double> term(1.0, 0.0);
    std::complex<double> sum = term;
    double fournu2 = 4.0 * nu * nu;
    double prev = std::abs(term);
    for (int k = 0; k < 60; ++k) {
        double num = fournu2 - (2.0 * k + 1.0) * (2.0 * k + 1.0);
        term *= std::complex<double>(0.0, 1.0) * (num / (8.0 * (k + 1.0))) * inv_z;
        double mag = std::abs(term);
        if (mag >= prev || mag < 1e-20) break;  // minimal-term truncation
        sum += term;
        prev = mag;
    }
    static const std::complex<double> phase_const[2] = {
        {0.70710678118654752440, -0.70710678118654752440},    // e^{-i pi/4}
        {-0.70710678118654752440, -0.70710678118654752440}};  // e^{-i 3pi/4}
    std::complex<double> eiz = std::exp(std::complex<double>(0.0, 1.0) * zc);
    return std::sqrt(2.0 / (pi * zc)) * eiz * phase_const[nu] * sum;
}

// Complex arguments switch to the asymptotic expansion earlier than real
// ones: with Im z large the function is exponentially small while the series
// terms are not, so the series' absolute error (~eps * largest term) must be
// kept below the function scale.  |z| <= 14 caps that at ~1e-10.
inline constexpr double series_cutoff_c = 14.0;

// Plain-double ascending series for complex argument.  Fine for the internal
// complex-stretched uses, not exposed under the real hankel1 contract.
inline std::complex<double> hankel1_series_c(int nu, std::complex<double> z) {
    std::complex<double> q = 0.25 * z * z;
    std::complex<double> t(1.0, 0.0), s(1.0, 0.0);
    std::complex<double> sum_j0 = t, sum_j1 = s, sum_s0(0.0, 0.0), sum_s1 = s;
    double h = 0.0;
    for (int m = 1; m <= 96; ++m) {
        t *= -q / (double(m) * m);
        s *= -q / (double(m) * (m + 1.0));
        h += 1.0 / m;
        double h_next = h + 1.0 / (m + 1.0);
        sum_j0 += t;
        sum_j1 += s;
        sum_s0 -= h * t;
        sum_s1 += (h + h_next) * s;
        if (std::abs(t) < 1e-24 && std::abs(s) < 1e-24) break;
    }
    std::complex<double> lg = std::log(0.5 * z) + euler_gamma;
    std::complex<double> j0 = sum_j0, j1 = 0.5 * z * sum_j1;
    if (nu == 0) {
        std::complex<double> y0 = (2.0 / pi) * (lg * j0 + sum_s0);
        return j0 + std::complex<double>(0.0, 1.0) * y0;
    }
    std::complex<double> y1 = (2.0 / pi) * (lg * j1 - 1.0 / z - 0.25 * z * sum_s1);
    return j1 + std::complex<double>(0.0, 1.0) * y1;
}

}  // namespace detail

/// Hankel function of the first kind, order 0 or 1, for real x > 0.
inline cdouble hankel1(int order, double x) {
    if (order < 0 || order > 1) throw std::domain_error("hankel1: order must be 0 or 1");
    if (!(x > 0.0)) throw std::domain_error("hankel1: requires x > 0");
    if (x > detail::series_cutoff) return detail::hankel1_asymptotic(order, x);
    double j0, j1, s0, s1;
    detail::bessel_series(x, j0, j1, s0, s1);
    double lg = std::log(0.5 * x) + euler_gamma;
    if (order == 0) {
        double y0 = (2.0 / pi) * (lg * j0 + s0);
        return {j0, y0};
    }
    double y1 = (2.0 / pi) * (lg * j1 - 1.0 / x - 0.25 * x * s1);
    return {j1, y1};
}

/// Continuation of hankel1 to complex arguments with Re z > 0 (used for
/// PML-stretched coordinates).  Relaxed accuracy: ~1e-9 relative worst case
/// near |z| = 20, better elsewhere.
inline cdouble hankel1c(int order, cdouble z) {
    if (order < 0 || order > 1) throw std::domain_error("hankel1c: order must be 0 or 1");
    if (!(std::abs(z) > 0.0)) throw std::domain_error("hankel1c: requires z != 0");
    if (z.imag() == 0.0 && z.real() > 0.0) return hankel1(order, z.real());
    if (std::abs(z) > detail::series_cutoff_c) return detail::hankel1_asymptotic(order, z);
    return detail::hankel1_series_c(order, z);
}

}  // namespace stepwave
