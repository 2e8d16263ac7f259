#pragma once

// Small dense-numerics toolkit: bracketing root finder, golden-section search,
// fixed-size linear solve and a damped Newton iteration.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <utility>

namespace netgame::numerics {

/// Bisection on a sign change of f over [lo, hi].
template <typename F>
double bisect(F&& f, double lo, double hi, double tol = 1e-14, int max_iters = 400) {
    double flo = f(lo);
    const double fhi = f(hi);
    if (flo == 0.0) return lo;
    if (fhi == 0.0) return hi;
    if ((flo > 0.0) == (fhi > 0.0)) throw std::domain_error("bisect: no sign change on bracket");
    for (int it = 0; it < max_iters && hi - lo > tol; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (mid == lo || mid == hi) break;
        const double fm = f(mid);
        if (fm == 0.0) return mid;
        if ((fm > 0.0) == (flo > 0.0)) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

struct Extremum {
    double arg;
    double value;
};

/// Golden-section search for the maximum of a unimodal f on [lo, hi].
template <typename F>
Extremum golden_max(F&& f, double lo, double hi, double tol = 1e-12) {
    constexpr double inv_phi = 0.6180339887498949;
    double a = lo, b = hi;
    double c = b - inv_phi * (b - a);
    double d = a + inv_phi * (b - a);
    double fc = f(c), fd = f(d);
    while (b - a > tol) {
        if (fc > fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    const double x = 0.5 * (a + b);
    return {x, f(x)};
}

template <std::size_t N>
using Vec = std::array<double, N>;

template <std::size_t N>
using Mat = std::array<std::array<double, N>, N>;

/// Gaussian elimination with partial pivoting. Throws on a (numerically) singular matrix.
template <std::size_t N>
Vec<N> solve_linear(Mat<N> a, Vec<N> b) {
    for (std::size_t col = 0; col < N; ++col) {
        std::size_t pivot = col;
        for (std::size_t r = col + 1; r < N; ++r)
            if (std::abs(a[r][col]) > std::abs(a[pivot][col])) pivot = r;
        if (std::abs(a[pivot][col]) < 1e-300) throw std::domain_error("solve_linear: singular matrix");
        std::swap(a[pivot], a[col]);
        std::swap(b[pivot], b[col]);
        for (std::size_t r = col + 1; r < N; ++r) {
            const double factor = a[r][col] / a[col][col];
            for (std::size_t k = col; k < N; ++k) a[r][k] -= factor * a[col][k];
            b[r] -= factor * b[col];
        }
    }
    Vec<N> x{};
    for (std::size_t r = N; r-- > 0;) {
        double acc = b[r];
        for (std::size_t k = r + 1; k < N; ++k) acc -= a[r][k] * x[k];
        x[r] = acc / a[r][r];
    }
    return x;
}

template <std::size_t N>
double max_abs(const Vec<N>& v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

template <std::size_t N>
struct NewtonResult {
    Vec<N> x{};
    double residual = std::numeric_limits<double>::infinity();
    int iterations = 0;
    bool converged = false;
};

/// Central-difference Jacobian of F at x.
template <std::size_t N, typename F>
Mat<N> jacobian(F&& fn, const Vec<N>& x, double h = 1e-7) {
    Mat<N> jac{};
    for (std::size_t k = 0; k < N; ++k) {
        Vec<N> hi = x, lo = x;
        hi[k] += h;
        lo[k] -= h;
        const Vec<N> fhi = fn(hi), flo = fn(lo);
        for (std::size_t r = 0; r < N; ++r) jac[r][k] = (fhi[r] - flo[r]) / (2.0 * h);
    }
    return jac;
}

/// Damped Newton iteration with a backtracking line search on max |F|.
/// `inside` rejects trial points outside the problem's domain.
template <std::size_t N, typename F, typename Inside>
NewtonResult<N> newton(F&& fn, Vec<N> x, double tol, int max_iters, Inside&& inside) {
    NewtonResult<N> out;
    Vec<N> fx = fn(x);
    double res = max_abs(fx);
    for (int it = 0; it < max_iters; ++it) {
        out.iterations = it;
        if (!std::isfinite(res)) break;
        if (res <= tol) {
            out.converged = true;
            break;
        }
        Vec<N> step;
        try {
            Vec<N> rhs;
            for (std::size_t k = 0; k < N; ++k) rhs[k] = -fx[k];
            step = solve_linear<N>(jacobian<N>(fn, x), rhs);
        } catch (const std::domain_error&) {
            break;
        }
        double lambda = 1.0;
        bool accepted = false;
        for (int ls = 0; ls < 40; ++ls, lambda *= 0.5) {
            Vec<N> trial;
            for (std::size_t k = 0; k < N; ++k) trial[k] = x[k] + lambda * step[k];
            if (!inside(trial)) continue;
            const Vec<N> ft = fn(trial);
            const double rt = max_abs(ft);
            if (std::isfinite(rt) && (rt < res || lambda < 1e-6)) {
                x = trial;
                fx = ft;
                res = rt;
                accepted = true;
                break;
            }
        }
        if (!accepted) break;
    }
    if (res <= tol) out.converged = true;
    out.x = x;
    out.residual = res;
    return out;
}

/// A few extra Newton steps past the convergence tolerance; keeps the better of the two points.
template <std::size_t N, typename F, typename Inside>
Vec<N> polish(F&& fn, const Vec<N>& x, Inside&& inside, int iters = 20) {
    const auto p = newton<N>(fn, x, 0.0, iters, inside);
    return p.residual < max_abs(fn(x)) ? p.x : x;
}

}  // namespace netgame::numerics
