#pragma once

#include <cmath>
#include <utility>
#include <vector>

#include "swipt/errors.hpp"

namespace swipt::detail {

// Plain bisection on [lo, hi]; flo and fhi are precomputed endpoint values
// and must straddle zero. Returns the midpoint of the final interval.
template <class F>
double bisect(F&& f, double lo, double hi, double flo, double fhi, int iters = 200) {
    if (flo == 0.0) return lo;
    if (fhi == 0.0) return hi;
    if ((flo > 0.0) == (fhi > 0.0))
        throw NoRootInBracket("bisect: endpoints do not straddle a sign change");
    for (int i = 0; i < iters; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (!(mid > lo && mid < hi)) break;  // interval exhausted at double precision
        const double fm = f(mid);
        if (fm == 0.0) return mid;
        if ((fm > 0.0) == (flo > 0.0)) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
            fhi = fm;
        }
    }
    return 0.5 * (lo + hi);
}

// Evaluate f on n+1 equally spaced points of [lo, hi] and refine every sign
// change by bisection. Returns the refined roots in increasing order.
template <class F>
std::vector<double> scan_roots(F&& f, double lo, double hi, int n = 64) {
    std::vector<double> roots;
    double x_prev = lo;
    double f_prev = f(lo);
    for (int i = 1; i <= n; ++i) {
        const double x = lo + (hi - lo) * static_cast<double>(i) / n;
        const double fx = f(x);
        if (f_prev == 0.0) {
            roots.push_back(x_prev);
        } else if (fx != 0.0 && (fx > 0.0) != (f_prev > 0.0)) {
            roots.push_back(bisect(f, x_prev, x, f_prev, fx));
        }
        x_prev = x;
        f_prev = fx;
    }
    if (f_prev == 0.0) roots.push_back(x_prev);
    return roots;
}

}  // namespace swipt::detail
