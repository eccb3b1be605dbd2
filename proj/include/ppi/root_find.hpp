#pragma once
#include <cmath>
#include <functional>

#include "ppi/errors.hpp"

namespace ppi::root {

struct Options {
    double f_tol = 1e-10;
    int max_iters = 200;
};

struct Result {
    double x = 0.0;
    double fx = 0.0;
    int iters = 0;
};

// Bisection on a sign-changing bracket [lo, hi]. The independent workhorse;
// also used as the oracle in tests.
template <typename F>
Result bisect(const F& f, double lo, double hi, double x_tol = 0.0,
              const Options& opt = {}) {
    double flo = f(lo);
    double fhi = f(hi);
    if (flo == 0.0) return {lo, 0.0, 0};
    if (fhi == 0.0) return {hi, 0.0, 0};
    if (std::signbit(flo) == std::signbit(fhi)) {
        throw ConvergenceError("bisect: root not bracketed");
    }
    double mid = lo, fmid = flo;
    for (int i = 0; i < opt.max_iters; ++i) {
        mid = 0.5 * (lo + hi);
        fmid = f(mid);
        if (std::abs(fmid) < opt.f_tol || 0.5 * (hi - lo) < x_tol) {
            return {mid, fmid, i + 1};
        }
        if (std::signbit(fmid) == std::signbit(flo)) {
            lo = mid;
            flo = fmid;
        } else {
            hi = mid;
        }
    }
    return {mid, fmid, opt.max_iters};
}

// Newton iteration safeguarded by a maintained bracket: any step leaving
// [lo, hi] is replaced by a bisection step, and the bracket shrinks each
// iteration. f_df returns (f, f').
template <typename F>
Result newton_safeguarded(const F& f_df, double lo, double hi,
                          const Options& opt = {}) {
    auto [flo, dlo] = f_df(lo);
    auto [fhi, dhi] = f_df(hi);
    (void)dlo;
    (void)dhi;
    if (flo == 0.0) return {lo, 0.0, 0};
    if (fhi == 0.0) return {hi, 0.0, 0};
    if (std::signbit(flo) == std::signbit(fhi)) {
        throw ConvergenceError("newton_safeguarded: root not bracketed");
    }
    double x = 0.5 * (lo + hi);
    for (int i = 0; i < opt.max_iters; ++i) {
        auto [fx, dfx] = f_df(x);
        if (std::abs(fx) < opt.f_tol) return {x, fx, i + 1};
        if (std::signbit(fx) == std::signbit(flo)) {
            lo = x;
            flo = fx;
        } else {
            hi = x;
        }
        double next = x - fx / dfx;
        if (!(next > lo && next < hi) || dfx == 0.0) {
            next = 0.5 * (lo + hi);
        }
        x = next;
    }
    throw ConvergenceError("newton_safeguarded: iteration cap reached");
}

} // namespace ppi::root
