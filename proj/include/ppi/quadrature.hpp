#pragma once
#include <array>
#include <cmath>
#include <functional>
#include <vector>

#include "ppi/errors.hpp"

namespace ppi::quad {

struct Options {
    double abs_tol = 1e-10;
    double rel_tol = 1e-10;
    int max_intervals = 4000;
};

namespace detail {

// Gauss-Kronrod 7-15 nodes/weights on [-1,1] (positive half; nodes are symmetric).
inline constexpr std::array<double, 8> kronrod_nodes = {
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144838258730,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000};

inline constexpr std::array<double, 8> kronrod_weights = {
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714};

inline constexpr std::array<double, 4> gauss_weights = {
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327};

struct GkResult {
    double value;
    double error;
};

template <typename F>
GkResult gk15(const F& f, double a, double b) {
    const double center = 0.5 * (a + b);
    const double half = 0.5 * (b - a);
    double kronrod = 0.0;
    double gauss = 0.0;
    for (int i = 0; i < 8; ++i) {
        const double dx = half * kronrod_nodes[i];
        double fv;
        if (i == 7) {
            fv = f(center);
        } else {
            fv = f(center - dx) + f(center + dx);
        }
        kronrod += kronrod_weights[i] * fv;
        if (i % 2 == 1) {
            gauss += gauss_weights[i / 2] * fv;
        }
    }
    kronrod *= half;
    gauss *= half;
    return {kronrod, std::abs(kronrod - gauss)};
}

} // namespace detail

// Adaptive Gauss-Kronrod on a finite interval. Bisects the interval with the
// largest error estimate until the global estimate meets tolerance.
template <typename F>
double integrate(const F& f, double a, double b, const Options& opt = {}) {
    if (a == b) return 0.0;
    struct Seg {
        double a, b, value, error;
    };
    std::vector<Seg> segs;
    auto first = detail::gk15(f, a, b);
    segs.push_back({a, b, first.value, first.error});
    for (int iter = 0; iter < opt.max_intervals; ++iter) {
        double total = 0.0, err = 0.0;
        std::size_t worst = 0;
        for (std::size_t i = 0; i < segs.size(); ++i) {
            total += segs[i].value;
            err += segs[i].error;
            if (segs[i].error > segs[worst].error) worst = i;
        }
        if (!std::isfinite(total)) {
            throw QuadratureError("integrand produced a non-finite value");
        }
        if (err <= opt.abs_tol || err <= opt.rel_tol * std::abs(total)) {
            return total;
        }
        const Seg s = segs[worst];
        const double mid = 0.5 * (s.a + s.b);
        auto left = detail::gk15(f, s.a, mid);
        auto right = detail::gk15(f, mid, s.b);
        segs[worst] = {s.a, mid, left.value, left.error};
        segs.push_back({mid, s.b, right.value, right.error});
    }
    throw QuadratureError("adaptive quadrature failed to converge");
}

} // namespace ppi::quad
