#pragma once
#include <cmath>

#include "ppi/errors.hpp"
#include "ppi/root_find.hpp"

namespace ppi {

/// S-shaped utility over the terminal cushion: CRRA gains above zero,
/// loss-averse convex branch on [-G, 0).
struct UtilityParams {
    double delta1 = 0.3;        // gain exponent, in (0,1)
    double delta2 = 0.5;        // loss exponent, in (0,1)
    double lambda_tilde = 2.25; // loss-aversion weight
    double guarantee = 100.0;   // G >= 0

    void validate() const {
        if (!(delta1 > 0.0 && delta1 < 1.0)) throw DomainError("UtilityParams: delta1 must be in (0,1)");
        if (!(delta2 > 0.0 && delta2 < 1.0)) throw DomainError("UtilityParams: delta2 must be in (0,1)");
        if (!(lambda_tilde > (1.0 - delta2) / (1.0 - delta1)))
            throw DomainError("UtilityParams: lambda_tilde must exceed (1-delta2)/(1-delta1)");
        if (!(guarantee >= 0.0)) throw DomainError("UtilityParams: guarantee must be >= 0");
    }
};

inline double utility_eval(double x, const UtilityParams& p) {
    if (x < -p.guarantee) throw DomainError("utility_eval: x below -G");
    if (x >= 0.0) {
        return std::pow(x, 1.0 - p.delta1) / (1.0 - p.delta1);
    }
    return -p.lambda_tilde * std::pow(-x, 1.0 - p.delta2) / (1.0 - p.delta2);
}

/// Concave envelope of the S-shaped utility: the chord from (-G, U(-G))
/// tangent to the CRRA branch at c_hat, then the utility itself beyond.
/// The line is stored through its tangency data rather than a precomputed
/// intercept.
struct ConcaveEnvelope {
    double c_hat = 0.0;     // tangency point, > 0
    double slope = 0.0;     // k = c_hat^(-delta1)
    double left_value = 0.0; // U(-G)
};

/// Tangency residual: f(x) = d1/(1-d1) x^(1-d1) - G x^(-d1) + lt G^(1-d2)/(1-d2),
/// strictly increasing on (0, inf) with a unique zero.
inline double tangency_residual(double x, const UtilityParams& p) {
    return p.delta1 / (1.0 - p.delta1) * std::pow(x, 1.0 - p.delta1) -
           p.guarantee * std::pow(x, -p.delta1) +
           p.lambda_tilde * std::pow(p.guarantee, 1.0 - p.delta2) / (1.0 - p.delta2);
}

inline ConcaveEnvelope solve_c_hat(const UtilityParams& p) {
    p.validate();
    if (!(p.guarantee > 0.0)) throw DomainError("solve_c_hat: requires G > 0");
    auto f = [&](double x) { return tangency_residual(x, p); };
    // f(0+) = -inf, f(+inf) = +inf: expand from x = G until a sign change.
    double lo = p.guarantee, hi = p.guarantee;
    int guard = 0;
    while (f(lo) > 0.0) {
        lo *= 0.5;
        if (++guard > 2000) throw ConvergenceError("solve_c_hat: no lower bracket");
    }
    guard = 0;
    while (f(hi) < 0.0) {
        hi *= 2.0;
        if (++guard > 2000) throw ConvergenceError("solve_c_hat: no upper bracket");
    }
    root::Options opt;
    opt.f_tol = 1e-12;
    auto res = root::bisect(f, lo, hi, 0.0, opt);
    if (std::abs(res.fx) >= 1e-12) {
        // Polish with Newton if bisection ran out of iterations.
        double x = res.x;
        for (int i = 0; i < 50 && std::abs(f(x)) >= 1e-13; ++i) {
            const double d = p.delta1 * std::pow(x, -p.delta1) +
                             p.delta1 * p.guarantee * std::pow(x, -p.delta1 - 1.0);
            x -= f(x) / d;
        }
        if (std::abs(f(x)) >= 1e-12) throw ConvergenceError("solve_c_hat: residual tolerance not met");
        res.x = x;
    }
    ConcaveEnvelope env;
    env.c_hat = res.x;
    env.slope = std::pow(res.x, -p.delta1);
    env.left_value = utility_eval(-p.guarantee, p);
    return env;
}

inline double envelope_eval(double x, const ConcaveEnvelope& env,
                            const UtilityParams& p) {
    if (x < -p.guarantee) throw DomainError("envelope_eval: x below -G");
    if (x >= env.c_hat) return utility_eval(x, p);
    return env.left_value + env.slope * (x + p.guarantee);
}

} // namespace ppi
