#pragma once
#include <cmath>
#include <limits>
#include <string>

#include "ppi/market.hpp"
#include "ppi/root_find.hpp"

namespace ppi {

/// Constant worst-case Girsanov kernel induced by a multiplier m:
/// theta_D = -delta1 sigma m, theta_J(gamma) = (1 + gamma m)^(-delta1).
struct GirsanovKernel {
    double m = 0.0;
    double sigma = 0.0;
    double delta1 = 0.0;
    double theta_D = 0.0;

    double theta_J(double gamma) const {
        const double base = 1.0 + gamma * m;
        if (!(base > 0.0)) throw DomainError("theta_J: 1 + gamma*m must be positive");
        return std::pow(base, -delta1);
    }
};

inline GirsanovKernel kernel_from_multiplier(double m, double sigma, double delta1) {
    GirsanovKernel k;
    k.m = m;
    k.sigma = sigma;
    k.delta1 = delta1;
    k.theta_D = -delta1 * sigma * m;
    return k;
}

/// g(m) = mu - r - delta1 sigma^2 m + integral of gamma (1+gamma m)^(-delta1) nu(dy).
/// Strictly decreasing on the admissible bracket.
inline double g_eval(const MarketParams& mkt, const JumpSpec& spec, double delta1,
                     double m, const quad::Options& opt = {}) {
    mkt.validate();
    return mkt.excess_return() - delta1 * mkt.sigma * mkt.sigma * m +
           levy_drift_integral(spec, m, delta1, opt);
}

/// g'(m) = -delta1 sigma^2 - delta1 * integral of gamma^2 (1+gamma m)^(-1-delta1) nu.
inline double g_prime(const MarketParams& mkt, const JumpSpec& spec, double delta1,
                      double m, const quad::Options& opt = {}) {
    check_multiplier_in_range(spec, m);
    double jump_term;
    if (std::holds_alternative<ConstantJump>(spec)) {
        const auto& s = std::get<ConstantJump>(spec);
        jump_term = s.lambda * s.gamma_tilde * s.gamma_tilde *
                    std::pow(1.0 + s.gamma_tilde * m, -1.0 - delta1);
    } else {
        jump_term = levy_integral(
            spec,
            [m, delta1](double gamma) {
                return gamma * gamma * std::pow(1.0 + gamma * m, -1.0 - delta1);
            },
            opt);
    }
    return -delta1 * (mkt.sigma * mkt.sigma + jump_term);
}

/// Existence/uniqueness gates from the endpoint values of g over the
/// admissible bracket. gate1 is the value at the lower endpoint side
/// (must be >= 0), gate2 the value at the upper side (must be <= 0).
struct ExistenceReport {
    std::string model_case;          // "(i)", "(ii)" or "(iii)"
    double bracket_lo = 0.0;
    double bracket_hi = 0.0;
    double gate1 = 0.0;              // g at bracket_lo (limit if infinite)
    double gate2 = 0.0;              // g at bracket_hi (limit if infinite)
    bool gate1_pass = false;
    bool gate2_pass = false;
    // Merton only: the gate values with total drift mu in place of mu - r.
    // Reported for comparison, not used for the decision.
    double gate1_printed = std::numeric_limits<double>::quiet_NaN();
    double gate2_printed = std::numeric_limits<double>::quiet_NaN();

    bool pass() const { return gate1_pass && gate2_pass; }
};

inline ExistenceReport existence_check(const MarketParams& mkt, const JumpSpec& spec,
                                       double delta1) {
    mkt.validate();
    validate(spec);
    ExistenceReport rep;
    const double inf = std::numeric_limits<double>::infinity();
    const double mu_r = mkt.excess_return();
    if (const auto* s = std::get_if<ConstantJump>(&spec)) {
        // Only negative jumps: g -> +inf as m -> -inf and g -> -inf at the
        // right endpoint, so a unique root always exists.
        rep.model_case = "(i)";
        rep.bracket_lo = -inf;
        rep.bracket_hi = -1.0 / s->gamma_tilde;
        rep.gate1 = inf;
        rep.gate2 = -inf;
        rep.gate1_pass = true;
        rep.gate2_pass = true;
        return rep;
    }
    rep.model_case = "(iii)";
    rep.bracket_lo = 0.0;
    rep.bracket_hi = 1.0;
    if (const auto* s = std::get_if<KouJump>(&spec)) {
        const double ep = s->eta_plus, em = s->eta_minus, p = s->p, lam = s->lambda;
        rep.gate1 = mu_r - p * lam / (1.0 - ep) - (1.0 - p) * lam / (1.0 + em);
        rep.gate2 = mu_r - delta1 * mkt.sigma * mkt.sigma -
                    p * ep * lam / ((1.0 - delta1 - ep) * (delta1 + ep)) +
                    (1.0 - p) * em * lam / ((1.0 - delta1 + em) * (delta1 - em));
    } else {
        const auto& mt = std::get<MertonJump>(spec);
        const double lam = mt.lambda, mj = mt.mu_j, sj = mt.sigma_j;
        rep.gate1 = mu_r + lam * std::expm1(mj + 0.5 * sj * sj);
        rep.gate2 = mu_r - delta1 * mkt.sigma * mkt.sigma +
                    lam * (std::exp((1.0 - delta1) * mj +
                                    0.5 * (1.0 - delta1) * (1.0 - delta1) * sj * sj) -
                           std::exp(-delta1 * mj + 0.5 * delta1 * delta1 * sj * sj));
        rep.gate1_printed = rep.gate1 + mkt.r;
        rep.gate2_printed = rep.gate2 + mkt.r;
    }
    rep.gate1_pass = rep.gate1 >= 0.0;
    rep.gate2_pass = rep.gate2 <= 0.0;
    return rep;
}

struct MultiplierSolution {
    double m_hat = 0.0;
    GirsanovKernel kernel;
    double bracket_lo = 0.0;
    double bracket_hi = 0.0;
    double g_residual = 0.0;
    ExistenceReport existence;
    int iters = 0;
};

inline MultiplierSolution solve_multiplier(const MarketParams& mkt, const JumpSpec& spec,
                                           double delta1,
                                           const quad::Options& opt = {}) {
    auto report = existence_check(mkt, spec, delta1);
    if (!report.pass()) {
        throw NoSolutionError("solve_multiplier: existence gates fail (gate1=" +
                              std::to_string(report.gate1) +
                              ", gate2=" + std::to_string(report.gate2) + ")");
    }
    auto g = [&](double m) { return g_eval(mkt, spec, delta1, m, opt); };

    double lo, hi;
    if (std::holds_alternative<ConstantJump>(spec)) {
        // Geometric expansion from m = 0; the right endpoint is approached
        // from inside since g blows down there.
        const double endpoint = report.bracket_hi;
        const double g0 = g(0.0);
        if (g0 > 0.0) {
            lo = 0.0;
            double gap = 0.5 * endpoint;
            hi = endpoint - gap;
            while (g(hi) > 0.0) {
                gap *= 0.5;
                hi = endpoint - gap;
                if (gap < 1e-15 * endpoint)
                    throw ConvergenceError("solve_multiplier: no sign change near endpoint");
            }
        } else {
            hi = 0.0;
            lo = -1.0;
            while (g(lo) < 0.0) {
                lo *= 2.0;
                if (std::abs(lo) > 1e6)
                    throw ConvergenceError("solve_multiplier: bracket expansion exceeded 1e6");
            }
        }
    } else {
        lo = report.bracket_lo;
        hi = report.bracket_hi;
    }

    root::Options ropt;
    ropt.f_tol = 1e-10;
    auto res = root::newton_safeguarded(
        [&](double m) {
            return std::pair<double, double>{g(m), g_prime(mkt, spec, delta1, m, opt)};
        },
        lo, hi, ropt);

    MultiplierSolution sol;
    sol.m_hat = res.x;
    sol.g_residual = std::abs(res.fx);
    sol.bracket_lo = report.bracket_lo;
    sol.bracket_hi = report.bracket_hi;
    sol.kernel = kernel_from_multiplier(res.x, mkt.sigma, delta1);
    sol.existence = report;
    sol.iters = res.iters;
    return sol;
}

/// Left-hand side of the no-arbitrage condition
/// mu - r + sigma theta_D + integral of gamma theta_J(gamma) nu(dy).
/// For a kernel built from m this equals g(m) identically.
inline double no_arbitrage_residual(const GirsanovKernel& kernel, const MarketParams& mkt,
                                    const JumpSpec& spec,
                                    const quad::Options& opt = {}) {
    const double jump = levy_integral(
        spec, [&](double gamma) { return gamma * kernel.theta_J(gamma); }, opt);
    return mkt.excess_return() + mkt.sigma * kernel.theta_D + jump;
}

} // namespace ppi
