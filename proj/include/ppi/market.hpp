#pragma once
#include <cmath>
#include <limits>
#include <string>
#include <variant>

#include "ppi/errors.hpp"
#include "ppi/quadrature.hpp"
#include "ppi/rng.hpp"

namespace ppi {

/// Risky-asset and money-market parameters (annualized).
struct MarketParams {
    double r = 0.035;     // risk-free rate
    double mu = 0.0;      // risky-asset drift
    double sigma = 0.0;   // diffusion volatility

    double excess_return() const { return mu - r; }

    void validate() const {
        if (!(sigma >= 0.0)) throw DomainError("MarketParams: sigma must be >= 0");
        if (!(r >= 0.0)) throw DomainError("MarketParams: r must be >= 0");
        if (!std::isfinite(mu - r)) throw DomainError("MarketParams: mu - r must be finite");
    }
};

/// Constant negative jump size gamma_tilde in (-1, 0), Poisson intensity lambda.
struct ConstantJump {
    double gamma_tilde = -0.03;
    double lambda = 11.0;
};

/// Double-exponential log jump sizes. p is the upward-jump probability,
/// eta_plus / eta_minus govern the severity of upward / downward moves.
struct KouJump {
    double lambda = 20.0;
    double p = 0.5;
    double eta_plus = 50.0;
    double eta_minus = 50.0;
};

/// Gaussian log jump sizes with mean mu_j and standard deviation sigma_j.
struct MertonJump {
    double lambda = 20.0;
    double mu_j = 0.0;
    double sigma_j = 0.1;
};

using JumpSpec = std::variant<ConstantJump, KouJump, MertonJump>;

inline void validate(const JumpSpec& spec) {
    std::visit(
        [](const auto& s) {
            using T = std::decay_t<decltype(s)>;
            if (!(s.lambda >= 0.0)) throw DomainError("JumpSpec: lambda must be >= 0");
            if constexpr (std::is_same_v<T, ConstantJump>) {
                if (!(s.gamma_tilde > -1.0 && s.gamma_tilde < 0.0))
                    throw DomainError("ConstantJump: gamma_tilde must be in (-1, 0)");
            } else if constexpr (std::is_same_v<T, KouJump>) {
                if (!(s.p > 0.0 && s.p < 1.0)) throw DomainError("KouJump: p must be in (0, 1)");
                if (!(s.eta_plus > 1.0)) throw DomainError("KouJump: eta_plus must be > 1");
                if (!(s.eta_minus > 0.0)) throw DomainError("KouJump: eta_minus must be > 0");
            } else {
                if (!(s.sigma_j > 0.0)) throw DomainError("MertonJump: sigma_j must be > 0");
            }
        },
        spec);
}

inline double intensity(const JumpSpec& spec) {
    return std::visit([](const auto& s) { return s.lambda; }, spec);
}

/// Infimum and supremum of the set of jump sizes gamma.
struct JumpBounds {
    double phi1;
    double phi2;
};

/// ConstantJump has a degenerate size law; the solver treats the supremum
/// side of its bracket as 0 (no positive jumps).
inline JumpBounds jump_bounds(const JumpSpec& spec) {
    return std::visit(
        [](const auto& s) -> JumpBounds {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, ConstantJump>) {
                return {s.gamma_tilde, s.gamma_tilde};
            } else {
                return {-1.0, std::numeric_limits<double>::infinity()};
            }
        },
        spec);
}

/// Integrates phi(gamma) against the Levy compensator nu(dy) = lambda f(y) dy,
/// where gamma = e^y - 1 for the log-jump models. Each exponential branch of
/// the Kou density is mapped to (0, 1]; the Merton integrand is truncated at
/// mu_j +/- 10 sigma_j.
template <typename F>
double levy_integral(const JumpSpec& spec, const F& phi,
                     const quad::Options& opt = {}) {
    return std::visit(
        [&](const auto& s) -> double {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, ConstantJump>) {
                return s.lambda * phi(s.gamma_tilde);
            } else if constexpr (std::is_same_v<T, KouJump>) {
                // u = exp(-eta_plus * y) on the upward branch,
                // u = exp(eta_minus * y) on the downward branch.
                const double inv_ep = 1.0 / s.eta_plus;
                const double inv_em = 1.0 / s.eta_minus;
                const double up = quad::integrate(
                    [&](double u) { return phi(std::pow(u, -inv_ep) - 1.0); }, 0.0, 1.0, opt);
                const double down = quad::integrate(
                    [&](double u) { return phi(std::pow(u, inv_em) - 1.0); }, 0.0, 1.0, opt);
                return s.lambda * (s.p * up + (1.0 - s.p) * down);
            } else {
                const double lo = s.mu_j - 10.0 * s.sigma_j;
                const double hi = s.mu_j + 10.0 * s.sigma_j;
                const double norm = 1.0 / (s.sigma_j * std::sqrt(2.0 * M_PI));
                return s.lambda * quad::integrate(
                    [&](double y) {
                        const double z = (y - s.mu_j) / s.sigma_j;
                        return phi(std::expm1(y)) * norm * std::exp(-0.5 * z * z);
                    }, lo, hi, opt);
            }
        },
        spec);
}

/// lambda * E[gamma], in closed form per model.
inline double jump_mean(const JumpSpec& spec) {
    validate(spec);
    return std::visit(
        [](const auto& s) -> double {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, ConstantJump>) {
                return s.lambda * s.gamma_tilde;
            } else if constexpr (std::is_same_v<T, KouJump>) {
                return s.lambda * (s.p * s.eta_plus / (s.eta_plus - 1.0) +
                                   (1.0 - s.p) * s.eta_minus / (s.eta_minus + 1.0) - 1.0);
            } else {
                return s.lambda * std::expm1(s.mu_j + 0.5 * s.sigma_j * s.sigma_j);
            }
        },
        spec);
}

/// Open interval of multipliers m for which 1 + gamma * m > 0 on the whole
/// jump support. Both log-jump models have support (-1, +inf), giving [0, 1];
/// the endpoints remain integrable and are included.
inline std::pair<double, double> admissible_multiplier_range(const JumpSpec& spec) {
    if (std::holds_alternative<ConstantJump>(spec)) {
        const double gt = std::get<ConstantJump>(spec).gamma_tilde;
        return {-std::numeric_limits<double>::infinity(), -1.0 / gt};
    }
    return {0.0, 1.0};
}

inline void check_multiplier_in_range(const JumpSpec& spec, double m) {
    auto [lo, hi] = admissible_multiplier_range(spec);
    if (std::holds_alternative<ConstantJump>(spec)) {
        if (!(m < hi)) throw DomainError("multiplier outside admissible bracket");
    } else if (!(m >= lo && m <= hi)) {
        throw DomainError("multiplier outside admissible bracket [0, 1]");
    }
}

/// Integral of gamma * (1 + gamma m)^(-delta1) against nu; the jump part of
/// the optimality condition. Closed form for the constant model.
inline double levy_drift_integral(const JumpSpec& spec, double m, double delta1,
                                  const quad::Options& opt = {}) {
    validate(spec);
    check_multiplier_in_range(spec, m);
    if (std::holds_alternative<ConstantJump>(spec)) {
        const auto& s = std::get<ConstantJump>(spec);
        return s.lambda * s.gamma_tilde *
               std::pow(1.0 + s.gamma_tilde * m, -delta1);
    }
    return levy_integral(
        spec,
        [m, delta1](double gamma) {
            return gamma * std::pow(1.0 + gamma * m, -delta1);
        },
        opt);
}

/// One realization of the jump size gamma from a single uniform draw.
/// Kou uses the inverse CDF with u <= p mapped to the upward branch.
inline double sample_jump_size(const JumpSpec& spec, double u) {
    return std::visit(
        [u](const auto& s) -> double {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, ConstantJump>) {
                return s.gamma_tilde;
            } else if constexpr (std::is_same_v<T, KouJump>) {
                double y;
                if (u <= s.p) {
                    y = -std::log(u / s.p) / s.eta_plus;
                } else {
                    y = std::log((1.0 - u) / (1.0 - s.p)) / s.eta_minus;
                }
                return std::expm1(y);
            } else {
                return std::expm1(s.mu_j + s.sigma_j * rng::Philox::normal_quantile(u));
            }
        },
        spec);
}

} // namespace ppi
