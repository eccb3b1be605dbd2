#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "ppi/market.hpp"
#include "ppi/rng.hpp"

using namespace ppi;

TEST_CASE("market validation") {
    MarketParams mkt;
    mkt.mu = 0.235;
    mkt.sigma = 0.30;
    REQUIRE_NOTHROW(mkt.validate());
    REQUIRE(mkt.excess_return() == Catch::Approx(0.20));
    mkt.sigma = -0.1;
    REQUIRE_THROWS_AS(mkt.validate(), DomainError);
}

TEST_CASE("jump spec validation") {
    REQUIRE_NOTHROW(validate(JumpSpec{ConstantJump{-0.03, 11.0}}));
    REQUIRE_THROWS_AS(validate(JumpSpec{ConstantJump{0.1, 11.0}}), DomainError);
    REQUIRE_THROWS_AS(validate(JumpSpec{ConstantJump{-1.5, 11.0}}), DomainError);
    REQUIRE_THROWS_AS(validate(JumpSpec{KouJump{20.0, 0.5, 0.9, 49.0}}), DomainError);
    REQUIRE_THROWS_AS(validate(JumpSpec{KouJump{20.0, 1.2, 64.0, 49.0}}), DomainError);
    REQUIRE_THROWS_AS(validate(JumpSpec{MertonJump{20.0, 0.0, 0.0}}), DomainError);
    REQUIRE_NOTHROW(validate(JumpSpec{MertonJump{0.0, 0.0, 0.1}}));
}

TEST_CASE("jump bounds") {
    auto cb = jump_bounds(JumpSpec{ConstantJump{-0.03, 11.0}});
    REQUIRE(cb.phi1 == Catch::Approx(-0.03));
    REQUIRE(cb.phi2 == Catch::Approx(-0.03));
    auto kb = jump_bounds(JumpSpec{KouJump{}});
    REQUIRE(kb.phi1 == Catch::Approx(-1.0));
    REQUIRE(std::isinf(kb.phi2));
}

TEST_CASE("levy integral of gamma matches closed-form mean") {
    const JumpSpec specs[] = {
        JumpSpec{ConstantJump{-0.03, 11.0}},
        JumpSpec{KouJump{20.0, 0.28, 64.94, 49.02}},
        JumpSpec{MertonJump{20.0, -0.01, 0.15}},
    };
    for (const auto& spec : specs) {
        const double quad = levy_integral(spec, [](double g) { return g; });
        REQUIRE(quad == Catch::Approx(jump_mean(spec)).margin(1e-8));
    }
}

TEST_CASE("levy integral of one recovers the intensity") {
    const JumpSpec specs[] = {
        JumpSpec{KouJump{20.0, 0.72, 64.94, 49.02}},
        JumpSpec{MertonJump{20.0, -0.01, 0.15}},
    };
    for (const auto& spec : specs) {
        const double quad = levy_integral(spec, [](double) { return 1.0; });
        REQUIRE(quad == Catch::Approx(intensity(spec)).epsilon(1e-10));
    }
}

TEST_CASE("drift integral closed form, constant model") {
    const JumpSpec spec = ConstantJump{-0.03, 11.0};
    // m = 0: reduces to lambda * gamma_tilde = -0.33.
    REQUIRE(levy_drift_integral(spec, 0.0, 0.6) == Catch::Approx(-0.33).epsilon(1e-14));
    const double m = -2.0;
    const double expect = 11.0 * (-0.03) * std::pow(1.0 + (-0.03) * m, -0.6);
    REQUIRE(levy_drift_integral(spec, m, 0.6) == Catch::Approx(expect).epsilon(1e-12));
}

TEST_CASE("drift integral at m=0 equals jump mean, all models") {
    const JumpSpec specs[] = {
        JumpSpec{KouJump{20.0, 0.72, 64.94, 49.02}},
        JumpSpec{MertonJump{20.0, -0.01, 0.15}},
    };
    for (const auto& spec : specs) {
        REQUIRE(levy_drift_integral(spec, 0.0, 0.6) ==
                Catch::Approx(jump_mean(spec)).margin(1e-6));
    }
}

TEST_CASE("kou drift integral at m=0 matches branch closed form") {
    const KouJump s{20.0, 0.72, 64.94, 49.02};
    // lambda E[gamma] = lambda [p eta+/(eta+ - 1) + (1-p) eta-/(eta- + 1) - 1]
    const double closed = s.lambda * (s.p * s.eta_plus / (s.eta_plus - 1.0) +
                                      (1.0 - s.p) * s.eta_minus / (s.eta_minus + 1.0) -
                                      1.0);
    REQUIRE(levy_drift_integral(JumpSpec{s}, 0.0, 0.6) ==
            Catch::Approx(closed).margin(1e-6));
}

TEST_CASE("admissible multiplier ranges") {
    const JumpSpec cj = ConstantJump{-0.03, 11.0};
    auto [lo, hi] = admissible_multiplier_range(cj);
    REQUIRE(std::isinf(lo));
    REQUIRE(hi == Catch::Approx(100.0 / 3.0));
    REQUIRE_NOTHROW(check_multiplier_in_range(cj, -50.0));
    REQUIRE_NOTHROW(check_multiplier_in_range(cj, 33.0));
    REQUIRE_THROWS_AS(check_multiplier_in_range(cj, 34.0), DomainError);

    const JumpSpec kj = KouJump{};
    auto [klo, khi] = admissible_multiplier_range(kj);
    REQUIRE(klo == 0.0);
    REQUIRE(khi == 1.0);
    REQUIRE_NOTHROW(check_multiplier_in_range(kj, 0.0));
    REQUIRE_NOTHROW(check_multiplier_in_range(kj, 1.0));
    REQUIRE_THROWS_AS(check_multiplier_in_range(kj, 1.01), DomainError);
    REQUIRE_THROWS_AS(check_multiplier_in_range(kj, -0.01), DomainError);
}

TEST_CASE("kou inverse-CDF sampling") {
    const KouJump s{20.0, 0.72, 64.94, 49.02};
    const JumpSpec spec = s;
    // u <= p maps to the upward branch; the tie lands exactly at zero.
    REQUIRE(sample_jump_size(spec, s.p) == Catch::Approx(0.0).margin(1e-15));
    REQUIRE(sample_jump_size(spec, 0.5 * s.p) > 0.0);
    REQUIRE(sample_jump_size(spec, 0.99) < 0.0);
    // explicit inverse: u = p/2 -> y = ln(2)/eta_plus.
    REQUIRE(sample_jump_size(spec, 0.5 * s.p) ==
            Catch::Approx(std::expm1(std::log(2.0) / s.eta_plus)).epsilon(1e-12));
    // gamma stays above -1 even for u -> 1.
    REQUIRE(sample_jump_size(spec, 1.0 - 1e-15) > -1.0);
}

TEST_CASE("sampled jump mean matches the compensator, all models") {
    const JumpSpec specs[] = {
        JumpSpec{KouJump{20.0, 0.28, 64.94, 49.02}},
        JumpSpec{MertonJump{20.0, -0.01, 0.15}},
        JumpSpec{ConstantJump{-0.03, 11.0}},
    };
    for (const auto& spec : specs) {
        rng::Philox gen(31, 0);
        const int n = 400000;
        double s = 0.0, s2 = 0.0;
        for (int i = 0; i < n; ++i) {
            const double g = sample_jump_size(spec, gen.next_u01());
            s += g;
            s2 += g * g;
        }
        const double mean = s / n;
        const double se = std::sqrt(std::max(0.0, s2 / n - mean * mean) /
                                    static_cast<double>(n - 1));
        const double expect = jump_mean(spec) / intensity(spec);
        REQUIRE(std::abs(mean - expect) < std::max(4.0 * se, 1e-12));
    }
}
