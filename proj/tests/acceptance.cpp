// Acceptance suite: one line per criterion, "PASS"/"FAIL" plus diagnostics.
// Exit status is the number of failed criteria.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "ppi/backtest.hpp"
#include "ppi/simulate.hpp"
#include "ppi/solver.hpp"
#include "ppi/utility.hpp"

using namespace ppi;

namespace {

int failures = 0;

void report(int id, bool ok, const std::string& what, const std::string& detail) {
    if (!ok) ++failures;
    std::printf("criterion %2d: %s  %s (%s)\n", id, ok ? "PASS" : "FAIL", what.c_str(),
                detail.c_str());
}

double elapsed_ms(const std::chrono::steady_clock::time_point& t0) {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() -
                                                     t0)
        .count();
}

MarketParams constant_market() {
    MarketParams mkt;
    mkt.r = 0.035;
    mkt.mu = 0.235;
    mkt.sigma = 0.30;
    return mkt;
}

MarketParams kou_market() {
    MarketParams mkt;
    mkt.r = 0.035;
    mkt.mu = 0.275;
    mkt.sigma = 0.26;
    return mkt;
}

MarketParams merton_market() {
    MarketParams mkt;
    mkt.r = 0.035;
    mkt.mu = 0.125;
    mkt.sigma = 0.35;
    return mkt;
}

const JumpSpec kConstantSpec = ConstantJump{-0.03, 11.0};
// The published upward probability 0.72 makes both endpoint gates positive,
// so no root exists in [0, 1]; 0.28 is the solvable complementary reading.
const JumpSpec kKouPrinted = KouJump{20.0, 0.72, 64.94, 49.02};
const JumpSpec kKouSolvable = KouJump{20.0, 0.28, 64.94, 49.02};
const JumpSpec kMertonSpec = MertonJump{20.0, -0.01, 0.15};

UtilityParams table_utility() {
    UtilityParams up;
    up.delta1 = 0.6;
    up.delta2 = 0.5;
    up.lambda_tilde = 2.25;
    up.guarantee = 100.0;
    return up;
}

SimConfig base_cfg(long n_paths, double horizon, int n_grid, std::uint64_t seed) {
    SimConfig cfg;
    cfg.n_paths = n_paths;
    cfg.horizon = horizon;
    cfg.n_grid = n_grid;
    cfg.seed = seed;
    cfg.c0 = 20.0;
    cfg.guarantee = 100.0;
    return cfg;
}

char buf[512];

void criterion1() {
    const auto t0 = std::chrono::steady_clock::now();
    auto sol = solve_multiplier(constant_market(), kConstantSpec, 0.6);
    const double ms = elapsed_ms(t0);
    const bool ok = std::abs(sol.m_hat - (-2.18)) <= 0.01 && ms < 10.0;
    std::snprintf(buf, sizeof(buf), "m_hat=%.10g target -2.18+-0.01, %.2f ms", sol.m_hat,
                  ms);
    report(1, ok, "optimal multiplier, constant jump", buf);
}

void criterion2() {
    const auto t0 = std::chrono::steady_clock::now();
    auto mkt = kou_market();
    // endpoint values: quadrature vs the closed-form gate expressions
    auto rep = existence_check(mkt, kKouPrinted, 0.6);
    const double q0 = g_eval(mkt, kKouPrinted, 0.6, 0.0);
    const double q1 = g_eval(mkt, kKouPrinted, 0.6, 1.0);
    const bool endpoints_ok =
        std::abs(q0 - rep.gate1) < 1e-6 && std::abs(q1 - rep.gate2) < 1e-6;
    double m_hat = std::numeric_limits<double>::quiet_NaN();
    std::string note;
    try {
        m_hat = solve_multiplier(mkt, kKouPrinted, 0.6).m_hat;
    } catch (const NoSolutionError&) {
        note = "; published parameters violate their own gate: g(0)=" +
               std::to_string(rep.gate1) + ", g(1)=" + std::to_string(rep.gate2) +
               " (both positive, no root in [0,1]); complementary weight p=0.28 gives m_hat=" +
               std::to_string(solve_multiplier(mkt, kKouSolvable, 0.6).m_hat);
    }
    const double ms = elapsed_ms(t0);
    const bool ok =
        endpoints_ok && std::isfinite(m_hat) && std::abs(m_hat - 0.77) <= 0.01 && ms < 100.0;
    std::snprintf(buf, sizeof(buf),
                  "m_hat=%.10g target 0.77+-0.01, endpoint quadrature ok=%d, %.2f ms%s",
                  m_hat, endpoints_ok ? 1 : 0, ms, note.c_str());
    report(2, ok, "optimal multiplier, Kou", buf);
}

void criterion3() {
    auto sol = solve_multiplier(merton_market(), kMertonSpec, 0.6);
    const bool ok = std::abs(sol.m_hat - 0.22) <= 0.01;
    std::snprintf(buf, sizeof(buf),
                  "m_hat=%.10g target 0.22+-0.01 (gates pass and the root is unique; "
                  "the published table value is not reproducible from its parameters)",
                  sol.m_hat);
    report(3, ok, "optimal multiplier, Merton", buf);
}

void criterion4() {
    const auto t0 = std::chrono::steady_clock::now();
    auto mkt = constant_market();
    auto sol = solve_multiplier(mkt, kConstantSpec, 0.6);
    const double horizons[] = {1.0, 5.0, 10.0};
    const double sigmas[] = {0.05, 0.075, 0.1, 0.125, 0.15};
    const double published[3][5] = {
        {0.0, 0.0, 0.0003, 0.0052, 0.0374},
        {0.0, 0.0, 0.0015, 0.0293, 0.1471},
        {0.0, 0.0, 0.0024, 0.0565, 0.2493},
    };
    const long n = 100000;
    bool ok = true;
    std::string detail;
    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 5; ++j) {
            auto cfg = base_cfg(n, horizons[i], 1, 97);
            auto est = gap_probability(mkt, std::get<ConstantJump>(kConstantSpec),
                                       sol.m_hat, cfg, sigmas[j]);
            const double ref = published[i][j];
            bool cell_ok;
            if (ref == 0.0) {
                cell_ok = est.probability + 3.0 * est.stderr_ < 5e-5;
            } else {
                const double se = std::max(est.stderr_, std::sqrt(ref * (1.0 - ref) / n));
                cell_ok = std::abs(est.probability - ref) <= 3.0 * se;
            }
            if (!cell_ok) {
                ok = false;
                std::snprintf(buf, sizeof(buf), " [T=%g s=%g est=%.4g ref=%.4g]",
                              horizons[i], sigmas[j], est.probability, ref);
                detail += buf;
            }
        }
    }
    const double ms = elapsed_ms(t0);
    if (ms >= 60000.0) ok = false;
    std::snprintf(buf, sizeof(buf), "%.0f ms; mismatched cells:%s", ms,
                  detail.empty() ? " none" : detail.c_str());
    report(4, ok, "gap-risk matrix vs published table", buf);
}

void criterion5() {
    struct Case {
        const char* name;
        MarketParams mkt;
        JumpSpec spec;
    };
    const Case cases[] = {
        {"constant", constant_market(), kConstantSpec},
        {"kou(p=0.28)", kou_market(), kKouSolvable},
        {"merton", merton_market(), kMertonSpec},
    };
    bool ok = true;
    std::string detail;
    for (const auto& c : cases) {
        auto sol = solve_multiplier(c.mkt, c.spec, 0.6);
        auto cfg = base_cfg(10000, 10.0, 250, 11);
        auto bundle = simulate_cushion_paths(c.mkt, c.spec, sol.m_hat, cfg);
        double min_c = 1e300;
        for (double v : bundle.min_cushion) min_c = std::min(min_c, v);
        auto bands = quantile_bands(bundle, {0.0});
        bool above = true;
        for (std::size_t i = 0; i < bands.times.size(); ++i) {
            if (!(bands.bands[0][i] > bands.floor_values[i])) above = false;
        }
        if (!(min_c > 0.0) || !above) ok = false;
        std::snprintf(buf, sizeof(buf), " %s:min_C=%.4g,q0>floor=%d", c.name, min_c,
                      above ? 1 : 0);
        detail += buf;
    }
    report(5, ok, "no-gap property of the solved models", detail);
}

void criterion6() {
    auto mkt = constant_market();
    auto sol = solve_multiplier(mkt, kConstantSpec, 0.6);
    auto cfg = base_cfg(100000, 10.0, 1, 23);
    auto bundle = state_price_paths(sol.kernel, mkt, kConstantSpec, cfg);
    double zs = 0.0, zs2 = 0.0, budget = 0.0;
    const std::size_t last = bundle.grid_size() - 1;
    for (long p = 0; p < bundle.n_paths; ++p) {
        const double z = bundle.density_at(p, last);
        zs += z;
        zs2 += z * z;
        budget += bundle.state_price_at(p, last) * bundle.cushion_at(p, last);
    }
    const double n = static_cast<double>(cfg.n_paths);
    const double zmean = zs / n;
    const double zse = std::sqrt((zs2 / n - zmean * zmean) / (n - 1.0));
    const double budget_err = std::abs(budget / n / cfg.c0 - 1.0);
    auto dual_cfg = base_cfg(1000, 10.0, 25, 29);
    const double dual = duality_identity_check(sol.kernel, mkt, kConstantSpec, dual_cfg);
    const bool ok =
        std::abs(zmean - 1.0) < 3.0 * zse && budget_err < 0.01 && dual < 1e-8;
    std::snprintf(buf, sizeof(buf),
                  "E[Z_T]=%.6f (se %.2g), budget rel err=%.3g, duality max rel err=%.3g",
                  zmean, zse, budget_err, dual);
    report(6, ok, "duality suite", buf);
}

void criterion7() {
    UtilityParams up;
    up.delta1 = 0.3;
    up.delta2 = 0.5;
    up.lambda_tilde = 2.25;
    up.guarantee = 100.0;
    auto env = solve_c_hat(up);
    const double resid = std::abs(tangency_residual(env.c_hat, up));
    // independent bisection oracle
    double lo = 1e-8, hi = 1e8;
    for (int i = 0; i < 500; ++i) {
        const double mid = 0.5 * (lo + hi);
        (tangency_residual(mid, up) < 0.0 ? lo : hi) = mid;
    }
    const double oracle = 0.5 * (lo + hi);
    bool grid_ok = true;
    const int ngrid = 10000;
    double prev2 = 0.0, prev1 = 0.0;
    for (int i = 0; i < ngrid; ++i) {
        const double x = -up.guarantee + (up.guarantee + 4.0 * env.c_hat) *
                                            static_cast<double>(i) / (ngrid - 1);
        const double e = envelope_eval(x, env, up);
        if (e < utility_eval(x, up) - 1e-12) grid_ok = false;
        if (i >= 2 && e - 2.0 * prev1 + prev2 > 1e-9) grid_ok = false;
        prev2 = prev1;
        prev1 = e;
    }
    const bool ok = resid < 1e-12 && std::abs(env.c_hat - oracle) < 1e-10 && grid_ok;
    std::snprintf(buf, sizeof(buf),
                  "|f(c_hat)|=%.3g, |c_hat-oracle|=%.3g, dominance+concavity ok=%d",
                  resid, std::abs(env.c_hat - oracle), grid_ok ? 1 : 0);
    report(7, ok, "concavification", buf);
}

void criterion8() {
    struct Case {
        const char* name;
        MarketParams mkt;
        JumpSpec spec;
        double lo, hi;
    };
    auto m_const = solve_multiplier(constant_market(), kConstantSpec, 0.6).m_hat;
    const Case cases[] = {
        {"constant", constant_market(), kConstantSpec, m_const - 2.0, m_const + 2.0},
        {"kou(p=0.28)", kou_market(), kKouSolvable, 0.0, 1.0},
        {"merton", merton_market(), kMertonSpec, 0.0, 1.0},
    };
    auto up = table_utility();
    bool ok = true;
    std::string detail;
    for (const auto& c : cases) {
        auto sol = solve_multiplier(c.mkt, c.spec, 0.6);
        std::vector<double> grid;
        const int npts = 41;
        for (int i = 0; i < npts; ++i) {
            grid.push_back(c.lo + (c.hi - c.lo) * i / (npts - 1.0));
        }
        auto cfg = base_cfg(100000, 10.0, 1, 37);
        auto est = expected_utility_sweep(c.mkt, c.spec, up, grid, cfg);
        std::size_t best = 0;
        for (std::size_t i = 1; i < est.size(); ++i) {
            if (est[i].mean > est[best].mean) best = i;
        }
        const double step = grid[1] - grid[0];
        const double dist = std::abs(grid[best] - sol.m_hat);
        if (dist > step + 1e-12) ok = false;
        std::snprintf(buf, sizeof(buf), " %s:argmax=%.4g,m_hat=%.4g,step=%.4g", c.name,
                      grid[best], sol.m_hat, step);
        detail += buf;
    }
    report(8, ok, "grid optimality under common random numbers", detail);
}

void criterion9() {
    auto mkt = constant_market();
    const JumpSpec nojump = ConstantJump{-0.03, 0.0};
    auto sol = solve_multiplier(mkt, nojump, 0.6);
    const double expect = mkt.excess_return() / (0.6 * mkt.sigma * mkt.sigma);
    const bool limit_ok = std::abs(sol.m_hat - expect) < 1e-9;
    auto cfg = base_cfg(100, 10.0, 4, 3);
    auto bundle = simulate_cushion_paths(mkt, kConstantSpec, 0.0, cfg);
    bool exact = true;
    for (long p = 0; p < bundle.n_paths; ++p) {
        const double target = cfg.c0 * std::exp(mkt.r * cfg.horizon);
        if (std::abs(bundle.terminal_cushion(p) / target - 1.0) > 1e-13) exact = false;
    }
    const bool ok = limit_ok && exact;
    std::snprintf(buf, sizeof(buf), "|m_hat-(mu-r)/(d1 s^2)|=%.3g, m=0 growth exact=%d",
                  std::abs(sol.m_hat - expect), exact ? 1 : 0);
    report(9, ok, "limit checks", buf);
}

void criterion10() {
    auto prices =
        load_price_csv(std::string(PPI_SOURCE_DIR) + "/data/sample_index_2006_2013.csv");
    auto res = backtest_cppi(prices, 10.0, 0.035, 0.9, 100.0);
    bool ok = res.lock_index.has_value() && res.lock_date->substr(0, 4) == "2008";
    if (ok) {
        for (std::size_t i = *res.lock_index; i < res.value.size(); ++i) {
            if (res.exposure[i] != 0.0) ok = false;
        }
    }
    std::snprintf(buf, sizeof(buf), "cash-lock date=%s, exposure zero afterwards",
                  res.lock_date ? res.lock_date->c_str() : "none");
    report(10, ok, "historical backtest cash-lock", buf);
}

} // namespace

int main() {
    criterion1();
    criterion2();
    criterion3();
    criterion4();
    criterion5();
    criterion6();
    criterion7();
    criterion8();
    criterion9();
    criterion10();
    std::printf("%d of 10 criteria failed\n", failures);
    return failures;
}
