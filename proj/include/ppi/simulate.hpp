#pragma once
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <mutex>
#include <optional>
#include <thread>
#include <vector>

#include "ppi/market.hpp"
#include "ppi/rng.hpp"
#include "ppi/solver.hpp"
#include "ppi/utility.hpp"

namespace ppi {

struct SimConfig {
    long n_paths = 10000;
    double horizon = 10.0;   // T, years
    int n_grid = 1;          // recording intervals over [0, T]
    std::uint64_t seed = 42;
    double c0 = 20.0;        // initial cushion
    double guarantee = 100.0;
    int n_threads = 0;       // 0: hardware concurrency
    bool record_events = false;

    void validate() const {
        if (n_paths < 1) throw ConfigError("SimConfig: n_paths must be >= 1");
        if (!(horizon > 0.0)) throw ConfigError("SimConfig: horizon must be > 0");
        if (n_grid < 1) throw ConfigError("SimConfig: n_grid must be >= 1");
        if (!(c0 > 0.0)) throw ConfigError("SimConfig: c0 must be > 0");
        if (!(guarantee >= 0.0)) throw ConfigError("SimConfig: guarantee must be >= 0");
    }

    double initial_wealth(double r) const {
        return c0 + guarantee * std::exp(-r * horizon);
    }
};

struct JumpEvent {
    double time;
    double gamma;
};

/// Simulated paths recorded on the monitoring grid. The cushion is exact:
/// between jumps it is geometric Brownian motion, at jumps it is multiplied
/// by (1 + m gamma). V_t = C_t + F_t by construction.
struct PathBundle {
    double r = 0.0;
    double horizon = 0.0;
    double guarantee = 0.0;
    double c0 = 0.0;
    long n_paths = 0;
    std::vector<double> grid_times;             // size n_grid + 1
    std::vector<double> cushion;                // n_paths x grid size, row-major
    std::vector<double> density;                // Z paths; empty unless requested
    std::vector<double> min_cushion;            // per path, over grid and jump times
    std::vector<long> jump_counts;              // per path
    std::vector<std::vector<JumpEvent>> events; // only when record_events
    std::vector<std::vector<double>> brownian;  // per-segment dW, only when record_events
    std::vector<std::optional<double>> lock_times; // classic CPPI only
    long truncated_jumps = 0;                   // perturbed-size mode only

    std::size_t grid_size() const { return grid_times.size(); }
    double floor_at(double t) const {
        return guarantee * std::exp(-r * (horizon - t));
    }
    double cushion_at(long path, std::size_t i) const {
        return cushion[static_cast<std::size_t>(path) * grid_size() + i];
    }
    double value_at(long path, std::size_t i) const {
        return cushion_at(path, i) + floor_at(grid_times[i]);
    }
    double terminal_cushion(long path) const {
        return cushion_at(path, grid_size() - 1);
    }
    double density_at(long path, std::size_t i) const {
        return density[static_cast<std::size_t>(path) * grid_size() + i];
    }
    double state_price_at(long path, std::size_t i) const {
        return density_at(path, i) * std::exp(-r * grid_times[i]);
    }
};

struct GapRiskEstimate {
    double probability = 0.0;
    double stderr_ = 0.0;
    long n_paths = 0;
    double sigma_gamma = 0.0;
    long truncated_jumps = 0; // perturbed sizes clipped at -1 + 1e-12
};

struct Estimate {
    double mean = 0.0;
    double stderr_ = 0.0;
};

namespace detail {

template <typename Fn>
void parallel_paths(long n_paths, int n_threads, Fn&& body) {
    unsigned hw = std::thread::hardware_concurrency();
    long workers = n_threads > 0 ? n_threads : (hw > 0 ? static_cast<long>(hw) : 1);
    workers = std::min<long>(workers, n_paths);
    if (workers <= 1) {
        for (long p = 0; p < n_paths; ++p) body(p);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (long w = 0; w < workers; ++w) {
        const long lo = n_paths * w / workers;
        const long hi = n_paths * (w + 1) / workers;
        pool.emplace_back([lo, hi, &body] {
            for (long p = lo; p < hi; ++p) body(p);
        });
    }
    for (auto& t : pool) t.join();
}

// Jump sizes for a path: either the model law or the perturbed-size stress
// variant. Draw order per jump is fixed: interarrival first, then size.
struct SizeSampler {
    const JumpSpec* spec = nullptr;
    bool perturbed = false;
    double gamma_tilde = 0.0;
    double sigma_gamma = 0.0;

    double operator()(rng::Philox& gen, long& truncated) const {
        if (!perturbed) {
            return sample_jump_size(*spec, gen.next_u01());
        }
        double gamma = gamma_tilde + sigma_gamma * gen.next_normal();
        if (gamma <= -1.0) {
            gamma = -1.0 + 1e-12;
            ++truncated;
        }
        return gamma;
    }
};

struct EngineConfig {
    MarketParams mkt;
    const JumpSpec* spec = nullptr;
    double m = 0.0;
    SimConfig cfg;
    const GirsanovKernel* kernel = nullptr; // also simulate Z when set
    SizeSampler sampler;
    bool classic_cppi = false;
};

inline PathBundle run_engine(const EngineConfig& ec) {
    ec.mkt.validate();
    validate(*ec.spec);
    ec.cfg.validate();
    const double T = ec.cfg.horizon;
    const double lambda = intensity(*ec.spec);
    const double m = ec.m;
    const double sigma = ec.mkt.sigma;
    const double drift = ec.mkt.r + m * ec.mkt.excess_return() - 0.5 * m * m * sigma * sigma;
    const std::size_t gsize = static_cast<std::size_t>(ec.cfg.n_grid) + 1;

    double z_drift = 0.0; // per-unit-time compensator term of log Z
    if (ec.kernel) {
        const auto& k = *ec.kernel;
        const double eta = levy_integral(
            *ec.spec, [&](double gamma) { return 1.0 - k.theta_J(gamma); });
        z_drift = -0.5 * k.theta_D * k.theta_D + eta;
    }

    PathBundle out;
    out.r = ec.mkt.r;
    out.horizon = T;
    out.guarantee = ec.cfg.guarantee;
    out.c0 = ec.cfg.c0;
    out.n_paths = ec.cfg.n_paths;
    out.grid_times.resize(gsize);
    for (std::size_t i = 0; i < gsize; ++i) {
        out.grid_times[i] = T * static_cast<double>(i) / ec.cfg.n_grid;
    }
    out.grid_times.back() = T;
    out.cushion.assign(static_cast<std::size_t>(ec.cfg.n_paths) * gsize, 0.0);
    if (ec.kernel) out.density.assign(out.cushion.size(), 0.0);
    out.min_cushion.assign(static_cast<std::size_t>(ec.cfg.n_paths), 0.0);
    out.jump_counts.assign(static_cast<std::size_t>(ec.cfg.n_paths), 0);
    if (ec.cfg.record_events) {
        out.events.resize(static_cast<std::size_t>(ec.cfg.n_paths));
        out.brownian.resize(static_cast<std::size_t>(ec.cfg.n_paths));
    }
    if (ec.classic_cppi) {
        out.lock_times.assign(static_cast<std::size_t>(ec.cfg.n_paths), std::nullopt);
    }
    std::vector<long> truncated(static_cast<std::size_t>(ec.cfg.n_paths), 0);

    parallel_paths(ec.cfg.n_paths, ec.cfg.n_threads, [&](long p) {
        rng::Philox gen(ec.cfg.seed, static_cast<std::uint64_t>(p));
        const std::size_t row = static_cast<std::size_t>(p) * gsize;

        std::vector<JumpEvent> jumps;
        long trunc = 0;
        for (double t = gen.next_exponential(lambda); t < T;
             t += gen.next_exponential(lambda)) {
            jumps.push_back({t, ec.sampler(gen, trunc)});
        }
        truncated[static_cast<std::size_t>(p)] = trunc;
        out.jump_counts[static_cast<std::size_t>(p)] = static_cast<long>(jumps.size());
        if (ec.cfg.record_events) out.events[static_cast<std::size_t>(p)] = jumps;

        double cushion = ec.cfg.c0;
        double log_z = 0.0;
        double min_c = cushion;
        double t_cur = 0.0;
        std::size_t next_jump = 0;
        bool locked = false;
        double lock_time = 0.0;

        auto advance_diffusion = [&](double to) {
            const double dt = to - t_cur;
            if (dt <= 0.0) {
                t_cur = to;
                return;
            }
            const double dw = std::sqrt(dt) * gen.next_normal();
            if (ec.cfg.record_events) {
                out.brownian[static_cast<std::size_t>(p)].push_back(dw);
            }
            if (locked) {
                cushion *= std::exp(ec.mkt.r * dt);
            } else {
                cushion *= std::exp(drift * dt + m * sigma * dw);
            }
            if (ec.kernel) {
                log_z += ec.kernel->theta_D * dw + z_drift * dt;
            }
            t_cur = to;
        };
        auto maybe_lock = [&] {
            if (ec.classic_cppi && !locked && cushion <= 0.0) {
                locked = true;
                lock_time = t_cur;
            }
        };

        out.cushion[row] = cushion;
        if (ec.kernel) out.density[row] = 1.0;
        for (std::size_t i = 1; i < gsize; ++i) {
            const double t_node = out.grid_times[i];
            while (next_jump < jumps.size() && jumps[next_jump].time <= t_node) {
                advance_diffusion(jumps[next_jump].time);
                const double gamma = jumps[next_jump].gamma;
                if (!locked) cushion *= 1.0 + m * gamma;
                if (ec.kernel) log_z += std::log(ec.kernel->theta_J(gamma));
                min_c = std::min(min_c, cushion);
                maybe_lock();
                ++next_jump;
            }
            advance_diffusion(t_node);
            min_c = std::min(min_c, cushion);
            maybe_lock();
            out.cushion[row + i] = cushion;
            if (ec.kernel) out.density[row + i] = std::exp(log_z);
        }
        out.min_cushion[static_cast<std::size_t>(p)] = min_c;
        if (ec.classic_cppi && locked) {
            out.lock_times[static_cast<std::size_t>(p)] = lock_time;
        }
    });

    long total_trunc = 0;
    for (long v : truncated) total_trunc += v;
    out.truncated_jumps = total_trunc;
    return out;
}

} // namespace detail

/// Exact event-driven simulation of the cushion under a constant multiplier.
inline PathBundle simulate_cushion_paths(const MarketParams& mkt, const JumpSpec& spec,
                                         double m, const SimConfig& cfg) {
    detail::EngineConfig ec;
    ec.mkt = mkt;
    ec.spec = &spec;
    ec.m = m;
    ec.cfg = cfg;
    ec.sampler.spec = &spec;
    return detail::run_engine(ec);
}

/// Classic CPPI: identical paths until the first monitoring or jump time with
/// V <= F; from then on everything sits in the money market (cash-lock).
inline PathBundle simulate_cppi_classic(const MarketParams& mkt, const JumpSpec& spec,
                                        double m, const SimConfig& cfg) {
    detail::EngineConfig ec;
    ec.mkt = mkt;
    ec.spec = &spec;
    ec.m = m;
    ec.cfg = cfg;
    ec.sampler.spec = &spec;
    ec.classic_cppi = true;
    return detail::run_engine(ec);
}

/// Simulate cushion and Radon-Nikodym density Z on common randomness.
inline PathBundle state_price_paths(const GirsanovKernel& kernel, const MarketParams& mkt,
                                    const JumpSpec& spec, const SimConfig& cfg) {
    detail::EngineConfig ec;
    ec.mkt = mkt;
    ec.spec = &spec;
    ec.m = kernel.m;
    ec.cfg = cfg;
    ec.kernel = &kernel;
    ec.sampler.spec = &spec;
    return detail::run_engine(ec);
}

/// Stress test of a multiplier solved under a constant jump size: per-jump
/// sizes become gamma_tilde + sigma_gamma * eps with eps standard normal,
/// truncated at -1 + 1e-12; reports the estimated P(C_T <= 0).
inline GapRiskEstimate gap_probability(const MarketParams& mkt, const ConstantJump& base,
                                       double m, const SimConfig& cfg,
                                       double sigma_gamma) {
    JumpSpec spec = base;
    detail::EngineConfig ec;
    ec.mkt = mkt;
    ec.spec = &spec;
    ec.m = m;
    ec.cfg = cfg;
    ec.sampler.spec = &spec;
    ec.sampler.perturbed = sigma_gamma > 0.0;
    ec.sampler.gamma_tilde = base.gamma_tilde;
    ec.sampler.sigma_gamma = sigma_gamma;
    PathBundle bundle = detail::run_engine(ec);

    long hits = 0;
    for (long p = 0; p < bundle.n_paths; ++p) {
        if (bundle.terminal_cushion(p) <= 0.0) ++hits;
    }
    GapRiskEstimate est;
    est.n_paths = bundle.n_paths;
    est.sigma_gamma = sigma_gamma;
    est.probability = static_cast<double>(hits) / static_cast<double>(bundle.n_paths);
    est.stderr_ = std::sqrt(est.probability * (1.0 - est.probability) /
                            static_cast<double>(bundle.n_paths));
    est.truncated_jumps = bundle.truncated_jumps;
    return est;
}

struct BandSeries {
    std::vector<double> times;
    std::vector<double> floor_values;
    std::vector<double> levels;
    std::vector<std::vector<double>> bands; // levels x times, portfolio values
};

/// Empirical quantiles of the portfolio value per grid time. Level 0 maps to
/// the path-wise minimum, level 1 to the maximum.
inline BandSeries quantile_bands(const PathBundle& bundle,
                                 const std::vector<double>& levels) {
    if (bundle.n_paths < 1) throw DataError("quantile_bands: empty bundle");
    BandSeries out;
    out.times = bundle.grid_times;
    out.levels = levels;
    out.floor_values.resize(bundle.grid_size());
    for (std::size_t i = 0; i < bundle.grid_size(); ++i) {
        out.floor_values[i] = bundle.floor_at(bundle.grid_times[i]);
    }
    out.bands.assign(levels.size(), std::vector<double>(bundle.grid_size(), 0.0));
    std::vector<double> column(static_cast<std::size_t>(bundle.n_paths));
    for (std::size_t i = 0; i < bundle.grid_size(); ++i) {
        for (long p = 0; p < bundle.n_paths; ++p) {
            column[static_cast<std::size_t>(p)] = bundle.value_at(p, i);
        }
        std::sort(column.begin(), column.end());
        for (std::size_t l = 0; l < levels.size(); ++l) {
            const double q = levels[l];
            std::size_t idx;
            if (q <= 0.0) {
                idx = 0;
            } else if (q >= 1.0) {
                idx = column.size() - 1;
            } else {
                idx = std::min(column.size() - 1,
                               static_cast<std::size_t>(q * static_cast<double>(column.size())));
            }
            out.bands[l][i] = column[idx];
        }
    }
    return out;
}

/// Sample mean of the utility (or its concave envelope) of the terminal
/// cushion, with standard error.
inline Estimate expected_utility(const PathBundle& bundle, const UtilityParams& params,
                                 bool use_envelope) {
    params.validate();
    std::optional<ConcaveEnvelope> env;
    if (use_envelope) env = solve_c_hat(params);
    std::vector<double> utils(static_cast<std::size_t>(bundle.n_paths));
    for (long p = 0; p < bundle.n_paths; ++p) {
        const double ct = bundle.terminal_cushion(p);
        if (ct < -params.guarantee) {
            throw AdmissibilityError("expected_utility: terminal cushion below -G");
        }
        utils[static_cast<std::size_t>(p)] = use_envelope
                                                 ? envelope_eval(ct, *env, params)
                                                 : utility_eval(ct, params);
    }
    const double n = static_cast<double>(bundle.n_paths);
    Estimate est;
    double sum = 0.0;
    for (double u : utils) sum += u;
    est.mean = sum / n;
    double ss = 0.0;
    for (double u : utils) ss += (u - est.mean) * (u - est.mean);
    est.stderr_ = bundle.n_paths > 1 ? std::sqrt(ss / n / (n - 1.0)) : 0.0;
    return est;
}

/// Rate a of the deterministic factor D~(t) = exp(a (T - t)) for a constant
/// kernel; the jump integrand is -(1-d)/d (1-theta_J) + theta_J^(-(1-d)/d) - 1.
inline double duality_decay_rate(const GirsanovKernel& kernel, const MarketParams& mkt,
                                 const JumpSpec& spec) {
    const double d = kernel.delta1;
    const double ratio = (1.0 - d) / d;
    const double jump = levy_integral(spec, [&](double gamma) {
        const double tj = kernel.theta_J(gamma);
        return -ratio * (1.0 - tj) + std::pow(tj, -ratio) - 1.0;
    });
    return ratio * mkt.r + 0.5 * ratio / d * kernel.theta_D * kernel.theta_D + jump;
}

/// Path-wise check of C_t = c0 H_t^(-1/delta1) D~(t)/D~(0) on the grid.
/// Returns the maximum relative error over paths and grid times.
inline double duality_identity_check(const GirsanovKernel& kernel, const MarketParams& mkt,
                                     const JumpSpec& spec,
                                     const SimConfig& cfg) {
    PathBundle bundle = state_price_paths(kernel, mkt, spec, cfg);
    const double a = duality_decay_rate(kernel, mkt, spec);
    double max_rel = 0.0;
    for (long p = 0; p < bundle.n_paths; ++p) {
        for (std::size_t i = 0; i < bundle.grid_size(); ++i) {
            const double t = bundle.grid_times[i];
            const double h = bundle.state_price_at(p, i);
            const double rhs = cfg.c0 * std::pow(h, -1.0 / kernel.delta1) * std::exp(-a * t);
            const double lhs = bundle.cushion_at(p, i);
            max_rel = std::max(max_rel, std::abs(lhs - rhs) / std::abs(rhs));
        }
    }
    return max_rel;
}

/// Value function v(t, c) = E[U~con(C_T) | C_t = c] under the multiplier m,
/// using time-homogeneity (simulate over the residual horizon T - t).
inline Estimate value_function_mc(const MarketParams& mkt, const JumpSpec& spec,
                                  const UtilityParams& params, double m, double t,
                                  double c, const SimConfig& cfg) {
    if (!(c > 0.0)) throw DomainError("value_function_mc: c must be > 0");
    if (t > cfg.horizon) throw DomainError("value_function_mc: t beyond horizon");
    if (t == cfg.horizon) {
        auto env = solve_c_hat(params);
        return {envelope_eval(c, env, params), 0.0};
    }
    SimConfig sub = cfg;
    sub.horizon = cfg.horizon - t;
    sub.c0 = c;
    sub.n_grid = 1;
    PathBundle bundle = simulate_cushion_paths(mkt, spec, m, sub);
    return expected_utility(bundle, params, true);
}

/// Expected utility across a grid of multipliers under common random numbers:
/// each path's jump sizes and aggregate Brownian motion are drawn once and
/// reused for every multiplier, exploiting
/// C_T(m) = c0 exp((r + m(mu-r) - m^2 sigma^2/2) T + m sigma W_T) prod(1 + m gamma_i).
inline std::vector<Estimate> expected_utility_sweep(
    const MarketParams& mkt, const JumpSpec& spec, const UtilityParams& params,
    const std::vector<double>& multipliers, const SimConfig& cfg,
    bool use_envelope = true) {
    mkt.validate();
    validate(spec);
    cfg.validate();
    params.validate();
    std::optional<ConcaveEnvelope> env;
    if (use_envelope) env = solve_c_hat(params);
    const double T = cfg.horizon;
    const double lambda = intensity(spec);
    const std::size_t n_m = multipliers.size();
    const long n = cfg.n_paths;

    std::vector<double> sums(n_m, 0.0), sumsqs(n_m, 0.0);
    std::mutex merge_mutex;
    unsigned hw = std::thread::hardware_concurrency();
    long workers = cfg.n_threads > 0 ? cfg.n_threads : (hw > 0 ? static_cast<long>(hw) : 1);
    workers = std::min<long>(workers, n);
    std::vector<std::thread> pool;
    for (long w = 0; w < workers; ++w) {
        const long lo = n * w / workers;
        const long hi = n * (w + 1) / workers;
        pool.emplace_back([&, lo, hi] {
            std::vector<double> local_sum(n_m, 0.0), local_sq(n_m, 0.0);
            std::vector<double> gammas;
            for (long p = lo; p < hi; ++p) {
                rng::Philox gen(cfg.seed, static_cast<std::uint64_t>(p));
                gammas.clear();
                for (double t = gen.next_exponential(lambda); t < T;
                     t += gen.next_exponential(lambda)) {
                    gammas.push_back(sample_jump_size(spec, gen.next_u01()));
                }
                const double w_T = std::sqrt(T) * gen.next_normal();
                for (std::size_t j = 0; j < n_m; ++j) {
                    const double m = multipliers[j];
                    const double drift =
                        mkt.r + m * mkt.excess_return() - 0.5 * m * m * mkt.sigma * mkt.sigma;
                    double ct = cfg.c0 * std::exp(drift * T + m * mkt.sigma * w_T);
                    for (double g : gammas) ct *= 1.0 + m * g;
                    if (ct < -params.guarantee) {
                        throw AdmissibilityError("expected_utility_sweep: cushion below -G");
                    }
                    const double u = use_envelope ? envelope_eval(ct, *env, params)
                                                 : utility_eval(ct, params);
                    local_sum[j] += u;
                    local_sq[j] += u * u;
                }
            }
            std::lock_guard<std::mutex> lock(merge_mutex);
            for (std::size_t j = 0; j < n_m; ++j) {
                sums[j] += local_sum[j];
                sumsqs[j] += local_sq[j];
            }
        });
    }
    for (auto& t : pool) t.join();

    std::vector<Estimate> out(n_m);
    const double dn = static_cast<double>(n);
    for (std::size_t j = 0; j < n_m; ++j) {
        out[j].mean = sums[j] / dn;
        const double var = std::max(0.0, sumsqs[j] / dn - out[j].mean * out[j].mean);
        out[j].stderr_ = n > 1 ? std::sqrt(var / (dn - 1.0)) : 0.0;
    }
    return out;
}

} // namespace ppi
