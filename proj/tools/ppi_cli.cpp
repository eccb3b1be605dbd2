// Command-line front end: solve / sweep / simulate / gap / verify / backtest /
// concavify over a flat key=value experiment config.
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ppi/backtest.hpp"
#include "ppi/config.hpp"
#include "ppi/simulate.hpp"
#include "ppi/solver.hpp"

namespace {

constexpr int kExitGateFailure = 2;
constexpr int kExitConvergence = 3;
constexpr int kExitData = 4;

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.10g", v);
    return buf;
}

struct CommonOpts {
    std::string config_path;
    std::vector<std::string> sets;
    std::optional<std::uint64_t> seed;
    std::optional<long> paths;
    std::string out_path;
    bool dump_config = false;
};

void add_common(CLI::App* cmd, CommonOpts& opts) {
    cmd->add_option("--config", opts.config_path, "experiment config file (key=value)");
    cmd->add_option("--set", opts.sets, "override key=value (repeatable)")
        ->take_all();
    cmd->add_option("--seed", opts.seed, "RNG seed override");
    cmd->add_option("--paths", opts.paths, "Monte Carlo path count override");
    cmd->add_option("--out", opts.out_path, "output file (default stdout)");
    cmd->add_flag("--dump-config", opts.dump_config,
                  "print the fully resolved config and exit");
}

ppi::ExperimentConfig load_config(const CommonOpts& opts) {
    ppi::ExperimentConfig cfg;
    if (!opts.config_path.empty()) {
        cfg = ppi::ExperimentConfig::from_file(opts.config_path);
    }
    for (const auto& kv : opts.sets) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) {
            throw ppi::ConfigError("--set expects key=value, got '" + kv + "'");
        }
        cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
    }
    if (opts.seed) cfg.set("seed", std::to_string(*opts.seed));
    if (opts.paths) cfg.set("n_paths", std::to_string(*opts.paths));
    return cfg;
}

// Returns true when the caller should stop (config was dumped).
bool maybe_dump(const CommonOpts& opts, const ppi::ExperimentConfig& cfg,
                std::ostream& os) {
    if (!opts.dump_config) return false;
    os << cfg.dump();
    return true;
}

class OutputStream {
public:
    explicit OutputStream(const std::string& path) {
        if (!path.empty()) {
            file_.open(path);
            if (!file_) throw ppi::DataError("cannot open output file: " + path);
        }
    }
    std::ostream& get() { return file_.is_open() ? file_ : std::cout; }

private:
    std::ofstream file_;
};

void print_solution(std::ostream& os, const ppi::MultiplierSolution& sol) {
    const auto& ex = sol.existence;
    os << "m_hat=" << fmt(sol.m_hat) << "\n";
    os << "theta_D=" << fmt(sol.kernel.theta_D) << "\n";
    os << "bracket_lo=" << fmt(sol.bracket_lo) << "\n";
    os << "bracket_hi=" << fmt(sol.bracket_hi) << "\n";
    os << "g_residual=" << fmt(sol.g_residual) << "\n";
    os << "existence_case=" << ex.model_case << "\n";
    os << "gate1=" << fmt(ex.gate1) << " pass=" << (ex.gate1_pass ? 1 : 0) << "\n";
    os << "gate2=" << fmt(ex.gate2) << " pass=" << (ex.gate2_pass ? 1 : 0) << "\n";
    if (std::isfinite(ex.gate1_printed)) {
        os << "gate1_total_drift=" << fmt(ex.gate1_printed) << "\n";
        os << "gate2_total_drift=" << fmt(ex.gate2_printed) << "\n";
    }
}

int cmd_solve(const CommonOpts& opts) {
    auto cfg = load_config(opts);
    OutputStream out(opts.out_path);
    if (maybe_dump(opts, cfg, out.get())) return 0;
    const auto mkt = cfg.market();
    const auto spec = cfg.jump();
    const double delta1 = cfg.utility().delta1;
    auto sol = ppi::solve_multiplier(mkt, spec, delta1);
    print_solution(out.get(), sol);
    if (ppi::intensity(spec) < 1e-300) out.get() << "note=diffusion-only\n";
    return 0;
}

int cmd_sweep(const CommonOpts& opts) {
    auto cfg = load_config(opts);
    OutputStream out(opts.out_path);
    if (maybe_dump(opts, cfg, out.get())) return 0;
    const std::string param = cfg.get_string("sweep_param", "");
    if (param.empty()) throw ppi::ConfigError("sweep requires sweep_param");
    const double lo = cfg.get_double("sweep_lo", 0.0);
    const double hi = cfg.get_double("sweep_hi", 0.0);
    const long steps = cfg.get_long("sweep_steps", 50);
    if (!(hi > lo) || steps < 2) {
        throw ppi::ConfigError("sweep requires sweep_lo < sweep_hi and sweep_steps >= 2");
    }
    std::ostream& os = out.get();
    os << "param,value,m_hat,theta_D,gate1,gate2\n";
    for (long i = 0; i < steps; ++i) {
        const double value = lo + (hi - lo) * static_cast<double>(i) /
                                      static_cast<double>(steps - 1);
        auto point = ppi::with_parameter(cfg, param, value);
        const auto mkt = point.market();
        const auto spec = point.jump();
        const double delta1 = point.utility().delta1;
        auto report = ppi::existence_check(mkt, spec, delta1);
        if (!report.pass()) {
            os << param << "," << fmt(value) << ",,," << fmt(report.gate1) << ","
               << fmt(report.gate2) << "\n";
            continue;
        }
        auto sol = ppi::solve_multiplier(mkt, spec, delta1);
        os << param << "," << fmt(value) << "," << fmt(sol.m_hat) << ","
           << fmt(sol.kernel.theta_D) << "," << fmt(report.gate1) << ","
           << fmt(report.gate2) << "\n";
    }
    return 0;
}

double resolve_multiplier(const ppi::ExperimentConfig& cfg, const ppi::MarketParams& mkt,
                          const ppi::JumpSpec& spec) {
    if (cfg.has("multiplier")) return cfg.get_double("multiplier", 0.0);
    return ppi::solve_multiplier(mkt, spec, cfg.utility().delta1).m_hat;
}

int cmd_simulate(const CommonOpts& opts) {
    auto cfg = load_config(opts);
    OutputStream out(opts.out_path);
    if (maybe_dump(opts, cfg, out.get())) return 0;
    const auto mkt = cfg.market();
    const auto spec = cfg.jump();
    const auto sim = cfg.sim();
    const double m = resolve_multiplier(cfg, mkt, spec);
    auto bundle = ppi::simulate_cushion_paths(mkt, spec, m, sim);
    auto bands = ppi::quantile_bands(bundle, {0.0, 0.5, 0.99});
    std::ostream& os = out.get();
    os << "t,q0,q50,q99,floor\n";
    for (std::size_t i = 0; i < bands.times.size(); ++i) {
        os << fmt(bands.times[i]) << "," << fmt(bands.bands[0][i]) << ","
           << fmt(bands.bands[1][i]) << "," << fmt(bands.bands[2][i]) << ","
           << fmt(bands.floor_values[i]) << "\n";
    }
    return 0;
}

int cmd_gap(const CommonOpts& opts) {
    auto cfg = load_config(opts);
    OutputStream out(opts.out_path);
    if (maybe_dump(opts, cfg, out.get())) return 0;
    const auto mkt = cfg.market();
    const auto spec = cfg.jump();
    const auto* base = std::get_if<ppi::ConstantJump>(&spec);
    if (!base) throw ppi::ConfigError("gap requires model=constant");
    const double m = resolve_multiplier(cfg, mkt, spec);
    const auto horizons = cfg.get_double_list("gap_horizons", {1.0, 5.0, 10.0});
    const auto sigmas =
        cfg.get_double_list("gap_sigmas", {0.05, 0.075, 0.1, 0.125, 0.15});
    std::ostream& os = out.get();
    os << "T,sigma_gamma,prob,stderr\n";
    for (double T : horizons) {
        for (double sg : sigmas) {
            ppi::SimConfig sim = cfg.sim();
            sim.horizon = T;
            sim.n_grid = 1;
            auto est = ppi::gap_probability(mkt, *base, m, sim, sg);
            os << fmt(T) << "," << fmt(sg) << "," << fmt(est.probability) << ","
               << fmt(est.stderr_) << "\n";
        }
    }
    return 0;
}

int cmd_verify(const CommonOpts& opts) {
    auto cfg = load_config(opts);
    OutputStream out(opts.out_path);
    if (maybe_dump(opts, cfg, out.get())) return 0;
    const auto mkt = cfg.market();
    const auto spec = cfg.jump();
    const auto sim = cfg.sim();
    auto sol = ppi::solve_multiplier(mkt, spec, cfg.utility().delta1);
    std::ostream& os = out.get();
    os << "check,value\n";
    os << "m_hat," << fmt(sol.m_hat) << "\n";
    os << "g_residual," << fmt(sol.g_residual) << "\n";
    os << "no_arbitrage_residual,"
       << fmt(ppi::no_arbitrage_residual(sol.kernel, mkt, spec)) << "\n";

    auto bundle = ppi::state_price_paths(sol.kernel, mkt, spec, sim);
    double zsum = 0.0, zsq = 0.0, budget = 0.0;
    for (long p = 0; p < bundle.n_paths; ++p) {
        const std::size_t last = bundle.grid_size() - 1;
        const double z = bundle.density_at(p, last);
        zsum += z;
        zsq += z * z;
        budget += bundle.state_price_at(p, last) * bundle.cushion_at(p, last);
    }
    const double n = static_cast<double>(bundle.n_paths);
    const double zmean = zsum / n;
    const double zse = std::sqrt(std::max(0.0, zsq / n - zmean * zmean) / (n - 1.0));
    os << "martingale_mean_Z," << fmt(zmean) << "\n";
    os << "martingale_stderr," << fmt(zse) << "\n";
    os << "budget_rel_error," << fmt(std::abs(budget / n / sim.c0 - 1.0)) << "\n";

    ppi::SimConfig dual = sim;
    dual.n_paths = std::min<long>(sim.n_paths, 1000);
    os << "duality_max_rel_error,"
       << fmt(ppi::duality_identity_check(sol.kernel, mkt, spec, dual)) << "\n";
    return 0;
}

int cmd_backtest(const CommonOpts& opts) {
    auto cfg = load_config(opts);
    OutputStream out(opts.out_path);
    if (maybe_dump(opts, cfg, out.get())) return 0;
    const std::string prices_path = cfg.get_string("prices", "");
    if (prices_path.empty()) throw ppi::ConfigError("backtest requires prices=<csv>");
    auto prices = ppi::load_price_csv(prices_path);
    const double m = cfg.get_double("multiplier", 10.0);
    const double r = cfg.get_double("r", 0.035);
    const double xi = cfg.get_double("protection", 0.9);
    const double v0 = cfg.get_double("v0", 100.0);
    auto result = ppi::backtest_cppi(prices, m, r, xi, v0);
    std::ostream& os = out.get();
    os << "date,value,floor,exposure,locked\n";
    for (std::size_t i = 0; i < result.dates.size(); ++i) {
        const bool locked = result.lock_index && i >= *result.lock_index;
        os << result.dates[i] << "," << fmt(result.value[i]) << ","
           << fmt(result.floor_[i]) << "," << fmt(result.exposure[i]) << ","
           << (locked ? 1 : 0) << "\n";
    }
    if (result.lock_date) {
        std::cerr << "cash-lock on " << *result.lock_date << "\n";
    }
    return 0;
}

int cmd_concavify(const CommonOpts& opts) {
    auto cfg = load_config(opts);
    OutputStream out(opts.out_path);
    if (maybe_dump(opts, cfg, out.get())) return 0;
    const auto params = cfg.utility();
    auto env = ppi::solve_c_hat(params);
    std::ostream& os = out.get();
    os << "c_hat=" << fmt(env.c_hat) << "\n";
    os << "slope=" << fmt(env.slope) << "\n";
    os << "left_value=" << fmt(env.left_value) << "\n";
    os << "x,utility,envelope\n";
    const long steps = cfg.get_long("sweep_steps", 50);
    const double lo = -params.guarantee;
    const double hi = 2.0 * env.c_hat;
    for (long i = 0; i < steps; ++i) {
        const double x = lo + (hi - lo) * static_cast<double>(i) /
                                  static_cast<double>(steps - 1);
        os << fmt(x) << "," << fmt(ppi::utility_eval(x, params)) << ","
           << fmt(ppi::envelope_eval(x, env, params)) << "\n";
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Proportional portfolio insurance toolkit"};
    app.require_subcommand(1);

    struct Sub {
        const char* name;
        const char* desc;
        int (*fn)(const CommonOpts&);
        CommonOpts opts;
        CLI::App* cmd = nullptr;
    };
    std::vector<Sub> subs = {
        {"solve", "solve the optimal multiplier", cmd_solve, {}, nullptr},
        {"sweep", "solve across a parameter sweep", cmd_sweep, {}, nullptr},
        {"simulate", "fan chart of portfolio quantiles", cmd_simulate, {}, nullptr},
        {"gap", "gap-risk probability matrix", cmd_gap, {}, nullptr},
        {"verify", "martingale/budget/duality residuals", cmd_verify, {}, nullptr},
        {"backtest", "historical CPPI on a price CSV", cmd_backtest, {}, nullptr},
        {"concavify", "utility concavification report", cmd_concavify, {}, nullptr},
    };
    for (auto& sub : subs) {
        sub.cmd = app.add_subcommand(sub.name, sub.desc);
        add_common(sub.cmd, sub.opts);
    }

    CLI11_PARSE(app, argc, argv);

    try {
        for (auto& sub : subs) {
            if (sub.cmd->parsed()) return sub.fn(sub.opts);
        }
    } catch (const ppi::NoSolutionError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitGateFailure;
    } catch (const ppi::ConvergenceError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConvergence;
    } catch (const ppi::QuadratureError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConvergence;
    } catch (const ppi::DataError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    } catch (const ppi::ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
