#pragma once
#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "ppi/errors.hpp"
#include "ppi/market.hpp"
#include "ppi/simulate.hpp"
#include "ppi/utility.hpp"

namespace ppi {

/// Flat key=value experiment description. Unset keys fall back to defaults;
/// dump() emits every known key so a dumped config re-parses identically.
class ExperimentConfig {
public:
    static const std::vector<std::string>& known_keys() {
        static const std::vector<std::string> keys = {
            "model",        // constant | kou | merton
            "r", "mu", "sigma",
            "lambda", "gamma_tilde",
            "p", "eta_plus", "eta_minus",
            "mu_j", "sigma_j",
            "delta1", "delta2", "lambda_tilde",
            "c0", "guarantee", "v0", "protection",
            "horizon", "n_paths", "n_grid", "seed", "n_threads",
            "multiplier",
            "sweep_param", "sweep_lo", "sweep_hi", "sweep_steps",
            "gap_horizons", "gap_sigmas",
            "prices",
        };
        return keys;
    }

    static ExperimentConfig from_file(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw ConfigError("cannot open config file: " + path);
        ExperimentConfig cfg;
        std::string line;
        std::size_t line_no = 0;
        while (std::getline(in, line)) {
            ++line_no;
            if (!line.empty() && line.back() == '\r') line.pop_back();
            const auto hash = line.find('#');
            if (hash != std::string::npos) line.erase(hash);
            auto trim = [](std::string s) {
                const auto b = s.find_first_not_of(" \t");
                if (b == std::string::npos) return std::string();
                const auto e = s.find_last_not_of(" \t");
                return s.substr(b, e - b + 1);
            };
            line = trim(line);
            if (line.empty()) continue;
            const auto eq = line.find('=');
            if (eq == std::string::npos) {
                throw ConfigError(path + ":" + std::to_string(line_no) +
                                  ": expected key=value, got '" + line + "'");
            }
            cfg.set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
        }
        return cfg;
    }

    void set(const std::string& key, const std::string& value) {
        const auto& keys = known_keys();
        if (std::find(keys.begin(), keys.end(), key) == keys.end()) {
            throw ConfigError("unknown config key: " + key);
        }
        kv_[key] = value;
    }

    bool has(const std::string& key) const { return kv_.count(key) > 0; }

    std::string get_string(const std::string& key, const std::string& def) const {
        auto it = kv_.find(key);
        return it == kv_.end() ? def : it->second;
    }

    double get_double(const std::string& key, double def) const {
        auto it = kv_.find(key);
        if (it == kv_.end()) return def;
        return parse_double(key, it->second);
    }

    long get_long(const std::string& key, long def) const {
        auto it = kv_.find(key);
        if (it == kv_.end()) return def;
        try {
            std::size_t used = 0;
            const long v = std::stol(it->second, &used);
            if (used != it->second.size()) throw std::invalid_argument("trailing");
            return v;
        } catch (const std::exception&) {
            throw ConfigError("config key '" + key + "': bad integer '" + it->second + "'");
        }
    }

    std::uint64_t get_u64(const std::string& key, std::uint64_t def) const {
        auto it = kv_.find(key);
        if (it == kv_.end()) return def;
        try {
            std::size_t used = 0;
            const std::uint64_t v = std::stoull(it->second, &used);
            if (used != it->second.size()) throw std::invalid_argument("trailing");
            return v;
        } catch (const std::exception&) {
            throw ConfigError("config key '" + key + "': bad integer '" + it->second + "'");
        }
    }

    std::vector<double> get_double_list(const std::string& key,
                                        const std::vector<double>& def) const {
        auto it = kv_.find(key);
        if (it == kv_.end()) return def;
        std::vector<double> out;
        std::stringstream ss(it->second);
        std::string tok;
        while (std::getline(ss, tok, ',')) {
            out.push_back(parse_double(key, tok));
        }
        if (out.empty()) throw ConfigError("config key '" + key + "': empty list");
        return out;
    }

    std::string model() const {
        const std::string m = get_string("model", "constant");
        if (m != "constant" && m != "kou" && m != "merton") {
            throw ConfigError("model must be constant|kou|merton, got '" + m + "'");
        }
        return m;
    }

    MarketParams market() const {
        MarketParams mkt;
        mkt.r = get_double("r", 0.035);
        mkt.mu = get_double("mu", mkt.r + 0.20);
        mkt.sigma = get_double("sigma", 0.30);
        mkt.validate();
        return mkt;
    }

    JumpSpec jump() const {
        const std::string m = model();
        JumpSpec spec;
        if (m == "constant") {
            ConstantJump s;
            s.gamma_tilde = get_double("gamma_tilde", -0.03);
            s.lambda = get_double("lambda", 11.0);
            spec = s;
        } else if (m == "kou") {
            KouJump s;
            s.lambda = get_double("lambda", 20.0);
            s.p = get_double("p", 0.5);
            s.eta_plus = get_double("eta_plus", 50.0);
            s.eta_minus = get_double("eta_minus", 50.0);
            spec = s;
        } else {
            MertonJump s;
            s.lambda = get_double("lambda", 20.0);
            s.mu_j = get_double("mu_j", 0.0);
            s.sigma_j = get_double("sigma_j", 0.1);
            spec = s;
        }
        validate(spec);
        return spec;
    }

    UtilityParams utility() const {
        UtilityParams p;
        p.delta1 = get_double("delta1", 0.6);
        p.delta2 = get_double("delta2", 0.5);
        p.lambda_tilde = get_double("lambda_tilde", 2.25);
        p.guarantee = sim().guarantee;
        p.validate();
        return p;
    }

    SimConfig sim() const {
        SimConfig cfg;
        cfg.horizon = get_double("horizon", 10.0);
        cfg.n_paths = get_long("n_paths", 100000);
        cfg.n_grid = static_cast<int>(
            get_long("n_grid", std::lround(250.0 * cfg.horizon)));
        cfg.seed = get_u64("seed", 42);
        cfg.n_threads = static_cast<int>(get_long("n_threads", 0));
        const double r = get_double("r", 0.035);
        if (has("v0")) {
            // guarantee = protection * v0; the cushion is whatever remains
            // above the discounted guarantee.
            const double v0 = get_double("v0", 0.0);
            const double xi = get_double("protection", 0.9);
            if (!(xi > 0.0 && xi <= 1.0)) {
                throw ConfigError("protection must be in (0, 1]");
            }
            cfg.guarantee = xi * v0;
            cfg.c0 = v0 - cfg.guarantee * std::exp(-r * cfg.horizon);
        } else {
            cfg.c0 = get_double("c0", 20.0);
            cfg.guarantee = get_double("guarantee", 100.0);
        }
        cfg.validate();
        return cfg;
    }

    std::string dump() const {
        std::ostringstream out;
        ExperimentConfig full = *this;
        // Materialize defaults so the dump is self-contained.
        full.kv_["model"] = model();
        auto mkt = market();
        full.set_num(full.kv_, "r", mkt.r);
        full.set_num(full.kv_, "mu", mkt.mu);
        full.set_num(full.kv_, "sigma", mkt.sigma);
        auto spec = jump();
        std::visit(
            [&](const auto& s) {
                using T = std::decay_t<decltype(s)>;
                full.set_num(full.kv_, "lambda", s.lambda);
                if constexpr (std::is_same_v<T, ConstantJump>) {
                    full.set_num(full.kv_, "gamma_tilde", s.gamma_tilde);
                } else if constexpr (std::is_same_v<T, KouJump>) {
                    full.set_num(full.kv_, "p", s.p);
                    full.set_num(full.kv_, "eta_plus", s.eta_plus);
                    full.set_num(full.kv_, "eta_minus", s.eta_minus);
                } else {
                    full.set_num(full.kv_, "mu_j", s.mu_j);
                    full.set_num(full.kv_, "sigma_j", s.sigma_j);
                }
            },
            spec);
        auto up = utility();
        full.set_num(full.kv_, "delta1", up.delta1);
        full.set_num(full.kv_, "delta2", up.delta2);
        full.set_num(full.kv_, "lambda_tilde", up.lambda_tilde);
        auto sc = sim();
        full.set_num(full.kv_, "c0", sc.c0);
        full.set_num(full.kv_, "guarantee", sc.guarantee);
        full.kv_.erase("v0");
        full.kv_.erase("protection");
        full.set_num(full.kv_, "horizon", sc.horizon);
        full.kv_["n_paths"] = std::to_string(sc.n_paths);
        full.kv_["n_grid"] = std::to_string(sc.n_grid);
        full.kv_["seed"] = std::to_string(sc.seed);
        full.kv_["n_threads"] = std::to_string(sc.n_threads);
        for (const auto& key : known_keys()) {
            auto it = full.kv_.find(key);
            if (it != full.kv_.end()) out << key << "=" << it->second << "\n";
        }
        return out.str();
    }

private:
    static double parse_double(const std::string& key, const std::string& value) {
        try {
            std::size_t used = 0;
            const double v = std::stod(value, &used);
            if (used != value.size()) throw std::invalid_argument("trailing");
            if (!std::isfinite(v)) throw std::invalid_argument("non-finite");
            return v;
        } catch (const std::exception&) {
            throw ConfigError("config key '" + key + "': bad number '" + value + "'");
        }
    }

    static void set_num(std::map<std::string, std::string>& kv, const std::string& key,
                        double v) {
        char buf[40];
        std::snprintf(buf, sizeof(buf), "%.10g", v);
        kv[key] = buf;
    }

    std::map<std::string, std::string> kv_;
};

/// Applies a sweep-axis value: the parameter name must be a known numeric key.
inline ExperimentConfig with_parameter(const ExperimentConfig& base,
                                       const std::string& param, double value) {
    ExperimentConfig cfg = base;
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", value);
    cfg.set(param, buf);
    return cfg;
}

} // namespace ppi
