#pragma once
#include <cctype>
#include <cmath>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "ppi/errors.hpp"

namespace ppi {

struct PricePoint {
    std::string date; // ISO-8601, YYYY-MM-DD
    long serial = 0;  // days since 1970-01-01
    double close = 0.0;
};

namespace detail {

inline long days_from_civil(int y, int m, int d) {
    y -= m <= 2;
    const long era = (y >= 0 ? y : y - 399) / 400;
    const unsigned yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy = (153u * (m + (m > 2 ? -3 : 9)) + 2u) / 5u + d - 1;
    const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return era * 146097 + static_cast<long>(doe) - 719468;
}

inline long parse_iso_date(const std::string& s, std::size_t line_no) {
    auto fail = [&] {
        throw DataError("price CSV line " + std::to_string(line_no) +
                        ": bad date '" + s + "' (expected YYYY-MM-DD)");
    };
    if (s.size() != 10 || s[4] != '-' || s[7] != '-') fail();
    for (std::size_t i : {0u, 1u, 2u, 3u, 5u, 6u, 8u, 9u}) {
        if (!std::isdigit(static_cast<unsigned char>(s[i]))) fail();
    }
    const int y = std::stoi(s.substr(0, 4));
    const int m = std::stoi(s.substr(5, 2));
    const int d = std::stoi(s.substr(8, 2));
    if (m < 1 || m > 12 || d < 1 || d > 31) fail();
    return days_from_civil(y, m, d);
}

} // namespace detail

/// Reads a `date,close` CSV with ISO dates and positive closes.
inline std::vector<PricePoint> load_price_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open price CSV: " + path);
    std::string line;
    if (!std::getline(in, line)) throw DataError("empty price CSV: " + path);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != "date,close") {
        throw DataError("price CSV header must be 'date,close', got '" + line + "'");
    }
    std::vector<PricePoint> out;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto comma = line.find(',');
        if (comma == std::string::npos) {
            throw DataError("price CSV line " + std::to_string(line_no) + ": missing comma");
        }
        PricePoint pt;
        pt.date = line.substr(0, comma);
        pt.serial = detail::parse_iso_date(pt.date, line_no);
        const std::string val = line.substr(comma + 1);
        std::size_t used = 0;
        try {
            pt.close = std::stod(val, &used);
        } catch (const std::exception&) {
            throw DataError("price CSV line " + std::to_string(line_no) +
                            ": bad close '" + val + "'");
        }
        if (used != val.size() || !(pt.close > 0.0) || !std::isfinite(pt.close)) {
            throw DataError("price CSV line " + std::to_string(line_no) +
                            ": close must be a positive number, got '" + val + "'");
        }
        if (!out.empty() && pt.serial <= out.back().serial) {
            throw DataError("price CSV line " + std::to_string(line_no) +
                            ": dates must be strictly increasing");
        }
        out.push_back(pt);
    }
    if (out.size() < 2) throw DataError("price CSV needs at least two rows: " + path);
    return out;
}

struct BacktestResult {
    std::vector<std::string> dates;
    std::vector<double> value;     // V_t
    std::vector<double> floor_;    // F_t
    std::vector<double> exposure;  // risky holdings after rebalancing
    std::optional<std::size_t> lock_index; // first index with V <= F
    std::optional<std::string> lock_date;
};

/// Discrete-time self-financing CPPI on a historical price series: daily
/// rebalancing to exposure m (V - F)^+, the remainder in cash at rate r with
/// simple ACT/365 compounding per period. After the first observation with
/// V <= F everything stays in cash.
inline BacktestResult backtest_cppi(const std::vector<PricePoint>& prices, double m,
                                    double r, double protection, double v0 = 100.0) {
    if (prices.size() < 2) throw DataError("backtest_cppi: need at least two prices");
    if (!(protection > 0.0 && protection <= 1.0)) {
        throw DataError("backtest_cppi: protection must be in (0, 1]");
    }
    if (!(v0 > 0.0)) throw DataError("backtest_cppi: v0 must be > 0");
    const double guarantee = protection * v0;
    const long end_serial = prices.back().serial;
    auto floor_at = [&](long serial) {
        const double tau = static_cast<double>(end_serial - serial) / 365.0;
        return guarantee * std::exp(-r * tau);
    };

    BacktestResult out;
    out.dates.reserve(prices.size());
    out.value.reserve(prices.size());
    out.floor_.reserve(prices.size());
    out.exposure.reserve(prices.size());

    double v = v0;
    bool locked = false;
    double exposure = 0.0;
    double cash = v0;
    for (std::size_t i = 0; i < prices.size(); ++i) {
        const double f = floor_at(prices[i].serial);
        if (i > 0) {
            const double dt = static_cast<double>(prices[i].serial - prices[i - 1].serial) / 365.0;
            const double risky = exposure * prices[i].close / prices[i - 1].close;
            v = risky + cash * (1.0 + r * dt);
        }
        if (!locked && v <= f && i > 0) {
            locked = true;
            out.lock_index = i;
            out.lock_date = prices[i].date;
        }
        exposure = locked ? 0.0 : m * std::max(0.0, v - f);
        cash = v - exposure;
        out.dates.push_back(prices[i].date);
        out.value.push_back(v);
        out.floor_.push_back(f);
        out.exposure.push_back(exposure);
    }
    return out;
}

} // namespace ppi
