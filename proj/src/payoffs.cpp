#include "qmcg/payoffs.hpp"

#include "qmcg/errors.hpp"

#include <algorithm>
#include <cmath>

namespace qmcg {

std::string_view to_string(PayoffKind kind) {
    switch (kind) {
    case PayoffKind::asian_fixed: return "asian_fixed";
    case PayoffKind::asian_floating: return "asian_floating";
    case PayoffKind::digital_fixed: return "digital_fixed";
    case PayoffKind::exotic_max: return "exotic_max";
    }
    return "unknown";
}

PayoffKind parse_payoff_kind(std::string_view name) {
    if (name == "asian_fixed" || name == "asian-fixed" || name == "fixed") return PayoffKind::asian_fixed;
    if (name == "asian_floating" || name == "asian-floating" || name == "floating") {
        return PayoffKind::asian_floating;
    }
    if (name == "digital_fixed" || name == "digital-fixed" || name == "digital") {
        return PayoffKind::digital_fixed;
    }
    if (name == "exotic_max" || name == "exotic-max" || name == "exotic") return PayoffKind::exotic_max;
    throw ConfigError("unknown payoff '" + std::string(name) +
                      "' (expected asian_fixed, asian_floating, digital_fixed or exotic_max)");
}

double payoff_value(const PayoffSpec& spec, double average, double terminal_basket) {
    switch (spec.kind) {
    case PayoffKind::asian_fixed: return std::max(average - spec.strike, 0.0);
    case PayoffKind::asian_floating: return std::max(average - terminal_basket, 0.0);
    case PayoffKind::digital_fixed: return average >= spec.strike ? 1.0 : 0.0;
    case PayoffKind::exotic_max:
        return std::max({average - spec.strike, terminal_basket - spec.strike, 0.0});
    }
    return 0.0;
}

PayoffEval evaluate(const PayoffSpec& spec, const PathBundle& bundle, const MarketConfig& config) {
    PayoffEval e;
    e.average = (config.weights.array() * bundle.s.array()).sum();
    e.terminal_basket = bundle.s.col(bundle.s.cols() - 1).mean();
    e.value = payoff_value(spec, e.average, e.terminal_basket);
    const Eigen::Index m = bundle.s.rows();
    const Eigen::Index last = bundle.s.cols() - 1;
    e.g.resize(static_cast<std::size_t>(m));
    e.t.resize(static_cast<std::size_t>(m));
    for (Eigen::Index k = 0; k < m; ++k) {
        const double x = config.spots[static_cast<std::size_t>(k)];
        e.g[static_cast<std::size_t>(k)] = config.weights.row(k).dot(bundle.s.row(k)) / x;
        e.t[static_cast<std::size_t>(k)] = bundle.s(k, last) / (static_cast<double>(m) * x);
    }
    return e;
}

double discount(double value, double rate, double maturity) {
    return std::exp(-rate * maturity) * value;
}

void check_payoff_conventions(const PayoffSpec& spec, const MarketConfig& config) {
    if (spec.kind != PayoffKind::asian_floating && spec.kind != PayoffKind::exotic_max) return;
    const double w = 1.0 / static_cast<double>(config.dimension());
    if (((config.weights.array() - w).abs() > 1e-12).any()) {
        throw ConfigError(std::string(to_string(spec.kind)) +
                          " requires uniform weights 1/(assets*dates)");
    }
}

bool payoff_identically_zero(const PayoffSpec& spec, const MarketConfig& config) {
    return spec.kind == PayoffKind::asian_floating && config.assets() == 1 && config.dates() == 1;
}

} // namespace qmcg
