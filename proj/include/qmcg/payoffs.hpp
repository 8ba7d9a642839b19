#pragma once

#include "qmcg/market_model.hpp"

#include <string>
#include <string_view>
#include <vector>

namespace qmcg {

enum class PayoffKind { asian_fixed, asian_floating, digital_fixed, exotic_max };

struct PayoffSpec {
    PayoffKind kind = PayoffKind::asian_fixed;
    double strike = 100.0;  // ignored by the floating-strike payoff
};

std::string_view to_string(PayoffKind kind);
PayoffKind parse_payoff_kind(std::string_view name);  // throws ConfigError

// Undiscounted payoff of one path plus the path functionals it depends on:
// the weighted average m(T), the terminal basket K(T) = sum_i S_i(T) / M and
// their spot derivatives G_k = dm/dx_k, T_k = dK/dx_k.
struct PayoffEval {
    double value = 0.0;
    double average = 0.0;
    double terminal_basket = 0.0;
    std::vector<double> g;
    std::vector<double> t;
};

double payoff_value(const PayoffSpec& spec, double average, double terminal_basket);
PayoffEval evaluate(const PayoffSpec& spec, const PathBundle& bundle, const MarketConfig& config);

double discount(double value, double rate, double maturity);

// The floating-strike and exotic payoffs are defined with the arithmetic
// average (1/(MN)) sum S_i(t_j); any other weight matrix is rejected.
void check_payoff_conventions(const PayoffSpec& spec, const MarketConfig& config);

// True when the payoff vanishes on every path, e.g. the floating strike with
// a single asset observed once.
bool payoff_identically_zero(const PayoffSpec& spec, const MarketConfig& config);

} // namespace qmcg
