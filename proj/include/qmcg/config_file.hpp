#pragma once

#include "qmcg/estimator.hpp"

#include <cstddef>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace qmcg {

// Settings as read from a config file and command-line flags, before the
// market is assembled. Unset market fields fall back to the Table 1 inputs
// for the chosen asset and date counts.
struct RunSettings {
    std::size_t assets = 10;
    std::size_t steps = 64;
    std::optional<std::vector<double>> spots;  // one entry per asset, or one shared value
    std::optional<std::vector<double>> vols;
    std::optional<std::vector<double>> correlation;  // row-major, assets x assets
    std::optional<double> correlation_uniform;
    std::optional<double> rate;
    std::optional<double> maturity;
    std::optional<std::vector<double>> monitoring_times;
    std::optional<std::vector<double>> weights;  // row-major, assets x steps

    PayoffSpec payoff;
    std::size_t points = 2048;
    std::size_t replications = 32;
    std::size_t lss_block = 50;
    std::uint64_t seed = 20100401;
    QmcMode mode = QmcMode::scrambled_sobol;

    Method method = Method::malliavin_adaptive;
    bool lt = true;
    double loc_delta = 0.01;
    double fd_bump = 0.01;
    PilotMode pilot = PilotMode::independent;
    std::size_t threads = 0;
    std::vector<double> sweep;
    std::string output = "deltas.csv";
    bool debug_replications = false;

    // "section.key" -> "source:line" of the assignment that set it
    std::map<std::string, std::string> origin;
};

struct RunConfig {
    MarketConfig market;
    PayoffSpec payoff;
    QmcConfig qmc;
    EstimatorOptions options;
    std::vector<double> strike_sweep;
    std::string output_path;
    bool debug_replications = false;
};

// table1 .. table5: Table 1 inputs with M = 10, N = 64, at the money, for the
// fixed-strike call (table1, table2), floating strike, digital and exotic.
RunSettings preset(std::string_view name);

// Applies `key = value` lines grouped in [market], [qmc], [payoff] and [run]
// sections. '#' starts a comment. Errors name the source, line and field.
void apply_config_text(RunSettings& settings, std::string_view text, std::string_view source);
void apply_config_file(RunSettings& settings, const std::string& path);

// "lo:hi:step", inclusive of hi up to rounding.
std::vector<double> parse_sweep(std::string_view spec);

// Assembles and validates the run; throws ConfigError naming the field.
RunConfig build_run(const RunSettings& settings);

// 17 significant digits, enough to round-trip a double.
std::string format_double(double v);

struct SweepResult {
    double strike = 0.0;
    EstimateReport report;
};

void write_csv(std::ostream& out, const EstimateReport& report);
void write_sweep_csv(std::ostream& out, const std::vector<SweepResult>& results);
void write_replications_csv(std::ostream& out, const std::vector<SweepResult>& results);

} // namespace qmcg
