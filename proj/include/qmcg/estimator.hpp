#pragma once

#include "qmcg/lt_transform.hpp"
#include "qmcg/market_model.hpp"
#include "qmcg/payoffs.hpp"
#include "qmcg/qmc_engine.hpp"

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <memory>
#include <string_view>
#include <vector>

namespace qmcg {

enum class Method { malliavin_adaptive, malliavin_localized, malliavin_plain, finite_difference };

std::string_view to_string(Method method);
Method parse_method(std::string_view name);  // throws ConfigError

enum class PilotMode {
    independent,  // pilot replication drawn from its own stream and discarded
    reuse_first,  // pilot reuses the draws of replication 1
};

struct EstimatorOptions {
    Method method = Method::malliavin_adaptive;
    bool use_lt = true;
    // Fixed localization width (or digital kernel scale) as a fraction of the
    // reference level: the strike, or the mean spot for the floating strike.
    double loc_delta_fraction = 0.01;
    // Central-difference bump as a fraction of each spot.
    double fd_bump_fraction = 0.01;
    PilotMode pilot = PilotMode::independent;
    std::size_t threads = 0;  // 0 = hardware concurrency
    double max_rejected_fraction = 1e-4;
    // Prebuilt LT matrix for this market and payoff; built on demand when null.
    std::shared_ptr<const LtMatrix> lt;
};

struct EstimateReport {
    Method method = Method::malliavin_adaptive;
    PayoffKind payoff = PayoffKind::asian_fixed;
    double strike = 0.0;
    QmcConfig qmc;
    bool lt_used = false;
    double lt_first_column_objective = 0.0;
    std::size_t lt_fallback_columns = 0;

    std::vector<double> delta;
    std::vector<double> stderr_;           // sd of replication means / sqrt(R)
    Eigen::MatrixXd replication_means;     // replications x assets
    std::vector<double> localization;      // per-component delta (calls) or h (digital)
    std::size_t rejected_paths = 0;
    std::size_t simulated_paths = 0;       // path constructions, bumps included
    double runtime_seconds = 0.0;
};

// Reference level that fixed localization widths are expressed against.
double localization_reference(const MarketConfig& market, const PayoffSpec& payoff);

std::shared_ptr<const LtMatrix> make_lt(const MarketConfig& market, const PayoffSpec& payoff);

// Throws ConfigError for inconsistent inputs and EstimationFailure when the
// rejected-path fraction exceeds options.max_rejected_fraction.
EstimateReport estimate(const MarketConfig& market, const PayoffSpec& payoff,
                        const QmcConfig& qmc, const EstimatorOptions& options = {});

// Central differences with common random numbers: the bumped paths reuse the
// draws of the unbumped run. `bump_fraction` is relative to each spot.
EstimateReport finite_difference_delta(const MarketConfig& market, const PayoffSpec& payoff,
                                       const QmcConfig& qmc, double bump_fraction,
                                       const EstimatorOptions& options = {});

} // namespace qmcg
