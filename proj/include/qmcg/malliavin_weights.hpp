#pragma once

#include "qmcg/malliavin_jet.hpp"
#include "qmcg/market_model.hpp"
#include "qmcg/payoffs.hpp"

#include <cstddef>
#include <span>
#include <vector>

namespace qmcg {

// Relative size below which an almost surely non-zero denominator is treated
// as vanished; the path is then rejected.
inline constexpr double kDegenerateTolerance = 1e-12;

struct FixedStrikeBlocks {
    double g = 0.0;  // (1/x_k) sum_j w_kj S_k(t_j)
    double l = 0.0;  // sum_ij w_ij S_i(t_j) t_j sigma_ik
    double a = 0.0;  // (1/x_k) sum_j w_kj S_k(t_j) t_j sigma_kk
    double b = 0.0;  // sum_ij w_ij S_i(t_j) t_j^2 sigma_ik^2
};

struct FloatingStrikeBlocks {
    FixedStrikeBlocks fixed;
    double f = 0.0;  // G_k - T_k
    double m = 0.0;  // L_k - U_k
    double t = 0.0;  // S_k(T) / (M x_k)
    double u = 0.0;  // sum_i S_i(T) T sigma_ik / M
    double v = 0.0;  // S_k(T) T sigma_kk / (M x_k)
    double p = 0.0;  // sum_i S_i(T) T^2 sigma_ik^2 / M
};

// Two-variable payoff psi(X, Y) with X = K(T), Y = m(T).
struct ExoticBlocks {
    MalliavinJet a1, a2, b1, b2;  // int D X, int D Y, int s D X, int s D Y
    MalliavinJet g, t;            // dY/dx_k, dX/dx_k
    MalliavinJet u1, u2;
    double determinant = 0.0;
    double sk1 = 0.0;
    double sk2 = 0.0;
};

struct LocalizationParams {
    double delta_call = 1.0;
    double h_digital = 1.0;

    void validate() const;
};

FixedStrikeBlocks fixed_strike_blocks(const PathBundle& bundle, const VolLoadings& loadings,
                                      const MarketConfig& config, std::size_t k);
FloatingStrikeBlocks floating_strike_blocks(const PathBundle& bundle, const VolLoadings& loadings,
                                            const MarketConfig& config, std::size_t k);
ExoticBlocks exotic_blocks(const PathBundle& bundle, const VolLoadings& loadings,
                           const MarketConfig& config, std::size_t k);

// Jet of F = sum_ij c(i, j) S_i(t_j) with respect to the k-th Brownian motion.
MalliavinJet functional_jet(const Eigen::MatrixXd& coefficients, const PathBundle& bundle,
                            const VolLoadings& loadings, std::size_t k);

// Skorohod integrals. Each throws DegeneratePath when its denominator vanishes.
double weight_asian_fixed(const PathBundle& bundle, const VolLoadings& loadings,
                          const MarketConfig& config, std::size_t k);
double weight_asian_floating(const PathBundle& bundle, const VolLoadings& loadings,
                             const MarketConfig& config, std::size_t k);
// delta(u) for u_k = 1 / L_k: W_k(T) / L_k + B_k / L_k^2.
double skorohod_unit(const PathBundle& bundle, const VolLoadings& loadings,
                     const MarketConfig& config, std::size_t k);
double weight_digital(const PathBundle& bundle, const VolLoadings& loadings,
                      const MarketConfig& config, std::size_t k, double strike,
                      const LocalizationParams& params);
double weight_exotic(const PathBundle& bundle, const VolLoadings& loadings,
                     const MarketConfig& config, std::size_t k);

// Digital kernel phi(z) = exp(-|z|) and its derivative, with phi'(0) = 0.
double kernel(double z);
double kernel_derivative(double z);

// Localization around `center`: H is the ramp on [center - delta, center + delta],
// G its antiderivative vanishing on the left, F(y) = (y - center)^+ - G(y).
double ramp(double y, double center, double delta);
double ramp_integral(double y, double center, double delta);
double localization_residual(double y, double center, double delta);

// Per-path weights for every component.
struct WeightSet {
    // Localized variable z and its kink location; the call estimators
    // localize (z - center)^+, the digital uses (m(T) - K) / h.
    double localized = 0.0;
    double center = 0.0;
    std::vector<double> skorohod;  // bare weight pi_k (digital: G_k delta(u_k) - A_k / L_k)
    std::vector<double> pathwise;  // dz / dx_k on this path (digital: G_k)
    std::vector<double> unit;      // delta(u_k), digital only
};

// Spot derivative of the localized variable (G_k, F_k = G_k - T_k, or the
// derivative of the active branch of max(m(T), K(T))).
double pathwise_derivative(const PayoffSpec& spec, const PayoffEval& eval, std::size_t k);

// Localized variable and kink location for this payoff and path.
void localization_point(const PayoffSpec& spec, const PayoffEval& eval, double* z, double* center);

// Whether the Malliavin weights are needed on this path for the given per-k
// localization parameters; paths that do not need them are never rejected.
bool weights_needed(const PayoffSpec& spec, const PayoffEval& eval, bool localized,
                    std::span<const double> delta);

WeightSet compute_weights(const PayoffSpec& spec, const PayoffEval& eval, const PathBundle& bundle,
                          const VolLoadings& loadings, const MarketConfig& config);

// Undiscounted per-component contributions of one path.
std::vector<double> localized_call_estimator(const WeightSet& weights,
                                             std::span<const double> delta);
std::vector<double> plain_estimator(const PayoffEval& eval, const WeightSet& weights);
std::vector<double> digital_estimator(const PayoffSpec& spec, const PayoffEval& eval,
                                      const WeightSet& weights, std::span<const double> h);

// Adaptive parameters from pilot samples of one component. Both return
// `fallback` when the pilot weight variance vanishes.
//
// Call width: Var[(z - K) pi] / Var[pi] with prices measured in units of
// `reference`, returned in price units, i.e. the variance ratio divided by
// `reference`. The raw ratio has units of price^2.
double adaptive_call_delta(std::span<const double> offset, std::span<const double> weight,
                           double reference, double fallback);
double adaptive_digital_h(std::span<const double> unit, double fallback);

} // namespace qmcg
