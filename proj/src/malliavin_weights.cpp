#include "qmcg/malliavin_weights.hpp"

#include "qmcg/errors.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace qmcg {

namespace {

// Spot derivative, time integral and second-order block of the linear
// functional F = sum_ij c(i, j) S_i(t_j) with respect to component k:
//   g = dF/dx_k, l = int D F ds, a = int D g ds, b = int D l ds.
struct LinearBlocks {
    double g = 0.0;
    double l = 0.0;
    double a = 0.0;
    double b = 0.0;
    double l_scale = 0.0;  // sum of |terms| of l
};

LinearBlocks linear_blocks(const Eigen::MatrixXd& c, const PathBundle& bundle,
                           const VolLoadings& loadings, const MarketConfig& config,
                           std::size_t k) {
    const auto kk = static_cast<Eigen::Index>(k);
    const double x = config.spots[k];
    const double sigma_kk = loadings.sigma(kk, kk);
    LinearBlocks out;
    for (Eigen::Index j = 0; j < bundle.s.cols(); ++j) {
        const double t = config.monitoring_times[static_cast<std::size_t>(j)];
        const double own = c(kk, j) * bundle.s(kk, j);
        out.g += own;
        out.a += own * t * sigma_kk;
        for (Eigen::Index i = kk; i < bundle.s.rows(); ++i) {
            const double sig = loadings.sigma(i, kk);
            const double term = c(i, j) * bundle.s(i, j) * t * sig;
            out.l += term;
            out.l_scale += std::abs(term);
            out.b += term * t * sig;
        }
    }
    out.g /= x;
    out.a /= x;
    return out;
}

void require_denominator(double value, double scale, const char* name, std::size_t k) {
    if (!(std::abs(value) > kDegenerateTolerance * scale) || !std::isfinite(value)) {
        throw DegeneratePath(std::string(name) + " vanished for component " + std::to_string(k + 1));
    }
}

void require_positive(double value, const char* name, std::size_t k) {
    if (!(value > std::numeric_limits<double>::min()) || !std::isfinite(value)) {
        throw DegeneratePath(std::string(name) + " vanished for component " + std::to_string(k + 1));
    }
}

// (G/L)(W + B/L) - A/L
double linear_weight(const LinearBlocks& blk, double w_terminal) {
    const double ratio = blk.g / blk.l;
    return ratio * (w_terminal + blk.b / blk.l) - blk.a / blk.l;
}

Eigen::MatrixXd terminal_coefficients(const MarketConfig& config) {
    const auto m = static_cast<Eigen::Index>(config.assets());
    const auto n = static_cast<Eigen::Index>(config.dates());
    Eigen::MatrixXd c = Eigen::MatrixXd::Zero(m, n);
    c.col(n - 1).setConstant(1.0 / static_cast<double>(m));
    return c;
}

// c(i, j) sigma_ik t_j^p / p!, i.e. the functional int s^(p-1) D_s F ds.
Eigen::MatrixXd integrated(const Eigen::MatrixXd& c, const VolLoadings& loadings,
                           const MarketConfig& config, std::size_t k, int power) {
    Eigen::MatrixXd out = c;
    const auto kk = static_cast<Eigen::Index>(k);
    for (Eigen::Index j = 0; j < c.cols(); ++j) {
        const double t = config.monitoring_times[static_cast<std::size_t>(j)];
        const double factor = power == 1 ? t : 0.5 * t * t;
        for (Eigen::Index i = 0; i < c.rows(); ++i) out(i, j) *= loadings.sigma(i, kk) * factor;
    }
    return out;
}

double variance(std::span<const double> v) {
    if (v.size() < 2) return 0.0;
    long double mean = 0.0L;
    for (double x : v) mean += x;
    mean /= static_cast<long double>(v.size());
    long double ss = 0.0L;
    for (double x : v) ss += (x - mean) * (x - mean);
    return static_cast<double>(ss / static_cast<long double>(v.size() - 1));
}

} // namespace

void LocalizationParams::validate() const {
    if (!(delta_call > 0.0)) throw ConfigError("localization delta must be positive");
    if (!(h_digital > 0.0)) throw ConfigError("digital kernel scale must be positive");
}

FixedStrikeBlocks fixed_strike_blocks(const PathBundle& bundle, const VolLoadings& loadings,
                                      const MarketConfig& config, std::size_t k) {
    const LinearBlocks b = linear_blocks(config.weights, bundle, loadings, config, k);
    return {b.g, b.l, b.a, b.b};
}

FloatingStrikeBlocks floating_strike_blocks(const PathBundle& bundle, const VolLoadings& loadings,
                                            const MarketConfig& config, std::size_t k) {
    FloatingStrikeBlocks out;
    out.fixed = fixed_strike_blocks(bundle, loadings, config, k);
    const LinearBlocks term = linear_blocks(terminal_coefficients(config), bundle, loadings, config, k);
    out.t = term.g;
    out.u = term.l;
    out.v = term.a;
    out.p = term.b;
    out.f = out.fixed.g - out.t;
    out.m = out.fixed.l - out.u;
    return out;
}

MalliavinJet functional_jet(const Eigen::MatrixXd& coefficients, const PathBundle& bundle,
                            const VolLoadings& loadings, std::size_t k) {
    const double value = (coefficients.array() * bundle.s.array()).sum();
    return {value, functional_derivative(coefficients, bundle, loadings, k)};
}

ExoticBlocks exotic_blocks(const PathBundle& bundle, const VolLoadings& loadings,
                           const MarketConfig& config, std::size_t k) {
    const Eigen::MatrixXd cx = terminal_coefficients(config);
    const Eigen::MatrixXd& cy = config.weights;
    const auto kk = static_cast<Eigen::Index>(k);
    const double x = config.spots[k];

    ExoticBlocks e;
    e.a1 = functional_jet(integrated(cx, loadings, config, k, 1), bundle, loadings, k);
    e.a2 = functional_jet(integrated(cy, loadings, config, k, 1), bundle, loadings, k);
    e.b1 = functional_jet(integrated(cx, loadings, config, k, 2), bundle, loadings, k);
    e.b2 = functional_jet(integrated(cy, loadings, config, k, 2), bundle, loadings, k);

    Eigen::MatrixXd own_y = Eigen::MatrixXd::Zero(cy.rows(), cy.cols());
    own_y.row(kk) = cy.row(kk) / x;
    Eigen::MatrixXd own_x = Eigen::MatrixXd::Zero(cx.rows(), cx.cols());
    own_x.row(kk) = cx.row(kk) / x;
    e.g = functional_jet(own_y, bundle, loadings, k);
    e.t = functional_jet(own_x, bundle, loadings, k);

    require_positive(e.g.value(), "G_k", k);
    require_positive(e.t.value(), "T_k", k);
    e.determinant = e.a1.value() * e.b2.value() - e.a2.value() * e.b1.value();
    require_denominator(e.determinant,
                        std::abs(e.a1.value() * e.b2.value()) + std::abs(e.a2.value() * e.b1.value()),
                        "a1 b2 - a2 b1", k);

    const MalliavinJet det = e.a1 * e.b2 - e.a2 * e.b1;
    e.u1 = (e.b2 - e.b1 * e.g / e.t) / det;
    e.u2 = (e.a2 * e.t / e.g - e.a1) / det;

    const auto grid = config.time_grid();
    const double w = bundle.w_terminal(kk);
    const double s_dw = config.maturity * w - bundle.w_time_integral(kk);  // int s dW_k
    e.sk1 = e.u1.value() * e.t.value() * w - e.u1.value() * e.t.time_integral(grid) -
            e.t.value() * e.u1.time_integral(grid);
    e.sk2 = e.u2.value() * e.g.value() * s_dw - e.g.value() * e.u2.s_weighted_integral(grid) -
            e.u2.value() * e.g.s_weighted_integral(grid);
    return e;
}

double weight_asian_fixed(const PathBundle& bundle, const VolLoadings& loadings,
                          const MarketConfig& config, std::size_t k) {
    const LinearBlocks b = linear_blocks(config.weights, bundle, loadings, config, k);
    require_denominator(b.l, b.l_scale, "L_k", k);
    return linear_weight(b, bundle.w_terminal(static_cast<Eigen::Index>(k)));
}

double weight_asian_floating(const PathBundle& bundle, const VolLoadings& loadings,
                             const MarketConfig& config, std::size_t k) {
    const LinearBlocks fixed = linear_blocks(config.weights, bundle, loadings, config, k);
    const LinearBlocks term = linear_blocks(terminal_coefficients(config), bundle, loadings, config, k);
    const LinearBlocks diff{fixed.g - term.g, fixed.l - term.l, fixed.a - term.a, fixed.b - term.b,
                            fixed.l_scale + term.l_scale};
    require_denominator(diff.l, diff.l_scale, "M_k", k);
    return linear_weight(diff, bundle.w_terminal(static_cast<Eigen::Index>(k)));
}

double skorohod_unit(const PathBundle& bundle, const VolLoadings& loadings,
                     const MarketConfig& config, std::size_t k) {
    const LinearBlocks b = linear_blocks(config.weights, bundle, loadings, config, k);
    require_denominator(b.l, b.l_scale, "L_k", k);
    return bundle.w_terminal(static_cast<Eigen::Index>(k)) / b.l + b.b / (b.l * b.l);
}

double weight_digital(const PathBundle& bundle, const VolLoadings& loadings,
                      const MarketConfig& config, std::size_t k, double strike,
                      const LocalizationParams& params) {
    const LinearBlocks b = linear_blocks(config.weights, bundle, loadings, config, k);
    require_denominator(b.l, b.l_scale, "L_k", k);
    const double unit = bundle.w_terminal(static_cast<Eigen::Index>(k)) / b.l + b.b / (b.l * b.l);
    const double average = (config.weights.array() * bundle.s.array()).sum();
    const double z = (average - strike) / params.h_digital;
    return kernel(z) * (b.g * unit - b.a / b.l) - b.g / params.h_digital * kernel_derivative(z);
}

double weight_exotic(const PathBundle& bundle, const VolLoadings& loadings,
                     const MarketConfig& config, std::size_t k) {
    const ExoticBlocks e = exotic_blocks(bundle, loadings, config, k);
    return e.sk1 - e.sk2;
}

double kernel(double z) { return std::exp(-std::abs(z)); }

double kernel_derivative(double z) {
    if (z > 0.0) return -std::exp(-z);
    if (z < 0.0) return std::exp(z);
    return 0.0;
}

double ramp(double y, double center, double delta) {
    if (y <= center - delta) return 0.0;
    if (y >= center + delta) return 1.0;
    return (y - center + delta) / (2.0 * delta);
}

double ramp_integral(double y, double center, double delta) {
    if (y <= center - delta) return 0.0;
    if (y >= center + delta) return y - center;
    const double u = y - center + delta;
    return u * u / (4.0 * delta);
}

double localization_residual(double y, double center, double delta) {
    if (y <= center - delta || y >= center + delta) return 0.0;
    return std::max(y - center, 0.0) - ramp_integral(y, center, delta);
}

double pathwise_derivative(const PayoffSpec& spec, const PayoffEval& eval, std::size_t k) {
    switch (spec.kind) {
    case PayoffKind::asian_fixed:
    case PayoffKind::digital_fixed: return eval.g[k];
    case PayoffKind::asian_floating: return eval.g[k] - eval.t[k];
    case PayoffKind::exotic_max:
        return eval.average >= eval.terminal_basket ? eval.g[k] : eval.t[k];
    }
    return 0.0;
}

void localization_point(const PayoffSpec& spec, const PayoffEval& eval, double* z, double* center) {
    switch (spec.kind) {
    case PayoffKind::asian_fixed:
    case PayoffKind::digital_fixed:
        *z = eval.average;
        *center = spec.strike;
        return;
    case PayoffKind::asian_floating:
        *z = eval.average - eval.terminal_basket;
        *center = 0.0;
        return;
    case PayoffKind::exotic_max:
        *z = std::max(eval.average, eval.terminal_basket);
        *center = spec.strike;
        return;
    }
}

bool weights_needed(const PayoffSpec& spec, const PayoffEval& eval, bool localized,
                    std::span<const double> delta) {
    if (!localized || spec.kind == PayoffKind::digital_fixed) return eval.value != 0.0;
    double z = 0.0;
    double center = 0.0;
    localization_point(spec, eval, &z, &center);
    for (double d : delta) {
        if (std::abs(z - center) < d) return true;
    }
    return false;
}

WeightSet compute_weights(const PayoffSpec& spec, const PayoffEval& eval, const PathBundle& bundle,
                          const VolLoadings& loadings, const MarketConfig& config) {
    const std::size_t m = config.assets();
    WeightSet w;
    localization_point(spec, eval, &w.localized, &w.center);
    w.skorohod.resize(m);
    w.pathwise.resize(m);

    for (std::size_t k = 0; k < m; ++k) {
        const double wk = bundle.w_terminal(static_cast<Eigen::Index>(k));
        switch (spec.kind) {
        case PayoffKind::asian_fixed: {
            const LinearBlocks b = linear_blocks(config.weights, bundle, loadings, config, k);
            require_denominator(b.l, b.l_scale, "L_k", k);
            w.skorohod[k] = linear_weight(b, wk);
            break;
        }
        case PayoffKind::asian_floating:
            w.skorohod[k] = weight_asian_floating(bundle, loadings, config, k);
            break;
        case PayoffKind::digital_fixed: {
            const LinearBlocks b = linear_blocks(config.weights, bundle, loadings, config, k);
            require_denominator(b.l, b.l_scale, "L_k", k);
            const double unit = wk / b.l + b.b / (b.l * b.l);
            w.unit.push_back(unit);
            w.skorohod[k] = b.g * unit - b.a / b.l;
            break;
        }
        case PayoffKind::exotic_max:
            w.skorohod[k] = weight_exotic(bundle, loadings, config, k);
            break;
        }
        w.pathwise[k] = pathwise_derivative(spec, eval, k);
    }
    return w;
}

std::vector<double> localized_call_estimator(const WeightSet& weights,
                                             std::span<const double> delta) {
    std::vector<double> out(weights.skorohod.size());
    for (std::size_t k = 0; k < out.size(); ++k) {
        const double h = ramp(weights.localized, weights.center, delta[k]);
        const double f = localization_residual(weights.localized, weights.center, delta[k]);
        out[k] = h * weights.pathwise[k] + (f != 0.0 ? f * weights.skorohod[k] : 0.0);
    }
    return out;
}

std::vector<double> plain_estimator(const PayoffEval& eval, const WeightSet& weights) {
    std::vector<double> out(weights.skorohod.size());
    for (std::size_t k = 0; k < out.size(); ++k) out[k] = eval.value * weights.skorohod[k];
    return out;
}

std::vector<double> digital_estimator(const PayoffSpec& spec, const PayoffEval& eval,
                                      const WeightSet& weights, std::span<const double> h) {
    std::vector<double> out(weights.skorohod.size(), 0.0);
    if (eval.value == 0.0) return out;
    for (std::size_t k = 0; k < out.size(); ++k) {
        const double z = (eval.average - spec.strike) / h[k];
        out[k] = eval.value * (kernel(z) * weights.skorohod[k] -
                               weights.pathwise[k] / h[k] * kernel_derivative(z));
    }
    return out;
}

double adaptive_call_delta(std::span<const double> offset, std::span<const double> weight,
                           double reference, double fallback) {
    if (offset.size() != weight.size()) throw ConfigError("adaptive_call_delta: size mismatch");
    std::vector<double> product(weight.size());
    for (std::size_t p = 0; p < weight.size(); ++p) product[p] = offset[p] * weight[p];
    const double vw = variance(weight);
    const double delta = variance(product) / vw / reference;
    if (!(vw > 0.0) || !(delta > 0.0) || !std::isfinite(delta)) return fallback;
    return delta;
}

double adaptive_digital_h(std::span<const double> unit, double fallback) {
    const double v = variance(unit);
    if (!(v > 0.0) || !std::isfinite(v)) return fallback;
    return 1.0 / std::sqrt(v);
}

} // namespace qmcg
