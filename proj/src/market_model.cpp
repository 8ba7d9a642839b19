#include "qmcg/market_model.hpp"

#include "qmcg/errors.hpp"
#include "qmcg/lt_transform.hpp"

#include <cmath>
#include <string>

namespace qmcg {

std::vector<double> MarketConfig::time_grid() const {
    std::vector<double> grid;
    grid.reserve(monitoring_times.size() + 1);
    grid.push_back(0.0);
    grid.insert(grid.end(), monitoring_times.begin(), monitoring_times.end());
    return grid;
}

void MarketConfig::validate() const {
    const std::size_t m = assets();
    const std::size_t n = dates();
    if (m == 0) throw ConfigError("market.spots: at least one asset required");
    if (n == 0) throw ConfigError("market.monitoring_times: at least one date required");
    for (std::size_t i = 0; i < m; ++i) {
        if (!(spots[i] > 0.0) || !std::isfinite(spots[i])) {
            throw ConfigError("market.spots[" + std::to_string(i) + "] must be positive");
        }
    }
    if (vols.size() != m) {
        throw ConfigError("market.vols: expected " + std::to_string(m) + " entries, got " +
                          std::to_string(vols.size()));
    }
    for (std::size_t i = 0; i < m; ++i) {
        if (!(vols[i] > 0.0) || !std::isfinite(vols[i])) {
            throw ConfigError("market.vols[" + std::to_string(i) + "] must be positive");
        }
    }
    if (!std::isfinite(rate)) throw ConfigError("market.rate must be finite");
    if (!(maturity > 0.0) || !std::isfinite(maturity)) {
        throw ConfigError("market.maturity must be positive");
    }
    if (static_cast<std::size_t>(correlation.rows()) != m ||
        static_cast<std::size_t>(correlation.cols()) != m) {
        throw ConfigError("market.correlation must be " + std::to_string(m) + "x" +
                          std::to_string(m));
    }
    for (std::size_t i = 0; i < m; ++i) {
        if (std::abs(correlation(i, i) - 1.0) > 1e-12) {
            throw ConfigError("market.correlation: diagonal entry " + std::to_string(i) +
                              " is not 1");
        }
        for (std::size_t j = 0; j < i; ++j) {
            if (std::abs(correlation(i, j) - correlation(j, i)) > 1e-12) {
                throw ConfigError("market.correlation is not symmetric");
            }
            if (std::abs(correlation(i, j)) > 1.0) {
                throw ConfigError("market.correlation entries must lie in [-1, 1]");
            }
        }
    }
    double previous = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        if (!(monitoring_times[j] > previous)) {
            throw ConfigError("market.monitoring_times must be strictly increasing and positive");
        }
        previous = monitoring_times[j];
    }
    if (std::abs(monitoring_times.back() - maturity) > 1e-12 * maturity) {
        throw ConfigError("market.monitoring_times: last date must equal the maturity");
    }
    if (static_cast<std::size_t>(weights.rows()) != m ||
        static_cast<std::size_t>(weights.cols()) != n) {
        throw ConfigError("market.weights must be " + std::to_string(m) + "x" + std::to_string(n));
    }
    if (!(weights.array() >= 0.0).all()) throw ConfigError("market.weights must be non-negative");
    if (std::abs(weights.sum() - 1.0) > 1e-9) throw ConfigError("market.weights must sum to 1");
}

MarketConfig MarketConfig::table1(std::size_t assets, std::size_t dates) {
    if (assets == 0 || dates == 0) throw ConfigError("table1: assets and dates must be positive");
    MarketConfig c;
    c.spots.assign(assets, 100.0);
    c.rate = 0.05;
    c.vols.resize(assets);
    for (std::size_t i = 0; i < assets; ++i) {
        c.vols[i] = 0.1 + static_cast<double>(i) / 9.0 * 0.4;
    }
    c.correlation = constant_correlation(assets, 0.5);
    c.maturity = 1.0;
    c.monitoring_times = uniform_dates(c.maturity, dates);
    c.weights = uniform_weights(assets, dates);
    return c;
}

std::vector<double> uniform_dates(double maturity, std::size_t count) {
    std::vector<double> t(count);
    for (std::size_t j = 0; j < count; ++j) {
        t[j] = maturity * static_cast<double>(j + 1) / static_cast<double>(count);
    }
    if (count > 0) t.back() = maturity;
    return t;
}

Eigen::MatrixXd uniform_weights(std::size_t assets, std::size_t dates) {
    return Eigen::MatrixXd::Constant(static_cast<Eigen::Index>(assets),
                                     static_cast<Eigen::Index>(dates),
                                     1.0 / static_cast<double>(assets * dates));
}

Eigen::MatrixXd constant_correlation(std::size_t assets, double rho) {
    const auto m = static_cast<Eigen::Index>(assets);
    Eigen::MatrixXd c = Eigen::MatrixXd::Constant(m, m, rho);
    c.diagonal().setOnes();
    return c;
}

Eigen::MatrixXd cholesky(const Eigen::MatrixXd& rho) {
    const Eigen::Index m = rho.rows();
    if (rho.cols() != m) throw ConfigError("cholesky: matrix is not square");
    Eigen::MatrixXd l = Eigen::MatrixXd::Zero(m, m);
    for (Eigen::Index j = 0; j < m; ++j) {
        double pivot = rho(j, j);
        for (Eigen::Index k = 0; k < j; ++k) pivot -= l(j, k) * l(j, k);
        if (!(pivot > 1e-14 * std::abs(rho(j, j)))) {
            throw FactorizationError("correlation matrix is not positive definite: leading minor " +
                                         std::to_string(j + 1) + " is not positive",
                                     static_cast<std::size_t>(j + 1));
        }
        l(j, j) = std::sqrt(pivot);
        for (Eigen::Index i = j + 1; i < m; ++i) {
            double v = rho(i, j);
            for (Eigen::Index k = 0; k < j; ++k) v -= l(i, k) * l(j, k);
            l(i, j) = v / l(j, j);
        }
    }
    return l;
}

VolLoadings VolLoadings::from(const MarketConfig& config) {
    VolLoadings out;
    out.alpha = cholesky(config.correlation);
    out.sigma = out.alpha;
    for (Eigen::Index i = 0; i < out.sigma.rows(); ++i) {
        out.sigma.row(i) *= config.vols[static_cast<std::size_t>(i)];
    }
    return out;
}

void simulate_from_standardized(const MarketConfig& config, const VolLoadings& loadings,
                                std::span<const double> y, PathBundle& out) {
    const auto m = static_cast<Eigen::Index>(config.assets());
    const auto n = static_cast<Eigen::Index>(config.dates());
    if (y.size() != config.dimension()) {
        throw ConfigError("simulate: expected " + std::to_string(config.dimension()) +
                          " draws, got " + std::to_string(y.size()));
    }
    out.s.resize(m, n);
    out.w_terminal.setZero(m);
    out.w_time_integral.setZero(m);

    Eigen::VectorXd log_s(m);
    for (Eigen::Index i = 0; i < m; ++i) log_s(i) = std::log(config.spots[static_cast<std::size_t>(i)]);
    Eigen::VectorXd dw(m);

    double previous = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) {
        const double t = config.monitoring_times[static_cast<std::size_t>(j)];
        const double dt = t - previous;
        const double root = std::sqrt(dt);
        for (Eigen::Index k = 0; k < m; ++k) dw(k) = root * y[static_cast<std::size_t>(j * m + k)];
        for (Eigen::Index i = 0; i < m; ++i) {
            const double vol = config.vols[static_cast<std::size_t>(i)];
            double shock = 0.0;
            for (Eigen::Index k = 0; k <= i; ++k) shock += loadings.sigma(i, k) * dw(k);
            log_s(i) += (config.rate - 0.5 * vol * vol) * dt + shock;
            out.s(i, j) = std::exp(log_s(i));
        }
        // trapezoid: W is known only on the grid
        out.w_time_integral += dt * (out.w_terminal + 0.5 * dw);
        out.w_terminal += dw;
        previous = t;
    }
}

PathBundle simulate_path(const MarketConfig& config, const VolLoadings& loadings,
                         const LtMatrix* lt, std::span<const double> point) {
    PathBundle out;
    out.normal_draws.assign(point.begin(), point.end());
    if (lt != nullptr) {
        const Eigen::VectorXd y =
            lt->a * Eigen::Map<const Eigen::VectorXd>(point.data(), static_cast<Eigen::Index>(point.size()));
        simulate_from_standardized(config, loadings, {y.data(), static_cast<std::size_t>(y.size())}, out);
    } else {
        simulate_from_standardized(config, loadings, point, out);
    }
    return out;
}

Eigen::MatrixXd malliavin_derivative_samples(const PathBundle& bundle,
                                             const VolLoadings& loadings, std::size_t k) {
    Eigen::MatrixXd d = bundle.s;
    for (Eigen::Index i = 0; i < d.rows(); ++i) d.row(i) *= loadings.sigma(i, static_cast<Eigen::Index>(k));
    return d;
}

std::vector<double> functional_derivative(const Eigen::MatrixXd& coefficients,
                                          const PathBundle& bundle,
                                          const VolLoadings& loadings, std::size_t k) {
    const Eigen::Index m = bundle.s.rows();
    const Eigen::Index n = bundle.s.cols();
    const auto kk = static_cast<Eigen::Index>(k);
    std::vector<double> out(static_cast<std::size_t>(n));
    double suffix = 0.0;
    for (Eigen::Index j = n - 1; j >= 0; --j) {
        for (Eigen::Index i = kk; i < m; ++i) {  // sigma_ik = 0 for i < k
            suffix += coefficients(i, j) * bundle.s(i, j) * loadings.sigma(i, kk);
        }
        out[static_cast<std::size_t>(j)] = suffix;
    }
    return out;
}

} // namespace qmcg
