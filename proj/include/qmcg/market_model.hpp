#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <span>
#include <vector>

namespace qmcg {

struct LtMatrix;

// Multi-asset Black-Scholes market with constant coefficients and a discrete
// monitoring grid t_1 < ... < t_N = maturity.
struct MarketConfig {
    std::vector<double> spots;
    double rate = 0.05;
    std::vector<double> vols;
    Eigen::MatrixXd correlation;
    double maturity = 1.0;
    std::vector<double> monitoring_times;
    Eigen::MatrixXd weights;  // assets x dates, w(i, j) multiplies S_i(t_j)

    std::size_t assets() const noexcept { return spots.size(); }
    std::size_t dates() const noexcept { return monitoring_times.size(); }
    std::size_t dimension() const noexcept { return assets() * dates(); }

    // 0 = t_0 < t_1 < ... < t_N.
    std::vector<double> time_grid() const;

    // Throws ConfigError naming the offending field.
    void validate() const;

    // Input parameters of the reference experiments: S_i(0) = 100, r = 5%,
    // T = 1, sigma_i = 10% + (i-1)/9 * 40%, rho = 50%, equally spaced dates,
    // uniform weights 1/(MN). The /9 is kept literally for every M.
    static MarketConfig table1(std::size_t assets, std::size_t dates);
};

std::vector<double> uniform_dates(double maturity, std::size_t count);
Eigen::MatrixXd uniform_weights(std::size_t assets, std::size_t dates);
Eigen::MatrixXd constant_correlation(std::size_t assets, double rho);

// Lower-triangular C with C C^T = rho. Throws FactorizationError naming the
// first leading minor that is not positive.
Eigen::MatrixXd cholesky(const Eigen::MatrixXd& rho);

// sigma(i, k) = sigma_i * alpha(i, k), alpha the Cholesky factor of rho.
struct VolLoadings {
    Eigen::MatrixXd alpha;
    Eigen::MatrixXd sigma;

    static VolLoadings from(const MarketConfig& config);
};

// One trajectory on the monitoring grid.
struct PathBundle {
    Eigen::MatrixXd s;                 // assets x dates, S_i(t_j)
    Eigen::VectorXd w_terminal;        // W_k(T)
    Eigen::VectorXd w_time_integral;   // trapezoidal integral of W_k over [0, T]
    std::vector<double> normal_draws;  // input point, before the linear transformation
};

// Builds the path from standardized increments y (already multiplied by the
// LT matrix when one is used). Step j consumes y[j*M .. j*M + M).
void simulate_from_standardized(const MarketConfig& config, const VolLoadings& loadings,
                                std::span<const double> y, PathBundle& out);

PathBundle simulate_path(const MarketConfig& config, const VolLoadings& loadings,
                         const LtMatrix* lt, std::span<const double> point);

// D_s^k S_i(t_j) = S_i(t_j) sigma_ik for s <= t_j; entry (i, j) holds that value.
Eigen::MatrixXd malliavin_derivative_samples(const PathBundle& bundle,
                                             const VolLoadings& loadings, std::size_t k);

// For F = sum_ij c(i, j) S_i(t_j): D_s^k F on interval [t_l, t_{l+1}) for
// l = 0..N-1, i.e. sum over j >= l of c(i, j) S_i(t_j) sigma_ik.
std::vector<double> functional_derivative(const Eigen::MatrixXd& coefficients,
                                          const PathBundle& bundle,
                                          const VolLoadings& loadings, std::size_t k);

} // namespace qmcg
