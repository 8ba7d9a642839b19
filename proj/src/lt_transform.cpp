#include "qmcg/lt_transform.hpp"

#include "qmcg/errors.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace qmcg {

namespace {

constexpr double kZeroGradient = 1e-14;
constexpr Eigen::Index kChunkRows = 256;

// Coefficients c of the linear functional sum_ij c(i, j) S_i(t_j) whose
// gradient drives the LT objective on this path.
Eigen::MatrixXd objective_coefficients(const MarketConfig& market, const PayoffSpec& payoff,
                                       const PathBundle& path, double* value) {
    const auto m = static_cast<Eigen::Index>(market.assets());
    const auto n = static_cast<Eigen::Index>(market.dates());
    Eigen::MatrixXd terminal = Eigen::MatrixXd::Zero(m, n);
    terminal.col(n - 1).setConstant(1.0 / static_cast<double>(m));

    const double average = (market.weights.array() * path.s.array()).sum();
    const double basket = path.s.col(n - 1).mean();
    switch (payoff.kind) {
    case PayoffKind::asian_fixed:
    case PayoffKind::digital_fixed:
        *value = average;
        return market.weights;
    case PayoffKind::asian_floating:
        *value = average - basket;
        return market.weights - terminal;
    case PayoffKind::exotic_max:
        if (average >= basket) {
            *value = average;
            return market.weights;
        }
        *value = basket;
        return terminal;
    }
    *value = 0.0;
    return Eigen::MatrixXd::Zero(m, n);
}

} // namespace

LtColumn lt_column(const Eigen::VectorXd& gradient, const Eigen::MatrixXd& previous) {
    const Eigen::Index d = gradient.size();
    if (previous.rows() != d && previous.cols() != 0) {
        throw ConfigError("lt_column: previous columns have the wrong length");
    }
    if (previous.cols() >= d) throw ConfigError("lt_column: no orthogonal direction left");

    auto project = [&](Eigen::VectorXd v) {
        for (int pass = 0; pass < 2; ++pass) {
            if (previous.cols() > 0) v -= previous * (previous.transpose() * v);
        }
        return v;
    };

    LtColumn out;
    Eigen::VectorXd residual = project(gradient);
    const double norm = residual.norm();
    if (norm > kZeroGradient && norm > 1e-12 * gradient.norm()) {
        out.column = residual / norm;
        out.objective = std::pow(gradient.dot(out.column), 2);
        return out;
    }

    out.fallback = true;
    // |P e_j|^2 = 1 - |row j of previous|^2
    Eigen::Index best = 0;
    double best_norm = -1.0;
    for (Eigen::Index j = 0; j < d; ++j) {
        const double r = previous.cols() > 0 ? 1.0 - previous.row(j).squaredNorm() : 1.0;
        if (r > best_norm + 1e-12) {
            best_norm = r;
            best = j;
        }
    }
    const Eigen::VectorXd e = project(Eigen::VectorXd::Unit(d, best));
    out.column = e / e.norm();
    out.objective = std::pow(gradient.dot(out.column), 2);
    return out;
}

LtMatrix build_lt_matrix(std::size_t dimension, const GradientFn& gradient) {
    const auto d = static_cast<Eigen::Index>(dimension);
    LtMatrix lt;
    lt.a = Eigen::MatrixXd::Zero(d, d);
    Eigen::VectorXd expansion = Eigen::VectorXd::Zero(d);
    for (Eigen::Index k = 0; k < d; ++k) {
        const Eigen::VectorXd g = gradient(expansion);
        if (g.size() != d) throw ConfigError("build_lt_matrix: gradient has the wrong length");
        const LtColumn c = lt_column(g, lt.a.leftCols(k));
        lt.a.col(k) = c.column;
        if (k == 0) lt.first_column_objective = c.objective;
        if (c.fallback) ++lt.fallback_columns;
        expansion += c.column;
    }
    return lt;
}

Eigen::VectorXd payoff_gradient(const MarketConfig& market, const VolLoadings& loadings,
                                const PayoffSpec& payoff, const Eigen::VectorXd& y) {
    PathBundle path;
    simulate_from_standardized(market, loadings, {y.data(), static_cast<std::size_t>(y.size())}, path);
    double value = 0.0;
    const Eigen::MatrixXd c = objective_coefficients(market, payoff, path, &value);

    const std::size_t m = market.assets();
    const std::size_t n = market.dates();
    Eigen::VectorXd grad(static_cast<Eigen::Index>(m * n));
    const auto grid = market.time_grid();
    for (std::size_t k = 0; k < m; ++k) {
        const auto d = functional_derivative(c, path, loadings, k);
        for (std::size_t l = 0; l < n; ++l) {
            grad(static_cast<Eigen::Index>(l * m + k)) = std::sqrt(grid[l + 1] - grid[l]) * d[l];
        }
    }
    return grad;
}

double lt_objective(const MarketConfig& market, const VolLoadings& loadings,
                    const PayoffSpec& payoff, const Eigen::VectorXd& y) {
    PathBundle path;
    simulate_from_standardized(market, loadings, {y.data(), static_cast<std::size_t>(y.size())}, path);
    double value = 0.0;
    objective_coefficients(market, payoff, path, &value);
    return value;
}

LtMatrix build_lt_matrix(const MarketConfig& market, const PayoffSpec& payoff) {
    const VolLoadings loadings = VolLoadings::from(market);
    return build_lt_matrix(market.dimension(), [&](const Eigen::VectorXd& y) {
        return payoff_gradient(market, loadings, payoff, y);
    });
}

void apply_lt(const LtMatrix& lt, std::span<double> rows) {
    using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
    const Eigen::Index d = lt.a.rows();
    if (d == 0 || rows.size() % static_cast<std::size_t>(d) != 0) {
        throw ConfigError("apply_lt: block size is not a multiple of the dimension");
    }
    const auto count = static_cast<Eigen::Index>(rows.size()) / d;
    RowMajor buffer;
    for (Eigen::Index start = 0; start < count; start += kChunkRows) {
        const Eigen::Index len = std::min(kChunkRows, count - start);
        Eigen::Map<RowMajor> block(rows.data() + start * d, len, d);
        buffer.noalias() = block * lt.a.transpose();
        block = buffer;
    }
}

} // namespace qmcg
