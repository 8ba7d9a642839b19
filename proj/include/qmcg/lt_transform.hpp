#pragma once

#include "qmcg/market_model.hpp"
#include "qmcg/payoffs.hpp"

#include <Eigen/Dense>

#include <cstddef>
#include <functional>

namespace qmcg {

// Orthogonal matrix A applied to the normal input: y = A eps feeds the path
// construction in place of eps.
struct LtMatrix {
    Eigen::MatrixXd a;
    double first_column_objective = 0.0;  // squared directional derivative along column 1
    std::size_t fallback_columns = 0;     // columns chosen without a usable gradient

    std::size_t dimension() const noexcept { return static_cast<std::size_t>(a.rows()); }
};

// Gradient of the objective g with respect to the standardized increments y.
using GradientFn = std::function<Eigen::VectorXd(const Eigen::VectorXd& y)>;

struct LtColumn {
    Eigen::VectorXd column;
    double objective = 0.0;
    bool fallback = false;
};

// Unit vector maximizing (gradient . a)^2 among unit vectors orthogonal to the
// columns of `previous`. The + sign is kept. When the projected gradient
// vanishes, the standard basis vector with the largest residual is used.
LtColumn lt_column(const Eigen::VectorXd& gradient, const Eigen::MatrixXd& previous);

// Columns are taken in order at the expansion points eps_k = (1,..,1,0,..,0)
// with k-1 leading ones, i.e. y_k = sum of the previous columns.
LtMatrix build_lt_matrix(std::size_t dimension, const GradientFn& gradient);
LtMatrix build_lt_matrix(const MarketConfig& market, const PayoffSpec& payoff);

// Gradient of the LT objective: m(T) for the fixed-strike and digital
// contracts, n(T) = m(T) - K(T) for the floating strike and the active branch
// of max(m(T), K(T)) for the exotic. The kink is resolved towards the
// in-the-money side, so out-of-the-money points still carry a gradient.
Eigen::VectorXd payoff_gradient(const MarketConfig& market, const VolLoadings& loadings,
                                const PayoffSpec& payoff, const Eigen::VectorXd& y);

// Objective value g(y) matching payoff_gradient.
double lt_objective(const MarketConfig& market, const VolLoadings& loadings,
                    const PayoffSpec& payoff, const Eigen::VectorXd& y);

// Replaces every row eps of the row-major block by A eps.
void apply_lt(const LtMatrix& lt, std::span<double> rows);

} // namespace qmcg
