#pragma once

// Shared oracles and small statistics helpers for the tests.

#include "qmcg/market_model.hpp"
#include "qmcg/qmc_engine.hpp"

#include <cmath>
#include <numbers>
#include <span>
#include <vector>

namespace testing_support {

inline double npdf(double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi); }
inline double ncdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

// Black-Scholes call delta and digital (cash-or-nothing, pays 1) delta.
inline double bs_call_delta(double s, double k, double r, double vol, double t) {
    const double d1 = (std::log(s / k) + (r + 0.5 * vol * vol) * t) / (vol * std::sqrt(t));
    return ncdf(d1);
}
inline double bs_digital_delta(double s, double k, double r, double vol, double t) {
    const double d2 = (std::log(s / k) + (r - 0.5 * vol * vol) * t) / (vol * std::sqrt(t));
    return std::exp(-r * t) * npdf(d2) / (s * vol * std::sqrt(t));
}

struct Stats {
    double mean = 0.0;
    double stderr_ = 0.0;  // sd / sqrt(n)
};

inline Stats stats(std::span<const double> xs) {
    const double n = static_cast<double>(xs.size());
    double mean = 0.0;
    for (double x : xs) mean += x;
    mean /= n;
    double ss = 0.0;
    for (double x : xs) ss += (x - mean) * (x - mean);
    return {mean, std::sqrt(ss / (n - 1.0) / n)};
}

// Normal draws for one replication, row p = one point.
inline qmcg::PointSet normal_points(std::size_t dimension, std::size_t count, std::uint64_t stream,
                                    qmcg::QmcMode mode = qmcg::QmcMode::scrambled_sobol,
                                    std::uint64_t seed = 20100401) {
    qmcg::QmcConfig cfg;
    cfg.nominal_dimension = dimension;
    cfg.points_per_replication = count;
    cfg.lss_block_dimension = std::min<std::size_t>(50, dimension);
    cfg.seed = seed;
    cfg.mode = mode;
    qmcg::PointSet pts = qmcg::replication_points(cfg, stream);
    qmcg::to_normal_in_place(pts.values());
    return pts;
}

inline bool within(double a, double b, double tol) { return std::abs(a - b) <= tol; }

inline double combined(double e1, double e2) { return std::sqrt(e1 * e1 + e2 * e2); }

} // namespace testing_support
