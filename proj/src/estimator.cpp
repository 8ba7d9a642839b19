#include "qmcg/estimator.hpp"

#include "qmcg/errors.hpp"
#include "qmcg/malliavin_weights.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <string>
#include <thread>

namespace qmcg {

namespace {

constexpr std::uint64_t kPilotStream = 0x50494C4F54ULL;

struct Context {
    const MarketConfig& market;
    const PayoffSpec& payoff;
    VolLoadings loadings;
    QmcConfig qmc;
    std::shared_ptr<const LtMatrix> lt;
};

struct ReplicationSums {
    std::vector<long double> sum;
    std::size_t accepted = 0;
    std::size_t rejected = 0;
    std::size_t simulated = 0;
};

// Standardized increments of one replication, LT applied.
PointSet replication_draws(const Context& ctx, std::uint64_t stream) {
    PointSet pts = replication_points(ctx.qmc, stream);
    to_normal_in_place(pts.values());
    if (ctx.lt) apply_lt(*ctx.lt, pts.values());
    return pts;
}

template <class Fn>
void parallel_for(std::size_t count, std::size_t threads, Fn fn) {
    if (threads == 0) threads = std::max<std::size_t>(1, std::thread::hardware_concurrency());
    threads = std::min(threads, count);
    if (threads <= 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::exception_ptr> errors(threads);
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < threads; ++t) {
        pool.emplace_back([&, t] {
            try {
                for (std::size_t i = next++; i < count; i = next++) fn(i);
            } catch (...) {
                errors[t] = std::current_exception();
                next = count;
            }
        });
    }
    for (auto& th : pool) th.join();
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
}

void check_inputs(const MarketConfig& market, const PayoffSpec& payoff, const QmcConfig& qmc) {
    market.validate();
    check_payoff_conventions(payoff, market);
    if (payoff.kind != PayoffKind::asian_floating && !(payoff.strike > 0.0)) {
        throw ConfigError("payoff.strike must be positive");
    }
    if (qmc.nominal_dimension != market.dimension()) {
        throw ConfigError("qmc.nominal_dimension (" + std::to_string(qmc.nominal_dimension) +
                          ") must equal assets*dates (" + std::to_string(market.dimension()) + ")");
    }
    qmc.validate();
}

EstimateReport make_report(const MarketConfig& market, const PayoffSpec& payoff,
                           const QmcConfig& qmc, Method method, const Context& ctx) {
    EstimateReport r;
    r.method = method;
    r.payoff = payoff.kind;
    r.strike = payoff.strike;
    r.qmc = qmc;
    r.lt_used = static_cast<bool>(ctx.lt);
    if (ctx.lt) {
        r.lt_first_column_objective = ctx.lt->first_column_objective;
        r.lt_fallback_columns = ctx.lt->fallback_columns;
    }
    r.replication_means = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(qmc.replications),
                                                static_cast<Eigen::Index>(market.assets()));
    return r;
}

void finish_report(EstimateReport& r, const std::vector<ReplicationSums>& reps, double scale,
                   std::size_t extra_rejected, std::size_t extra_paths, double max_rejected) {
    const auto m = r.replication_means.cols();
    std::size_t total_paths = extra_paths;
    r.rejected_paths = extra_rejected;
    for (std::size_t i = 0; i < reps.size(); ++i) {
        const auto& rep = reps[i];
        r.rejected_paths += rep.rejected;
        r.simulated_paths += rep.simulated;
        total_paths += rep.accepted + rep.rejected;
        for (Eigen::Index k = 0; k < m; ++k) {
            r.replication_means(static_cast<Eigen::Index>(i), k) =
                rep.accepted == 0
                    ? 0.0
                    : scale * static_cast<double>(rep.sum[static_cast<std::size_t>(k)] /
                                                  static_cast<long double>(rep.accepted));
        }
    }
    if (static_cast<double>(r.rejected_paths) > max_rejected * static_cast<double>(total_paths)) {
        throw EstimationFailure(std::to_string(r.rejected_paths) + " of " +
                                std::to_string(total_paths) +
                                " paths rejected for vanishing Malliavin denominators");
    }
    const auto reps_count = static_cast<double>(reps.size());
    r.delta.resize(static_cast<std::size_t>(m));
    r.stderr_.resize(static_cast<std::size_t>(m));
    for (Eigen::Index k = 0; k < m; ++k) {
        const auto col = r.replication_means.col(k);
        const double mean = col.mean();
        double sd = 0.0;
        if (reps.size() > 1) sd = std::sqrt((col.array() - mean).square().sum() / (reps_count - 1.0));
        r.delta[static_cast<std::size_t>(k)] = mean;
        r.stderr_[static_cast<std::size_t>(k)] = sd / std::sqrt(reps_count);
    }
}

struct PilotResult {
    std::vector<double> params;
    std::size_t rejected = 0;
    std::size_t paths = 0;
};

PilotResult run_pilot(const Context& ctx, std::uint64_t stream, double reference) {
    const double fallback = 0.01 * reference;
    const std::size_t m = ctx.market.assets();
    const bool digital = ctx.payoff.kind == PayoffKind::digital_fixed;
    const PointSet draws = replication_draws(ctx, stream);
    std::vector<std::vector<double>> offset(m), weight(m);
    PilotResult out;
    out.paths = draws.size();
    PathBundle bundle;
    for (std::size_t p = 0; p < draws.size(); ++p) {
        simulate_from_standardized(ctx.market, ctx.loadings, draws[p], bundle);
        const PayoffEval eval = evaluate(ctx.payoff, bundle, ctx.market);
        WeightSet w;
        try {
            w = compute_weights(ctx.payoff, eval, bundle, ctx.loadings, ctx.market);
        } catch (const DegeneratePath&) {
            ++out.rejected;
            continue;
        }
        for (std::size_t k = 0; k < m; ++k) {
            if (digital) {
                weight[k].push_back(w.unit[k]);
            } else {
                offset[k].push_back(w.localized - w.center);
                weight[k].push_back(w.skorohod[k]);
            }
        }
    }
    out.params.resize(m);
    for (std::size_t k = 0; k < m; ++k) {
        out.params[k] = digital ? adaptive_digital_h(weight[k], fallback)
                                : adaptive_call_delta(offset[k], weight[k], reference, fallback);
    }
    return out;
}

ReplicationSums malliavin_replication(const Context& ctx, std::uint64_t stream, Method method,
                                      const std::vector<double>& params) {
    const std::size_t m = ctx.market.assets();
    const bool digital = ctx.payoff.kind == PayoffKind::digital_fixed;
    const bool localized = method != Method::malliavin_plain;
    const PointSet draws = replication_draws(ctx, stream);

    ReplicationSums out;
    out.sum.assign(m, 0.0L);
    PathBundle bundle;
    std::vector<double> contribution(m);
    for (std::size_t p = 0; p < draws.size(); ++p) {
        simulate_from_standardized(ctx.market, ctx.loadings, draws[p], bundle);
        ++out.simulated;
        const PayoffEval eval = evaluate(ctx.payoff, bundle, ctx.market);

        if (!weights_needed(ctx.payoff, eval, localized, params)) {
            if (localized && !digital) {
                double z = 0.0;
                double center = 0.0;
                localization_point(ctx.payoff, eval, &z, &center);
                for (std::size_t k = 0; k < m; ++k) {
                    const double h = ramp(z, center, params[k]);
                    out.sum[k] += h == 0.0 ? 0.0 : h * pathwise_derivative(ctx.payoff, eval, k);
                }
            }
            ++out.accepted;
            continue;
        }

        WeightSet w;
        try {
            w = compute_weights(ctx.payoff, eval, bundle, ctx.loadings, ctx.market);
        } catch (const DegeneratePath&) {
            ++out.rejected;
            continue;
        }
        if (!localized) {
            contribution = plain_estimator(eval, w);
        } else if (digital) {
            contribution = digital_estimator(ctx.payoff, eval, w, params);
        } else {
            contribution = localized_call_estimator(w, params);
        }
        for (std::size_t k = 0; k < m; ++k) out.sum[k] += contribution[k];
        ++out.accepted;
    }
    return out;
}

ReplicationSums fd_replication(const Context& ctx, std::uint64_t stream,
                               const std::vector<MarketConfig>& up,
                               const std::vector<MarketConfig>& down,
                               const std::vector<double>& bump) {
    const std::size_t m = ctx.market.assets();
    const PointSet draws = replication_draws(ctx, stream);
    ReplicationSums out;
    out.sum.assign(m, 0.0L);
    PathBundle bundle;
    for (std::size_t p = 0; p < draws.size(); ++p) {
        for (std::size_t k = 0; k < m; ++k) {
            simulate_from_standardized(up[k], ctx.loadings, draws[p], bundle);
            const double hi = evaluate(ctx.payoff, bundle, up[k]).value;
            simulate_from_standardized(down[k], ctx.loadings, draws[p], bundle);
            const double lo = evaluate(ctx.payoff, bundle, down[k]).value;
            out.sum[k] += (hi - lo) / (2.0 * bump[k]);
            out.simulated += 2;
        }
        ++out.accepted;
    }
    return out;
}

Context make_context(const MarketConfig& market, const PayoffSpec& payoff, const QmcConfig& qmc,
                     const EstimatorOptions& options) {
    Context ctx{market, payoff, VolLoadings::from(market), qmc, nullptr};
    if (options.use_lt) {
        ctx.lt = options.lt ? options.lt : make_lt(market, payoff);
        if (ctx.lt->dimension() != market.dimension()) {
            throw ConfigError("LT matrix dimension does not match assets*dates");
        }
    }
    return ctx;
}

double elapsed(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

} // namespace

std::string_view to_string(Method method) {
    switch (method) {
    case Method::malliavin_adaptive: return "malliavin-adaptive";
    case Method::malliavin_localized: return "malliavin-loc";
    case Method::malliavin_plain: return "malliavin-plain";
    case Method::finite_difference: return "finite-diff";
    }
    return "unknown";
}

Method parse_method(std::string_view name) {
    if (name == "adaptive" || name == "malliavin-adaptive") return Method::malliavin_adaptive;
    if (name == "loc" || name == "malliavin-loc") return Method::malliavin_localized;
    if (name == "plain" || name == "malliavin-plain") return Method::malliavin_plain;
    if (name == "fd" || name == "finite-diff") return Method::finite_difference;
    throw ConfigError("unknown method '" + std::string(name) + "' (expected adaptive, loc, plain or fd)");
}

double localization_reference(const MarketConfig& market, const PayoffSpec& payoff) {
    if (payoff.kind != PayoffKind::asian_floating) return payoff.strike;
    double sum = 0.0;
    for (double x : market.spots) sum += x;
    return sum / static_cast<double>(market.spots.size());
}

std::shared_ptr<const LtMatrix> make_lt(const MarketConfig& market, const PayoffSpec& payoff) {
    return std::make_shared<const LtMatrix>(build_lt_matrix(market, payoff));
}

EstimateReport estimate(const MarketConfig& market, const PayoffSpec& payoff,
                        const QmcConfig& qmc, const EstimatorOptions& options) {
    if (options.method == Method::finite_difference) {
        return finite_difference_delta(market, payoff, qmc, options.fd_bump_fraction, options);
    }
    const auto start = std::chrono::steady_clock::now();
    check_inputs(market, payoff, qmc);
    const std::size_t m = market.assets();

    if (payoff_identically_zero(payoff, market)) {
        Context ctx{market, payoff, VolLoadings::from(market), qmc, nullptr};
        EstimateReport r = make_report(market, payoff, qmc, options.method, ctx);
        r.delta.assign(m, 0.0);
        r.stderr_.assign(m, 0.0);
        r.runtime_seconds = elapsed(start);
        return r;
    }

    const Context ctx = make_context(market, payoff, qmc, options);
    EstimateReport report = make_report(market, payoff, qmc, options.method, ctx);
    const double reference = localization_reference(market, payoff);

    std::vector<double> params;
    std::size_t pilot_rejected = 0;
    std::size_t pilot_paths = 0;
    switch (options.method) {
    case Method::malliavin_adaptive: {
        const std::uint64_t stream = options.pilot == PilotMode::independent ? kPilotStream : 0;
        PilotResult pilot = run_pilot(ctx, stream, reference);
        params = std::move(pilot.params);
        pilot_rejected = pilot.rejected;
        pilot_paths = pilot.paths;
        report.simulated_paths += pilot.paths;
        break;
    }
    case Method::malliavin_localized:
        if (!(options.loc_delta_fraction > 0.0)) throw ConfigError("loc-delta must be positive");
        params.assign(m, options.loc_delta_fraction * reference);
        break;
    case Method::malliavin_plain:
    case Method::finite_difference:
        break;
    }
    report.localization = params;

    std::vector<ReplicationSums> reps(qmc.replications);
    parallel_for(qmc.replications, options.threads, [&](std::size_t r) {
        reps[r] = malliavin_replication(ctx, r, options.method, params);
    });
    finish_report(report, reps, std::exp(-market.rate * market.maturity), pilot_rejected,
                  pilot_paths, options.max_rejected_fraction);
    report.runtime_seconds = elapsed(start);
    return report;
}

EstimateReport finite_difference_delta(const MarketConfig& market, const PayoffSpec& payoff,
                                       const QmcConfig& qmc, double bump_fraction,
                                       const EstimatorOptions& options) {
    const auto start = std::chrono::steady_clock::now();
    check_inputs(market, payoff, qmc);
    if (!(bump_fraction > 0.0 && bump_fraction < 1.0)) {
        throw ConfigError("fd-bump must lie in (0, 1) as a fraction of spot");
    }
    const Context ctx = make_context(market, payoff, qmc, options);
    EstimateReport report = make_report(market, payoff, qmc, Method::finite_difference, ctx);

    const std::size_t m = market.assets();
    std::vector<MarketConfig> up(m, market), down(m, market);
    std::vector<double> bump(m);
    for (std::size_t k = 0; k < m; ++k) {
        bump[k] = bump_fraction * market.spots[k];
        up[k].spots[k] += bump[k];
        down[k].spots[k] -= bump[k];
    }

    std::vector<ReplicationSums> reps(qmc.replications);
    parallel_for(qmc.replications, options.threads, [&](std::size_t r) {
        reps[r] = fd_replication(ctx, r, up, down, bump);
    });
    finish_report(report, reps, std::exp(-market.rate * market.maturity), 0, 0,
                  options.max_rejected_fraction);
    report.runtime_seconds = elapsed(start);
    return report;
}

} // namespace qmcg
