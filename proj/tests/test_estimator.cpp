#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "qmcg/errors.hpp"
#include "qmcg/estimator.hpp"
#include "support.hpp"

#include <algorithm>
#include <cmath>

using namespace qmcg;
using namespace testing_support;

namespace {

QmcConfig qmc_for(const MarketConfig& c, std::size_t points, std::size_t reps,
                  QmcMode mode = QmcMode::scrambled_sobol) {
    QmcConfig q;
    q.nominal_dimension = c.dimension();
    q.points_per_replication = points;
    q.replications = reps;
    q.lss_block_dimension = std::min<std::size_t>(50, c.dimension());
    q.mode = mode;
    return q;
}

EstimatorOptions with_method(Method m, double loc = 0.01) {
    EstimatorOptions o;
    o.method = m;
    o.loc_delta_fraction = loc;
    return o;
}

void check_agree(const EstimateReport& a, const EstimateReport& b, double sigmas = 3.0) {
    REQUIRE(a.delta.size() == b.delta.size());
    for (std::size_t k = 0; k < a.delta.size(); ++k) {
        INFO(to_string(a.method) << " vs " << to_string(b.method) << ", component " << k + 1 << ": "
                                 << a.delta[k] << " +- " << a.stderr_[k] << " vs " << b.delta[k]
                                 << " +- " << b.stderr_[k]);
        CHECK(std::abs(a.delta[k] - b.delta[k]) <= sigmas * combined(a.stderr_[k], b.stderr_[k]));
    }
}

const PayoffKind kAll[] = {PayoffKind::asian_fixed, PayoffKind::asian_floating,
                           PayoffKind::digital_fixed, PayoffKind::exotic_max};

} // namespace

TEST_CASE("single asset, single date: Black-Scholes deltas") {
    MarketConfig c = MarketConfig::table1(1, 1);
    c.vols = {0.2};
    const QmcConfig q = qmc_for(c, 2048, 32);
    const double call = bs_call_delta(100.0, 100.0, 0.05, 0.2, 1.0);
    const double digital = bs_digital_delta(100.0, 100.0, 0.05, 0.2, 1.0);
    CHECK(call == doctest::Approx(0.636830651175619));

    for (Method m : {Method::malliavin_adaptive, Method::malliavin_localized, Method::malliavin_plain}) {
        const EstimateReport r = estimate(c, {PayoffKind::asian_fixed, 100.0}, q, with_method(m));
        INFO(to_string(m) << " " << r.delta[0] << " +- " << r.stderr_[0]);
        CHECK(std::abs(r.delta[0] - call) <= 3.0 * r.stderr_[0]);
        CHECK(r.stderr_[0] <= 1e-3);
    }
    for (Method m : {Method::malliavin_adaptive, Method::malliavin_localized}) {
        const EstimateReport r = estimate(c, {PayoffKind::digital_fixed, 100.0}, q, with_method(m));
        INFO(to_string(m) << " " << r.delta[0] << " +- " << r.stderr_[0]);
        CHECK(std::abs(r.delta[0] - digital) <= 3.0 * r.stderr_[0]);
        CHECK(r.stderr_[0] <= 1e-3);
    }
    // away from the money too
    for (double k : {85.0, 115.0}) {
        const EstimateReport r = estimate(c, {PayoffKind::asian_fixed, k}, q, {});
        CHECK(std::abs(r.delta[0] - bs_call_delta(100.0, k, 0.05, 0.2, 1.0)) <= 3.0 * r.stderr_[0]);
    }
}

TEST_CASE("Malliavin estimates agree with central differences") {
    const MarketConfig c = MarketConfig::table1(3, 4);
    const QmcConfig q = qmc_for(c, 1024, 16);
    for (PayoffKind kind : kAll) {
        const PayoffSpec spec{kind, 100.0};
        const EstimateReport fd = finite_difference_delta(c, spec, q, 1e-4);
        const EstimateReport adaptive = estimate(c, spec, q, with_method(Method::malliavin_adaptive));
        const EstimateReport loc = estimate(c, spec, q, with_method(Method::malliavin_localized));
        check_agree(adaptive, fd);
        check_agree(loc, fd);
        check_agree(adaptive, loc);
    }
}

TEST_CASE("the unlocalized estimator agrees as well") {
    const MarketConfig c = MarketConfig::table1(2, 3);
    const QmcConfig q = qmc_for(c, 2048, 16);
    for (PayoffKind kind : {PayoffKind::asian_fixed, PayoffKind::exotic_max}) {
        const PayoffSpec spec{kind, 100.0};
        check_agree(estimate(c, spec, q, with_method(Method::malliavin_plain)),
                    finite_difference_delta(c, spec, q, 0.01));
    }
}

TEST_CASE("reports are bit-identical across thread counts") {
    const MarketConfig c = MarketConfig::table1(3, 4);
    const QmcConfig q = qmc_for(c, 256, 8);
    for (PayoffKind kind : kAll) {
        EstimatorOptions one, three;
        one.threads = 1;
        three.threads = 3;
        const EstimateReport a = estimate(c, {kind, 100.0}, q, one);
        const EstimateReport b = estimate(c, {kind, 100.0}, q, three);
        CHECK(a.delta == b.delta);
        CHECK(a.stderr_ == b.stderr_);
        CHECK(a.replication_means == b.replication_means);
        CHECK(a.localization == b.localization);
    }
}

TEST_CASE("same seed, same report; another seed, another report") {
    const MarketConfig c = MarketConfig::table1(2, 2);
    QmcConfig q = qmc_for(c, 128, 4);
    const EstimateReport a = estimate(c, {}, q);
    const EstimateReport b = estimate(c, {}, q);
    CHECK(a.delta == b.delta);
    q.seed += 1;
    CHECK(estimate(c, {}, q).delta != a.delta);
}

TEST_CASE("floating strike on one asset observed once is zero") {
    const MarketConfig c = MarketConfig::table1(1, 1);
    const EstimateReport r = estimate(c, {PayoffKind::asian_floating, 0.0}, qmc_for(c, 64, 4));
    CHECK(r.delta == std::vector<double>{0.0});
    CHECK(r.stderr_ == std::vector<double>{0.0});
}

TEST_CASE("near-deterministic market deep in the money: pathwise term only") {
    MarketConfig c = MarketConfig::table1(2, 4);
    c.vols = {1e-6, 1e-6};
    const QmcConfig q = qmc_for(c, 256, 4);
    const EstimateReport r = estimate(c, {PayoffKind::asian_fixed, 50.0}, q,
                                      with_method(Method::malliavin_localized));
    for (std::size_t k = 0; k < 2; ++k) {
        double exact = 0.0;
        for (std::size_t j = 0; j < 4; ++j) exact += c.weights(k, j) * std::exp(0.05 * c.monitoring_times[j]);
        exact *= std::exp(-0.05);
        CHECK(r.delta[k] == doctest::Approx(exact).epsilon(1e-5));
    }
}

TEST_CASE("pseudo-random and scrambled Sobol' agree") {
    const MarketConfig c = MarketConfig::table1(3, 4);
    for (PayoffKind kind : kAll) {
        const PayoffSpec spec{kind, 100.0};
        check_agree(estimate(c, spec, qmc_for(c, 1024, 16)),
                    estimate(c, spec, qmc_for(c, 1024, 16, QmcMode::pseudo_random)));
    }
}

TEST_CASE("the LT leaves the estimate unchanged in law") {
    const MarketConfig c = MarketConfig::table1(3, 4);
    const QmcConfig q = qmc_for(c, 1024, 16, QmcMode::pseudo_random);
    for (PayoffKind kind : kAll) {
        EstimatorOptions on, off;
        off.use_lt = false;
        const EstimateReport a = estimate(c, {kind, 100.0}, q, on);
        const EstimateReport b = estimate(c, {kind, 100.0}, q, off);
        CHECK(a.lt_used);
        CHECK_FALSE(b.lt_used);
        check_agree(a, b);
    }
}

TEST_CASE("doubling the points shrinks the error") {
    const MarketConfig c = MarketConfig::table1(3, 4);
    double previous = 1e300;
    for (std::size_t n : {256u, 512u, 1024u, 2048u}) {
        const EstimateReport r = estimate(c, {}, qmc_for(c, n, 32), with_method(Method::malliavin_localized, 0.05));
        std::vector<double> e = r.stderr_;
        std::sort(e.begin(), e.end());
        const double median = e[e.size() / 2];
        CHECK(median < previous);
        previous = median;
    }
}

TEST_CASE("path counts") {
    const MarketConfig c = MarketConfig::table1(3, 4);
    const QmcConfig q = qmc_for(c, 256, 4);
    const EstimateReport fd = finite_difference_delta(c, {}, q, 0.01);
    const EstimateReport loc = estimate(c, {}, q, with_method(Method::malliavin_localized));
    const EstimateReport adaptive = estimate(c, {}, q);
    CHECK(fd.simulated_paths == 2 * 3 * 256 * 4);
    CHECK(loc.simulated_paths == 256 * 4);
    CHECK(adaptive.simulated_paths == 256 * 5);  // pilot replication included
    CHECK(adaptive.localization.size() == 3);
}

TEST_CASE("pilot modes") {
    const MarketConfig c = MarketConfig::table1(2, 3);
    const QmcConfig q = qmc_for(c, 512, 8);
    EstimatorOptions reuse;
    reuse.pilot = PilotMode::reuse_first;
    const EstimateReport a = estimate(c, {}, q, reuse);
    const EstimateReport b = estimate(c, {}, q, reuse);
    const EstimateReport indep = estimate(c, {}, q);
    CHECK(a.localization == b.localization);
    CHECK(a.localization != indep.localization);
    check_agree(a, indep);
}

TEST_CASE("adaptive widths are positive and in price units") {
    const MarketConfig c = MarketConfig::table1(3, 4);
    const QmcConfig q = qmc_for(c, 1024, 2);
    const EstimateReport call = estimate(c, {}, q);
    for (double d : call.localization) {
        CHECK(d > 0.0);
        CHECK(d < 100.0);
    }
    const EstimateReport digital = estimate(c, {PayoffKind::digital_fixed, 100.0}, q);
    for (double h : digital.localization) CHECK(h > 0.0);
}

TEST_CASE("input checks") {
    const MarketConfig c = MarketConfig::table1(2, 3);
    QmcConfig q = qmc_for(c, 64, 2);
    q.nominal_dimension = 5;
    CHECK_THROWS_AS(estimate(c, {}, q), ConfigError);
    q = qmc_for(c, 64, 2);
    CHECK_THROWS_AS(finite_difference_delta(c, {}, q, 0.0), ConfigError);
    CHECK_THROWS_AS(finite_difference_delta(c, {}, q, 1.5), ConfigError);
    CHECK_THROWS_AS(estimate(c, {PayoffKind::asian_fixed, -1.0}, q), ConfigError);
    CHECK_THROWS_AS(estimate(c, {}, q, with_method(Method::malliavin_localized, 0.0)), ConfigError);

    CHECK(parse_method("adaptive") == Method::malliavin_adaptive);
    CHECK(parse_method("loc") == Method::malliavin_localized);
    CHECK(parse_method("fd") == Method::finite_difference);
    CHECK(parse_method(to_string(Method::malliavin_plain)) == Method::malliavin_plain);
    CHECK_THROWS_AS(parse_method("bump"), ConfigError);
}

TEST_CASE("a regular market rejects no path, even at a zero threshold") {
    const MarketConfig c = MarketConfig::table1(3, 4);
    const QmcConfig q = qmc_for(c, 512, 2);
    for (PayoffKind kind : kAll) {
        EstimatorOptions o = with_method(Method::malliavin_plain);
        o.max_rejected_fraction = 0.0;
        const EstimateReport r = estimate(c, {kind, 100.0}, q, o);
        CHECK(r.rejected_paths == 0);
    }
}
