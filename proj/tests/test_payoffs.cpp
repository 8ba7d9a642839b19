#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "qmcg/errors.hpp"
#include "qmcg/payoffs.hpp"
#include "support.hpp"

#include <cmath>

using namespace qmcg;
using namespace testing_support;

namespace {

PathBundle flat_bundle(std::size_t m, std::size_t n, double level) {
    PathBundle b;
    b.s = Eigen::MatrixXd::Constant(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(n), level);
    return b;
}

} // namespace

TEST_CASE("payoff examples") {
    const MarketConfig c = MarketConfig::table1(2, 3);
    const PathBundle b = flat_bundle(2, 3, 100.0);
    const PayoffEval e = evaluate({PayoffKind::asian_fixed, 100.0}, b, c);
    CHECK(e.value == 0.0);
    CHECK(e.average == doctest::Approx(100.0));

    // the digital pays on the tie m(T) = K
    CHECK(payoff_value({PayoffKind::digital_fixed, 100.0}, 100.0, 0.0) == 1.0);
    CHECK(payoff_value({PayoffKind::digital_fixed, 100.0}, 99.999, 0.0) == 0.0);
    CHECK(payoff_value({PayoffKind::exotic_max, 100.0}, 105.0, 110.0) == 10.0);
    CHECK(payoff_value({PayoffKind::exotic_max, 100.0}, 95.0, 90.0) == 0.0);
    CHECK(payoff_value({PayoffKind::asian_floating, 0.0}, 105.0, 101.0) == doctest::Approx(4.0));
    CHECK(payoff_value({PayoffKind::asian_floating, 0.0}, 101.0, 105.0) == 0.0);
}

TEST_CASE("discounting") {
    CHECK(discount(1.0, 0.0, 1.0) == 1.0);
    CHECK(discount(1.0, 0.05, 1.0) == doctest::Approx(0.951229424500714).epsilon(1e-14));
    CHECK(discount(3.0, 0.05, 2.0) == doctest::Approx(discount(1.0, 0.05, 2.0) + discount(2.0, 0.05, 2.0)));
}

TEST_CASE("spot derivatives G_k and T_k") {
    const MarketConfig c = MarketConfig::table1(2, 2);
    PathBundle b;
    b.s.resize(2, 2);
    b.s << 101.0, 104.0, 97.0, 93.0;
    const PayoffEval e = evaluate({}, b, c);
    CHECK(e.average == doctest::Approx((101.0 + 104.0 + 97.0 + 93.0) / 4.0));
    CHECK(e.terminal_basket == doctest::Approx((104.0 + 93.0) / 2.0));
    CHECK(e.g[0] == doctest::Approx((101.0 + 104.0) / 4.0 / 100.0));
    CHECK(e.t[1] == doctest::Approx(93.0 / 2.0 / 100.0));
}

TEST_CASE("G_k is invariant under scaling of x_k") {
    MarketConfig c = MarketConfig::table1(3, 4);
    const VolLoadings l = VolLoadings::from(c);
    const std::vector<double> y = {0.1, -0.3, 0.7, 1.2, 0.0, -0.5, 0.4, 0.4, -1.0, 0.2, 0.9, -0.1};
    const PayoffEval before = evaluate({}, simulate_path(c, l, nullptr, y), c);
    c.spots[1] *= 1.7;
    const PathBundle scaled = simulate_path(c, l, nullptr, y);
    const PayoffEval after = evaluate({}, scaled, c);
    for (int k = 0; k < 3; ++k) CHECK(after.g[k] == doctest::Approx(before.g[k]).epsilon(1e-13));
}

TEST_CASE("fixed strike payoff is convex and non-decreasing, digital non-decreasing") {
    const PayoffSpec call{PayoffKind::asian_fixed, 100.0};
    const PayoffSpec digital{PayoffKind::digital_fixed, 100.0};
    double prev_call = -1.0, prev_dig = -1.0;
    for (double m = 80.0; m <= 120.0; m += 0.5) {
        const double v = payoff_value(call, m, 0.0);
        CHECK(v >= prev_call);
        CHECK(payoff_value(digital, m, 0.0) >= prev_dig);
        // midpoint convexity
        CHECK(v <= 0.5 * (payoff_value(call, m - 1.0, 0.0) + payoff_value(call, m + 1.0, 0.0)) + 1e-12);
        prev_call = v;
        prev_dig = payoff_value(digital, m, 0.0);
    }
}

TEST_CASE("exotic dominates the fixed strike call pathwise") {
    const MarketConfig c = MarketConfig::table1(3, 4);
    const VolLoadings l = VolLoadings::from(c);
    const PointSet pts = normal_points(c.dimension(), 512, 0);
    for (std::size_t p = 0; p < pts.size(); ++p) {
        const PathBundle b = simulate_path(c, l, nullptr, pts[p]);
        const double ex = evaluate({PayoffKind::exotic_max, 100.0}, b, c).value;
        const double fx = evaluate({PayoffKind::asian_fixed, 100.0}, b, c).value;
        CHECK(ex >= fx);
    }
}

TEST_CASE("payoff names and conventions") {
    CHECK(parse_payoff_kind("asian-fixed") == PayoffKind::asian_fixed);
    CHECK(parse_payoff_kind("asian_floating") == PayoffKind::asian_floating);
    CHECK(parse_payoff_kind("digital") == PayoffKind::digital_fixed);
    CHECK(parse_payoff_kind("exotic") == PayoffKind::exotic_max);
    CHECK_THROWS_AS(parse_payoff_kind("barrier"), ConfigError);
    for (auto k : {PayoffKind::asian_fixed, PayoffKind::asian_floating, PayoffKind::digital_fixed,
                   PayoffKind::exotic_max}) {
        CHECK(parse_payoff_kind(to_string(k)) == k);
    }

    MarketConfig c = MarketConfig::table1(2, 2);
    c.weights << 0.4, 0.1, 0.3, 0.2;
    CHECK_NOTHROW(check_payoff_conventions({PayoffKind::asian_fixed, 100.0}, c));
    CHECK_THROWS_AS(check_payoff_conventions({PayoffKind::asian_floating, 100.0}, c), ConfigError);
    CHECK_THROWS_AS(check_payoff_conventions({PayoffKind::exotic_max, 100.0}, c), ConfigError);

    CHECK(payoff_identically_zero({PayoffKind::asian_floating, 0.0}, MarketConfig::table1(1, 1)));
    CHECK_FALSE(payoff_identically_zero({PayoffKind::asian_floating, 0.0}, MarketConfig::table1(1, 2)));
}
