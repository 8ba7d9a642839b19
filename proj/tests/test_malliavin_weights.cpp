#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "qmcg/errors.hpp"
#include "qmcg/malliavin_weights.hpp"
#include "support.hpp"

#include <cmath>
#include <functional>
#include <limits>

using namespace qmcg;
using namespace testing_support;

namespace {

const std::vector<double> kDraws = {0.1, -0.3, 0.7, 1.2, 0.0, -0.5, 0.4, 0.4, -1.0, 0.2, 0.9, -0.1};

PathBundle path(const MarketConfig& c, const VolLoadings& l, std::span<const double> y) {
    PathBundle b;
    simulate_from_standardized(c, l, y, b);
    return b;
}

// jet derivative on interval l versus (1/sqrt(dt_l)) d/dy_{l,k} of its value
void check_jet_against_bumps(const MarketConfig& c, const VolLoadings& l, std::size_t k,
                             const std::function<MalliavinJet(const PathBundle&)>& make,
                             const char* name) {
    const std::size_t m = c.assets();
    const auto grid = c.time_grid();
    const MalliavinJet jet = make(path(c, l, kDraws));
    for (std::size_t step = 0; step < c.dates(); ++step) {
        const double h = 1e-6;
        auto up = kDraws, down = kDraws;
        up[step * m + k] += h;
        down[step * m + k] -= h;
        const double fd = (make(path(c, l, up)).value() - make(path(c, l, down)).value()) / (2.0 * h) /
                          std::sqrt(grid[step + 1] - grid[step]);
        INFO(name << " interval " << step);
        CHECK(jet.derivative()[step] == doctest::Approx(fd).epsilon(1e-4).scale(1e-8));
    }
}

} // namespace

TEST_CASE("single asset, single date: weight is W(T) / (x T sigma)") {
    MarketConfig c = MarketConfig::table1(1, 1);
    c.vols = {0.2};
    const VolLoadings l = VolLoadings::from(c);
    for (double z : {-2.1, -0.3, 0.0, 0.8, 1.7}) {
        const std::vector<double> y = {z};
        const PathBundle b = path(c, l, y);
        const double w = weight_asian_fixed(b, l, c, 0);
        CHECK(std::abs(w - b.w_terminal(0) / (100.0 * 1.0 * 0.2)) <= 1e-12);
        const FixedStrikeBlocks blk = fixed_strike_blocks(b, l, c, 0);
        CHECK(blk.b / blk.l == doctest::Approx(0.2).epsilon(1e-14));
        CHECK(blk.a / blk.l == doctest::Approx(1.0 / 100.0).epsilon(1e-14));
        CHECK(blk.g / blk.l == doctest::Approx(1.0 / (100.0 * 0.2)).epsilon(1e-14));
    }
}

TEST_CASE("identical loadings, single date: B / L = T sigma") {
    MarketConfig c = MarketConfig::table1(3, 1);
    c.maturity = 2.0;
    c.monitoring_times = {2.0};
    VolLoadings l = VolLoadings::from(c);
    l.sigma.col(1).setConstant(0.3);  // sigma_i1 = 0.3 for every i
    const std::vector<double> y = {0.4, -0.2, 1.1};
    const PathBundle b = path(c, l, y);
    const FixedStrikeBlocks blk = fixed_strike_blocks(b, l, c, 1);
    CHECK(blk.b / blk.l == doctest::Approx(2.0 * 0.3).epsilon(1e-14));
}

TEST_CASE("floating strike blocks: F = G - T, M = L - U") {
    const MarketConfig c = MarketConfig::table1(3, 4);
    const VolLoadings l = VolLoadings::from(c);
    const PathBundle b = path(c, l, kDraws);
    const PayoffEval e = evaluate({PayoffKind::asian_floating, 0.0}, b, c);
    for (std::size_t k = 0; k < 3; ++k) {
        const FloatingStrikeBlocks f = floating_strike_blocks(b, l, c, k);
        CHECK(std::abs(f.f - (f.fixed.g - f.t)) <= 1e-14);
        CHECK(std::abs(f.m - (f.fixed.l - f.u)) <= 1e-14 * std::abs(f.fixed.l));
        CHECK(f.fixed.g == doctest::Approx(e.g[k]).epsilon(1e-14));
        CHECK(f.t == doctest::Approx(e.t[k]).epsilon(1e-14));
        // U_k and P_k by hand
        double u = 0.0, p = 0.0;
        for (int i = 0; i < 3; ++i) {
            u += b.s(i, 3) * 1.0 * l.sigma(i, k) / 3.0;
            p += b.s(i, 3) * l.sigma(i, k) * l.sigma(i, k) / 3.0;
        }
        CHECK(f.u == doctest::Approx(u).epsilon(1e-14));
        CHECK(f.p == doctest::Approx(p).epsilon(1e-14));
        const double expected = f.f / f.m * (b.w_terminal(k) + (f.fixed.b - f.p) / f.m) -
                                (f.fixed.a - f.v) / f.m;
        CHECK(weight_asian_floating(b, l, c, k) == doctest::Approx(expected).epsilon(1e-12));
    }
}

TEST_CASE("exotic block closed forms") {
    const MarketConfig c = MarketConfig::table1(3, 4);
    const VolLoadings l = VolLoadings::from(c);
    const PathBundle b = path(c, l, kDraws);
    const auto grid = c.time_grid();
    for (std::size_t k = 0; k < 3; ++k) {
        const ExoticBlocks e = exotic_blocks(b, l, c, k);
        double b1 = 0.0, b2 = 0.0, a1 = 0.0, a2 = 0.0;
        for (int i = 0; i < 3; ++i) {
            b1 += b.s(i, 3) * l.sigma(i, k) * 1.0 / (2.0 * 3.0);
            a1 += b.s(i, 3) * l.sigma(i, k) / 3.0;
            for (int j = 0; j < 4; ++j) {
                const double t = c.monitoring_times[j];
                b2 += c.weights(i, j) * b.s(i, j) * l.sigma(i, k) * t * t / 2.0;
                a2 += c.weights(i, j) * b.s(i, j) * l.sigma(i, k) * t;
            }
        }
        CHECK(e.b1.value() == doctest::Approx(b1).epsilon(1e-13));
        CHECK(e.b2.value() == doctest::Approx(b2).epsilon(1e-13));
        CHECK(e.a1.value() == doctest::Approx(a1).epsilon(1e-13));
        CHECK(e.a2.value() == doctest::Approx(a2).epsilon(1e-13));

        // the values are the integrals of the K(T), m(T) jets
        Eigen::MatrixXd term = Eigen::MatrixXd::Zero(3, 4);
        term.col(3).setConstant(1.0 / 3.0);
        const MalliavinJet kx = functional_jet(term, b, l, k);
        const MalliavinJet my = functional_jet(c.weights, b, l, k);
        CHECK(kx.time_integral(grid) == doctest::Approx(a1).epsilon(1e-13));
        CHECK(my.time_integral(grid) == doctest::Approx(a2).epsilon(1e-13));
        CHECK(kx.s_weighted_integral(grid) == doctest::Approx(b1).epsilon(1e-13));
        CHECK(my.s_weighted_integral(grid) == doctest::Approx(b2).epsilon(1e-13));

        // with h(s) = u1 T - u2 G s, int D psi h ds = psi_X T + psi_Y G needs
        // a1 u1 T - b1 u2 G = T and a2 u1 T - b2 u2 G = G
        const double u1 = e.u1.value(), u2 = e.u2.value();
        const double g = e.g.value(), t = e.t.value();
        CHECK(a1 * u1 * t - b1 * u2 * g == doctest::Approx(t).epsilon(1e-10));
        CHECK(a2 * u1 * t - b2 * u2 * g == doctest::Approx(g).epsilon(1e-10));
    }
}

TEST_CASE("exotic jets match bumped increments") {
    const MarketConfig c = MarketConfig::table1(3, 4);
    const VolLoadings l = VolLoadings::from(c);
    for (std::size_t k = 0; k < 3; ++k) {
        auto blocks = [&](const PathBundle& b) { return exotic_blocks(b, l, c, k); };
        check_jet_against_bumps(c, l, k, [&](const PathBundle& b) { return blocks(b).a1; }, "a1");
        check_jet_against_bumps(c, l, k, [&](const PathBundle& b) { return blocks(b).a2; }, "a2");
        check_jet_against_bumps(c, l, k, [&](const PathBundle& b) { return blocks(b).b1; }, "b1");
        check_jet_against_bumps(c, l, k, [&](const PathBundle& b) { return blocks(b).b2; }, "b2");
        check_jet_against_bumps(c, l, k, [&](const PathBundle& b) { return blocks(b).g; }, "G");
        check_jet_against_bumps(c, l, k, [&](const PathBundle& b) { return blocks(b).t; }, "T");
        check_jet_against_bumps(c, l, k, [&](const PathBundle& b) { return blocks(b).u1; }, "u1");
        check_jet_against_bumps(c, l, k, [&](const PathBundle& b) { return blocks(b).u2; }, "u2");
    }
}

TEST_CASE("jet algebra") {
    const MalliavinJet f(2.0, {1.0, -0.5, 0.25});
    const MalliavinJet g(-4.0, {0.5, 2.0, -1.0});
    const MalliavinJet prod = f * g;
    CHECK(prod.value() == -8.0);
    CHECK(prod.derivative()[0] == doctest::Approx(-4.0 * 1.0 + 2.0 * 0.5));
    // (f g) / g recovers f exactly up to rounding
    const MalliavinJet back = prod / g;
    CHECK(back.value() == doctest::Approx(2.0));
    for (int l = 0; l < 3; ++l) CHECK(back.derivative()[l] == doctest::Approx(f.derivative()[l]).epsilon(1e-14));
    // 1 / f on a manufactured rational function: D(1/f) = -Df / f^2
    const MalliavinJet inv = MalliavinJet::constant(1.0, 3) / f;
    for (int l = 0; l < 3; ++l) CHECK(inv.derivative()[l] == doctest::Approx(-f.derivative()[l] / 4.0));
    const MalliavinJet diff = f - f;
    CHECK(diff.value() == 0.0);
    CHECK((3.0 * f).derivative()[2] == doctest::Approx(0.75));

    const std::vector<double> grid = {0.0, 0.5, 1.0, 2.0};
    CHECK(f.time_integral(grid) == doctest::Approx(0.5 - 0.25 + 0.25));
    CHECK(f.s_weighted_integral(grid) == doctest::Approx(0.125 - 0.5 * 0.375 + 0.25 * 1.5));
    CHECK_THROWS_AS(f.time_integral(std::vector<double>{0.0, 1.0}), std::invalid_argument);
    CHECK_THROWS_AS(f + MalliavinJet::constant(1.0, 2), std::invalid_argument);
}

TEST_CASE("digital kernel") {
    CHECK(kernel(0.0) == 1.0);
    CHECK(kernel(2.0) == doctest::Approx(std::exp(-2.0)));
    CHECK(kernel(-2.0) == kernel(2.0));
    CHECK(kernel_derivative(0.0) == 0.0);
    CHECK(kernel_derivative(1.0) == doctest::Approx(-std::exp(-1.0)));
    CHECK(kernel_derivative(-1.0) == doctest::Approx(std::exp(-1.0)));
}

TEST_CASE("digital weight tends to the unlocalized weight as h grows") {
    const MarketConfig c = MarketConfig::table1(3, 4);
    const VolLoadings l = VolLoadings::from(c);
    const PathBundle b = path(c, l, kDraws);
    for (std::size_t k = 0; k < 3; ++k) {
        const FixedStrikeBlocks blk = fixed_strike_blocks(b, l, c, k);
        const double bare = blk.g * skorohod_unit(b, l, c, k) - blk.a / blk.l;
        const double wide = weight_digital(b, l, c, k, 100.0, {1.0, 1e12});
        CHECK(wide == doctest::Approx(bare).epsilon(1e-9));
        const double unit = b.w_terminal(k) / blk.l + blk.b / (blk.l * blk.l);
        CHECK(skorohod_unit(b, l, c, k) == doctest::Approx(unit).epsilon(1e-14));
    }
}

TEST_CASE("localization functions") {
    const double k = 100.0, d = 5.0;
    CHECK(ramp(94.0, k, d) == 0.0);
    CHECK(ramp(100.0, k, d) == 0.5);
    CHECK(ramp(106.0, k, d) == 1.0);
    // G' = H and F = (y - K)^+ - G vanishes outside the band
    for (double y = 90.0; y <= 110.0; y += 0.37) {
        const double h = 1e-6;
        const double deriv = (ramp_integral(y + h, k, d) - ramp_integral(y - h, k, d)) / (2.0 * h);
        CHECK(deriv == doctest::Approx(ramp(y, k, d)).epsilon(1e-6).scale(1e-6));
        CHECK(localization_residual(y, k, d) ==
              doctest::Approx(std::max(y - k, 0.0) - ramp_integral(y, k, d)).scale(1e-12));
    }
    CHECK(localization_residual(94.0, k, d) == 0.0);
    CHECK(localization_residual(105.5, k, d) == 0.0);
    // continuity at the band edges
    CHECK(ramp_integral(105.0, k, d) == doctest::Approx(5.0));
    // narrow band: H is the indicator, F is negligible
    CHECK(ramp(100.001, k, 1e-6) == 1.0);
    CHECK(std::abs(localization_residual(100.0, k, 1e-6)) <= 1e-6);
}

TEST_CASE("adaptive parameters") {
    const std::vector<double> offset = {1.0, -2.0, 0.5, 3.0, -1.5, 0.2};
    const std::vector<double> weight = {0.3, 0.1, -0.4, 0.2, -0.6, 0.5};
    const double d = adaptive_call_delta(offset, weight, 100.0, 1.0);
    CHECK(d > 0.0);
    // scaling the weights leaves the variance ratio unchanged
    std::vector<double> scaled = weight;
    for (double& w : scaled) w *= 7.0;
    CHECK(adaptive_call_delta(offset, scaled, 100.0, 1.0) == doctest::Approx(d).epsilon(1e-13));
    // the reference divides the variance ratio
    CHECK(adaptive_call_delta(offset, weight, 50.0, 1.0) == doctest::Approx(2.0 * d).epsilon(1e-13));
    // a constant weight has no variance: fallback
    CHECK(adaptive_call_delta(offset, std::vector<double>(6, 0.2), 100.0, 3.5) == 3.5);

    const std::vector<double> unit = {0.5, -1.0, 0.25, 1.5};
    const double h = adaptive_digital_h(unit, 1.0);
    std::vector<double> unit3 = unit;
    for (double& u : unit3) u *= 3.0;
    CHECK(adaptive_digital_h(unit3, 1.0) == doctest::Approx(h / 3.0).epsilon(1e-14));
    // invariant to a constant shift of the unit weights
    std::vector<double> shifted = unit;
    for (double& u : shifted) u += 10.0;
    CHECK(adaptive_digital_h(shifted, 1.0) == doctest::Approx(h).epsilon(1e-12));
    CHECK(adaptive_digital_h(std::vector<double>(4, 1.0), 2.0) == 2.0);
}

TEST_CASE("bare weights have zero mean") {
    const MarketConfig c = MarketConfig::table1(3, 4);
    const VolLoadings l = VolLoadings::from(c);
    // per-replication means of each family and component
    std::vector<std::vector<double>> fixed(3), floating(3), unit(3), digital(3), exotic(3);
    for (std::uint64_t r = 0; r < 16; ++r) {
        const PointSet pts = normal_points(c.dimension(), 1024, r);
        std::vector<double> sf(3, 0.0), sl(3, 0.0), su(3, 0.0), sd(3, 0.0), se(3, 0.0);
        for (std::size_t p = 0; p < pts.size(); ++p) {
            const PathBundle b = simulate_path(c, l, nullptr, pts[p]);
            for (std::size_t k = 0; k < 3; ++k) {
                sf[k] += weight_asian_fixed(b, l, c, k);
                sl[k] += weight_asian_floating(b, l, c, k);
                su[k] += skorohod_unit(b, l, c, k);
                const FixedStrikeBlocks blk = fixed_strike_blocks(b, l, c, k);
                sd[k] += blk.g * skorohod_unit(b, l, c, k) - blk.a / blk.l;
                se[k] += weight_exotic(b, l, c, k);
            }
        }
        for (std::size_t k = 0; k < 3; ++k) {
            fixed[k].push_back(sf[k] / 1024.0);
            floating[k].push_back(sl[k] / 1024.0);
            unit[k].push_back(su[k] / 1024.0);
            digital[k].push_back(sd[k] / 1024.0);
            exotic[k].push_back(se[k] / 1024.0);
        }
    }
    for (std::size_t k = 0; k < 3; ++k) {
        for (const auto* family : {&fixed, &floating, &unit, &digital, &exotic}) {
            const Stats s = stats((*family)[k]);
            CHECK(std::abs(s.mean) <= 3.0 * s.stderr_);
        }
    }
}

TEST_CASE("a vanishing loading column makes the path degenerate") {
    const MarketConfig c = MarketConfig::table1(3, 4);
    VolLoadings l = VolLoadings::from(c);
    l.sigma.col(2).setZero();
    const PathBundle b = path(c, l, kDraws);
    CHECK_THROWS_AS(weight_asian_fixed(b, l, c, 2), DegeneratePath);
    CHECK_THROWS_AS(skorohod_unit(b, l, c, 2), DegeneratePath);
    CHECK_THROWS_AS(weight_exotic(b, l, c, 2), DegeneratePath);
    CHECK_NOTHROW(weight_asian_fixed(b, l, c, 0));
}

TEST_CASE("localization parameters must be positive") {
    CHECK_NOTHROW(LocalizationParams{}.validate());
    CHECK_THROWS_AS((LocalizationParams{0.0, 1.0}.validate()), ConfigError);
    CHECK_THROWS_AS((LocalizationParams{1.0, -1.0}.validate()), ConfigError);
}
