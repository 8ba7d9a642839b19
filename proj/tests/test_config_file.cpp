#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "qmcg/config_file.hpp"
#include "qmcg/errors.hpp"

#include <cmath>
#include <limits>
#include <sstream>

using namespace qmcg;

namespace {

std::string config_error(RunSettings s, const std::string& text) {
    try {
        apply_config_text(s, text, "run.ini");
        build_run(s);
    } catch (const ConfigError& e) {
        return e.what();
    } catch (const FactorizationError& e) {
        return e.what();
    }
    return {};
}

std::vector<std::vector<std::string>> split_csv(const std::string& text) {
    std::vector<std::vector<std::string>> rows;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        std::vector<std::string> cells;
        std::istringstream ls(line);
        std::string cell;
        while (std::getline(ls, cell, ',')) cells.push_back(cell);
        rows.push_back(cells);
    }
    return rows;
}

} // namespace

TEST_CASE("presets encode the reference inputs") {
    const PayoffKind expected[] = {PayoffKind::asian_fixed, PayoffKind::asian_fixed,
                                   PayoffKind::asian_floating, PayoffKind::digital_fixed,
                                   PayoffKind::exotic_max};
    for (int t = 1; t <= 5; ++t) {
        const RunSettings s = preset("table" + std::to_string(t));
        CHECK(s.payoff.kind == expected[t - 1]);
        const RunConfig run = build_run(s);
        const MarketConfig& m = run.market;
        CHECK(m.assets() == 10);
        CHECK(m.dates() == 64);
        CHECK(m.rate == 0.05);
        CHECK(m.maturity == 1.0);
        CHECK(run.payoff.strike == 100.0);
        for (std::size_t i = 0; i < 10; ++i) {
            CHECK(m.spots[i] == 100.0);
            CHECK(m.vols[i] == doctest::Approx(0.1 + 0.4 * static_cast<double>(i) / 9.0));
            for (std::size_t k = 0; k < 10; ++k) CHECK(m.correlation(i, k) == (i == k ? 1.0 : 0.5));
        }
        CHECK(run.qmc.points_per_replication == 2048);
        CHECK(run.qmc.replications == 32);
        CHECK(run.qmc.lss_block_dimension == 50);
        CHECK(run.qmc.nominal_dimension == 640);
        CHECK(run.options.use_lt);
    }
    CHECK_THROWS_AS(preset("table6"), ConfigError);
}

TEST_CASE("config text overrides defaults") {
    RunSettings s;
    apply_config_text(s, R"(
# a small desk run
[market]
assets = 2
steps = 3
spots = 95, 105
vols = 0.2, 0.3     # per asset
correlation = 1, 0.25, 0.25, 1
rate = 0.01

[qmc]
points = 512
reps = 8
seed = 42
lt = off

[payoff]
kind = digital
strike = 101.5

[run]
method = loc
loc_delta = 0.05
)", "desk.ini");
    const RunConfig run = build_run(s);
    CHECK(run.market.spots == std::vector<double>{95.0, 105.0});
    CHECK(run.market.vols == std::vector<double>{0.2, 0.3});
    CHECK(run.market.correlation(0, 1) == 0.25);
    CHECK(run.market.rate == 0.01);
    CHECK(run.qmc.points_per_replication == 512);
    CHECK(run.qmc.replications == 8);
    CHECK(run.qmc.seed == 42);
    CHECK_FALSE(run.options.use_lt);
    CHECK(run.payoff.kind == PayoffKind::digital_fixed);
    CHECK(run.payoff.strike == 101.5);
    CHECK(run.options.method == Method::malliavin_localized);
    CHECK(run.options.loc_delta_fraction == 0.05);
    // the LSS block never exceeds the dimension
    CHECK(run.qmc.lss_block_dimension == 6);
}

TEST_CASE("single spot is broadcast") {
    RunSettings s;
    apply_config_text(s, "[market]\nassets = 3\nsteps = 2\nspots = 80\n", "x");
    CHECK(build_run(s).market.spots == std::vector<double>(3, 80.0));
}

TEST_CASE("errors carry line numbers and field names") {
    const RunSettings s;
    std::string e = config_error(s, "[market]\nassets = 3\ncorrelation = 1, 0.5, 0.5, 0.5, 1, 0.5, 0.5, 0.5\n");
    CHECK(e.find("market.correlation") != std::string::npos);
    CHECK(e.find("run.ini:3") != std::string::npos);
    CHECK(e.find("expected 9") != std::string::npos);

    e = config_error(s, "[market]\nrate = five\n");
    CHECK(e.find("run.ini:2") != std::string::npos);
    CHECK(e.find("market.rate") != std::string::npos);

    e = config_error(s, "[qmc]\n\npointz = 3\n");
    CHECK(e.find("run.ini:3") != std::string::npos);
    CHECK(e.find("qmc.pointz") != std::string::npos);

    e = config_error(s, "[bogus]\n");
    CHECK(e.find("unknown section") != std::string::npos);
    e = config_error(s, "assets = 3\n");
    CHECK(e.find("outside of a section") != std::string::npos);
    e = config_error(s, "[market]\nassets\n");
    CHECK(e.find("key = value") != std::string::npos);
    e = config_error(s, "[payoff]\nstrike = -4\n");
    CHECK(e.find("payoff.strike") != std::string::npos);
    e = config_error(s, "[market]\nassets = 2\ncorrelation_uniform = 0.5\ncorrelation = 1, 0, 0, 1\n");
    CHECK(e.find("exclusive") != std::string::npos);
    e = config_error(s, "[market]\nassets = 3\ncorrelation = 1, 0.9, 0.9, 0.9, 1, -0.9, 0.9, -0.9, 1\n");
    CHECK(e.find("leading minor 3") != std::string::npos);
    e = config_error(s, "[run]\nfd_bump = 2\n");
    CHECK(e.find("run.fd_bump") != std::string::npos);
}

TEST_CASE("sweep parsing") {
    const auto k = parse_sweep("80:120:5");
    CHECK(k.size() == 9);
    CHECK(k.front() == 80.0);
    CHECK(k.back() == 120.0);
    CHECK(parse_sweep("90:90:1").size() == 1);
    CHECK(parse_sweep("0.1:0.3:0.1").size() == 3);
    CHECK_THROWS_AS(parse_sweep("80:120"), ConfigError);
    CHECK_THROWS_AS(parse_sweep("80:120:0"), ConfigError);
    CHECK_THROWS_AS(parse_sweep("120:80:5"), ConfigError);
    CHECK_THROWS_AS(parse_sweep("-5:80:5"), ConfigError);
}

TEST_CASE("CSV round-trips every double") {
    EstimateReport r;
    r.method = Method::malliavin_localized;
    r.delta = {0.1, 1.0 / 3.0, -2.5e-17, std::numeric_limits<double>::denorm_min(), 6.02214076e23};
    r.stderr_ = {1e-5, std::nextafter(1.0, 2.0), 0.0, 7.0 / 9.0, 123456.789};
    r.rejected_paths = 3;
    std::ostringstream out;
    write_csv(out, r);
    const auto rows = split_csv(out.str());
    REQUIRE(rows.size() == 6);
    CHECK(rows[0] == std::vector<std::string>{"component", "delta", "stderr", "method", "rejected_paths"});
    for (std::size_t k = 0; k < 5; ++k) {
        const auto& row = rows[k + 1];
        CHECK(std::stoul(row[0]) == k + 1);
        CHECK(std::strtod(row[1].c_str(), nullptr) == r.delta[k]);
        CHECK(std::strtod(row[2].c_str(), nullptr) == r.stderr_[k]);
        CHECK(row[3] == "malliavin-loc");
        CHECK(row[4] == "3");
    }
}

TEST_CASE("sweep CSV has one row per strike and component") {
    std::vector<SweepResult> results;
    for (double k : parse_sweep("80:120:5")) {
        EstimateReport r;
        r.delta.assign(4, k / 1000.0);
        r.stderr_.assign(4, 1e-4);
        r.replication_means = Eigen::MatrixXd::Constant(2, 4, k);
        results.push_back({k, r});
    }
    std::ostringstream out;
    write_sweep_csv(out, results);
    const auto rows = split_csv(out.str());
    CHECK(rows.size() == 1 + 9 * 4);
    CHECK(rows[0].front() == "strike");
    CHECK(rows[5][0] == "85");

    std::ostringstream dump;
    write_replications_csv(dump, results);
    CHECK(split_csv(dump.str()).size() == 1 + 9 * 2 * 4);
}

TEST_CASE("format_double keeps 17 significant digits") {
    CHECK(format_double(0.1) == "0.10000000000000001");
    CHECK(format_double(100.0) == "100");
    CHECK(std::strtod(format_double(M_PI).c_str(), nullptr) == M_PI);
}
