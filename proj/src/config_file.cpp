#include "qmcg/config_file.hpp"

#include "qmcg/errors.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <ostream>
#include <sstream>

namespace qmcg {

namespace {

std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

double parse_double(std::string_view text, const std::string& field) {
    text = trim(text);
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc() || ptr != text.data() + text.size() || !std::isfinite(v)) {
        throw ConfigError(field + ": '" + std::string(text) + "' is not a number");
    }
    return v;
}

std::uint64_t parse_unsigned(std::string_view text, const std::string& field) {
    text = trim(text);
    std::uint64_t v = 0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc() || ptr != text.data() + text.size()) {
        throw ConfigError(field + ": '" + std::string(text) + "' is not a non-negative integer");
    }
    return v;
}

std::vector<double> parse_list(std::string_view text, const std::string& field) {
    std::vector<double> out;
    std::string token;
    auto flush = [&] {
        if (!token.empty()) out.push_back(parse_double(token, field));
        token.clear();
    };
    for (char c : text) {
        if (c == ',' || c == ' ' || c == '\t') {
            flush();
        } else {
            token.push_back(c);
        }
    }
    flush();
    if (out.empty()) throw ConfigError(field + ": empty list");
    return out;
}

bool parse_bool(std::string_view text, const std::string& field) {
    text = trim(text);
    if (text == "on" || text == "true" || text == "1" || text == "yes") return true;
    if (text == "off" || text == "false" || text == "0" || text == "no") return false;
    throw ConfigError(field + ": expected on or off, got '" + std::string(text) + "'");
}

void apply_key(RunSettings& s, std::string_view section, std::string_view key,
               std::string_view value) {
    const std::string field = std::string(section) + "." + std::string(key);
    auto unknown = [&] { throw ConfigError(field + ": unknown key"); };
    if (section == "market") {
        if (key == "assets") s.assets = parse_unsigned(value, field);
        else if (key == "steps" || key == "dates") s.steps = parse_unsigned(value, field);
        else if (key == "spots") s.spots = parse_list(value, field);
        else if (key == "vols") s.vols = parse_list(value, field);
        else if (key == "correlation") s.correlation = parse_list(value, field);
        else if (key == "correlation_uniform") s.correlation_uniform = parse_double(value, field);
        else if (key == "rate") s.rate = parse_double(value, field);
        else if (key == "maturity") s.maturity = parse_double(value, field);
        else if (key == "monitoring_times") s.monitoring_times = parse_list(value, field);
        else if (key == "weights") {
            if (trim(value) == "uniform") s.weights.reset();
            else s.weights = parse_list(value, field);
        } else unknown();
    } else if (section == "qmc") {
        if (key == "points") s.points = parse_unsigned(value, field);
        else if (key == "replications" || key == "reps") s.replications = parse_unsigned(value, field);
        else if (key == "lss_block") s.lss_block = parse_unsigned(value, field);
        else if (key == "seed") s.seed = parse_unsigned(value, field);
        else if (key == "lt") s.lt = parse_bool(value, field);
        else if (key == "mode") {
            const auto v = trim(value);
            if (v == "sobol" || v == "scrambled_sobol") s.mode = QmcMode::scrambled_sobol;
            else if (v == "pseudo" || v == "pseudo_random") s.mode = QmcMode::pseudo_random;
            else throw ConfigError(field + ": expected sobol or pseudo");
        } else unknown();
    } else if (section == "payoff") {
        if (key == "kind") s.payoff.kind = parse_payoff_kind(trim(value));
        else if (key == "strike") s.payoff.strike = parse_double(value, field);
        else unknown();
    } else if (section == "run") {
        if (key == "method") s.method = parse_method(trim(value));
        else if (key == "loc_delta") s.loc_delta = parse_double(value, field);
        else if (key == "fd_bump") s.fd_bump = parse_double(value, field);
        else if (key == "sweep") s.sweep = parse_sweep(trim(value));
        else if (key == "output") s.output = std::string(trim(value));
        else if (key == "threads") s.threads = parse_unsigned(value, field);
        else if (key == "debug_replications") s.debug_replications = parse_bool(value, field);
        else if (key == "pilot") {
            const auto v = trim(value);
            if (v == "independent") s.pilot = PilotMode::independent;
            else if (v == "reuse") s.pilot = PilotMode::reuse_first;
            else throw ConfigError(field + ": expected independent or reuse");
        } else unknown();
    } else {
        throw ConfigError("unknown section [" + std::string(section) + "]");
    }
}

template <class T>
void require_size(const RunSettings& s, const std::vector<T>& v, std::size_t expected,
                  const char* field) {
    if (v.size() != expected) {
        const auto at = s.origin.find(field);
        const std::string where = at == s.origin.end() ? "" : at->second + ": ";
        throw ConfigError(where + field + ": expected " + std::to_string(expected) +
                          " entries, got " + std::to_string(v.size()));
    }
}

} // namespace

RunSettings preset(std::string_view name) {
    RunSettings s;
    s.payoff.strike = 100.0;
    if (name == "table1" || name == "table2") {
        s.payoff.kind = PayoffKind::asian_fixed;
    } else if (name == "table3") {
        s.payoff.kind = PayoffKind::asian_floating;
    } else if (name == "table4") {
        s.payoff.kind = PayoffKind::digital_fixed;
    } else if (name == "table5") {
        s.payoff.kind = PayoffKind::exotic_max;
    } else {
        throw ConfigError("unknown preset '" + std::string(name) + "' (expected table1..table5)");
    }
    return s;
}

void apply_config_text(RunSettings& settings, std::string_view text, std::string_view source) {
    std::string section;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const auto end = std::min(text.find('\n', pos), text.size());
        std::string_view line = text.substr(pos, end - pos);
        pos = end + 1;
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) {
            if (end == text.size()) break;
            continue;
        }
        const std::string where = std::string(source) + ":" + std::to_string(line_no) + ": ";
        try {
            if (line.front() == '[') {
                if (line.back() != ']') throw ConfigError("unterminated section header");
                section = std::string(trim(line.substr(1, line.size() - 2)));
                if (section != "market" && section != "qmc" && section != "payoff" && section != "run") {
                    throw ConfigError("unknown section [" + section + "]");
                }
                continue;
            }
            const auto eq = line.find('=');
            if (eq == std::string_view::npos) throw ConfigError("expected key = value");
            if (section.empty()) throw ConfigError("key outside of a section");
            const std::string_view key = trim(line.substr(0, eq));
            apply_key(settings, section, key, trim(line.substr(eq + 1)));
            settings.origin[section + "." + std::string(key)] =
                std::string(source) + ":" + std::to_string(line_no);
        } catch (const ConfigError& e) {
            throw ConfigError(where + e.what());
        }
        if (end == text.size()) break;
    }
}

void apply_config_file(RunSettings& settings, const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    std::stringstream buffer;
    buffer << in.rdbuf();
    apply_config_text(settings, buffer.str(), path);
}

std::vector<double> parse_sweep(std::string_view spec) {
    const auto a = spec.find(':');
    const auto b = a == std::string_view::npos ? a : spec.find(':', a + 1);
    if (b == std::string_view::npos) throw ConfigError("sweep: expected lo:hi:step");
    const double lo = parse_double(spec.substr(0, a), "sweep.lo");
    const double hi = parse_double(spec.substr(a + 1, b - a - 1), "sweep.hi");
    const double step = parse_double(spec.substr(b + 1), "sweep.step");
    if (!(step > 0.0)) throw ConfigError("sweep: step must be positive");
    if (!(lo > 0.0) || hi < lo) throw ConfigError("sweep: need 0 < lo <= hi");
    std::vector<double> out;
    const auto count = static_cast<std::size_t>(std::floor((hi - lo) / step + 1e-9)) + 1;
    for (std::size_t i = 0; i < count; ++i) out.push_back(lo + static_cast<double>(i) * step);
    return out;
}

RunConfig build_run(const RunSettings& s) {
    if (s.assets == 0) throw ConfigError("market.assets must be positive");
    if (s.steps == 0) throw ConfigError("market.steps must be positive");
    const std::size_t m = s.assets;
    const std::size_t n = s.steps;

    RunConfig run;
    MarketConfig& mk = run.market;
    mk = MarketConfig::table1(m, n);
    if (s.spots) {
        if (s.spots->size() == 1) mk.spots.assign(m, s.spots->front());
        else {
            require_size(s, *s.spots, m, "market.spots");
            mk.spots = *s.spots;
        }
    }
    if (s.vols) {
        require_size(s, *s.vols, m, "market.vols");
        mk.vols = *s.vols;
    }
    if (s.rate) mk.rate = *s.rate;
    if (s.maturity) {
        mk.maturity = *s.maturity;
        mk.monitoring_times = uniform_dates(mk.maturity, n);
    }
    if (s.correlation && s.correlation_uniform) {
        throw ConfigError("market.correlation and market.correlation_uniform are exclusive");
    }
    if (s.correlation_uniform) mk.correlation = constant_correlation(m, *s.correlation_uniform);
    if (s.correlation) {
        require_size(s, *s.correlation, m * m, "market.correlation");
        for (std::size_t i = 0; i < m; ++i) {
            for (std::size_t j = 0; j < m; ++j) {
                mk.correlation(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                    (*s.correlation)[i * m + j];
            }
        }
    }
    if (s.monitoring_times) {
        require_size(s, *s.monitoring_times, n, "market.monitoring_times");
        mk.monitoring_times = *s.monitoring_times;
    }
    if (s.weights) {
        require_size(s, *s.weights, m * n, "market.weights");
        for (std::size_t i = 0; i < m; ++i) {
            for (std::size_t j = 0; j < n; ++j) {
                mk.weights(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                    (*s.weights)[i * n + j];
            }
        }
    }
    mk.validate();
    cholesky(mk.correlation);  // FactorizationError names the failing minor

    run.payoff = s.payoff;
    if (run.payoff.kind != PayoffKind::asian_floating && !(run.payoff.strike > 0.0)) {
        throw ConfigError("payoff.strike must be positive");
    }
    check_payoff_conventions(run.payoff, mk);

    run.qmc.nominal_dimension = mk.dimension();
    run.qmc.points_per_replication = s.points;
    run.qmc.replications = s.replications;
    run.qmc.lss_block_dimension = std::min(s.lss_block, mk.dimension());
    run.qmc.seed = s.seed;
    run.qmc.mode = s.mode;
    run.qmc.validate();

    run.options.method = s.method;
    run.options.use_lt = s.lt;
    run.options.loc_delta_fraction = s.loc_delta;
    run.options.fd_bump_fraction = s.fd_bump;
    run.options.pilot = s.pilot;
    run.options.threads = s.threads;
    if (!(s.loc_delta > 0.0)) throw ConfigError("run.loc_delta must be positive");
    if (!(s.fd_bump > 0.0 && s.fd_bump < 1.0)) throw ConfigError("run.fd_bump must lie in (0, 1)");

    for (double k : s.sweep) {
        if (!(k > 0.0)) throw ConfigError("run.sweep entries must be positive");
    }
    run.strike_sweep = s.sweep;
    run.output_path = s.output;
    run.debug_replications = s.debug_replications;
    return run;
}

std::string format_double(double v) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
    return std::string(buf, ec == std::errc() ? ptr : buf);
}

void write_csv(std::ostream& out, const EstimateReport& report) {
    out << "component,delta,stderr,method,rejected_paths\n";
    for (std::size_t k = 0; k < report.delta.size(); ++k) {
        out << k + 1 << ',' << format_double(report.delta[k]) << ','
            << format_double(report.stderr_[k]) << ',' << to_string(report.method) << ','
            << report.rejected_paths << '\n';
    }
}

void write_sweep_csv(std::ostream& out, const std::vector<SweepResult>& results) {
    out << "strike,component,delta,stderr,method,rejected_paths\n";
    for (const auto& r : results) {
        for (std::size_t k = 0; k < r.report.delta.size(); ++k) {
            out << format_double(r.strike) << ',' << k + 1 << ',' << format_double(r.report.delta[k])
                << ',' << format_double(r.report.stderr_[k]) << ',' << to_string(r.report.method)
                << ',' << r.report.rejected_paths << '\n';
        }
    }
}

void write_replications_csv(std::ostream& out, const std::vector<SweepResult>& results) {
    out << "strike,replication,component,mean\n";
    for (const auto& r : results) {
        const auto& means = r.report.replication_means;
        for (Eigen::Index i = 0; i < means.rows(); ++i) {
            for (Eigen::Index k = 0; k < means.cols(); ++k) {
                out << format_double(r.strike) << ',' << i + 1 << ',' << k + 1 << ','
                    << format_double(means(i, k)) << '\n';
            }
        }
    }
}

} // namespace qmcg
