#include "qmcg/qmc_engine.hpp"

#include "qmcg/errors.hpp"
#include "sobol_direction_numbers.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>

namespace qmcg {

namespace {

constexpr double kDigitScale = 0x1p-32;

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

std::uint64_t uniform_below(std::mt19937_64& rng, std::uint64_t n) {
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                std::numeric_limits<std::uint64_t>::max() % n;
    std::uint64_t x = rng();
    while (x >= limit) x = rng();
    return x % n;
}

double clamp_unit(double u) { return std::clamp(u, kUnitLow, kUnitHigh); }

void check_sobol_dimension(std::size_t dimension) {
    if (dimension == 0 || dimension > kSobolMaxDimension) {
        throw UnsupportedDimension("Sobol' dimension " + std::to_string(dimension) +
                                   " outside supported range 1.." +
                                   std::to_string(kSobolMaxDimension));
    }
}

} // namespace

void QmcConfig::validate() const {
    if (nominal_dimension == 0) throw ConfigError("qmc.nominal_dimension must be positive");
    if (points_per_replication == 0) throw ConfigError("qmc.points must be at least 1");
    if (replications == 0) throw ConfigError("qmc.replications must be at least 1");
    if (lss_block_dimension == 0) throw ConfigError("qmc.lss_block must be positive");
    if (lss_block_dimension > nominal_dimension) {
        throw ConfigError("qmc.lss_block (" + std::to_string(lss_block_dimension) +
                          ") exceeds the nominal dimension (" +
                          std::to_string(nominal_dimension) + ")");
    }
    if (mode == QmcMode::scrambled_sobol && lss_block_dimension > kSobolMaxDimension) {
        throw ConfigError("qmc.lss_block exceeds the Sobol' table dimension");
    }
}

std::array<std::uint32_t, kSobolBits> SobolGenerator::direction_numbers(std::size_t coordinate) {
    check_sobol_dimension(coordinate + 1);
    std::array<std::uint32_t, kSobolBits> v{};
    if (coordinate == 0) {
        for (int i = 0; i < kSobolBits; ++i) v[i] = 1U << (kSobolBits - 1 - i);
        return v;
    }

    const auto& row = detail::kSobolPolynomials[coordinate - 1];
    const int s = static_cast<int>(row.degree);
    for (int i = 0; i < std::min(s, kSobolBits); ++i) {
        v[i] = row.initial[i] << (kSobolBits - 1 - i);
    }
    for (int i = s; i < kSobolBits; ++i) {
        v[i] = v[i - s] ^ (v[i - s] >> s);
        for (int k = 1; k < s; ++k) {
            if ((row.coefficients >> (s - 1 - k)) & 1U) v[i] ^= v[i - k];
        }
    }
    return v;
}

std::uint32_t DigitScramble::linear(std::uint32_t digits) const noexcept {
    std::uint32_t out = 0;
    for (int i = 0; i < kSobolBits; ++i) {
        const std::uint32_t parity = std::popcount(rows[i] & digits) & 1U;
        out |= parity << (kSobolBits - 1 - i);
    }
    return out;
}

DigitScramble DigitScramble::identity() noexcept {
    DigitScramble s;
    for (int i = 0; i < kSobolBits; ++i) s.rows[i] = 1U << (kSobolBits - 1 - i);
    return s;
}

std::vector<DigitScramble> random_scrambles(std::size_t dimension, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::vector<DigitScramble> out(dimension);
    for (auto& s : out) {
        for (int i = 0; i < kSobolBits; ++i) {
            const std::uint32_t diagonal = 1U << (kSobolBits - 1 - i);
            // digits 1..i (positions above the diagonal bit) are free
            const std::uint32_t above =
                i == 0 ? 0U : static_cast<std::uint32_t>(~((std::uint64_t{diagonal} << 1) - 1));
            s.rows[i] = diagonal | (static_cast<std::uint32_t>(rng()) & above);
        }
        s.shift = static_cast<std::uint32_t>(rng());
    }
    return out;
}

PointSet scramble(const PointSet& points, std::span<const DigitScramble> scrambles) {
    if (scrambles.size() != points.dimension()) {
        throw ConfigError("scramble: one scramble per dimension required");
    }
    PointSet out(points.size(), points.dimension());
    for (std::size_t p = 0; p < points.size(); ++p) {
        const auto in = points[p];
        auto dst = out[p];
        for (std::size_t j = 0; j < in.size(); ++j) {
            const double scaled = std::floor(in[j] * 0x1p32);
            const auto digits = static_cast<std::uint32_t>(std::clamp(scaled, 0.0, 0x1p32 - 1.0));
            dst[j] = clamp_unit(scrambles[j].apply(digits) * kDigitScale);
        }
    }
    return out;
}

PointSet scramble(const PointSet& points, std::uint64_t seed) {
    return scramble(points, random_scrambles(points.dimension(), seed));
}

SobolGenerator::SobolGenerator(std::size_t dimension)
    : dimension_(dimension), clamp_(false), directions_(dimension * kSobolBits),
      shifts_(dimension, 0U) {
    check_sobol_dimension(dimension);
    for (std::size_t j = 0; j < dimension; ++j) {
        const auto v = direction_numbers(j);
        std::copy(v.begin(), v.end(), directions_.begin() + static_cast<std::ptrdiff_t>(j * kSobolBits));
    }
}

SobolGenerator::SobolGenerator(std::size_t dimension, std::span<const DigitScramble> scrambles)
    : SobolGenerator(dimension) {
    if (scrambles.size() != dimension) {
        throw ConfigError("SobolGenerator: one scramble per dimension required");
    }
    clamp_ = true;
    for (std::size_t j = 0; j < dimension; ++j) {
        for (int b = 0; b < kSobolBits; ++b) {
            auto& v = directions_[j * kSobolBits + b];
            v = scrambles[j].linear(v);
        }
        shifts_[j] = scrambles[j].shift;
    }
}

SobolGenerator::SobolGenerator(std::size_t dimension, std::uint64_t scramble_seed)
    : SobolGenerator(dimension, random_scrambles(dimension, scramble_seed)) {}

std::uint32_t SobolGenerator::digits(std::uint64_t index, std::size_t coordinate) const noexcept {
    std::uint64_t raw = index + 1;  // origin skipped
    raw ^= raw >> 1;                // Gray-code order
    const std::uint32_t* v = directions_.data() + coordinate * kSobolBits;
    std::uint32_t x = shifts_[coordinate];
    for (int b = 0; raw != 0 && b < kSobolBits; ++b, raw >>= 1) {
        if (raw & 1U) x ^= v[b];
    }
    return x;
}

void SobolGenerator::point(std::uint64_t index, std::span<double> out) const {
    if (out.size() != dimension_) throw ConfigError("SobolGenerator::point: size mismatch");
    if (index + 1 >= (std::uint64_t{1} << kSobolBits)) {
        throw std::out_of_range("Sobol' index exceeds 2^32 - 1 points");
    }
    for (std::size_t j = 0; j < dimension_; ++j) {
        const double u = digits(index, j) * kDigitScale;
        out[j] = clamp_ ? clamp_unit(u) : u;
    }
}

PointSet SobolGenerator::points(std::size_t count) const {
    PointSet out(count, dimension_);
    for (std::size_t p = 0; p < count; ++p) point(p, out[p]);
    return out;
}

std::vector<double> sobol_point(std::uint64_t index, std::size_t dimension) {
    std::vector<double> out(dimension);
    SobolGenerator(dimension).point(index, out);
    return out;
}

std::size_t lss_block_count(std::size_t nominal_dimension, std::size_t block_dimension) {
    return (nominal_dimension + block_dimension - 1) / block_dimension;
}

PointSet lss_assemble(std::span<const PointSet> blocks, std::size_t nominal_dimension,
                      std::uint64_t seed) {
    if (blocks.empty()) throw ConfigError("lss_assemble: no blocks");
    const std::size_t n = blocks.front().size();
    const std::size_t width = blocks.front().dimension();
    if (blocks.size() != lss_block_count(nominal_dimension, width)) {
        throw ConfigError("lss_assemble: expected " +
                          std::to_string(lss_block_count(nominal_dimension, width)) +
                          " blocks, got " + std::to_string(blocks.size()));
    }
    PointSet out(n, nominal_dimension);
    for (std::size_t b = 0; b < blocks.size(); ++b) {
        const auto& block = blocks[b];
        if (block.size() != n || block.dimension() != width) {
            throw ConfigError("lss_assemble: blocks must share point count and dimension");
        }
        const std::size_t offset = b * width;
        const std::size_t used = std::min(width, nominal_dimension - offset);
        const auto order = random_permutation(n, derive_seed(seed, 0x4C5353, b));
        for (std::size_t p = 0; p < n; ++p) {
            const auto src = block[order[p]];
            std::copy_n(src.begin(), used, out[p].begin() + static_cast<std::ptrdiff_t>(offset));
        }
    }
    return out;
}

PointSet replication_points(const QmcConfig& config, std::uint64_t stream) {
    config.validate();
    const std::size_t n = config.points_per_replication;
    const std::size_t d = config.nominal_dimension;

    if (config.mode == QmcMode::pseudo_random) {
        PointSet out(n, d);
        std::mt19937_64 rng(derive_seed(config.seed, stream, 0));
        for (double& u : out.values()) u = (static_cast<double>(rng() >> 11) + 0.5) * 0x1p-53;
        return out;
    }

    const std::size_t width = config.lss_block_dimension;
    const std::size_t count = lss_block_count(d, width);
    std::vector<PointSet> blocks;
    blocks.reserve(count);
    for (std::size_t b = 0; b < count; ++b) {
        blocks.push_back(SobolGenerator(width, derive_seed(config.seed, stream, b + 1)).points(n));
    }
    return lss_assemble(blocks, d, derive_seed(config.seed, stream, 0));
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

// Acklam's rational approximation followed by one Halley step against erfc.
double inverse_normal_cdf(double u) {
    if (!(u > 0.0 && u < 1.0)) {
        throw std::domain_error("inverse_normal_cdf: argument " + std::to_string(u) +
                                " outside (0,1)");
    }
    static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                   -2.759285104469687e+02, 1.383577518672690e+02,
                                   -3.066479806614716e+01, 2.506628277459239e+00};
    static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                   -1.556989798598866e+02, 6.680131188771972e+01,
                                   -1.328068155288572e+01};
    static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                   -2.400758277161838e+00, -2.549732539343734e+00,
                                   4.374664141464968e+00,  2.938163982698783e+00};
    static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                                   2.445134137142996e+00, 3.754408661907416e+00};
    constexpr double low = 0.02425;

    double x;
    if (u < low) {
        const double q = std::sqrt(-2.0 * std::log(u));
        x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    } else if (u <= 1.0 - low) {
        const double q = u - 0.5;
        const double r = q * q;
        x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
            (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
    } else {
        const double q = std::sqrt(-2.0 * std::log1p(-u));
        x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }

    // Residual Phi(x) - u, evaluated on the tail that keeps it well conditioned.
    const double e = x <= 0.0 ? 0.5 * std::erfc(-x / std::numbers::sqrt2) - u
                              : (1.0 - u) - 0.5 * std::erfc(x / std::numbers::sqrt2);
    const double step = e * std::sqrt(2.0 * std::numbers::pi) * std::exp(0.5 * x * x);
    return x - step / (1.0 + 0.5 * x * step);
}

std::vector<double> to_normal(std::span<const double> point) {
    std::vector<double> out(point.begin(), point.end());
    to_normal_in_place(out);
    return out;
}

void to_normal_in_place(std::span<double> values) {
    for (double& v : values) v = inverse_normal_cdf(v);
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream, std::uint64_t substream) {
    return splitmix64(master ^ splitmix64(stream ^ splitmix64(substream)));
}

std::vector<std::size_t> random_permutation(std::size_t n, std::uint64_t seed) {
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    std::mt19937_64 rng(seed);
    for (std::size_t i = n; i > 1; --i) {
        std::swap(order[i - 1], order[uniform_below(rng, i)]);
    }
    return order;
}

} // namespace qmcg
