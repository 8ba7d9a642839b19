#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace qmcg {

enum class QmcMode { scrambled_sobol, pseudo_random };

struct QmcConfig {
    std::size_t nominal_dimension = 1;
    std::size_t points_per_replication = 2048;
    std::size_t replications = 32;
    std::size_t lss_block_dimension = 50;
    std::uint64_t seed = 20100401;
    QmcMode mode = QmcMode::scrambled_sobol;

    // Throws ConfigError when an invariant is violated.
    void validate() const;
};

// Row-major block of points; row p is one point.
class PointSet {
public:
    PointSet() = default;
    PointSet(std::size_t count, std::size_t dimension)
        : count_(count), dimension_(dimension), values_(count * dimension) {}

    std::size_t size() const noexcept { return count_; }
    std::size_t dimension() const noexcept { return dimension_; }

    std::span<double> operator[](std::size_t p) noexcept {
        return {values_.data() + p * dimension_, dimension_};
    }
    std::span<const double> operator[](std::size_t p) const noexcept {
        return {values_.data() + p * dimension_, dimension_};
    }

    std::span<double> values() noexcept { return values_; }
    std::span<const double> values() const noexcept { return values_; }

    friend bool operator==(const PointSet&, const PointSet&) = default;

private:
    std::size_t count_ = 0;
    std::size_t dimension_ = 0;
    std::vector<double> values_;
};

inline constexpr std::size_t kSobolMaxDimension = 1024;
inline constexpr int kSobolBits = 32;

// Smallest and largest coordinate handed to the inverse normal CDF.
inline constexpr double kUnitLow = 0x1p-53;
inline constexpr double kUnitHigh = 1.0 - 0x1p-53;

// Point `index` of the unscrambled Sobol' sequence in Gray-code order with
// the origin skipped: index 0 is the first non-origin point (0.5, ..., 0.5).
// Indices 2^k - 1 .. 2^(k+1) - 2 form a digitally shifted (t, k, s)-net.
std::vector<double> sobol_point(std::uint64_t index, std::size_t dimension);

// Affine (Matousek) scrambling of the 32 leading binary digits of one
// coordinate: y = L x + e with L lower triangular, unit diagonal.
struct DigitScramble {
    // rows[i] holds row i of L as a mask over digit positions, MSB = digit 1.
    std::array<std::uint32_t, kSobolBits> rows{};
    std::uint32_t shift = 0;

    std::uint32_t linear(std::uint32_t digits) const noexcept;
    std::uint32_t apply(std::uint32_t digits) const noexcept { return linear(digits) ^ shift; }

    static DigitScramble identity() noexcept;
};

std::vector<DigitScramble> random_scrambles(std::size_t dimension, std::uint64_t seed);

// Applies per-dimension scrambles to the binary expansion of each coordinate.
PointSet scramble(const PointSet& points, std::span<const DigitScramble> scrambles);
PointSet scramble(const PointSet& points, std::uint64_t seed);

// Sobol' generator in Gray-code order with the origin skipped. When scrambled,
// the linear part is folded into the direction numbers, which is equivalent
// to scrambling every generated point.
class SobolGenerator {
public:
    explicit SobolGenerator(std::size_t dimension);
    SobolGenerator(std::size_t dimension, std::span<const DigitScramble> scrambles);
    SobolGenerator(std::size_t dimension, std::uint64_t scramble_seed);

    std::size_t dimension() const noexcept { return dimension_; }

    std::uint32_t digits(std::uint64_t index, std::size_t coordinate) const noexcept;
    void point(std::uint64_t index, std::span<double> out) const;
    PointSet points(std::size_t count) const;

    // Direction numbers v_1..v_32 of one coordinate (0-based), before scrambling.
    static std::array<std::uint32_t, kSobolBits> direction_numbers(std::size_t coordinate);

private:
    std::size_t dimension_;
    bool clamp_;
    std::vector<std::uint32_t> directions_;  // dimension_ x kSobolBits
    std::vector<std::uint32_t> shifts_;
};

std::size_t lss_block_count(std::size_t nominal_dimension, std::size_t block_dimension);

// Latin supercube assembly: concatenates the blocks after independently
// permuting the run order of every block; the last block is truncated.
PointSet lss_assemble(std::span<const PointSet> blocks, std::size_t nominal_dimension,
                      std::uint64_t seed);

// Unit-cube points of one randomized replication. `stream` separates
// replications (and the pilot) drawn from the same master seed.
PointSet replication_points(const QmcConfig& config, std::uint64_t stream);

double normal_cdf(double x);
double inverse_normal_cdf(double u);
std::vector<double> to_normal(std::span<const double> point);
void to_normal_in_place(std::span<double> values);

// Counter-based seed split (splitmix64 mixing).
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream, std::uint64_t substream = 0);

// Uniform random permutation of 0..n-1 (Fisher-Yates on mt19937_64).
std::vector<std::size_t> random_permutation(std::size_t n, std::uint64_t seed);

} // namespace qmcg
