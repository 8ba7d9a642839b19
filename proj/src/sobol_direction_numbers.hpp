#pragma once

#include <array>
#include <cstddef>
#include <cstdint>

namespace qmcg::detail {

inline constexpr std::size_t kSobolTableDimension = 1024;
inline constexpr std::size_t kSobolMaxDegree = 13;

// One row of the Joe-Kuo table: degree s, interior coefficients a, initial m_1..m_s.
struct SobolPolynomial {
    std::uint32_t degree;
    std::uint32_t coefficients;
    std::array<std::uint32_t, kSobolMaxDegree> initial;
};

// Entry j describes dimension j + 2; dimension 1 is the van der Corput sequence.
extern const std::array<SobolPolynomial, kSobolTableDimension - 1> kSobolPolynomials;

} // namespace qmcg::detail
