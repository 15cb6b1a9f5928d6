#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

namespace fswarm::gf {

/// Element of GF(2^8). The byte is a polynomial over GF(2), reduced modulo kModulus.
using Element = std::uint8_t;

/// x^8 + x^4 + x^3 + x + 1
inline constexpr unsigned kModulus = 0x11B;

inline constexpr Element add(Element a, Element b) noexcept {
  return static_cast<Element>(a ^ b);
}

Element mul(Element a, Element b) noexcept;

/// Throws std::domain_error for a == 0.
Element inv(Element a);

Element div(Element a, Element b);

/// dst[i] ^= scalar * src[i]. Sizes must match.
void mul_add(std::span<Element> dst, std::span<const Element> src, Element scalar) noexcept;

/// dst[i] = scalar * dst[i]
void scale(std::span<Element> dst, Element scalar) noexcept;

}  // namespace fswarm::gf

namespace fswarm::gf2 {

// Bit-field GF(2). Only the reference rank computations in the tests use this.

inline constexpr std::uint8_t add(std::uint8_t a, std::uint8_t b) noexcept { return (a ^ b) & 1u; }
inline constexpr std::uint8_t mul(std::uint8_t a, std::uint8_t b) noexcept { return (a & b) & 1u; }

/// Rank over GF(2) of rows packed as bitmasks (bit j = column j).
int rank(std::vector<std::uint64_t> rows);

}  // namespace fswarm::gf2
