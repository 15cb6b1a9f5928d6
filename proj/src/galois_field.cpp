#include "fswarm/galois_field.hpp"

#include <array>
#include <bit>

namespace fswarm::gf {
namespace {

struct Tables {
  std::array<Element, 512> exp{};
  std::array<int, 256> log{};

  constexpr Tables() {
    // 0x03 generates the multiplicative group for 0x11B (0x02 does not).
    unsigned x = 1;
    for (int i = 0; i < 255; ++i) {
      exp[i] = static_cast<Element>(x);
      log[x] = i;
      unsigned x2 = x << 1;
      if (x2 & 0x100) x2 ^= kModulus;
      x = x2 ^ x;
    }
    for (int i = 255; i < 512; ++i) exp[i] = exp[i - 255];
    log[0] = -1;
  }
};

constexpr Tables kTables{};

}  // namespace

Element mul(Element a, Element b) noexcept {
  if (a == 0 || b == 0) return 0;
  return kTables.exp[kTables.log[a] + kTables.log[b]];
}

Element inv(Element a) {
  if (a == 0) throw std::domain_error("gf::inv: zero has no inverse");
  return kTables.exp[255 - kTables.log[a]];
}

Element div(Element a, Element b) {
  if (b == 0) throw std::domain_error("gf::div: division by zero");
  if (a == 0) return 0;
  return kTables.exp[kTables.log[a] + 255 - kTables.log[b]];
}

void mul_add(std::span<Element> dst, std::span<const Element> src, Element scalar) noexcept {
  if (scalar == 0) return;
  if (scalar == 1) {
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] ^= src[i];
    return;
  }
  const int ls = kTables.log[scalar];
  for (std::size_t i = 0; i < dst.size(); ++i) {
    if (src[i] != 0) dst[i] ^= kTables.exp[kTables.log[src[i]] + ls];
  }
}

void scale(std::span<Element> dst, Element scalar) noexcept {
  if (scalar == 1) return;
  for (auto& v : dst) v = mul(v, scalar);
}

}  // namespace fswarm::gf

namespace fswarm::gf2 {

int rank(std::vector<std::uint64_t> rows) {
  int r = 0;
  for (int col = 0; col < 64; ++col) {
    const std::uint64_t bit = std::uint64_t{1} << col;
    auto it = rows.begin() + r;
    for (; it != rows.end(); ++it)
      if (*it & bit) break;
    if (it == rows.end()) continue;
    std::swap(*it, rows[r]);
    for (std::size_t i = 0; i < rows.size(); ++i)
      if (static_cast<int>(i) != r && (rows[i] & bit)) rows[i] ^= rows[r];
    ++r;
  }
  return r;
}

}  // namespace fswarm::gf2
