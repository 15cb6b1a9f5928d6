#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "fswarm/galois_field.hpp"
#include "fswarm/rng.hpp"

namespace fswarm::codec {

using Bytes = std::vector<std::uint8_t>;
using CoeffVector = std::vector<gf::Element>;

/// Thrown by Decoder::decode below full rank.
class NotReadyError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// A payload zero-padded to k * chunk_len and viewed as k source chunks.
class SourceFile {
 public:
  SourceFile(Bytes padded, std::size_t k, std::size_t chunk_len, std::size_t original_len);

  [[nodiscard]] std::size_t k() const noexcept { return k_; }
  [[nodiscard]] std::size_t chunk_len() const noexcept { return chunk_len_; }
  [[nodiscard]] std::size_t original_len() const noexcept { return original_len_; }
  [[nodiscard]] const Bytes& padded() const noexcept { return padded_; }
  [[nodiscard]] std::span<const std::uint8_t> chunk(std::size_t j) const;

 private:
  Bytes padded_;
  std::size_t k_;
  std::size_t chunk_len_;
  std::size_t original_len_;
};

struct CodedChunk {
  CoeffVector coeffs;
  Bytes data;
  std::optional<std::size_t> pool_index;
};

/// chunk_len = ceil(len / k). Throws std::invalid_argument on k == 0 or empty payload.
SourceFile split_file(std::span<const std::uint8_t> payload, std::size_t k);

/// i.i.d. uniform coefficients; the all-zero vector is redrawn.
CoeffVector draw_coefficients(std::size_t k, RngStream& rng);

/// data[b] = sum_j coeffs[j] * chunk_j[b]
CodedChunk encode(const SourceFile& source, const CoeffVector& coeffs);

/// Fixed set of K coefficient vectors the server samples from.
class CodePool {
 public:
  CodePool(std::size_t k, std::vector<CoeffVector> vectors);

  [[nodiscard]] std::size_t k() const noexcept { return k_; }
  [[nodiscard]] std::size_t size() const noexcept { return vectors_.size(); }
  [[nodiscard]] const CoeffVector& operator[](std::size_t i) const { return vectors_.at(i); }

 private:
  std::size_t k_;
  std::vector<CoeffVector> vectors_;
};

/// Throws std::invalid_argument when pool_size < k.
CodePool build_pool(std::size_t k, std::size_t pool_size, RngStream& rng);

/// Incremental Gaussian elimination over GF(2^8). Rows are kept in reduced
/// row-echelon form, coefficient and data parts reduced together.
class Decoder {
 public:
  Decoder(std::size_t k, std::size_t chunk_len);

  [[nodiscard]] std::size_t k() const noexcept { return k_; }
  [[nodiscard]] std::size_t chunk_len() const noexcept { return chunk_len_; }
  [[nodiscard]] std::size_t rank() const noexcept { return rows_.size(); }
  [[nodiscard]] bool complete() const noexcept { return rows_.size() == k_; }

  /// True iff coeffs lies outside the current row space.
  [[nodiscard]] bool is_innovative(std::span<const gf::Element> coeffs) const;
  [[nodiscard]] bool is_innovative(const CodedChunk& chunk) const { return is_innovative(chunk.coeffs); }

  /// Returns the new rank.
  std::size_t absorb(const CodedChunk& chunk);

  /// Padded payload. Throws NotReadyError below rank k.
  [[nodiscard]] Bytes decode() const;

  /// Coefficient rows in RREF order. The RREF is canonical, so two decoders
  /// span the same space iff their coefficient rows compare equal.
  [[nodiscard]] std::vector<CoeffVector> coefficient_rows() const;

  [[nodiscard]] bool is_rref() const;

 private:
  struct Row {
    std::size_t pivot;
    CoeffVector coeffs;
    Bytes data;
  };

  void check_length(std::size_t n) const;

  std::size_t k_;
  std::size_t chunk_len_;
  std::vector<Row> rows_;  // sorted by pivot
};

// Grouped coefficients: with k = 2^m, blocks of `group` consecutive chunks
// share one coefficient. Concatenating each block gives a coarser file of
// k/group super-chunks, and a grouped vector is an ordinary coded chunk of it.

[[nodiscard]] inline constexpr bool is_power_of_two(std::size_t x) noexcept { return x != 0 && (x & (x - 1)) == 0; }

CoeffVector grouped_coefficients(std::size_t m, std::size_t group, RngStream& rng);

/// One coefficient per block. Throws if the vector is not constant within blocks.
CoeffVector collapse_coefficients(const CoeffVector& coeffs, std::size_t group);

/// The same payload viewed as k/group chunks of group * chunk_len bytes.
SourceFile merge_source(const SourceFile& source, std::size_t group);

/// Splits a chunk coded over merge_source(s, group) into `group` chunks coded over s.
std::vector<CodedChunk> refine_chunk(const CodedChunk& coarse, std::size_t group);

}  // namespace fswarm::codec
