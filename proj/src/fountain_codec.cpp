#include "fswarm/fountain_codec.hpp"

#include <algorithm>
#include <string>

namespace fswarm::codec {

SourceFile::SourceFile(Bytes padded, std::size_t k, std::size_t chunk_len, std::size_t original_len)
    : padded_(std::move(padded)), k_(k), chunk_len_(chunk_len), original_len_(original_len) {
  if (k_ == 0 || chunk_len_ == 0) throw std::invalid_argument("SourceFile: k and chunk_len must be positive");
  if (padded_.size() != k_ * chunk_len_) throw std::invalid_argument("SourceFile: payload is not k * chunk_len bytes");
}

std::span<const std::uint8_t> SourceFile::chunk(std::size_t j) const {
  if (j >= k_) throw std::out_of_range("SourceFile::chunk: index " + std::to_string(j));
  return std::span<const std::uint8_t>(padded_).subspan(j * chunk_len_, chunk_len_);
}

SourceFile split_file(std::span<const std::uint8_t> payload, std::size_t k) {
  if (k == 0) throw std::invalid_argument("split_file: k must be >= 1");
  if (payload.empty()) throw std::invalid_argument("split_file: empty payload");
  const std::size_t chunk_len = (payload.size() + k - 1) / k;
  Bytes padded(payload.begin(), payload.end());
  padded.resize(k * chunk_len, 0);
  return SourceFile(std::move(padded), k, chunk_len, payload.size());
}

CoeffVector draw_coefficients(std::size_t k, RngStream& rng) {
  if (k == 0) throw std::invalid_argument("draw_coefficients: k must be >= 1");
  CoeffVector v(k);
  do {
    for (auto& c : v) c = rng.byte();
  } while (std::all_of(v.begin(), v.end(), [](gf::Element c) { return c == 0; }));
  return v;
}

CodedChunk encode(const SourceFile& source, const CoeffVector& coeffs) {
  if (coeffs.size() != source.k())
    throw std::invalid_argument("encode: coefficient vector length " + std::to_string(coeffs.size()) +
                                " != k " + std::to_string(source.k()));
  CodedChunk out{coeffs, Bytes(source.chunk_len(), 0), std::nullopt};
  for (std::size_t j = 0; j < coeffs.size(); ++j) gf::mul_add(out.data, source.chunk(j), coeffs[j]);
  return out;
}

CodePool::CodePool(std::size_t k, std::vector<CoeffVector> vectors) : k_(k), vectors_(std::move(vectors)) {
  for (const auto& v : vectors_)
    if (v.size() != k_) throw std::invalid_argument("CodePool: vector length != k");
}

CodePool build_pool(std::size_t k, std::size_t pool_size, RngStream& rng) {
  if (k == 0) throw std::invalid_argument("build_pool: k must be >= 1");
  if (pool_size < k) throw std::invalid_argument("build_pool: pool size K must be >= k");
  std::vector<CoeffVector> vectors;
  vectors.reserve(pool_size);
  for (std::size_t i = 0; i < pool_size; ++i) vectors.push_back(draw_coefficients(k, rng));
  return CodePool(k, std::move(vectors));
}

Decoder::Decoder(std::size_t k, std::size_t chunk_len) : k_(k), chunk_len_(chunk_len) {
  if (k_ == 0) throw std::invalid_argument("Decoder: k must be >= 1");
  rows_.reserve(k_);
}

void Decoder::check_length(std::size_t n) const {
  if (n != k_)
    throw std::invalid_argument("Decoder: coefficient vector length " + std::to_string(n) + " != k " +
                                std::to_string(k_));
}

bool Decoder::is_innovative(std::span<const gf::Element> coeffs) const {
  check_length(coeffs.size());
  if (rows_.size() == k_) return false;
  CoeffVector v(coeffs.begin(), coeffs.end());
  for (const auto& row : rows_) gf::mul_add(v, row.coeffs, v[row.pivot]);
  return std::any_of(v.begin(), v.end(), [](gf::Element c) { return c != 0; });
}

std::size_t Decoder::absorb(const CodedChunk& chunk) {
  check_length(chunk.coeffs.size());
  if (chunk.data.size() != chunk_len_) throw std::invalid_argument("Decoder::absorb: data length != chunk_len");
  if (rows_.size() == k_) return k_;

  Row fresh{0, chunk.coeffs, chunk.data};
  for (const auto& row : rows_) {
    const gf::Element f = fresh.coeffs[row.pivot];
    if (f == 0) continue;
    gf::mul_add(fresh.coeffs, row.coeffs, f);
    gf::mul_add(fresh.data, row.data, f);
  }
  const auto lead = std::find_if(fresh.coeffs.begin(), fresh.coeffs.end(), [](gf::Element c) { return c != 0; });
  if (lead == fresh.coeffs.end()) return rows_.size();

  fresh.pivot = static_cast<std::size_t>(lead - fresh.coeffs.begin());
  const gf::Element norm = gf::inv(*lead);
  gf::scale(fresh.coeffs, norm);
  gf::scale(fresh.data, norm);

  for (auto& row : rows_) {
    const gf::Element f = row.coeffs[fresh.pivot];
    if (f == 0) continue;
    gf::mul_add(row.coeffs, fresh.coeffs, f);
    gf::mul_add(row.data, fresh.data, f);
  }
  const auto pos = std::lower_bound(rows_.begin(), rows_.end(), fresh.pivot,
                                    [](const Row& r, std::size_t p) { return r.pivot < p; });
  rows_.insert(pos, std::move(fresh));
  return rows_.size();
}

Bytes Decoder::decode() const {
  if (rows_.size() != k_)
    throw NotReadyError("Decoder::decode: rank " + std::to_string(rows_.size()) + " < k " + std::to_string(k_));
  // Full-rank RREF is the identity, so the data rows are the source chunks in order.
  Bytes out;
  out.reserve(k_ * chunk_len_);
  for (const auto& row : rows_) out.insert(out.end(), row.data.begin(), row.data.end());
  return out;
}

std::vector<CoeffVector> Decoder::coefficient_rows() const {
  std::vector<CoeffVector> out;
  out.reserve(rows_.size());
  for (const auto& row : rows_) out.push_back(row.coeffs);
  return out;
}

bool Decoder::is_rref() const {
  for (std::size_t i = 0; i < rows_.size(); ++i) {
    const auto& row = rows_[i];
    if (i > 0 && rows_[i - 1].pivot >= row.pivot) return false;
    if (row.coeffs[row.pivot] != 1) return false;
    for (std::size_t c = 0; c < row.pivot; ++c)
      if (row.coeffs[c] != 0) return false;
    for (std::size_t j = 0; j < rows_.size(); ++j)
      if (j != i && rows_[j].coeffs[row.pivot] != 0) return false;
  }
  return true;
}

namespace {

void check_group(std::size_t k, std::size_t group) {
  if (!is_power_of_two(group) || group > k || k % group != 0)
    throw std::invalid_argument("group " + std::to_string(group) + " is not a power-of-two divisor of k " +
                                std::to_string(k));
}

}  // namespace

CoeffVector grouped_coefficients(std::size_t m, std::size_t group, RngStream& rng) {
  if (m >= 8 * sizeof(std::size_t)) throw std::invalid_argument("grouped_coefficients: m too large");
  const std::size_t k = std::size_t{1} << m;
  check_group(k, group);
  if (group == 1) return draw_coefficients(k, rng);
  const CoeffVector coarse = draw_coefficients(k / group, rng);
  CoeffVector v(k);
  for (std::size_t j = 0; j < k; ++j) v[j] = coarse[j / group];
  return v;
}

CoeffVector collapse_coefficients(const CoeffVector& coeffs, std::size_t group) {
  check_group(coeffs.size(), group);
  CoeffVector out(coeffs.size() / group);
  for (std::size_t s = 0; s < out.size(); ++s) {
    out[s] = coeffs[s * group];
    for (std::size_t r = 1; r < group; ++r)
      if (coeffs[s * group + r] != out[s])
        throw std::invalid_argument("collapse_coefficients: vector is not constant within groups");
  }
  return out;
}

SourceFile merge_source(const SourceFile& source, std::size_t group) {
  check_group(source.k(), group);
  return SourceFile(source.padded(), source.k() / group, source.chunk_len() * group, source.original_len());
}

std::vector<CodedChunk> refine_chunk(const CodedChunk& coarse, std::size_t group) {
  if (group == 0 || coarse.data.size() % group != 0)
    throw std::invalid_argument("refine_chunk: data length not divisible by group");
  const std::size_t fine_len = coarse.data.size() / group;
  const std::size_t fine_k = coarse.coeffs.size() * group;
  std::vector<CodedChunk> out;
  out.reserve(group);
  for (std::size_t r = 0; r < group; ++r) {
    CodedChunk c{CoeffVector(fine_k, 0), Bytes(coarse.data.begin() + static_cast<std::ptrdiff_t>(r * fine_len),
                                                 coarse.data.begin() + static_cast<std::ptrdiff_t>((r + 1) * fine_len)),
                 std::nullopt};
    for (std::size_t s = 0; s < coarse.coeffs.size(); ++s) c.coeffs[s * group + r] = coarse.coeffs[s];
    out.push_back(std::move(c));
  }
  return out;
}

}  // namespace fswarm::codec
