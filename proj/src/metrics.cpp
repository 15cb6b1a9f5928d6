#include "fswarm/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

#include "fswarm/swarm.hpp"

namespace fswarm {

std::vector<double> MetricsRecord::alpha() const {
  std::vector<double> a(counts.size(), 0.0);
  if (population == 0) return a;
  for (std::size_t i = 0; i < counts.size(); ++i)
    a[i] = static_cast<double>(counts[i]) / static_cast<double>(population);
  return a;
}

MetricsRecord snapshot(const Swarm& swarm) {
  MetricsRecord rec;
  rec.slot = swarm.slot();
  rec.population = swarm.peers().size();
  rec.arrivals_cum = swarm.arrivals_cum();
  rec.departures_cum = swarm.departures_cum();
  rec.k = swarm.current_k();
  rec.counts.assign(rec.k, 0);
  for (const auto& p : swarm.peers()) {
    const std::size_t have = p.count();
    const std::size_t need = swarm.k_of(p);
    if (have < rec.counts.size()) ++rec.counts[have];
    if (have < need) rec.M += need - have;
  }
  rec.one_club = detect_one_club(swarm, swarm.config().one_club_fraction);
  rec.server_served_new = swarm.last_server_served_new();
  return rec;
}

bool detect_one_club(const Swarm& swarm, double fraction) {
  const auto& peers = swarm.peers();
  if (peers.empty()) return false;
  const auto needed = static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(peers.size())));

  // Key: epoch followed by the piece mask or the flattened RREF rows.
  std::map<std::vector<std::uint8_t>, std::size_t> clubs;
  std::size_t best = 0;
  for (const auto& p : peers) {
    const std::size_t k = swarm.k_of(p);
    if (p.count() + 1 != k) continue;
    std::vector<std::uint8_t> key;
    for (int b = 0; b < 4; ++b) key.push_back(static_cast<std::uint8_t>(p.epoch >> (8 * b)));
    if (const auto* set = std::get_if<PieceSet>(&p.holdings)) {
      for (int b = 0; b < 8; ++b) key.push_back(static_cast<std::uint8_t>(set->mask >> (8 * b)));
    } else {
      for (const auto& row : std::get<CodedHoldings>(p.holdings).decoder.coefficient_rows())
        key.insert(key.end(), row.begin(), row.end());
    }
    best = std::max(best, ++clubs[std::move(key)]);
  }
  return best > 0 && best >= needed;
}

Window tail_window(std::size_t n, double fraction) {
  if (n == 0) return {0, 0};
  auto len = static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(n)));
  len = std::clamp<std::size_t>(len, std::min<std::size_t>(2, n), n);
  return {n - len, n};
}

namespace {

void check_window(std::size_t n, Window w) {
  if (w.end > n || w.begin >= w.end) throw std::invalid_argument("window outside series");
  if (w.size() < 2) throw std::invalid_argument("window needs at least two points");
}

}  // namespace

double growth_slope(std::span<const MetricsRecord> series, Window window) {
  check_window(series.size(), window);
  const auto n = static_cast<double>(window.size());
  double mx = 0, my = 0;
  for (std::size_t i = window.begin; i < window.end; ++i) {
    mx += static_cast<double>(series[i].slot);
    my += static_cast<double>(series[i].population);
  }
  mx /= n;
  my /= n;
  double sxy = 0, sxx = 0;
  for (std::size_t i = window.begin; i < window.end; ++i) {
    const double dx = static_cast<double>(series[i].slot) - mx;
    sxy += dx * (static_cast<double>(series[i].population) - my);
    sxx += dx * dx;
  }
  if (sxx == 0) throw std::invalid_argument("growth_slope: all slots identical");
  return sxy / sxx;
}

double empirical_drift(std::span<const MetricsRecord> series, Window window) {
  check_window(series.size(), window);
  double sum = 0;
  for (std::size_t i = window.begin; i + 1 < window.end; ++i)
    sum += static_cast<double>(series[i + 1].M) - static_cast<double>(series[i].M);
  return sum / static_cast<double>(window.size() - 1);
}

double upper_state_drift(std::span<const MetricsRecord> series, Window window) {
  check_window(series.size(), window);
  std::vector<std::uint64_t> ms;
  ms.reserve(window.size() - 1);
  for (std::size_t i = window.begin; i + 1 < window.end; ++i) ms.push_back(series[i].M);
  auto mid = ms.begin() + static_cast<std::ptrdiff_t>(ms.size() / 2);
  std::nth_element(ms.begin(), mid, ms.end());
  const std::uint64_t median = *mid;
  double sum = 0;
  std::size_t n = 0;
  for (std::size_t i = window.begin; i + 1 < window.end; ++i) {
    if (series[i].M < median) continue;
    sum += static_cast<double>(series[i + 1].M) - static_cast<double>(series[i].M);
    ++n;
  }
  return sum / static_cast<double>(n);
}

}  // namespace fswarm
