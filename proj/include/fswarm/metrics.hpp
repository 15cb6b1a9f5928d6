#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace fswarm {

class Swarm;

/// Post-slot snapshot of the swarm.
struct MetricsRecord {
  std::uint64_t slot = 0;
  std::size_t population = 0;
  std::uint64_t arrivals_cum = 0;
  std::uint64_t departures_cum = 0;
  /// counts[i] = number of peers holding i chunks (rank i); length = current k.
  std::vector<std::size_t> counts;
  /// Outstanding deficit sum over peers of (k_peer - rank). Extensive, not per capita.
  std::uint64_t M = 0;
  bool one_club = false;
  bool server_served_new = false;
  std::size_t k = 0;

  /// alpha_i = counts[i] / population; all zeros when the swarm is empty.
  [[nodiscard]] std::vector<double> alpha() const;

  bool operator==(const MetricsRecord&) const = default;
};

MetricsRecord snapshot(const Swarm& swarm);

/// True iff at least `fraction` of the peers hold the same (k-1)-dimensional
/// span: the same piece set uncoded, the same RREF row space coded.
bool detect_one_club(const Swarm& swarm, double fraction = 0.9);

/// Half-open index range [begin, end) into a series.
struct Window {
  std::size_t begin = 0;
  std::size_t end = 0;
  [[nodiscard]] std::size_t size() const noexcept { return end - begin; }
};

/// The trailing `fraction` of a series of length n (at least two points when n >= 2).
Window tail_window(std::size_t n, double fraction);

/// Least-squares slope of population against slot. Throws std::invalid_argument
/// for windows with fewer than two points or outside the series.
double growth_slope(std::span<const MetricsRecord> series, Window window);

/// Mean of M(t+1) - M(t) over consecutive records in the window.
double empirical_drift(std::span<const MetricsRecord> series, Window window);

/// Mean one-slot change of M over the slots in the window whose M is at or
/// above the window's median M. This is the Foster-Lyapunov drift restricted
/// to the upper half of the visited states.
double upper_state_drift(std::span<const MetricsRecord> series, Window window);

}  // namespace fswarm
