#include <doctest.h>

#include <vector>

#include "fswarm/metrics.hpp"
#include "fswarm/swarm.hpp"
#include "oracles.hpp"

using namespace fswarm;

namespace {

SimConfig make(const char* policy, std::size_t k = 5) {
  SimConfig c;
  c.policy = PolicyConfig::from_name(policy);
  c.k = k;
  return c;
}

std::vector<MetricsRecord> series_from(const std::vector<std::pair<std::size_t, std::uint64_t>>& pop_m) {
  std::vector<MetricsRecord> s;
  std::uint64_t slot = 1;
  for (auto [pop, m] : pop_m) {
    MetricsRecord r;
    r.slot = slot++;
    r.population = pop;
    r.M = m;
    s.push_back(r);
  }
  return s;
}

}  // namespace

TEST_CASE("empty swarm snapshot") {
  Swarm s(make("proposed"));
  const auto r = snapshot(s);
  CHECK(r.population == 0);
  CHECK(r.M == 0);
  CHECK_FALSE(r.one_club);
  CHECK(r.alpha() == std::vector<double>(5, 0.0));
}

TEST_CASE("M from ranks {0,0,2} at k=5 is 13") {
  Swarm s(make("proposed"));
  s.admit(3);
  s.give_pool_chunk(2, 0);
  s.give_pool_chunk(2, 1);
  const auto r = snapshot(s);
  // Hand count: (5-0) + (5-0) + (5-2).
  CHECK(r.M == 13);
  CHECK(r.counts == std::vector<std::size_t>{2, 0, 1, 0, 0});
  const auto a = r.alpha();
  CHECK(a[0] == doctest::Approx(2.0 / 3));
  CHECK(a[2] == doctest::Approx(1.0 / 3));
  CHECK(r.M >= r.population);
  CHECK(r.M <= r.population * 5);
}

TEST_CASE("all peers at k-1 pieces") {
  Swarm s(make("baseline"));
  s.admit(10);
  for (std::size_t i = 0; i < 10; ++i)
    for (std::size_t j = 0; j < 4; ++j) s.give_piece(i, j);
  const auto r = snapshot(s);
  CHECK(r.alpha()[4] == 1.0);
  CHECK(r.M == 10);
  CHECK(r.one_club);
}

TEST_CASE("one club uncoded") {
  Swarm s(make("baseline"));
  s.admit(20);
  for (std::size_t i = 0; i < 20; ++i)
    for (std::size_t j = 0; j < 4; ++j) s.give_piece(i, i < 18 ? j : j + 1);
  CHECK(detect_one_club(s, 0.9));
  CHECK_FALSE(detect_one_club(s, 0.95));
}

TEST_CASE("mixed ranks are not a club") {
  Swarm s(make("baseline"));
  s.admit(25);
  for (std::size_t i = 0; i < 25; ++i)
    for (std::size_t j = 0; j < i % 5; ++j) s.give_piece(i, j);
  CHECK_FALSE(detect_one_club(s));
}

TEST_CASE("one club coded: shared row space, checked against elimination") {
  Swarm s(make("proposed"));
  const std::size_t n = 40;
  s.admit(n);
  RngStream rng(4);
  const auto& pool = *s.epoch(0).pool;
  std::vector<codec::CoeffVector> shared;
  for (std::size_t j = 0; j < 4; ++j) shared.push_back(pool[10 + j]);
  REQUIRE(oracle::rank_gf256(shared, 5) == 4);

  for (std::size_t i = 0; i < n; ++i) {
    if (i < 38) {
      // 95%: the same four pool vectors, absorbed in a per-peer random order.
      std::vector<std::size_t> order{10, 11, 12, 13};
      for (std::size_t a = 3; a > 0; --a) std::swap(order[a], order[rng.below(a + 1)]);
      for (auto j : order) s.give_pool_chunk(i, j);
    } else {
      for (std::size_t j = 0; j < 4; ++j) s.give_pool_chunk(i, 500 + 10 * i + j);
    }
  }

  // Oracle: each club member's span equals the shared span (stacking adds no rank).
  for (std::size_t i = 0; i < n; ++i) {
    auto rows = std::get<CodedHoldings>(s.peers()[i].holdings).decoder.coefficient_rows();
    const int own = oracle::rank_gf256(rows, 5);
    rows.insert(rows.end(), shared.begin(), shared.end());
    const bool same = own == 4 && oracle::rank_gf256(rows, 5) == 4;
    CHECK(same == (i < 38));
  }
  CHECK(detect_one_club(s, 0.9));
  CHECK(snapshot(s).one_club);
  CHECK_FALSE(detect_one_club(s, 0.96));
}

TEST_CASE("coded peers at k-1 with different spans are not a club") {
  Swarm s(make("proposed"));
  s.admit(10);
  for (std::size_t i = 0; i < 10; ++i)
    for (std::size_t j = 0; j < 4; ++j) s.give_pool_chunk(i, 4 * i + j);
  CHECK_FALSE(detect_one_club(s));
}

TEST_CASE("tail window") {
  CHECK(tail_window(100, 0.25).begin == 75);
  CHECK(tail_window(100, 0.25).end == 100);
  CHECK(tail_window(3, 0.25).size() == 2);
  CHECK(tail_window(1, 0.25).size() == 1);
}

TEST_CASE("growth slope") {
  std::vector<std::pair<std::size_t, std::uint64_t>> flat(50, {7, 20}), line;
  for (std::size_t t = 1; t <= 50; ++t) line.push_back({t, 0});
  const auto f = series_from(flat), l = series_from(line);
  CHECK(growth_slope(f, {0, 50}) == doctest::Approx(0.0));
  CHECK(growth_slope(l, {0, 50}) == doctest::Approx(1.0));
  CHECK(growth_slope(l, {10, 30}) == doctest::Approx(1.0));
  CHECK_THROWS_AS(growth_slope(l, {3, 4}), std::invalid_argument);
  CHECK_THROWS_AS(growth_slope(l, {40, 51}), std::invalid_argument);
}

TEST_CASE("empirical drift") {
  std::vector<std::pair<std::size_t, std::uint64_t>> flat(20, {3, 9}), up;
  for (std::uint64_t t = 0; t < 20; ++t) up.push_back({1, 10 + 3 * t});
  CHECK(empirical_drift(series_from(flat), {0, 20}) == 0.0);
  CHECK(empirical_drift(series_from(up), {0, 20}) == doctest::Approx(3.0));
  CHECK(empirical_drift(series_from(up), {5, 7}) == doctest::Approx(3.0));
  CHECK_THROWS_AS(empirical_drift(series_from(up), {5, 6}), std::invalid_argument);
}

TEST_CASE("upper-state drift separates a mean-reverting series") {
  // Triangle wave 10,20,30,20,...: the mean step is ~0, but from the upper
  // half (M >= 20) the series steps down on average.
  const std::uint64_t wave[4] = {10, 20, 30, 20};
  std::vector<std::pair<std::size_t, std::uint64_t>> tri;
  for (int t = 0; t < 41; ++t) tri.push_back({1, wave[t % 4]});
  const auto s = series_from(tri);
  CHECK(empirical_drift(s, {0, 41}) == doctest::Approx(0.0));
  // Upper states among the first 40: ten at 30 (step -10), twenty at 20 (ten +10, ten -10).
  CHECK(upper_state_drift(s, {0, 41}) == doctest::Approx(-100.0 / 30));
}

TEST_CASE("divergent baseline has positive drift and unit slope") {
  auto cfg = make("baseline");
  cfg.seed = 21;
  const auto r = run(cfg);
  REQUIRE(r.verdict == Verdict::diverged);
  const auto w = tail_window(r.series.size(), 0.25);
  CHECK(empirical_drift(r.series, w) > 0);
  CHECK(growth_slope(r.series, w) == doctest::Approx(1.0).epsilon(0.3));
}
