#include "fswarm/adaptive_k.hpp"

#include <stdexcept>

#include "fswarm/fountain_codec.hpp"

namespace fswarm::adaptive {

Controller::Controller(std::size_t tau, std::size_t initial_k) : tau_(tau), k_(initial_k) {
  if (tau_ == 0) throw std::invalid_argument("adaptive::Controller: tau must be positive");
  if (k_ == 0) throw std::invalid_argument("adaptive::Controller: k must be positive");
}

std::optional<std::size_t> Controller::window_tick() {
  const double rate = static_cast<double>(arrivals_) / static_cast<double>(tau_);
  arrivals_ = 0;
  ++window_;
  if (!(rate > static_cast<double>(k_) - 1.0)) return std::nullopt;
  k_ = next_k(rate, k_);
  ++epoch_;
  return k_;
}

std::size_t next_k(double rate, std::size_t current_k) {
  std::size_t k = 1;
  while (static_cast<double>(k) <= rate || k <= current_k) k <<= 1;
  return k;
}

bool compatible(std::uint32_t epoch_a, std::size_t k_a, std::uint32_t epoch_b, std::size_t k_b, bool grouped) {
  if (epoch_a == epoch_b) return true;
  if (!grouped) return false;
  if (!codec::is_power_of_two(k_a) || !codec::is_power_of_two(k_b)) return false;
  return k_a % k_b == 0 || k_b % k_a == 0;
}

}  // namespace fswarm::adaptive
