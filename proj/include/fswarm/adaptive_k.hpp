#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>

namespace fswarm::adaptive {

/// Windowed arrival-rate estimator that raises k when the estimate
/// exceeds k - 1. Increases snap to powers of two; k never decreases.
class Controller {
 public:
  Controller(std::size_t tau, std::size_t initial_k);

  void observe_arrival() noexcept { ++arrivals_; }
  void observe_arrivals(std::size_t n) noexcept { arrivals_ += n; }

  /// Call when slot == (window + 1) * tau. Returns the new k if raised.
  std::optional<std::size_t> window_tick();

  /// True when `slot` closes the current window.
  [[nodiscard]] bool due(std::uint64_t slot) const noexcept { return slot == (window_ + 1) * tau_; }

  [[nodiscard]] std::size_t tau() const noexcept { return tau_; }
  [[nodiscard]] std::uint64_t window() const noexcept { return window_; }
  [[nodiscard]] std::size_t arrivals() const noexcept { return arrivals_; }
  [[nodiscard]] std::size_t current_k() const noexcept { return k_; }
  [[nodiscard]] std::uint32_t epoch() const noexcept { return epoch_; }

 private:
  std::size_t tau_;
  std::uint64_t window_ = 0;
  std::size_t arrivals_ = 0;
  std::size_t k_;
  std::uint32_t epoch_ = 0;
};

/// Smallest power of two strictly greater than both rate and current_k.
std::size_t next_k(double rate, std::size_t current_k);

/// Chunks of different epochs are encoded for different k and cannot be
/// mixed, except in grouped mode where both k are powers of two and one
/// divides the other (see codec::refine_chunk).
bool compatible(std::uint32_t epoch_a, std::size_t k_a, std::uint32_t epoch_b, std::size_t k_b, bool grouped = false);

}  // namespace fswarm::adaptive
