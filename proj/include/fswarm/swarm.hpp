#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "fswarm/adaptive_k.hpp"
#include "fswarm/fountain_codec.hpp"
#include "fswarm/metrics.hpp"
#include "fswarm/rng.hpp"

namespace fswarm {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised when a bookkeeping invariant breaks mid-run (e.g. decode failure at rank k).
class InvariantViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

enum class Coding { uncoded, fountain };
enum class ServerTarget { random_peer, newest_peer };

struct PolicyConfig {
  Coding coding = Coding::fountain;
  ServerTarget server_target = ServerTarget::newest_peer;

  /// baseline | fountain-only | prioritize-only | proposed
  static PolicyConfig from_name(std::string_view name);
  [[nodiscard]] std::string name() const;

  bool operator==(const PolicyConfig&) const = default;
};

struct LambdaStep {
  std::uint64_t slot = 0;
  double lambda = 1.0;
};

struct SimConfig {
  std::size_t k = 5;
  /// Size K of the server's coefficient pool; 0 draws a fresh vector per push.
  std::size_t pool_size = 10000;
  double lambda = 2.0;
  /// Max arrivals per slot (A). 0 selects max(20, ceil(10 * peak lambda)).
  std::size_t max_arrivals = 0;
  std::uint64_t max_slots = 10000;
  std::size_t pop_threshold = 1000;
  std::uint64_t seed = 1;
  PolicyConfig policy;
  std::size_t file_len = 256;
  /// Adaptive-k window in slots; 0 disables the controller.
  std::size_t tau = 0;
  /// Optional step change of the arrival rate from `ramp->slot` on.
  std::optional<LambdaStep> ramp;
  double one_club_fraction = 0.9;
  /// A peer pushed to by the server does not also download in that slot's exchange phase.
  bool server_push_consumes_slot = false;
  /// Check bookkeeping invariants after every slot.
  bool audit = false;

  [[nodiscard]] double peak_lambda() const;
  [[nodiscard]] std::size_t arrival_cap() const;
  /// Throws ConfigError.
  void validate() const;
};

/// Uncoded holdings: bit j set iff the peer has plain piece j.
struct PieceSet {
  std::uint64_t mask = 0;
};

struct CodedHoldings {
  codec::Decoder decoder;
  /// Chunks as received; forwarded verbatim. Each raised the rank on arrival.
  std::vector<std::shared_ptr<const codec::CodedChunk>> stored;
};

struct Peer {
  std::uint64_t id = 0;
  std::uint64_t arrival_slot = 0;
  std::uint32_t epoch = 0;
  std::variant<PieceSet, CodedHoldings> holdings;
  /// Reached k chunks this slot; no longer downloads or uploads, removed at slot end.
  bool done = false;

  [[nodiscard]] std::size_t count() const;
};

/// One chunk moved. from == kServerId for server pushes.
struct Transfer {
  std::uint64_t from = 0;
  std::uint64_t to = 0;
};

inline constexpr std::uint64_t kServerId = 0;

/// One exchange-phase contact, recorded when auditing.
struct Contact {
  std::uint64_t downloader = 0;
  std::uint64_t uploader = 0;
  std::size_t innovative_available = 0;
  bool transferred = false;
};

struct ControllerEvent {
  std::uint64_t slot = 0;
  std::uint32_t epoch = 0;
  std::size_t new_k = 0;
  double estimated_rate = 0.0;
};

/// Per-slot detail beyond the MetricsRecord; filled by Swarm::step.
struct SlotTrace {
  std::size_t arrivals = 0;
  std::uint64_t arrival_deficit = 0;  // sum of k over this slot's arrivals
  std::optional<Transfer> server_transfer;
  std::vector<Transfer> exchange_transfers;
  std::vector<Contact> contacts;
  std::vector<std::uint64_t> departed;
  std::optional<ControllerEvent> controller_event;
};

/// The slotted swarm. Within a slot: arrivals, server push, exchange phase
/// over a random permutation of peers, departures, snapshot.
class Swarm {
 public:
  struct Epoch {
    std::uint32_t id = 0;
    std::size_t k = 0;
    std::uint64_t start_slot = 0;
    std::shared_ptr<const codec::SourceFile> source;
    std::optional<codec::CodePool> pool;
    /// Lazily encoded pool chunks, shared by every peer that holds them.
    mutable std::vector<std::shared_ptr<const codec::CodedChunk>> encoded;
  };

  explicit Swarm(SimConfig cfg);

  MetricsRecord step(SlotTrace* trace = nullptr);

  // Sub-steps of a slot, public so tests can drive synthetic states.

  /// Adds n empty peers in the current epoch; returns their indices.
  std::vector<std::size_t> admit(std::size_t n);
  /// `new_arrivals` are indices into peers() of this slot's arrivals.
  std::optional<Transfer> server_action(const std::vector<std::size_t>& new_arrivals);
  std::vector<Transfer> exchange_phase(std::vector<Contact>* contacts = nullptr);
  std::vector<std::uint64_t> departures();

  /// Test helpers for building states; return true if the chunk was innovative.
  bool give_piece(std::size_t peer_index, std::size_t piece);
  bool give_pool_chunk(std::size_t peer_index, std::size_t pool_index);
  bool give_chunk(std::size_t peer_index, std::shared_ptr<const codec::CodedChunk> chunk);

  [[nodiscard]] const SimConfig& config() const noexcept { return cfg_; }
  [[nodiscard]] const std::vector<Peer>& peers() const noexcept { return peers_; }
  [[nodiscard]] std::uint64_t slot() const noexcept { return slot_; }
  [[nodiscard]] std::uint64_t arrivals_cum() const noexcept { return arrivals_cum_; }
  [[nodiscard]] std::uint64_t departures_cum() const noexcept { return departures_cum_; }
  [[nodiscard]] std::size_t current_k() const noexcept { return epochs_.back().k; }
  [[nodiscard]] const Epoch& epoch(std::uint32_t id) const { return epochs_.at(id); }
  [[nodiscard]] std::size_t epoch_count() const noexcept { return epochs_.size(); }
  [[nodiscard]] std::size_t k_of(const Peer& p) const { return epochs_.at(p.epoch).k; }
  [[nodiscard]] const std::optional<adaptive::Controller>& controller() const noexcept { return controller_; }
  [[nodiscard]] bool last_server_served_new() const noexcept { return served_new_; }
  [[nodiscard]] const std::vector<std::string>& violations() const noexcept { return violations_; }
  [[nodiscard]] std::uint64_t decoded_departures() const noexcept { return decoded_departures_; }
  [[nodiscard]] const std::shared_ptr<const codec::SourceFile>& payload_source() const { return epochs_.front().source; }

  /// Draws the number of arrivals for the slot about to run.
  std::size_t sample_arrivals();

 private:
  void open_epoch(std::size_t k);
  std::shared_ptr<const codec::CodedChunk> pool_chunk(const Epoch& e, std::size_t index) const;
  std::size_t pick_server_target(const std::vector<std::size_t>& new_arrivals);
  std::size_t innovative_candidates(const Peer& downloader, const Peer& uploader, std::vector<std::size_t>& out) const;
  bool apply_from(Peer& downloader, const Peer& uploader, std::size_t which);
  void mark_if_done(Peer& p);
  void audit_slot(const SlotTrace& trace, const MetricsRecord& rec);
  [[nodiscard]] double lambda_at(std::uint64_t slot) const;

  SimConfig cfg_;
  RngStream root_;
  RngStream rng_;
  std::vector<Epoch> epochs_;
  std::vector<Peer> peers_;
  std::optional<adaptive::Controller> controller_;
  std::uint64_t slot_ = 0;
  std::uint64_t next_id_ = 1;
  std::uint64_t arrivals_cum_ = 0;
  std::uint64_t departures_cum_ = 0;
  std::uint64_t last_M_ = 0;
  std::uint64_t decoded_departures_ = 0;
  bool served_new_ = false;
  std::optional<std::uint64_t> served_id_;
  std::vector<std::string> violations_;
};

/// Shifted truncated Poisson: 1 + X, X ~ Poisson(lambda - 1) conditioned on X <= cap - 1.
std::size_t sample_arrivals(double lambda, std::size_t cap, RngStream& rng);

enum class Verdict { stable, diverged };

struct RunResult {
  std::vector<MetricsRecord> series;
  Verdict verdict = Verdict::stable;
  /// Slot at which population first exceeded the threshold.
  std::optional<std::uint64_t> diverged_at;
  std::vector<ControllerEvent> events;
  std::vector<std::string> violations;
  std::uint64_t decoded_departures = 0;
  std::uint64_t server_transfers = 0;
};

/// Steps until max_slots or population > pop_threshold.
RunResult run(const SimConfig& cfg);

}  // namespace fswarm
