#include "fswarm/swarm.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>
#include <unordered_map>

namespace fswarm {

PolicyConfig PolicyConfig::from_name(std::string_view name) {
  if (name == "baseline") return {Coding::uncoded, ServerTarget::random_peer};
  if (name == "fountain-only") return {Coding::fountain, ServerTarget::random_peer};
  if (name == "prioritize-only") return {Coding::uncoded, ServerTarget::newest_peer};
  if (name == "proposed") return {Coding::fountain, ServerTarget::newest_peer};
  throw ConfigError("unknown policy '" + std::string(name) +
                    "' (expected baseline|fountain-only|prioritize-only|proposed)");
}

std::string PolicyConfig::name() const {
  if (coding == Coding::uncoded) return server_target == ServerTarget::random_peer ? "baseline" : "prioritize-only";
  return server_target == ServerTarget::random_peer ? "fountain-only" : "proposed";
}

double SimConfig::peak_lambda() const { return ramp ? std::max(lambda, ramp->lambda) : lambda; }

std::size_t SimConfig::arrival_cap() const {
  if (max_arrivals != 0) return max_arrivals;
  return std::max<std::size_t>(20, static_cast<std::size_t>(std::ceil(10.0 * peak_lambda())));
}

void SimConfig::validate() const {
  if (k == 0) throw ConfigError("k must be >= 1");
  if (policy.coding == Coding::uncoded && k > 64) throw ConfigError("uncoded policies support k <= 64");
  if (!(lambda >= 1.0)) throw ConfigError("lambda must be >= 1");
  if (ramp && !(ramp->lambda >= 1.0)) throw ConfigError("ramp lambda must be >= 1");
  if (peak_lambda() > 500.0) throw ConfigError("lambda too large");
  if (arrival_cap() < 1 || static_cast<double>(arrival_cap()) <= peak_lambda())
    throw ConfigError("max arrivals per slot (A) must exceed lambda");
  if (pop_threshold == 0) throw ConfigError("pop_threshold must be positive");
  if (file_len == 0) throw ConfigError("file_len must be positive");
  if (pool_size != 0 && pool_size < k) throw ConfigError("pool size K must be >= k (or 0 for fresh draws)");
  if (!(one_club_fraction > 0.0 && one_club_fraction <= 1.0)) throw ConfigError("one_club_fraction must be in (0, 1]");
  if (tau != 0 && policy.coding != Coding::fountain) throw ConfigError("adaptive k (tau) requires a fountain policy");
}

std::size_t Peer::count() const {
  if (const auto* set = std::get_if<PieceSet>(&holdings)) return static_cast<std::size_t>(std::popcount(set->mask));
  return std::get<CodedHoldings>(holdings).decoder.rank();
}

std::size_t sample_arrivals(double lambda, std::size_t cap, RngStream& rng) {
  if (!(lambda >= 1.0)) throw ConfigError("sample_arrivals: lambda must be >= 1");
  if (cap == 0) throw ConfigError("sample_arrivals: cap must be >= 1");
  if (cap == 1) return 1;
  std::uint64_t x = 0;
  do {
    x = rng.poisson(lambda - 1.0);
  } while (x > cap - 1);
  return 1 + static_cast<std::size_t>(x);
}

Swarm::Swarm(SimConfig cfg)
    : cfg_(std::move(cfg)), root_(cfg_.seed), rng_(root_.derive(hash_tag("sim"))) {
  cfg_.validate();
  if (cfg_.tau != 0) controller_.emplace(cfg_.tau, cfg_.k);
  open_epoch(cfg_.k);
}

void Swarm::open_epoch(std::size_t k) {
  Epoch e;
  e.id = static_cast<std::uint32_t>(epochs_.size());
  e.k = k;
  e.start_slot = slot_;
  if (epochs_.empty()) {
    RngStream payload_rng = root_.derive(hash_tag("payload"));
    codec::Bytes payload(cfg_.file_len);
    for (auto& b : payload) b = payload_rng.byte();
    e.source = std::make_shared<const codec::SourceFile>(codec::split_file(payload, k));
  } else {
    const auto& first = *epochs_.front().source;
    codec::Bytes original(first.padded().begin(),
                          first.padded().begin() + static_cast<std::ptrdiff_t>(first.original_len()));
    e.source = std::make_shared<const codec::SourceFile>(codec::split_file(original, k));
  }
  if (cfg_.policy.coding == Coding::fountain && cfg_.pool_size != 0) {
    RngStream pool_rng = root_.derive(hash_tag("pool") + e.id);
    e.pool = codec::build_pool(k, std::max(cfg_.pool_size, k), pool_rng);
    e.encoded.resize(e.pool->size());
  }
  epochs_.push_back(std::move(e));
}

std::shared_ptr<const codec::CodedChunk> Swarm::pool_chunk(const Epoch& e, std::size_t index) const {
  auto& slot = e.encoded.at(index);
  if (!slot) {
    auto chunk = codec::encode(*e.source, (*e.pool)[index]);
    chunk.pool_index = index;
    slot = std::make_shared<const codec::CodedChunk>(std::move(chunk));
  }
  return slot;
}

double Swarm::lambda_at(std::uint64_t slot) const {
  if (cfg_.ramp && slot >= cfg_.ramp->slot) return cfg_.ramp->lambda;
  return cfg_.lambda;
}

std::size_t Swarm::sample_arrivals() { return fswarm::sample_arrivals(lambda_at(slot_), cfg_.arrival_cap(), rng_); }

std::vector<std::size_t> Swarm::admit(std::size_t n) {
  std::vector<std::size_t> idx;
  idx.reserve(n);
  const Epoch& e = epochs_.back();
  for (std::size_t i = 0; i < n; ++i) {
    Peer p;
    p.id = next_id_++;
    p.arrival_slot = slot_;
    p.epoch = e.id;
    if (cfg_.policy.coding == Coding::fountain)
      p.holdings = CodedHoldings{codec::Decoder(e.k, e.source->chunk_len()), {}};
    else
      p.holdings = PieceSet{};
    idx.push_back(peers_.size());
    peers_.push_back(std::move(p));
  }
  arrivals_cum_ += n;
  return idx;
}

void Swarm::mark_if_done(Peer& p) {
  if (p.count() >= k_of(p)) p.done = true;
}

std::size_t Swarm::pick_server_target(const std::vector<std::size_t>& new_arrivals) {
  if (cfg_.policy.server_target == ServerTarget::newest_peer) {
    if (!new_arrivals.empty()) return new_arrivals[rng_.below(new_arrivals.size())];
    // No arrival this slot: drain the oldest peer of a superseded epoch first.
    if (epochs_.size() > 1) {
      const std::uint32_t current = epochs_.back().id;
      auto oldest = peers_.end();
      for (auto it = peers_.begin(); it != peers_.end(); ++it) {
        if (it->epoch == current || it->done) continue;
        if (oldest == peers_.end() || it->arrival_slot < oldest->arrival_slot) oldest = it;
      }
      if (oldest != peers_.end()) return static_cast<std::size_t>(oldest - peers_.begin());
    }
  }
  return rng_.below(peers_.size());
}

std::optional<Transfer> Swarm::server_action(const std::vector<std::size_t>& new_arrivals) {
  served_new_ = false;
  served_id_.reset();
  if (peers_.empty()) return std::nullopt;
  const std::size_t target = pick_server_target(new_arrivals);
  Peer& p = peers_[target];
  if (p.done) return std::nullopt;

  bool delivered = false;
  if (auto* set = std::get_if<PieceSet>(&p.holdings)) {
    // The server holds every piece, so the greedy rule hands over a uniform
    // choice among the pieces the target lacks.
    const std::size_t k = k_of(p);
    const std::uint64_t full = k == 64 ? ~std::uint64_t{0} : (std::uint64_t{1} << k) - 1;
    std::uint64_t missing = full & ~set->mask;
    if (missing != 0) {
      for (auto skip = rng_.below(static_cast<std::uint64_t>(std::popcount(missing))); skip > 0; --skip)
        missing &= missing - 1;
      set->mask |= missing & (~missing + 1);
      delivered = true;
    }
  } else {
    const Epoch& e = epochs_.at(p.epoch);
    std::shared_ptr<const codec::CodedChunk> chunk;
    if (e.pool) {
      chunk = pool_chunk(e, rng_.below(e.pool->size()));
    } else {
      chunk = std::make_shared<const codec::CodedChunk>(
          codec::encode(*e.source, codec::draw_coefficients(e.k, rng_)));
    }
    delivered = give_chunk(target, std::move(chunk));
  }
  if (!delivered) return std::nullopt;
  mark_if_done(p);
  served_new_ = p.arrival_slot == slot_;
  served_id_ = p.id;
  return Transfer{kServerId, p.id};
}

std::size_t Swarm::innovative_candidates(const Peer& downloader, const Peer& uploader,
                                         std::vector<std::size_t>& out) const {
  out.clear();
  if (const auto* down = std::get_if<PieceSet>(&downloader.holdings)) {
    std::uint64_t diff = std::get<PieceSet>(uploader.holdings).mask & ~down->mask;
    while (diff != 0) {
      out.push_back(static_cast<std::size_t>(std::countr_zero(diff)));
      diff &= diff - 1;
    }
  } else {
    const auto& dec = std::get<CodedHoldings>(downloader.holdings).decoder;
    const auto& stored = std::get<CodedHoldings>(uploader.holdings).stored;
    for (std::size_t i = 0; i < stored.size(); ++i)
      if (dec.is_innovative(*stored[i])) out.push_back(i);
  }
  return out.size();
}

bool Swarm::apply_from(Peer& downloader, const Peer& uploader, std::size_t which) {
  if (auto* down = std::get_if<PieceSet>(&downloader.holdings)) {
    down->mask |= std::uint64_t{1} << which;
    return true;
  }
  auto& holdings = std::get<CodedHoldings>(downloader.holdings);
  const auto& chunk = std::get<CodedHoldings>(uploader.holdings).stored.at(which);
  const std::size_t before = holdings.decoder.rank();
  if (holdings.decoder.absorb(*chunk) == before) return false;
  holdings.stored.push_back(chunk);
  return true;
}

std::vector<Transfer> Swarm::exchange_phase(std::vector<Contact>* contacts) {
  std::vector<Transfer> moved;
  const std::size_t n = peers_.size();
  if (n < 2) return moved;

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  for (std::size_t i = n - 1; i > 0; --i) std::swap(order[i], order[rng_.below(i + 1)]);

  // Peers only contact peers of their own epoch.
  std::vector<std::vector<std::size_t>> groups(epochs_.size());
  std::vector<std::size_t> done_in(epochs_.size(), 0);
  for (std::size_t i = 0; i < n; ++i) {
    groups[peers_[i].epoch].push_back(i);
    if (peers_[i].done) ++done_in[peers_[i].epoch];
  }

  std::vector<std::size_t> candidates;
  for (const std::size_t p : order) {
    Peer& down = peers_[p];
    if (down.done) continue;
    if (cfg_.server_push_consumes_slot && served_id_ == down.id) continue;
    const auto& group = groups[down.epoch];
    if (group.size() - 1 - done_in[down.epoch] == 0) continue;
    std::size_t q = 0;
    do {
      q = group[rng_.below(group.size())];
    } while (q == p || peers_[q].done);
    const Peer& up = peers_[q];

    const std::size_t available = innovative_candidates(down, up, candidates);
    bool transferred = false;
    if (available > 0) {
      transferred = apply_from(down, up, candidates[rng_.below(available)]);
      if (transferred) {
        moved.push_back(Transfer{up.id, down.id});
        mark_if_done(down);
        if (down.done) ++done_in[down.epoch];
      }
    }
    if (contacts) contacts->push_back(Contact{down.id, up.id, available, transferred});
  }
  return moved;
}

std::vector<std::uint64_t> Swarm::departures() {
  std::vector<std::uint64_t> gone;
  for (auto& p : peers_) {
    if (p.count() < k_of(p)) continue;
    if (const auto* coded = std::get_if<CodedHoldings>(&p.holdings)) {
      const auto& source = *epochs_.at(p.epoch).source;
      if (coded->decoder.decode() != source.padded())
        throw InvariantViolation("peer " + std::to_string(p.id) + " decoded a payload that differs from the file");
      ++decoded_departures_;
    }
    gone.push_back(p.id);
  }
  std::erase_if(peers_, [this](const Peer& p) { return p.count() >= k_of(p); });
  departures_cum_ += gone.size();
  return gone;
}

bool Swarm::give_piece(std::size_t peer_index, std::size_t piece) {
  Peer& p = peers_.at(peer_index);
  auto& set = std::get<PieceSet>(p.holdings);
  if (piece >= k_of(p)) throw std::out_of_range("give_piece: piece index >= k");
  const std::uint64_t bit = std::uint64_t{1} << piece;
  const bool fresh = !(set.mask & bit);
  set.mask |= bit;
  mark_if_done(p);
  return fresh;
}

bool Swarm::give_pool_chunk(std::size_t peer_index, std::size_t pool_index) {
  const Epoch& e = epochs_.at(peers_.at(peer_index).epoch);
  if (!e.pool) throw std::logic_error("give_pool_chunk: epoch has no pool");
  return give_chunk(peer_index, pool_chunk(e, pool_index));
}

bool Swarm::give_chunk(std::size_t peer_index, std::shared_ptr<const codec::CodedChunk> chunk) {
  Peer& p = peers_.at(peer_index);
  auto& holdings = std::get<CodedHoldings>(p.holdings);
  const std::size_t before = holdings.decoder.rank();
  if (holdings.decoder.absorb(*chunk) == before) return false;
  holdings.stored.push_back(std::move(chunk));
  mark_if_done(p);
  return true;
}

void Swarm::audit_slot(const SlotTrace& trace, const MetricsRecord& rec) {
  auto fail = [&](const std::string& what) {
    violations_.push_back("slot " + std::to_string(rec.slot) + ": " + what);
  };
  if (rec.population != arrivals_cum_ - departures_cum_) fail("population != arrivals - departures");
  if (rec.population != peers_.size()) fail("population != live peers");

  const std::uint64_t transfers = (trace.server_transfer ? 1 : 0) + trace.exchange_transfers.size();
  if (rec.M + transfers != last_M_ + trace.arrival_deficit) fail("M accounting identity broken");

  std::unordered_map<std::uint64_t, int> grants;
  for (const auto& t : trace.exchange_transfers)
    if (++grants[t.to] > 1) fail("peer " + std::to_string(t.to) + " got more than one exchange chunk");
  for (const auto& c : trace.contacts)
    if (c.innovative_available > 0 && !c.transferred)
      fail("peer " + std::to_string(c.downloader) + " skipped an innovative chunk");

  std::size_t total = std::accumulate(rec.counts.begin(), rec.counts.end(), std::size_t{0});
  if (total != rec.population) fail("chunk-count histogram does not sum to population");
  for (const auto& p : peers_)
    if (p.count() >= k_of(p) || p.done) fail("peer " + std::to_string(p.id) + " with k chunks survived the slot");
  if (rec.population > 0) {
    if (rec.M < rec.population || rec.M > rec.population * current_k()) fail("M outside [S, kS]");
  } else if (rec.M != 0) {
    fail("M nonzero in an empty swarm");
  }
}

MetricsRecord Swarm::step(SlotTrace* trace) {
  SlotTrace local;
  SlotTrace& tr = trace ? *trace : local;
  tr = SlotTrace{};

  if (controller_ && controller_->due(slot_)) {
    const double rate = static_cast<double>(controller_->arrivals()) / static_cast<double>(controller_->tau());
    if (auto k = controller_->window_tick()) {
      open_epoch(*k);
      tr.controller_event = ControllerEvent{slot_, epochs_.back().id, *k, rate};
    }
  }

  const std::size_t n = sample_arrivals();
  if (controller_) controller_->observe_arrivals(n);
  const auto fresh = admit(n);
  tr.arrivals = n;
  tr.arrival_deficit = static_cast<std::uint64_t>(n) * current_k();

  tr.server_transfer = server_action(fresh);
  tr.exchange_transfers = exchange_phase(cfg_.audit ? &tr.contacts : nullptr);
  tr.departed = departures();
  ++slot_;

  MetricsRecord rec = snapshot(*this);
  if (cfg_.audit) audit_slot(tr, rec);
  last_M_ = rec.M;
  return rec;
}

RunResult run(const SimConfig& cfg) {
  Swarm swarm(cfg);
  RunResult out;
  out.series.reserve(static_cast<std::size_t>(std::min<std::uint64_t>(cfg.max_slots, 1u << 20)));
  SlotTrace trace;
  while (swarm.slot() < cfg.max_slots) {
    out.series.push_back(swarm.step(&trace));
    if (trace.server_transfer) ++out.server_transfers;
    if (trace.controller_event) out.events.push_back(*trace.controller_event);
    if (out.series.back().population > cfg.pop_threshold) {
      out.verdict = Verdict::diverged;
      out.diverged_at = out.series.back().slot;
      break;
    }
  }
  out.violations = swarm.violations();
  out.decoded_departures = swarm.decoded_departures();
  return out;
}

}  // namespace fswarm
