#pragma once
// Layer construction and fame consensus. BvcEngine builds the base, voting
// and consensus layer towers for one algorithm configuration and runs the
// fast-decision fame consensus over them. HgFame runs the reference
// round-and-witness fame voting. Both process events strictly in insertion
// order. Fork-free graphs take a mask-based fast path; graphs with forks
// fall back to a literal evaluation of the definitions.

#include <cstdint>
#include <memory>
#include <unordered_map>
#include <vector>

#include "bvcast/algorithm_spec.hpp"
#include "bvcast/hashgraph.hpp"
#include "bvcast/layers.hpp"

namespace bvcast {

enum class Fame : std::uint8_t { Undecided, Famous, NotFamous };

inline constexpr std::uint32_t kNoTrigger = 0xffffffffu;

struct FameOptions {
  // Keep running the machinery of decided towers and record, per slot, the
  // first event of every creator whose own view of the votes decides it.
  // Re-decisions are checked against the recorded value.
  bool coverage = false;
  // Never dismantle tiers; keeps full layer snapshots available.
  bool keep_layers = false;
  bool record_decisions = false;
  // Take the literal evaluation path even on fork-free graphs. Slow; meant
  // for differential testing against the mask path.
  bool force_slow = false;
};

struct DecisionRecord {
  std::uint32_t tower = 0;
  NodeId slot = 0;
  bool famous = false;
  EventId trigger = kNoEvent;
};

struct TierSnapshot {
  // members[c] = events of creator c in this tier, ascending
  std::vector<std::vector<EventId>> members;
};

struct SlotSnapshot {
  std::vector<std::pair<EventId, Fame>> elements;
  // fame of the never-created member, decided in absentia
  Fame absent = Fame::Undecided;
};

struct TowerSnapshot {
  std::uint32_t index = 0;
  bool decided = false;
  std::vector<TierSnapshot> tiers;
  std::vector<SlotSnapshot> slots;
};

class BvcEngine {
 public:
  BvcEngine(const Hashgraph& g, const AlgorithmSpec& spec,
            const RoundTable* rounds, FameOptions opt = {});
  ~BvcEngine();

  // Must be called once per event, in insertion order.
  void advance(EventId e);

  std::uint32_t tower_count() const;
  bool tower_decided(std::uint32_t k) const;
  // Famous elements of tower k ascending by creator; empty when none or
  // undecided. Valid once tower_decided(k).
  const std::vector<EventId>& famous(std::uint32_t k) const;
  Fame slot_fame(std::uint32_t k, NodeId c) const;
  EventId slot_element(std::uint32_t k, NodeId c) const;

  std::uint64_t lemma_violations() const { return lemma_violations_; }
  std::uint64_t agreement_violations() const { return agreement_violations_; }
  const std::vector<DecisionRecord>& decisions() const { return decisions_; }
  // Coverage table of tower k: slot-major n*n matrix, entry [slot*n + c] is
  // the chain index of creator c's first deciding event, or kNoTrigger.
  const std::vector<std::uint32_t>& triggers(std::uint32_t k) const;

  TowerSnapshot snapshot(std::uint32_t k) const;
  bool fast() const;

 private:
  struct Fast;
  struct Slow;
  friend struct Fast;
  friend struct Slow;

  const Hashgraph& g_;
  AlgorithmSpec spec_;
  const RoundTable* rt_;
  FameOptions opt_;
  std::uint64_t lemma_violations_ = 0;
  std::uint64_t agreement_violations_ = 0;
  std::vector<DecisionRecord> decisions_;
  std::unique_ptr<Fast> fast_;
  std::unique_ptr<Slow> slow_;
  static const std::vector<EventId> no_events_;
  static const std::vector<std::uint32_t> no_trig_;
};

// Reference fame voting over rounds and witnesses. Fork-free graphs only.
class HgFame {
 public:
  HgFame(const Hashgraph& g, const RoundTable& rt, FameOptions opt = {});

  void advance(EventId e);

  // Rounds 1..settled() are fully decided and their famous witness sets are
  // frozen.
  std::uint32_t settled() const { return settled_; }
  const std::vector<EventId>& famous(std::uint32_t r) const;
  Fame fame(EventId w) const;

  std::uint64_t late_violations() const { return late_violations_; }
  std::uint64_t agreement_violations() const { return agreement_violations_; }
  const std::vector<DecisionRecord>& decisions() const { return decisions_; }
  // Coverage row of a witness: per creator the chain index of its first
  // deciding event, or kNoTrigger; empty vector when not tracked.
  const std::vector<std::uint32_t>& triggers(EventId w) const;

 private:
  struct Cov {
    std::vector<std::uint32_t> trig;  // per creator, kNoTrigger when unset
    std::uint64_t rec = 0;
  };

  // y votes on x; returns true when x no longer needs voters
  bool vote_on(EventId y, EventId x);
  bool decide_or_compare(EventId x, bool v, EventId y);
  bool covered(EventId x) const;
  void try_settle();

  const Hashgraph& g_;
  const RoundTable& rt_;
  FameOptions opt_;
  std::uint32_t n_;
  std::vector<Fame> fame_;                    // by event id, witnesses only
  std::unordered_map<EventId, std::vector<std::uint64_t>> votes_;
  std::vector<std::vector<EventId>> open_;    // per round: fame in flight
  std::vector<std::uint32_t> open_left_;      // per round: undecided count
  std::vector<std::vector<EventId>> ufw_;     // per settled round
  std::unordered_map<EventId, Cov> cov_;
  std::vector<EventId> last_of_;              // per creator
  std::uint64_t active_ = 0;
  std::uint32_t settled_ = 0;
  std::uint32_t seen_rounds_ = 0;
  EventId next_expected_ = 0;
  std::uint64_t late_violations_ = 0;
  std::uint64_t agreement_violations_ = 0;
  std::vector<DecisionRecord> decisions_;
  static const std::vector<EventId> empty_;
  static const std::vector<std::uint32_t> no_trig_;
};

}  // namespace bvcast
