#pragma once
// Round assignment plus the lane machinery shared by the layer engines.
// Lanes hold one 64 bit creator mask per event. A column lane tracks, for a
// single target event, the creators owning an intermediary between the
// current event and the target; the popcount crossing a threshold means the
// current event strongly sees or strongly follows the target. A row lane
// accumulates which members of one layer the current event reaches that way.

#include <bit>
#include <cstdint>
#include <vector>

#include "bvcast/errors.hpp"
#include "bvcast/hashgraph.hpp"
#include "bvcast/types.hpp"

namespace bvcast {

inline constexpr std::uint32_t kNoSlot = 0xffffffffu;

// Pool of per-event mask vectors indexed by lane slot. Slots are recycled;
// a birth id guards reads so a value written by a previous tenant of the
// slot reads as zero.
class LanePool {
 public:
  std::uint32_t alloc(EventId birth) {
    std::uint32_t slot;
    if (!free_.empty()) {
      slot = free_.back();
      free_.pop_back();
    } else {
      slot = hw_++;
      birth_.resize(hw_);
    }
    birth_[slot] = birth;
    return slot;
  }

  void release(std::uint32_t slot) { free_.push_back(slot); }

  void begin(EventId e) {
    if (vals_.size() <= e) vals_.resize(e + 1);
    vals_[e].assign(hw_, 0);
  }

  void drop(EventId e) {
    if (e < vals_.size()) {
      vals_[e].clear();
      vals_[e].shrink_to_fit();
    }
  }

  std::uint64_t read(EventId parent, std::uint32_t slot) const {
    if (parent == kNoEvent || slot == kNoSlot) return 0;
    const auto& v = vals_[parent];
    if (slot >= v.size() || birth_[slot] > parent) return 0;
    return v[slot];
  }

  std::uint64_t inherited(EventId sp, EventId op, std::uint32_t slot) const {
    return read(sp, slot) | read(op, slot);
  }

  std::vector<std::uint64_t>& at(EventId e) { return vals_[e]; }
  const std::vector<std::uint64_t>& at(EventId e) const { return vals_[e]; }
  std::uint32_t high_water() const { return hw_; }

 private:
  std::vector<std::vector<std::uint64_t>> vals_;
  std::vector<EventId> birth_;
  std::vector<std::uint32_t> free_;
  std::uint32_t hw_ = 0;
};

struct EventRound {
  std::uint32_t round = 1;
  // Highest witness round on the self-parent chain, this event included.
  std::uint32_t chain_hw = 0;
  bool witness = false;
  // Creators of previous round witnesses the event strongly sees. Filled on
  // fork-free graphs only; the forked path recomputes sets from predicates.
  std::uint64_t prev_seen = 0;
};

// Rounds and witnesses per the reference consensus: an event's round is the
// maximum of its parents' rounds, plus one if it strongly sees more than
// 2n/3 witnesses of that round; an event is a witness if it has no
// self-parent or a higher round than it.
class RoundTable {
 public:
  static RoundTable compute(const Hashgraph& g);

  std::uint32_t round(EventId e) const { return info_[e].round; }
  bool witness(EventId e) const { return info_[e].witness; }
  std::uint32_t chain_hw(EventId e) const { return info_[e].chain_hw; }
  std::uint64_t prev_seen(EventId e) const { return info_[e].prev_seen; }
  const EventRound& at(EventId e) const { return info_[e]; }

  // Witnesses of round r in insertion order; r is 1-based.
  const std::vector<EventId>& witnesses(std::uint32_t r) const {
    if (r == 0 || r > by_round_.size()) return empty_;
    return by_round_[r - 1];
  }
  std::uint32_t max_round() const {
    return static_cast<std::uint32_t>(by_round_.size());
  }
  bool fast() const { return fast_; }

 private:
  std::vector<EventRound> info_;
  std::vector<std::vector<EventId>> by_round_;
  bool fast_ = true;
  static const std::vector<EventId> empty_;
};

}  // namespace bvcast
