#pragma once
// Append-only DAG of gossip events with the reachability predicates the
// consensus algorithms are built from. Events are addressed by their
// insertion id; insertion order is always a topological order because an
// event can only be inserted after both of its parents.

#include <cstdint>
#include <optional>
#include <unordered_map>
#include <utility>
#include <vector>

#include "bvcast/bits.hpp"
#include "bvcast/errors.hpp"
#include "bvcast/types.hpp"

namespace bvcast {

class Hashgraph {
 public:
  explicit Hashgraph(std::uint32_t n);

  std::uint32_t node_count() const { return n_; }
  // Largest tolerated number of faulty nodes, floor((n-1)/3).
  std::uint32_t fault_bound() const { return f_; }
  std::uint32_t size() const { return static_cast<std::uint32_t>(events_.size()); }

  // Checks whether the event could be inserted now. Returns the violation,
  // or nothing if the event is acceptable.
  std::optional<Errc> check_insert(const Event& e) const;

  // Inserts the event, throwing Error on any violation check_insert reports.
  EventId insert(Event e);

  const Event& event(EventId id) const { return events_.at(id); }
  std::optional<EventId> find(std::uint64_t hash) const;
  EventId require(std::uint64_t hash) const;

  EventId self_parent_id(EventId id) const { return links_[id].sp; }
  EventId other_parent_id(EventId id) const { return links_[id].op; }
  const std::vector<EventId>& children(EventId id) const { return children_[id]; }

  // Reflexive-transitive reachability through parent links.
  bool follows(EventId a, EventId b) const;
  // Same creator, neither reachable from the other.
  bool is_fork(EventId a, EventId b) const;
  // follows(a, b) and a follows no fork pair by b's creator.
  bool sees(EventId a, EventId b) const;
  // follows(a, b) and a follows no event forming a fork with b itself.
  bool clearly_follows(EventId a, EventId b) const;
  // sees(a, b) through more than 2n/3 creators with an event x such that
  // sees(a, x) and sees(x, b).
  bool strongly_sees(EventId a, EventId b) const;
  // Like strongly_sees but with the relaxed threshold (n + f) / 2.
  bool relaxed_strongly_sees(EventId a, EventId b) const;
  // clearly_follows(a, b) through more than (n + f) / 2 creators with an
  // event x such that follows(a, x) and clearly_follows(x, b).
  bool strongly_follows(EventId a, EventId b) const;
  // More than (n + f) / 2 creators own an event clearly following e.
  bool is_supported(EventId e) const;

  // Longest path length to the event counting other-parent edges only.
  std::int64_t creation_time(EventId id) const { return creation_time_[id]; }

  const Bits& ancestors(EventId id) const { return ancestors_[id]; }

  const std::vector<EventId>& events_of(NodeId c) const;
  const std::vector<EventId>& at_index(NodeId c, std::uint32_t index) const;
  // The creator's self-parent forest has a branch point or several roots.
  bool branched(NodeId c) const { return creators_.at(c).branched; }
  // The creator owns a genuine fork: two mutually unreachable events.
  bool creator_forked(NodeId c) const { return creators_.at(c).fork.has_value(); }
  std::optional<std::pair<EventId, EventId>> fork_pair(NodeId c) const {
    return creators_.at(c).fork;
  }
  bool has_forks() const { return forked_creators_ > 0; }

  // Largest index of an ancestor of a created by c, or -1.
  std::int32_t latest_index(EventId a, NodeId c) const {
    return lai_[static_cast<std::size_t>(a) * n_ + c];
  }
  // The highest-index ancestor of a created by c.
  std::optional<EventId> latest_event_of(EventId a, NodeId c) const;

  // Highest-index supported event of the creator, if any.
  std::optional<EventId> latest_supported(NodeId c) const;

  void check_id(EventId id) const {
    if (id >= events_.size()) fail(Errc::UnknownEvent, "no event with this id");
  }

 private:
  struct Links {
    EventId sp = kNoEvent;
    EventId op = kNoEvent;
  };
  struct CreatorState {
    std::vector<EventId> events;
    std::vector<std::vector<EventId>> by_index;
    bool branched = false;
    std::optional<std::pair<EventId, EventId>> fork;
  };

  // True when some event by c among a's ancestors satisfies REL(x, b) where
  // REL is sees (want_sees) or clearly_follows; see strongly_sees.
  bool has_intermediary(EventId a, EventId b, NodeId c, bool want_sees) const;
  std::uint32_t intermediary_creators(EventId a, EventId b, bool want_sees) const;

  std::uint32_t n_;
  std::uint32_t f_;
  std::vector<Event> events_;
  std::vector<Links> links_;
  std::vector<std::vector<EventId>> children_;
  std::vector<Bits> ancestors_;
  std::vector<std::int32_t> lai_;  // size() * n_, latest ancestor index per creator
  std::vector<std::int64_t> creation_time_;
  std::vector<CreatorState> creators_;
  std::unordered_map<std::uint64_t, EventId> by_hash_;
  std::uint32_t forked_creators_ = 0;
  static const std::vector<EventId> kEmpty;
};

}  // namespace bvcast
