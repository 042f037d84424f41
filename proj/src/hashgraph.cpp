#include "bvcast/hashgraph.hpp"

#include <algorithm>

namespace bvcast {

const std::vector<EventId> Hashgraph::kEmpty;

Hashgraph::Hashgraph(std::uint32_t n) : n_(n), f_((n - 1) / 3) {
  if (n == 0) fail(Errc::MalformedEvent, "node count must be positive");
  creators_.resize(n);
}

std::optional<Errc> Hashgraph::check_insert(const Event& e) const {
  const Digest& d = e.digest;
  if (d.creator >= n_) return Errc::MalformedEvent;
  if (e.self_parent.has_value() != e.other_parent.has_value())
    return Errc::MalformedEvent;
  if (e.self_parent) {
    if (e.self_parent->creator != d.creator) return Errc::MalformedEvent;
    if (d.index != e.self_parent->index + 1) return Errc::MalformedEvent;
  } else if (d.index != 0) {
    return Errc::MalformedEvent;
  }
  if (e.other_parent && e.other_parent->creator == d.creator)
    return Errc::MalformedEvent;
  if (e.other_parent && e.other_parent->creator >= n_)
    return Errc::MalformedEvent;
  if (d.hash != content_hash(d.creator, d.index, e.self_parent, e.other_parent,
                             e.timestamp, e.payload))
    return Errc::MalformedEvent;
  if (e.pseudo_signature != sign(d.hash, d.creator)) return Errc::MalformedEvent;
  if (by_hash_.count(d.hash)) return Errc::DuplicateEvent;
  for (const std::optional<Digest>& p : {e.self_parent, e.other_parent}) {
    if (!p) continue;
    auto it = by_hash_.find(p->hash);
    if (it == by_hash_.end()) return Errc::MissingParent;
    if (!(events_[it->second].digest == *p)) return Errc::MalformedEvent;
  }
  return std::nullopt;
}

EventId Hashgraph::insert(Event e) {
  if (auto err = check_insert(e)) fail(*err, "insert rejected");
  EventId id = static_cast<EventId>(events_.size());
  Links ln;
  if (e.self_parent) ln.sp = by_hash_.at(e.self_parent->hash);
  if (e.other_parent) ln.op = by_hash_.at(e.other_parent->hash);

  Bits anc;
  std::int64_t ct = 0;
  if (ln.sp != kNoEvent) {
    anc = ancestors_[ln.sp];
    ct = creation_time_[ln.sp];
  }
  if (ln.op != kNoEvent) {
    anc.or_with(ancestors_[ln.op]);
    ct = std::max(ct, creation_time_[ln.op] + 1);
  }
  anc.set(id);

  lai_.resize(static_cast<std::size_t>(id + 1) * n_, -1);
  std::int32_t* row = &lai_[static_cast<std::size_t>(id) * n_];
  for (EventId p : {ln.sp, ln.op}) {
    if (p == kNoEvent) continue;
    const std::int32_t* prow = &lai_[static_cast<std::size_t>(p) * n_];
    for (std::uint32_t c = 0; c < n_; ++c) row[c] = std::max(row[c], prow[c]);
  }
  NodeId c = e.digest.creator;
  row[c] = std::max(row[c], static_cast<std::int32_t>(e.digest.index));

  by_hash_.emplace(e.digest.hash, id);
  events_.push_back(std::move(e));
  links_.push_back(ln);
  children_.emplace_back();
  if (ln.sp != kNoEvent) children_[ln.sp].push_back(id);
  if (ln.op != kNoEvent && ln.op != ln.sp) children_[ln.op].push_back(id);
  ancestors_.push_back(std::move(anc));
  creation_time_.push_back(ct);

  CreatorState& cs = creators_[c];
  std::uint32_t index = events_[id].digest.index;
  if (cs.by_index.size() <= index) cs.by_index.resize(index + 1);
  cs.by_index[index].push_back(id);
  cs.events.push_back(id);
  if (cs.by_index[index].size() >= 2) cs.branched = true;
  if (cs.branched && !cs.fork) {
    for (EventId x : cs.events) {
      if (x != id && !follows(id, x)) {
        cs.fork = std::make_pair(x, id);
        ++forked_creators_;
        break;
      }
    }
  }
  return id;
}

std::optional<EventId> Hashgraph::find(std::uint64_t hash) const {
  auto it = by_hash_.find(hash);
  if (it == by_hash_.end()) return std::nullopt;
  return it->second;
}

EventId Hashgraph::require(std::uint64_t hash) const {
  auto it = by_hash_.find(hash);
  if (it == by_hash_.end()) fail(Errc::UnknownEvent, "no event with this hash");
  return it->second;
}

bool Hashgraph::follows(EventId a, EventId b) const {
  check_id(a);
  check_id(b);
  return ancestors_[a].test(b);
}

bool Hashgraph::is_fork(EventId a, EventId b) const {
  check_id(a);
  check_id(b);
  if (a == b) return false;
  if (events_[a].digest.creator != events_[b].digest.creator) return false;
  return !ancestors_[a].test(b) && !ancestors_[b].test(a);
}

bool Hashgraph::sees(EventId a, EventId b) const {
  if (!follows(a, b)) return false;
  NodeId c = events_[b].digest.creator;
  if (!creator_forked(c)) return true;
  std::vector<EventId> held;
  for (EventId x : creators_[c].events)
    if (ancestors_[a].test(x)) held.push_back(x);
  for (std::size_t i = 0; i < held.size(); ++i)
    for (std::size_t j = i + 1; j < held.size(); ++j)
      if (!ancestors_[held[j]].test(held[i]) && !ancestors_[held[i]].test(held[j]))
        return false;
  return true;
}

bool Hashgraph::clearly_follows(EventId a, EventId b) const {
  if (!follows(a, b)) return false;
  NodeId c = events_[b].digest.creator;
  if (!creator_forked(c)) return true;
  for (EventId x : creators_[c].events) {
    if (x == b || !ancestors_[a].test(x)) continue;
    if (!ancestors_[x].test(b) && !ancestors_[b].test(x)) return false;
  }
  return true;
}

std::optional<EventId> Hashgraph::latest_event_of(EventId a, NodeId c) const {
  std::int32_t idx = latest_index(a, c);
  if (idx < 0) return std::nullopt;
  const auto& lst = creators_[c].by_index[static_cast<std::uint32_t>(idx)];
  if (lst.size() == 1) return lst[0];
  for (EventId x : lst)
    if (ancestors_[a].test(x)) return x;
  return std::nullopt;
}

bool Hashgraph::has_intermediary(EventId a, EventId b, NodeId c,
                                 bool want_sees) const {
  bool target_forked = creator_forked(events_[b].digest.creator);
  if (!creator_forked(c) && !target_forked) {
    // The candidates by c reachable from a form a chain and both relations
    // collapse to plain reachability, so only the top of the chain matters.
    auto xt = latest_event_of(a, c);
    return xt && ancestors_[*xt].test(b);
  }
  for (EventId x : creators_[c].events) {
    if (!ancestors_[a].test(x)) continue;
    if (want_sees) {
      if (sees(a, x) && sees(x, b)) return true;
    } else {
      if (clearly_follows(x, b)) return true;
    }
  }
  return false;
}

std::uint32_t Hashgraph::intermediary_creators(EventId a, EventId b,
                                               bool want_sees) const {
  std::uint32_t count = 0;
  for (NodeId c = 0; c < n_; ++c)
    if (has_intermediary(a, b, c, want_sees)) ++count;
  return count;
}

bool Hashgraph::strongly_sees(EventId a, EventId b) const {
  if (!sees(a, b)) return false;
  return 3ull * intermediary_creators(a, b, true) > 2ull * n_;
}

bool Hashgraph::relaxed_strongly_sees(EventId a, EventId b) const {
  if (!sees(a, b)) return false;
  return 2ull * intermediary_creators(a, b, true) > n_ + f_;
}

bool Hashgraph::strongly_follows(EventId a, EventId b) const {
  if (!clearly_follows(a, b)) return false;
  return 2ull * intermediary_creators(a, b, false) > n_ + f_;
}

bool Hashgraph::is_supported(EventId e) const {
  check_id(e);
  bool target_forked = creator_forked(events_[e].digest.creator);
  std::uint32_t count = 0;
  for (NodeId c = 0; c < n_; ++c) {
    const CreatorState& cs = creators_[c];
    if (cs.events.empty()) continue;
    bool found = false;
    if (!cs.branched && !target_forked) {
      found = ancestors_[cs.events.back()].test(e);
    } else {
      for (EventId x : cs.events) {
        if (clearly_follows(x, e)) {
          found = true;
          break;
        }
      }
    }
    if (found) ++count;
  }
  return 2ull * count > n_ + f_;
}

const std::vector<EventId>& Hashgraph::events_of(NodeId c) const {
  return creators_.at(c).events;
}

const std::vector<EventId>& Hashgraph::at_index(NodeId c,
                                                std::uint32_t index) const {
  const CreatorState& cs = creators_.at(c);
  if (index >= cs.by_index.size()) return kEmpty;
  return cs.by_index[index];
}

std::optional<EventId> Hashgraph::latest_supported(NodeId c) const {
  const CreatorState& cs = creators_.at(c);
  for (auto it = cs.by_index.rbegin(); it != cs.by_index.rend(); ++it) {
    for (EventId x : *it) {
      if (is_supported(x)) return x;
    }
  }
  return std::nullopt;
}

}  // namespace bvcast
