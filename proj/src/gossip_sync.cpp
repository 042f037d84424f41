#include "bvcast/gossip_sync.hpp"

#include <algorithm>

#include "bvcast/errors.hpp"

namespace bvcast {

namespace {

// ---- wire helpers ----

void put32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put64(std::vector<std::uint8_t>& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

struct Reader {
  const std::vector<std::uint8_t>& buf;
  std::size_t pos = 0;

  void need(std::size_t k) const {
    if (buf.size() - pos < k) fail(Errc::ParseError, "truncated sync message");
  }
  std::uint32_t get32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= std::uint32_t(buf[pos++]) << (8 * i);
    return v;
  }
  std::uint64_t get64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= std::uint64_t(buf[pos++]) << (8 * i);
    return v;
  }
  std::uint8_t get8() {
    need(1);
    return buf[pos++];
  }
  // guards count fields against absurd allocations: every element of a
  // counted run occupies at least `elem` bytes
  std::uint32_t count(std::uint32_t elem) {
    std::uint32_t c = get32();
    if (c > (buf.size() - pos) / elem)
      fail(Errc::ParseError, "sync message count overruns the buffer");
    return c;
  }
};

void put_digest(std::vector<std::uint8_t>& out, const Digest& d) {
  put64(out, d.hash);
  put32(out, d.creator);
  put32(out, d.index);
}

Digest get_digest(Reader& r) {
  Digest d;
  d.hash = r.get64();
  d.creator = r.get32();
  d.index = r.get32();
  return d;
}

void put_event(std::vector<std::uint8_t>& out, const Event& e) {
  std::vector<std::uint8_t> body;
  put_digest(body, e.digest);
  body.push_back(e.self_parent ? 1 : 0);
  if (e.self_parent) {
    put_digest(body, *e.self_parent);
    put_digest(body, *e.other_parent);
  }
  put64(body, static_cast<std::uint64_t>(e.timestamp));
  put64(body, e.pseudo_signature);
  put32(body, static_cast<std::uint32_t>(e.payload.size()));
  body.insert(body.end(), e.payload.begin(), e.payload.end());
  put32(out, static_cast<std::uint32_t>(body.size()));
  out.insert(out.end(), body.begin(), body.end());
}

Event get_event(Reader& r) {
  std::uint32_t len = r.get32();
  r.need(len);
  std::size_t end = r.pos + len;
  Event e;
  e.digest = get_digest(r);
  std::uint8_t parents = r.get8();
  if (parents > 1) fail(Errc::ParseError, "bad parent flag");
  if (parents) {
    e.self_parent = get_digest(r);
    e.other_parent = get_digest(r);
  }
  e.timestamp = static_cast<std::int64_t>(r.get64());
  e.pseudo_signature = r.get64();
  std::uint32_t plen = r.count(1);
  e.payload.assign(r.buf.begin() + r.pos, r.buf.begin() + r.pos + plen);
  r.pos += plen;
  if (r.pos != end) fail(Errc::ParseError, "event record has trailing bytes");
  return e;
}

}  // namespace

// ---- holder queries ----

std::vector<std::int32_t> SyncHolder::last_index_array() const {
  std::vector<std::int32_t> lia(g_.node_count(), -1);
  for (NodeId c = 0; c < g_.node_count(); ++c) {
    if (g_.events_of(c).empty()) continue;
    if (!g_.branched(c)) {
      lia[c] = static_cast<std::int32_t>(g_.events_of(c).size()) - 1;
    } else if (auto s = g_.latest_supported(c)) {
      lia[c] = static_cast<std::int32_t>(g_.event(*s).digest.index);
    }
  }
  return lia;
}

std::vector<EventId> SyncHolder::chain_of(EventId tip) const {
  std::vector<EventId> chain;
  for (EventId e = tip; e != kNoEvent; e = g_.self_parent_id(e))
    chain.push_back(e);
  std::reverse(chain.begin(), chain.end());
  return chain;
}

std::vector<CfiTuple> SyncHolder::fork_info(NodeId creator) const {
  const std::vector<EventId>& own = g_.events_of(creator);
  std::set<EventId> has_child;
  for (EventId e : own) {
    EventId sp = g_.self_parent_id(e);
    if (sp != kNoEvent) has_child.insert(sp);
  }
  // root EventId -> tip hashes, walked in ascending tip id for determinism
  std::map<EventId, std::vector<std::uint64_t>> by_root;
  for (EventId tip : own) {
    if (has_child.count(tip)) continue;
    std::vector<EventId> chain = chain_of(tip);
    EventId root = chain.front();
    for (auto it = chain.rbegin(); it != chain.rend(); ++it) {
      if (g_.is_supported(*it)) {
        root = *it;
        break;
      }
    }
    by_root[root].push_back(g_.event(tip).digest.hash);
  }
  std::vector<CfiTuple> out;
  for (auto& [root, tips] : by_root)
    out.push_back(CfiTuple{g_.event(root).digest.hash, std::move(tips)});
  return out;
}

std::vector<Event> SyncHolder::tree_branch(std::uint64_t root_hash,
                                           std::uint64_t tip_hash) const {
  std::optional<EventId> root = g_.find(root_hash);
  std::optional<EventId> tip = g_.find(tip_hash);
  if (!root || !tip) fail(Errc::UnknownEvent, "branch endpoint not held");
  std::vector<EventId> chain;
  EventId e = *tip;
  while (e != kNoEvent) {
    chain.push_back(e);
    if (e == *root) break;
    e = g_.self_parent_id(e);
  }
  if (chain.back() != *root)
    fail(Errc::NotAnAncestorChain, "tip does not descend from the root");
  std::vector<Event> out;
  for (auto it = chain.rbegin(); it != chain.rend(); ++it)
    out.push_back(g_.event(*it));
  return out;
}

// ---- request building ----

SyncRequest SyncHolder::build_request(std::uint32_t peer) {
  return followup_request(peer, {});
}

SyncRequest SyncHolder::followup_request(std::uint32_t peer,
                                         const std::vector<NodeId>& suspects) {
  SyncRequest req;
  req.lia = last_index_array();
  auto& cache = sent_[peer];
  for (NodeId c = 0; c < g_.node_count(); ++c) {
    bool forced =
        std::find(suspects.begin(), suspects.end(), c) != suspects.end();
    if (!forced && !g_.branched(c)) continue;
    if (g_.events_of(c).empty()) continue;
    CreatorCfi entry{c, {}};
    for (const CfiTuple& t : fork_info(c)) {
      CfiTuple fresh{t.root, {}};
      for (std::uint64_t tip : t.tips) {
        if (cache.insert({t.root, tip}).second || forced)
          fresh.tips.push_back(tip);
      }
      if (!fresh.tips.empty()) entry.tuples.push_back(fresh);
    }
    if (!entry.tuples.empty()) req.cfi.push_back(entry);
  }
  return req;
}

// ---- serving ----

SyncResponse SyncHolder::serve(const SyncRequest& req) const {
  if (req.lia.size() != g_.node_count())
    fail(Errc::MalformedScenario, "index array length mismatch");
  std::vector<const CreatorCfi*> reported(g_.node_count(), nullptr);
  for (const CreatorCfi& c : req.cfi) {
    if (c.creator >= g_.node_count())
      fail(Errc::MalformedScenario, "fork info for an unknown creator");
    reported[c.creator] = &c;
  }

  std::set<EventId> picked;
  for (NodeId c = 0; c < g_.node_count(); ++c) {
    const std::vector<EventId>& own = g_.events_of(c);
    if (own.empty()) continue;
    const CreatorCfi* rc = reported[c];
    std::int32_t lia_c = req.lia[c];
    if (!g_.branched(c) && !rc) {
      for (EventId e : own) {
        if (static_cast<std::int32_t>(g_.event(e).digest.index) > lia_c)
          picked.insert(e);
      }
      continue;
    }
    // the requester's side of the tree: every reported hash we hold proves
    // the requester has that event's whole self-parent chain
    std::vector<std::vector<EventId>> proof_chains;
    if (rc) {
      for (const CfiTuple& t : rc->tuples) {
        std::vector<std::uint64_t> hs = t.tips;
        hs.push_back(t.root);
        for (std::uint64_t h : hs) {
          if (auto id = g_.find(h)) proof_chains.push_back(chain_of(*id));
        }
      }
    }
    std::set<EventId> has_child;
    for (EventId e : own) {
      EventId sp = g_.self_parent_id(e);
      if (sp != kNoEvent) has_child.insert(sp);
    }
    for (EventId tip : own) {
      if (has_child.count(tip)) continue;
      std::vector<EventId> chain = chain_of(tip);
      std::int32_t depth = static_cast<std::int32_t>(chain.size()) - 1;
      std::int32_t floor = -1;
      bool covered = false;
      if (rc) {
        for (const std::vector<EventId>& pc : proof_chains) {
          std::int32_t k = std::min<std::int32_t>(
              depth, static_cast<std::int32_t>(pc.size()) - 1);
          while (k >= 0 && chain[k] != pc[k]) --k;
          if (k == depth) covered = true;
          floor = std::max(floor, k);
        }
      } else {
        // the requester saw no fork here; assume its chain matches ours up
        // to its index. A wrong assumption surfaces as a digest conflict
        // and is repaired by the follow-up round.
        floor = std::min(lia_c, depth - 1);
      }
      if (covered) continue;
      // never cut above our own latest supported ancestor: everything
      // after it is branch-specific and the requester may lack it
      std::int32_t sup = -1;
      for (std::int32_t k = depth; k >= 0; --k) {
        if (g_.is_supported(chain[k])) {
          sup = k;
          break;
        }
      }
      std::int32_t cut = std::min(sup, floor);
      for (std::int32_t k = cut + 1; k <= depth; ++k) picked.insert(chain[k]);
    }
  }

  SyncResponse out;
  for (EventId e : picked) out.events.push_back(g_.event(e));
  return out;
}

// ---- merging ----

bool SyncHolder::validate_shape(const Event& e) const {
  const Digest& d = e.digest;
  if (d.creator >= g_.node_count()) return false;
  if (e.self_parent.has_value() != e.other_parent.has_value()) return false;
  if (e.self_parent) {
    if (e.self_parent->creator != d.creator) return false;
    if (d.index != e.self_parent->index + 1) return false;
    if (e.other_parent->creator == d.creator) return false;
    if (e.other_parent->creator >= g_.node_count()) return false;
  } else if (d.index != 0) {
    return false;
  }
  if (d.hash != content_hash(d.creator, d.index, e.self_parent, e.other_parent,
                             e.timestamp, e.payload))
    return false;
  return e.pseudo_signature == sign(d.hash, d.creator);
}

void SyncHolder::note_fork(EventId a, EventId b) {
  if (!g_.is_fork(a, b)) return;
  std::uint64_t ha = g_.event(a).digest.hash;
  std::uint64_t hb = g_.event(b).digest.hash;
  if (!proof_seen_.insert({std::min(ha, hb), std::max(ha, hb)}).second) return;
  proofs_.push_back(ForkProof{g_.event(a), g_.event(b)});
}

MergeOutcome SyncHolder::merge(NodeId sender, const SyncResponse& resp) {
  MergeOutcome out;
  if (banned_.count(sender)) {
    out.sender_banned = true;
    return out;
  }
  std::vector<Event> pending = std::move(stash_);
  stash_.clear();
  pending.insert(pending.end(), resp.events.begin(), resp.events.end());
  std::set<NodeId> suspects;
  bool halted = false;

  std::size_t proofs_at_entry = proofs_.size();
  bool progress = true;
  while (progress && !halted) {
    progress = false;
    std::vector<Event> next;
    for (Event& e : pending) {
      if (halted) break;  // the unprocessed tail is discarded
      if (!validate_shape(e)) {
        banned_.insert(sender);
        bad_.push_back(MalformedEvidence{sender, e});
        out.sender_banned = true;
        halted = true;  // nothing after a forged event is trustworthy
        continue;
      }
      if (g_.find(e.digest.hash)) {
        ++out.duplicates;
        continue;
      }
      bool defer = false;
      bool drop = false;
      for (const std::optional<Digest>& p : {e.self_parent, e.other_parent}) {
        if (!p) continue;
        if (auto held = g_.find(p->hash)) {
          if (!(g_.event(*held).digest == *p)) {
            // signed event misstating a held event's digest: the creator
            // provably lied
            banned_.insert(e.digest.creator);
            bad_.push_back(MalformedEvidence{e.digest.creator, e});
            drop = true;
          }
          continue;
        }
        if (!g_.at_index(p->creator, p->index).empty()) {
          // an unknown hash at an occupied position: someone forked, or
          // the sender forged the reference; a follow-up settles which
          suspects.insert(p->creator);
        }
        defer = true;
      }
      if (drop) continue;
      if (defer) {
        next.push_back(std::move(e));
        continue;
      }
      const std::vector<EventId>& same =
          g_.at_index(e.digest.creator, e.digest.index);
      std::vector<EventId> rivals(same.begin(), same.end());
      EventId id = g_.insert(std::move(e));
      for (EventId r : rivals) note_fork(r, id);
      ++out.merged;
      progress = true;
    }
    pending.swap(next);
    if (pending.empty()) break;
  }

  stash_ = std::move(pending);
  out.deferred = static_cast<std::uint32_t>(stash_.size());
  out.new_proofs = static_cast<std::uint32_t>(proofs_.size() - proofs_at_entry);
  // report only suspicions that are still open: a conflict that resolved
  // during this merge needs no follow-up
  suspects.clear();
  for (const Event& e : stash_) {
    for (const std::optional<Digest>& p : {e.self_parent, e.other_parent}) {
      if (!p || g_.find(p->hash)) continue;
      if (!g_.at_index(p->creator, p->index).empty()) suspects.insert(p->creator);
    }
  }
  for (NodeId c : suspects) {
    if (!banned_.count(c)) out.suspects.push_back(c);
  }
  return out;
}

// ---- wire ----

std::vector<std::uint8_t> encode(const SyncRequest& req) {
  std::vector<std::uint8_t> body;
  put32(body, static_cast<std::uint32_t>(req.lia.size()));
  for (std::int32_t v : req.lia) put32(body, static_cast<std::uint32_t>(v));
  put32(body, static_cast<std::uint32_t>(req.cfi.size()));
  for (const CreatorCfi& c : req.cfi) {
    put32(body, c.creator);
    put32(body, static_cast<std::uint32_t>(c.tuples.size()));
    for (const CfiTuple& t : c.tuples) {
      put64(body, t.root);
      put32(body, static_cast<std::uint32_t>(t.tips.size()));
      for (std::uint64_t h : t.tips) put64(body, h);
    }
  }
  std::vector<std::uint8_t> out;
  put32(out, static_cast<std::uint32_t>(body.size()));
  out.insert(out.end(), body.begin(), body.end());
  return out;
}

std::vector<std::uint8_t> encode(const SyncResponse& resp) {
  std::vector<std::uint8_t> body;
  put32(body, static_cast<std::uint32_t>(resp.events.size()));
  for (const Event& e : resp.events) put_event(body, e);
  std::vector<std::uint8_t> out;
  put32(out, static_cast<std::uint32_t>(body.size()));
  out.insert(out.end(), body.begin(), body.end());
  return out;
}

SyncRequest decode_request(const std::vector<std::uint8_t>& wire) {
  Reader r{wire};
  std::uint32_t len = r.get32();
  if (len != wire.size() - 4) fail(Errc::ParseError, "message length mismatch");
  SyncRequest req;
  std::uint32_t n = r.count(4);
  req.lia.reserve(n);
  for (std::uint32_t i = 0; i < n; ++i)
    req.lia.push_back(static_cast<std::int32_t>(r.get32()));
  std::uint32_t creators = r.count(8);
  for (std::uint32_t i = 0; i < creators; ++i) {
    CreatorCfi c;
    c.creator = r.get32();
    std::uint32_t tuples = r.count(12);
    for (std::uint32_t j = 0; j < tuples; ++j) {
      CfiTuple t;
      t.root = r.get64();
      std::uint32_t tips = r.count(8);
      for (std::uint32_t k = 0; k < tips; ++k) t.tips.push_back(r.get64());
      c.tuples.push_back(std::move(t));
    }
    req.cfi.push_back(std::move(c));
  }
  if (r.pos != wire.size()) fail(Errc::ParseError, "trailing bytes");
  return req;
}

SyncResponse decode_response(const std::vector<std::uint8_t>& wire) {
  Reader r{wire};
  std::uint32_t len = r.get32();
  if (len != wire.size() - 4) fail(Errc::ParseError, "message length mismatch");
  SyncResponse resp;
  std::uint32_t count = r.count(4);
  for (std::uint32_t i = 0; i < count; ++i) resp.events.push_back(get_event(r));
  if (r.pos != wire.size()) fail(Errc::ParseError, "trailing bytes");
  return resp;
}

// ---- exchange driver ----

ExchangeStats sync_pull(SyncHolder& dst, SyncHolder& src, std::uint32_t dst_key,
                        std::uint32_t src_key) {
  (void)dst_key;
  ExchangeStats st;
  auto round = [&](const SyncRequest& q) {
    SyncRequest q2 = decode_request(encode(q));
    SyncResponse resp = src.serve(q2);
    SyncResponse r2 = decode_response(encode(resp));
    if (st.rounds == 0)
      st.first_events = static_cast<std::uint32_t>(r2.events.size());
    st.total_events += static_cast<std::uint32_t>(r2.events.size());
    ++st.rounds;
    return dst.merge(static_cast<NodeId>(src_key), r2);
  };
  MergeOutcome out = round(dst.build_request(src_key));
  std::set<NodeId> chased;
  while (!out.suspects.empty()) {
    std::vector<NodeId> fresh;
    for (NodeId c : out.suspects) {
      if (chased.insert(c).second) {
        fresh.push_back(c);
      } else {
        st.clean = false;
      }
    }
    if (fresh.empty()) break;
    out = round(dst.followup_request(src_key, fresh));
  }
  if (dst.stashed()) st.clean = false;
  st.proofs = static_cast<std::uint32_t>(dst.proofs().size());
  return st;
}

}  // namespace bvcast
