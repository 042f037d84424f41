#pragma once
// Two-holder knowledge synchronization. Honest creators are covered by a
// plain last-index delta; forking creators by compressed fork information:
// per branch tip, the hash of a root event the requester is believed to
// hold already. Modeled as pure request/response values between holder
// states, with a binary wire form; no transport.

#include <cstdint>
#include <map>
#include <set>
#include <vector>

#include "bvcast/hashgraph.hpp"

namespace bvcast {

// Branch tips grouped by a shared root, both as content hashes.
struct CfiTuple {
  std::uint64_t root = 0;
  std::vector<std::uint64_t> tips;

  friend bool operator==(const CfiTuple&, const CfiTuple&) = default;
};

struct CreatorCfi {
  NodeId creator = 0;
  std::vector<CfiTuple> tuples;

  friend bool operator==(const CreatorCfi&, const CreatorCfi&) = default;
};

struct SyncRequest {
  // per creator: highest held index, or -1. For a creator the holder has
  // seen forking, the highest supported index instead.
  std::vector<std::int32_t> lia;
  std::vector<CreatorCfi> cfi;

  friend bool operator==(const SyncRequest&, const SyncRequest&) = default;
};

struct SyncResponse {
  std::vector<Event> events;  // topologically ordered
};

// Two same-creator events neither of which follows the other. Carries the
// full events: both are signed, so the pair convicts the creator alone.
struct ForkProof {
  Event a;
  Event b;
};

struct MalformedEvidence {
  NodeId sender = 0;
  Event bad;
};

struct MergeOutcome {
  std::uint32_t merged = 0;
  std::uint32_t duplicates = 0;
  // events whose parents are still unknown; kept inside the holder and
  // retried on the next merge
  std::uint32_t deferred = 0;
  // creators whose chains conflicted with incoming digests; each needs a
  // follow-up exchange
  std::vector<NodeId> suspects;
  std::uint32_t new_proofs = 0;
  bool sender_banned = false;
};

class SyncHolder {
 public:
  explicit SyncHolder(Hashgraph g) : g_(std::move(g)) {}

  const Hashgraph& graph() const { return g_; }

  std::vector<std::int32_t> last_index_array() const;
  // Tuples for one creator: per self-parent-tree leaf, the latest
  // supported ancestor (the start of the chain when nothing is supported),
  // compacted by shared root. Works for unbranched creators too, where it
  // degenerates to one tuple.
  std::vector<CfiTuple> fork_info(NodeId creator) const;
  // The events root..tip inclusive along self-parent links.
  std::vector<Event> tree_branch(std::uint64_t root_hash,
                                 std::uint64_t tip_hash) const;

  // Index array plus fork tuples not yet sent to this peer.
  SyncRequest build_request(std::uint32_t peer);
  // Like build_request but forces fresh tuples for the given creators,
  // whether branched here or not. Used after a merge reported suspects.
  SyncRequest followup_request(std::uint32_t peer,
                               const std::vector<NodeId>& suspects);
  // Everything the requester lacks according to the request: index deltas
  // for unbranched creators, branch segments for forking ones.
  SyncResponse serve(const SyncRequest& req) const;
  // Validates and inserts, recording fork proofs, suspects, and bans.
  MergeOutcome merge(NodeId sender, const SyncResponse& resp);

  const std::vector<ForkProof>& proofs() const { return proofs_; }
  const std::vector<MalformedEvidence>& malformed() const { return bad_; }
  bool banned(NodeId v) const { return banned_.count(v) > 0; }
  std::uint32_t stashed() const { return static_cast<std::uint32_t>(stash_.size()); }

 private:
  bool validate_shape(const Event& e) const;
  std::vector<EventId> chain_of(EventId tip) const;
  void note_fork(EventId a, EventId b);

  Hashgraph g_;
  std::set<NodeId> banned_;
  std::vector<ForkProof> proofs_;
  std::vector<MalformedEvidence> bad_;
  std::set<std::pair<std::uint64_t, std::uint64_t>> proof_seen_;
  // per peer: (root, tip) pairs already transmitted
  std::map<std::uint32_t, std::set<std::pair<std::uint64_t, std::uint64_t>>>
      sent_;
  std::vector<Event> stash_;
};

// Little-endian length-prefixed encodings; decoders throw on truncated or
// oversized input.
std::vector<std::uint8_t> encode(const SyncRequest& req);
std::vector<std::uint8_t> encode(const SyncResponse& resp);
SyncRequest decode_request(const std::vector<std::uint8_t>& wire);
SyncResponse decode_response(const std::vector<std::uint8_t>& wire);

struct ExchangeStats {
  std::uint32_t rounds = 0;        // request/response pairs, follow-ups included
  std::uint32_t first_events = 0;  // event count of the first response
  std::uint32_t total_events = 0;
  std::uint32_t proofs = 0;        // fork proofs emitted at the requester
  bool clean = true;               // no stuck events and no repeated suspects
};

// Runs request, serve, merge, then one follow-up round per suspected
// creator until the requester stops learning. Messages travel through the
// wire encoding. dst ends up knowing everything src knows.
ExchangeStats sync_pull(SyncHolder& dst, SyncHolder& src, std::uint32_t dst_key,
                        std::uint32_t src_key);

}  // namespace bvcast
