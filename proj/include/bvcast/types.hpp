#pragma once
// Event record for the gossip DAG. An event is identified by a digest of
// (hash, creator, index) where index is the depth of its self-parent chain.

#include <cstdint>
#include <optional>
#include <vector>

namespace bvcast {

using NodeId = std::uint32_t;
using EventId = std::uint32_t;
inline constexpr EventId kNoEvent = 0xffffffffu;

struct Digest {
  std::uint64_t hash = 0;
  NodeId creator = 0;
  std::uint32_t index = 0;

  friend bool operator==(const Digest&, const Digest&) = default;
};

struct Event {
  Digest digest;
  std::optional<Digest> self_parent;
  std::optional<Digest> other_parent;
  std::int64_t timestamp = 0;
  std::uint64_t pseudo_signature = 0;
  std::vector<std::uint8_t> payload;
};

// Non-cryptographic 64-bit content hash over every field that identifies an
// event. Stands in for a real digest; collisions are negligible at the
// scales simulated here.
std::uint64_t content_hash(NodeId creator, std::uint32_t index,
                           const std::optional<Digest>& self_parent,
                           const std::optional<Digest>& other_parent,
                           std::int64_t timestamp,
                           const std::vector<std::uint8_t>& payload);

// Simulated signature: an independent hash bound to the content hash and
// the creator id.
std::uint64_t sign(std::uint64_t content, NodeId creator);

// Builds an event with a consistent digest and signature. The index is the
// self-parent's index plus one, or zero for a starting event.
Event make_event(NodeId creator, std::optional<Digest> self_parent,
                 std::optional<Digest> other_parent, std::int64_t timestamp,
                 std::vector<std::uint8_t> payload = {});

}  // namespace bvcast
