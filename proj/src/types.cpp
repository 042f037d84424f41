#include "bvcast/types.hpp"

#include "bvcast/rng.hpp"

namespace bvcast {

namespace {

std::uint64_t absorb(std::uint64_t h, std::uint64_t v) {
  return mix64(h ^ v);
}

std::uint64_t absorb_digest(std::uint64_t h, const std::optional<Digest>& d) {
  if (!d) return absorb(h, 0x6e6f6e65ull);  // "none"
  h = absorb(h, d->hash);
  h = absorb(h, (static_cast<std::uint64_t>(d->creator) << 32) | d->index);
  return h;
}

}  // namespace

std::uint64_t content_hash(NodeId creator, std::uint32_t index,
                           const std::optional<Digest>& self_parent,
                           const std::optional<Digest>& other_parent,
                           std::int64_t timestamp,
                           const std::vector<std::uint8_t>& payload) {
  std::uint64_t h = 0x243f6a8885a308d3ull;
  h = absorb(h, (static_cast<std::uint64_t>(creator) << 32) | index);
  h = absorb_digest(h, self_parent);
  h = absorb_digest(h, other_parent);
  h = absorb(h, static_cast<std::uint64_t>(timestamp));
  h = absorb(h, payload.size());
  std::uint64_t word = 0;
  int fill = 0;
  for (std::uint8_t b : payload) {
    word = (word << 8) | b;
    if (++fill == 8) {
      h = absorb(h, word);
      word = 0;
      fill = 0;
    }
  }
  if (fill) h = absorb(h, word);
  return h;
}

std::uint64_t sign(std::uint64_t content, NodeId creator) {
  return mix64(content ^ mix64(0x5167ull + creator));
}

Event make_event(NodeId creator, std::optional<Digest> self_parent,
                 std::optional<Digest> other_parent, std::int64_t timestamp,
                 std::vector<std::uint8_t> payload) {
  Event e;
  e.digest.creator = creator;
  e.digest.index = self_parent ? self_parent->index + 1 : 0;
  e.self_parent = std::move(self_parent);
  e.other_parent = std::move(other_parent);
  e.timestamp = timestamp;
  e.payload = std::move(payload);
  e.digest.hash = content_hash(creator, e.digest.index, e.self_parent,
                               e.other_parent, timestamp, e.payload);
  e.pseudo_signature = sign(e.digest.hash, creator);
  return e;
}

}  // namespace bvcast
