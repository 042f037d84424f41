#pragma once
// Total ordering of committed events on top of the fame outputs. FastOrder
// commits the closure below each decided tower's famous elements in waves;
// HgOrder computes received rounds against settled famous witness sets.

#include <cstdint>
#include <vector>

#include "bvcast/fame.hpp"
#include "bvcast/hashgraph.hpp"
#include "bvcast/layers.hpp"

namespace bvcast {

struct Commit {
  EventId id = kNoEvent;
  std::uint32_t layer = 0;     // tower index, or received round
  std::uint32_t sublayer = 0;  // wave within the layer; 0 for the reference
  std::int64_t timestamp = 0;  // consensus timestamp
  std::uint64_t key = 0;       // whitened signature, final sort key
};

class FastOrder {
 public:
  FastOrder(const Hashgraph& g, const BvcEngine& eng);

  // pick up newly decided towers; safe to call after every advance
  void poll();

  const std::vector<Commit>& stream() const { return stream_; }
  bool committed(EventId e) const { return committed_[e] != 0; }
  std::uint32_t processed_layers() const { return next_k_ - 1; }
  std::uint64_t key_violations() const { return key_violations_; }

 private:
  const Hashgraph& g_;
  const BvcEngine& eng_;
  std::vector<Commit> stream_;
  std::vector<char> committed_;
  std::uint32_t next_k_ = 1;
  std::uint64_t key_violations_ = 0;
};

class HgOrder {
 public:
  HgOrder(const Hashgraph& g, const RoundTable& rt, const HgFame& fame);

  // processed = number of events advanced through the fame engine so far
  void poll(EventId processed);

  const std::vector<Commit>& stream() const { return stream_; }
  bool committed(EventId e) const { return committed_[e] != 0; }
  std::uint32_t processed_layers() const { return done_; }
  std::uint64_t key_violations() const { return key_violations_; }

 private:
  void commit_round(std::uint32_t r);

  const Hashgraph& g_;
  const RoundTable& rt_;
  const HgFame& fame_;
  std::vector<Commit> stream_;
  std::vector<char> committed_;
  std::vector<EventId> pending_;
  std::uint32_t done_ = 0;  // settled rounds already ordered
  EventId known_ = 0;
  std::uint64_t key_violations_ = 0;
};

}  // namespace bvcast
