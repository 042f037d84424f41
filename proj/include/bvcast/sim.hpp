#pragma once
// Deterministic message-buffer gossip simulator. A scenario is a fixed op
// log: SEND pushes the sender's full knowledge into a buffer, RECV delivers
// one buffered message to its destination, which then creates a new event.
// Replaying the log is pure; all randomness lives in generation.

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "bvcast/bits.hpp"
#include "bvcast/hashgraph.hpp"
#include "bvcast/rng.hpp"

namespace bvcast {

struct Op {
  enum class Kind : std::uint8_t { Send, Recv };
  Kind kind = Kind::Send;
  NodeId src = 0;
  NodeId dst = 0;
  // Row index of the delivered SEND, or -1 for a RECV that found the buffer
  // empty and consumed the step as a no-op.
  std::int32_t send_ref = -1;
};

struct CrashEntry {
  NodeId node = 0;
  std::uint32_t step = 0;  // the node takes part in no op at steps >= step
};

struct Scenario {
  std::uint32_t n = 0;
  std::uint64_t seed = 0;
  std::vector<CrashEntry> crashes;
  std::vector<Op> ops;
};

// Random scenario of exactly 1000*n ops. Each step is SEND or RECV with
// probability one half; SEND picks a live source and a distinct live
// destination uniformly; RECV picks uniformly among undelivered entries
// with a live destination (enumerated by destination id, then send row).
// Crashed nodes are drawn without replacement from [1, n), never node 0,
// with crash steps uniform in [1, 1000*n]. faults must not exceed
// floor((n-1)/3).
Scenario generate_scenario(std::uint32_t n, std::uint32_t faults,
                           std::uint64_t seed);

inline const std::vector<std::uint32_t>& suite_sizes() {
  static const std::vector<std::uint32_t> sizes{4, 5, 6, 10, 12, 15, 20, 30, 50};
  return sizes;
}

// The 180-scenario benchmark suite: for each n in suite_sizes(), ten
// fault-free scenarios followed by ten faulty ones whose fault counts cycle
// through 1..f. Scenario seeds are drawn in order from splitmix64(master).
std::vector<Scenario> generate_suite(std::uint64_t master_seed);

std::string scenario_filename(const Scenario& s);
std::string to_csv(const Scenario& s);
Scenario from_csv(std::string_view text);

// An observer's view rebuilt in the order it experienced the events: each
// delivery appends the newly learned closure as one contiguous batch ending
// with the observer's own event. to_global maps rebuilt ids back to ids in
// the full replay graph.
struct ArrivalView {
  Hashgraph graph;
  std::vector<EventId> to_global;
};

// Full replay of a scenario. The graph holds every event that was created;
// each node's view is the ancestor closure of its final tip.
class Replay {
 public:
  explicit Replay(const Scenario& s);

  const Hashgraph& graph() const { return graph_; }
  EventId tip(NodeId v) const { return tip_[v]; }
  const Bits& knowledge(NodeId v) const { return knowledge_[v]; }

  // Events known to the observer at the end, in creation order.
  std::vector<EventId> view_events(NodeId observer) const;
  // Standalone hashgraph holding exactly the observer's view; insertion
  // order matches view_events, so ids correspond one to one.
  Hashgraph project(NodeId observer) const;
  ArrivalView arrival_view(NodeId observer) const;

  std::uint32_t delivered() const { return delivered_; }
  std::uint32_t stale() const { return stale_; }
  std::uint32_t empty_recvs() const { return empty_recvs_; }

 private:
  Hashgraph graph_;
  std::vector<EventId> tip_;
  std::vector<Bits> knowledge_;
  std::uint32_t delivered_ = 0;
  std::uint32_t stale_ = 0;
  std::uint32_t empty_recvs_ = 0;
};

}  // namespace bvcast
