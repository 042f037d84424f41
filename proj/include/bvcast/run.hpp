#pragma once
// One-shot consensus driver: feeds a fully built graph through the fame and
// ordering engines in insertion order and collects the committed stream,
// per-event commit times and the invariant counters.

#include <cstdint>
#include <vector>

#include "bvcast/algorithm_spec.hpp"
#include "bvcast/fame.hpp"
#include "bvcast/hashgraph.hpp"
#include "bvcast/ordering.hpp"

namespace bvcast {

struct RunOptions {
  NodeId observer = 0;
  // When set, commits are stamped at the observer's own events: everything
  // ordered while processing the batch that ends at the observer event gets
  // that event's creation time. Otherwise every event is a flush point.
  bool batch = true;
  bool coverage = false;
  bool keep_layers = false;
  bool record_decisions = false;
};

struct HgRoundInfo {
  std::vector<EventId> witnesses;
  // per witness: the coverage row (per creator first deciding chain index);
  // empty when the witness never decided
  std::vector<std::vector<std::uint32_t>> trig;
};

struct RunResult {
  std::vector<Commit> stream;
  std::vector<std::int64_t> commit_time;  // by event id, -1 when uncommitted
  std::uint32_t layers_done = 0;          // towers or rounds fully ordered
  std::uint64_t lemma_violations = 0;
  std::uint64_t agreement_violations = 0;
  std::uint64_t late_violations = 0;
  std::uint64_t key_violations = 0;
  std::vector<DecisionRecord> decisions;
  // coverage products for view-prefix prediction
  std::vector<std::vector<std::uint32_t>> tower_trig;  // per tower, n*n
  std::vector<HgRoundInfo> round_info;                 // per round
};

RunResult run_consensus(const Hashgraph& g, const AlgorithmSpec& spec,
                        const RunOptions& opt = {});

// For each tip: how many entries of the committed stream are fully decided
// within the ancestor closure of that tip. Requires a coverage run's result.
std::vector<std::uint32_t> view_prefixes(const Hashgraph& g,
                                         const RunResult& r, bool reference,
                                         const std::vector<EventId>& tips);

}  // namespace bvcast
