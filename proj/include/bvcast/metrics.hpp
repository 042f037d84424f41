#pragma once
// Commit-latency aggregation: per-scenario means, per-(algorithm, node
// count) cells, totals, and ratio tables against a baseline algorithm.

#include <optional>
#include <string>
#include <vector>

#include "bvcast/algorithm_spec.hpp"
#include "bvcast/run.hpp"
#include "bvcast/sim.hpp"

namespace bvcast {

// Mean of (commit stamp - creation stamp) over the committed events of one
// run. Empty when nothing committed.
std::optional<double> commit_latency(const Hashgraph& g, const RunResult& r);

struct LatencyReport {
  std::vector<AlgorithmSpec> algos;
  std::vector<std::uint32_t> sizes;  // node-count columns, ascending
  // cell[a][i]: mean of per-scenario latencies for algorithm a at
  // sizes[i]; NaN when the combination is invalid or nothing committed
  std::vector<std::vector<double>> cell;
  // count[a][i]: scenarios contributing to the cell
  std::vector<std::vector<std::uint32_t>> count;
  // total[a]: mean over every contributing scenario of the algorithm
  std::vector<double> total;
};

// Runs every valid (algorithm, scenario) pair and aggregates. Parameter
// combinations invalid at a scenario's node count are skipped and show up
// as empty cells. The observer is node zero; commits are stamped at the
// observer's own events.
LatencyReport latency_table(const std::vector<Scenario>& suite,
                            const std::vector<AlgorithmSpec>& algos);

// Same shape with every cell divided by the baseline algorithm's value.
LatencyReport comparative_table(const LatencyReport& rep,
                                std::size_t baseline);

// Renderers. Empty cells print as "-"; values use the given decimals.
std::string render_csv(const LatencyReport& rep, int decimals = 1);
std::string render_markdown(const LatencyReport& rep, int decimals = 1);

}  // namespace bvcast
