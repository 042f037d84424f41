#include "bvcast/layers.hpp"

#include <algorithm>

namespace bvcast {

const std::vector<EventId> RoundTable::empty_;

namespace {

// Column state for the fast round pass: one per witness, tracking
// intermediary creators toward it.
struct WitnessCol {
  EventId target;
  std::uint32_t slot;
  std::uint32_t round;
  std::uint64_t self_bit;
};

}  // namespace

// Fast pass for fork-free graphs. Strongly seeing collapses to counting
// intermediary creators: the column mask of event e toward witness w is
// nonzero exactly when e follows w, and its popcount is the number of
// creators owning an event between them.
static void compute_fast(const Hashgraph& g, std::vector<EventRound>& info,
                         std::vector<std::vector<EventId>>& by_round) {
  const std::uint32_t n = g.node_count();
  const std::uint32_t count = g.size();
  LanePool pool;
  std::vector<std::uint32_t> round_row;      // per round: row lane slot
  std::vector<std::vector<WitnessCol>> round_cols;
  std::vector<WitnessCol> live_cols;

  // per-event cleanup positions and per-creator retirement for lane freeing
  std::vector<EventId> last_use(count);
  std::vector<EventId> last_of(n, kNoEvent);
  for (EventId e = 0; e < count; ++e) {
    last_use[e] = e;
    last_of[g.event(e).digest.creator] = e;
  }
  for (EventId e = 0; e < count; ++e) {
    EventId sp = g.self_parent_id(e);
    EventId op = g.other_parent_id(e);
    if (sp != kNoEvent) last_use[sp] = std::max(last_use[sp], e);
    if (op != kNoEvent) last_use[op] = std::max(last_use[op], e);
  }
  std::vector<std::vector<EventId>> drop_at(count);
  for (EventId e = 0; e < count; ++e) drop_at[last_use[e]].push_back(e);

  std::vector<std::uint32_t> tip_round(n, 1);
  std::uint32_t freed_below = 1;  // rounds below this are dismantled
  const std::uint32_t see_thr = 2 * n / 3 + 1;  // pop > 2n/3

  auto row_of = [&](std::uint32_t r) -> std::uint32_t {
    if (r == 0 || r > round_row.size()) return kNoSlot;
    return round_row[r - 1];
  };

  for (EventId e = 0; e < count; ++e) {
    const Event& ev = g.event(e);
    EventId sp = g.self_parent_id(e);
    EventId op = g.other_parent_id(e);
    pool.begin(e);
    auto& vec = pool.at(e);

    for (std::uint32_t r = freed_below; r <= round_row.size(); ++r) {
      std::uint32_t s = round_row[r - 1];
      if (s != kNoSlot) vec[s] = pool.inherited(sp, op, s);
    }
    for (const WitnessCol& col : live_cols) {
      std::uint64_t m = pool.inherited(sp, op, col.slot);
      if (m) {
        m |= 1ull << ev.digest.creator;
        vec[col.slot] = m;
        if (std::popcount(m) >= static_cast<int>(see_thr)) {
          std::uint32_t rs = row_of(col.round);
          if (rs != kNoSlot) vec[rs] |= col.self_bit;
        }
      }
    }

    std::uint32_t r_base = 1;
    if (sp != kNoEvent) r_base = std::max(r_base, info[sp].round);
    if (op != kNoEvent) r_base = std::max(r_base, info[op].round);
    std::uint64_t seen = 0;
    std::uint32_t rs = row_of(r_base);
    if (rs != kNoSlot) seen = vec[rs];
    std::uint32_t r = r_base;
    if (3 * static_cast<std::uint32_t>(std::popcount(seen)) > 2 * n) r = r_base + 1;

    EventRound& out = info[e];
    out.round = r;
    out.witness = sp == kNoEvent || r > info[sp].round;
    out.chain_hw = sp == kNoEvent ? 0 : info[sp].chain_hw;
    if (out.witness) {
      out.chain_hw = r;
      if (r == r_base + 1) {
        out.prev_seen = seen;
      } else {
        std::uint32_t ps = row_of(r - 1);
        out.prev_seen = ps == kNoSlot ? 0 : vec[ps];
      }
      if (by_round.size() < r) by_round.resize(r);
      by_round[r - 1].push_back(e);
      if (round_row.size() < r) round_row.resize(r, kNoSlot);
      if (round_row[r - 1] == kNoSlot) {
        round_row[r - 1] = pool.alloc(e);
        vec.resize(pool.high_water(), 0);
      }
      if (round_cols.size() < r) round_cols.resize(r);
      WitnessCol col{e, pool.alloc(e), r, 1ull << ev.digest.creator};
      vec.resize(pool.high_water(), 0);
      vec[col.slot] = col.self_bit;
      round_cols[r - 1].push_back(col);
      live_cols.push_back(col);
    }

    // retire rounds every active creator has climbed past
    tip_round[ev.digest.creator] = r;
    if (last_of[ev.digest.creator] == e) tip_round[ev.digest.creator] = ~0u;
    std::uint32_t min_tip = ~0u;
    for (std::uint32_t c = 0; c < n; ++c) min_tip = std::min(min_tip, tip_round[c]);
    while (min_tip != ~0u && freed_below + 1 < min_tip) {
      std::uint32_t dead = freed_below;
      if (dead <= round_row.size() && round_row[dead - 1] != kNoSlot) {
        pool.release(round_row[dead - 1]);
        round_row[dead - 1] = kNoSlot;
      }
      if (dead <= round_cols.size() && !round_cols[dead - 1].empty()) {
        for (const WitnessCol& col : round_cols[dead - 1]) {
          pool.release(col.slot);
          for (std::size_t i = 0; i < live_cols.size(); ++i) {
            if (live_cols[i].target == col.target) {
              live_cols[i] = live_cols.back();
              live_cols.pop_back();
              break;
            }
          }
        }
        round_cols[dead - 1].clear();
      }
      ++freed_below;
    }
    for (EventId d : drop_at[e]) pool.drop(d);
  }
}

// Literal pass for graphs with forks: memberships and promotions evaluated
// straight from the predicates. Quadratic and meant for small graphs.
static void compute_slow(const Hashgraph& g, std::vector<EventRound>& info,
                         std::vector<std::vector<EventId>>& by_round) {
  const std::uint32_t n = g.node_count();
  for (EventId e = 0; e < g.size(); ++e) {
    EventId sp = g.self_parent_id(e);
    EventId op = g.other_parent_id(e);
    std::uint32_t r_base = 1;
    if (sp != kNoEvent) r_base = std::max(r_base, info[sp].round);
    if (op != kNoEvent) r_base = std::max(r_base, info[op].round);
    std::uint32_t seen = 0;
    if (r_base <= by_round.size()) {
      for (EventId w : by_round[r_base - 1]) {
        if (g.strongly_sees(e, w)) ++seen;
      }
    }
    std::uint32_t r = r_base;
    if (3 * seen > 2 * n) r = r_base + 1;
    EventRound& out = info[e];
    out.round = r;
    out.witness = sp == kNoEvent || r > info[sp].round;
    out.chain_hw = sp == kNoEvent ? 0 : info[sp].chain_hw;
    if (out.witness) {
      out.chain_hw = r;
      if (by_round.size() < r) by_round.resize(r);
      by_round[r - 1].push_back(e);
    }
  }
}

RoundTable RoundTable::compute(const Hashgraph& g) {
  if (g.node_count() > 64) {
    fail(Errc::MalformedScenario, "layer engines support at most 64 nodes");
  }
  RoundTable rt;
  rt.info_.resize(g.size());
  rt.fast_ = !g.has_forks();
  if (rt.fast_) {
    compute_fast(g, rt.info_, rt.by_round_);
  } else {
    compute_slow(g, rt.info_, rt.by_round_);
  }
  return rt;
}

}  // namespace bvcast
