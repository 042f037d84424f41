#include "bvcast/fame.hpp"

#include <algorithm>
#include <bit>
#include <cassert>

#include "bvcast/errors.hpp"

namespace bvcast {

namespace {

inline std::uint32_t pop(std::uint64_t m) {
  return static_cast<std::uint32_t>(std::popcount(m));
}

inline std::uint64_t bit_of(NodeId c) { return 1ull << c; }

// last_use[e] = last event whose processing still reads e's lane vector,
// bucketed so vectors can be dropped as soon as the last child is done
std::vector<std::vector<EventId>> drop_buckets(const Hashgraph& g) {
  std::vector<EventId> last_use(g.size());
  for (EventId e = 0; e < g.size(); ++e) last_use[e] = e;
  for (EventId e = 0; e < g.size(); ++e) {
    EventId sp = g.self_parent_id(e);
    EventId op = g.other_parent_id(e);
    if (sp != kNoEvent) last_use[sp] = std::max(last_use[sp], e);
    if (op != kNoEvent) last_use[op] = std::max(last_use[op], e);
  }
  std::vector<std::vector<EventId>> buckets(g.size());
  for (EventId e = 0; e < g.size(); ++e) buckets[last_use[e]].push_back(e);
  return buckets;
}

}  // namespace

const std::vector<EventId> BvcEngine::no_events_;
const std::vector<std::uint32_t> BvcEngine::no_trig_;

// ---------------------------------------------------------------------------
// fast path: fork-free graphs, one bit per creator

struct BvcEngine::Fast {
  struct Sub {
    std::uint32_t row;
    std::uint8_t thr;
    std::uint8_t bit;
  };
  struct Col {
    EventId target = kNoEvent;
    std::uint32_t slot = kNoSlot;
    std::uint32_t live_pos = kNoSlot;
    std::uint32_t max_thr = 0;
    std::uint64_t crossed = 0;
    std::vector<Sub> subs;
  };
  struct Tier {
    std::vector<EventId> member;  // per creator, kNoEvent when absent
    std::uint64_t mask = 0;
    std::uint32_t row_f = kNoSlot;
    std::uint32_t row_ss = kNoSlot;
    std::uint32_t row_sf = kNoSlot;
  };
  struct Tower {
    std::uint32_t k = 0;
    std::vector<Tier> tiers;
    std::vector<std::vector<std::uint64_t>> votes;  // votes[j][c], level j
    std::uint64_t undecided = 0;
    bool decided_all = false;
    bool dismantled = false;
    bool covered = false;
    bool lemma_checked = false;
    std::vector<Fame> fame;
    std::vector<EventId> element;
    std::vector<EventId> famous_els;
    std::vector<std::uint32_t> trig;      // n*n, slot-major
    std::vector<std::uint64_t> trig_rec;  // per slot, creators recorded
  };

  BvcEngine& o;
  const Hashgraph& g;
  const AlgorithmSpec& spec;
  const RoundTable* rt;
  std::uint32_t n, f, m;
  std::uint32_t base_quota;  // per-layer quota for A/S'/C/C' joins
  std::uint32_t join_thr;    // n - f
  std::uint32_t ss_thr, sf_thr;
  std::uint64_t all_mask;
  bool lemma_wanted;

  LanePool pool;
  std::vector<std::uint32_t> live_rows;
  std::vector<Col> cols;
  std::vector<std::uint32_t> free_cols;
  std::vector<std::uint32_t> live_list;
  std::unordered_map<EventId, std::uint32_t> col_of;
  std::vector<Tower> towers;
  std::vector<std::uint32_t> chw;     // per event: base layer high water
  std::vector<EventId> last_of;       // per creator
  std::vector<std::uint32_t> cur_hw;  // per creator
  std::uint64_t active = 0;
  std::uint32_t min_hw = 0;
  std::uint32_t base_free_ptr = 0;
  std::uint32_t first_live = 0;
  std::vector<std::vector<EventId>> drop_at;
  std::vector<std::uint32_t> dead_rows;
  std::vector<std::uint32_t> dying_cols;
  EventId next_expected = 0;

  Fast(BvcEngine& owner) : o(owner), g(owner.g_), spec(owner.spec_), rt(owner.rt_) {
    n = g.node_count();
    f = g.fault_bound();
    m = spec.m;
    join_thr = n - f;
    ss_thr = 2 * n / 3 + 1;
    sf_thr = (n + f) / 2 + 1;
    base_quota = (spec.base == BaseKind::C || spec.base == BaseKind::CPrime)
                     ? spec.a
                     : n - f;
    all_mask = n == 64 ? ~0ull : (1ull << n) - 1;
    lemma_wanted = spec.vote == VoteKind::S || spec.vote == VoteKind::SPrime;
    chw.assign(g.size(), 0);
    last_of.assign(n, kNoEvent);
    cur_hw.assign(n, 0);
    for (NodeId c = 0; c < n; ++c) {
      if (!g.events_of(c).empty()) {
        last_of[c] = g.events_of(c).back();
        active |= bit_of(c);
      }
    }
    drop_at = drop_buckets(g);
  }

  bool dec_open(const Tower& t) const {
    return !t.decided_all || (o.opt_.coverage && !t.covered);
  }
  bool lemma_pending(const Tower& t) const {
    return lemma_wanted && !t.lemma_checked;
  }
  bool join_open(const Tower& t) const {
    return dec_open(t) || lemma_pending(t) || o.opt_.keep_layers;
  }

  std::uint32_t make_row(EventId e) {
    std::uint32_t slot = pool.alloc(e);
    auto& vec = pool.at(e);
    if (vec.size() < pool.high_water()) vec.resize(pool.high_water(), 0);
    // a column freed earlier in this same advance may hand back its slot
    // with its mask still written into the current event's lane
    vec[slot] = 0;
    live_rows.push_back(slot);
    return slot;
  }

  void kill_row(std::uint32_t slot) {
    if (slot == kNoSlot) return;
    dead_rows.push_back(slot);
  }

  void col_subscribe(EventId target, std::uint32_t row, std::uint32_t thr,
                     NodeId creator_bit) {
    auto it = col_of.find(target);
    std::uint32_t idx;
    if (it == col_of.end()) {
      if (!free_cols.empty()) {
        idx = free_cols.back();
        free_cols.pop_back();
      } else {
        idx = static_cast<std::uint32_t>(cols.size());
        cols.emplace_back();
      }
      Col& col = cols[idx];
      col.target = target;
      col.slot = pool.alloc(target);
      col.live_pos = static_cast<std::uint32_t>(live_list.size());
      col.max_thr = 0;
      col.crossed = 0;
      col.subs.clear();
      live_list.push_back(idx);
      col_of.emplace(target, idx);
      auto& vec = pool.at(target);
      if (vec.size() < pool.high_water()) vec.resize(pool.high_water(), 0);
      vec[col.slot] = bit_of(g.event(target).digest.creator);
    } else {
      idx = it->second;
    }
    Col& col = cols[idx];
    col.subs.push_back(Sub{row, static_cast<std::uint8_t>(thr),
                           static_cast<std::uint8_t>(creator_bit)});
    col.max_thr = std::max(col.max_thr, thr);
  }

  void col_free(std::uint32_t idx) {
    Col& col = cols[idx];
    if (col.target == kNoEvent) return;
    col_of.erase(col.target);
    std::uint32_t pos = col.live_pos;
    std::uint32_t back = live_list.back();
    live_list[pos] = back;
    cols[back].live_pos = pos;
    live_list.pop_back();
    pool.release(col.slot);
    col.target = kNoEvent;
    col.slot = kNoSlot;
    col.subs.clear();
    free_cols.push_back(idx);
  }

  Tower& create_tower(std::uint32_t k, EventId e) {
    assert(k == towers.size() + 1);
    towers.emplace_back();
    Tower& t = towers.back();
    t.k = k;
    t.tiers.emplace_back();
    Tier& t0 = t.tiers[0];
    t0.member.assign(n, kNoEvent);
    bool need_f = spec.base == BaseKind::A || spec.base == BaseKind::C ||
                  spec.base == BaseKind::CPrime || spec.vote == VoteKind::A;
    bool need_ss = spec.vote == VoteKind::S;
    bool need_sf = spec.base == BaseKind::SPrime || spec.vote == VoteKind::SPrime;
    if (need_f) t0.row_f = make_row(e);
    if (need_ss) t0.row_ss = make_row(e);
    if (need_sf) t0.row_sf = make_row(e);
    t.undecided = all_mask;
    t.fame.assign(n, Fame::Undecided);
    t.element.assign(n, kNoEvent);
    if (!lemma_wanted) t.lemma_checked = true;
    if (o.opt_.coverage) {
      t.trig.assign(std::size_t(n) * n, kNoTrigger);
      t.trig_rec.assign(n, 0);
    }
    return t;
  }

  void join_base(std::uint32_t k, EventId e, NodeId c, std::uint64_t cb,
                 std::vector<std::uint64_t>& vec) {
    if (k > towers.size()) create_tower(k, e);
    Tower& t = towers[k - 1];
    Tier& t0 = t.tiers[0];
    assert(!(t0.mask & cb));
    t0.member[c] = e;
    t0.mask |= cb;
    t.element[c] = e;
    if (t0.row_f != kNoSlot) vec[t0.row_f] |= cb;
    if (t0.row_ss != kNoSlot) col_subscribe(e, t0.row_ss, ss_thr, c);
    if (t0.row_sf != kNoSlot) col_subscribe(e, t0.row_sf, sf_thr, c);
  }

  void base_pass(EventId e, const Event& ev, NodeId c, std::uint64_t cb,
                 std::vector<std::uint64_t>& vec) {
    EventId sp = g.self_parent_id(e);
    if (spec.base == BaseKind::S) {
      if (!rt->witness(e)) return;
      std::uint32_t lo = sp == kNoEvent ? 1 : rt->chain_hw(sp) + 1;
      std::uint32_t hi = rt->round(e);
      for (std::uint32_t k = lo; k <= hi; ++k) join_base(k, e, c, cb, vec);
      return;
    }
    std::uint32_t hw = sp == kNoEvent ? 0 : chw[sp];
    for (std::uint32_t k = hw + 1;; ++k) {
      if (k == 1) {
        if (ev.digest.index != 0) break;
        join_base(1, e, c, cb, vec);
        hw = 1;
        continue;
      }
      if (k - 1 > towers.size()) break;
      if ((spec.base == BaseKind::C || spec.base == BaseKind::CPrime) &&
          k % spec.b == 0) {
        fail(Errc::MalformedScenario,
             "layer index reached the strict-quota modulus; unsupported on the"
             " fast path");
      }
      Tier& prev = towers[k - 2].tiers[0];
      std::uint32_t brow =
          spec.base == BaseKind::SPrime ? prev.row_sf : prev.row_f;
      std::uint32_t cnt = pop(vec[brow]);
      if (spec.base == BaseKind::CPrime && prev.member[c] == e) --cnt;
      if (cnt < base_quota) break;
      join_base(k, e, c, cb, vec);
      hw = k;
    }
    chw[e] = hw;
  }

  std::uint32_t tier_join_row(const Tower& t, std::uint32_t j) const {
    const Tier& below = t.tiers[j - 1];
    if (j > m) return below.row_sf;
    switch (spec.vote) {
      case VoteKind::A: return below.row_f;
      case VoteKind::S: return below.row_ss;
      case VoteKind::SPrime: return below.row_sf;
    }
    return kNoSlot;
  }

  void record_votes(Tower& t, std::uint32_t j, EventId e, std::uint64_t cb,
                    const std::vector<std::uint64_t>& vec) {
    if (j < m) return;
    if (j == m) {
      auto& v0 = t.votes[0];
      const Tier& t0 = t.tiers[0];
      for (NodeId d = 0; d < n; ++d) {
        EventId b = t0.member[d];
        if (b == kNoEvent) continue;
        if (g.latest_index(e, d) >=
            static_cast<std::int32_t>(g.event(b).digest.index))
          v0[d] |= cb;
      }
      return;
    }
    std::uint32_t jj = j - m;
    std::uint64_t s_mask = vec[t.tiers[j - 1].row_sf];
    std::uint32_t sz = pop(s_mask);
    assert(sz > 0);
    const auto& below = t.votes[jj - 1];
    auto& here = t.votes[jj];
    for (NodeId d = 0; d < n; ++d) {
      std::uint32_t cnt = pop(s_mask & below[d]);
      if (2 * cnt >= sz) here[d] |= cb;
    }
  }

  void lemma_check(Tower& t) {
    t.lemma_checked = true;
    bool any = false;
    for (NodeId c = 0; c < n; ++c) any = any || t.fame[c] == Fame::Famous;
    if (!any) ++o.lemma_violations_;
    maybe_dismantle(t);
  }

  void join_tier(Tower& t, std::uint32_t j, EventId e, NodeId c,
                 std::uint64_t cb, std::vector<std::uint64_t>& vec) {
    Tier& tj = t.tiers[j];
    tj.member[c] = e;
    tj.mask |= cb;
    if (tj.row_f != kNoSlot) vec[tj.row_f] |= cb;
    if (tj.row_ss != kNoSlot) col_subscribe(e, tj.row_ss, ss_thr, c);
    if (tj.row_sf != kNoSlot) col_subscribe(e, tj.row_sf, sf_thr, c);
    record_votes(t, j, e, cb, vec);
  }

  void create_tier(Tower& t, std::uint32_t j, EventId e, NodeId c,
                   std::uint64_t cb, std::vector<std::uint64_t>& vec) {
    t.tiers.emplace_back();
    Tier& tj = t.tiers.back();
    tj.member.assign(n, kNoEvent);
    if (j < m) {
      switch (spec.vote) {
        case VoteKind::A: tj.row_f = make_row(e); break;
        case VoteKind::S: tj.row_ss = make_row(e); break;
        case VoteKind::SPrime: tj.row_sf = make_row(e); break;
      }
    } else {
      tj.row_sf = make_row(e);
    }
    if (j >= m) {
      t.votes.emplace_back();
      t.votes.back().assign(n, 0);
    }
    join_tier(t, j, e, c, cb, vec);
    if (j == m + 2 && !t.lemma_checked) lemma_check(t);
  }

  void join_pass(Tower& t, EventId e, NodeId c, std::uint64_t cb,
                 std::vector<std::uint64_t>& vec) {
    for (std::uint32_t j = 1;; ++j) {
      std::uint32_t row = tier_join_row(t, j);
      if (row == kNoSlot || pop(vec[row]) < join_thr) break;
      if (j == t.tiers.size()) {
        create_tier(t, j, e, c, cb, vec);
      } else if (!(t.tiers[j].mask & cb)) {
        join_tier(t, j, e, c, cb, vec);
      }
    }
  }

  void record_trig(Tower& t, NodeId slot, EventId e) {
    if (!o.opt_.coverage || t.trig.empty()) return;
    NodeId d = g.event(e).digest.creator;
    std::size_t at = std::size_t(slot) * n + d;
    if (t.trig[at] != kNoTrigger) return;
    t.trig[at] = g.event(e).digest.index;
    t.trig_rec[slot] |= bit_of(d);
    try_cover(t);
  }

  void maybe_dismantle(Tower& t) {
    if (!t.decided_all || lemma_pending(t) || o.opt_.keep_layers) return;
    if (o.opt_.coverage && !t.covered) return;
    if (t.dismantled) return;
    t.dismantled = true;
    for (std::size_t j = 1; j < t.tiers.size(); ++j) {
      kill_row(t.tiers[j].row_f);
      kill_row(t.tiers[j].row_ss);
      kill_row(t.tiers[j].row_sf);
    }
    t.tiers.resize(1);
    t.votes.clear();
    t.votes.shrink_to_fit();
    t.trig_rec.clear();
    t.trig_rec.shrink_to_fit();
  }

  void try_cover(Tower& t) {
    if (!t.decided_all || t.covered || t.trig_rec.empty()) return;
    for (NodeId c = 0; c < n; ++c)
      if (active & ~t.trig_rec[c]) return;
    t.covered = true;
    maybe_dismantle(t);
  }

  void on_decided(Tower& t) {
    t.decided_all = true;
    t.famous_els.clear();
    for (NodeId c = 0; c < n; ++c) {
      if (t.fame[c] == Fame::Famous) {
        assert(t.element[c] != kNoEvent);
        t.famous_els.push_back(t.element[c]);
      }
    }
    try_cover(t);
    maybe_dismantle(t);
  }

  void decide_pass(Tower& t, EventId e, std::vector<std::uint64_t>& vec) {
    if (t.tiers.size() <= m) return;
    std::uint32_t top = static_cast<std::uint32_t>(t.tiers.size()) - 1 - m;
    std::uint64_t s_mask = 0;
    std::uint32_t kk = 0;
    bool found = false;
    for (std::uint32_t j = top + 1; j-- > 0;) {
      std::uint64_t s = vec[t.tiers[m + j].row_sf];
      if (2 * pop(s) > n + f) {
        kk = j;
        s_mask = s;
        found = true;
        break;
      }
    }
    if (!found) return;
    std::uint32_t sz = pop(s_mask);
    bool cov_open = o.opt_.coverage && !t.covered;
    std::uint64_t tally = cov_open ? all_mask : t.undecided;
    const auto& vk = t.votes[kk];
    while (tally) {
      NodeId c = static_cast<NodeId>(std::countr_zero(tally));
      tally &= tally - 1;
      std::uint32_t cnt = pop(s_mask & vk[c]);
      bool v = 2 * cnt >= sz;
      std::uint32_t nv = v ? cnt : sz - cnt;
      if (2 * nv <= n + f) continue;
      if (t.undecided >> c & 1) {
        t.fame[c] = v ? Fame::Famous : Fame::NotFamous;
        t.undecided &= ~bit_of(c);
        if (o.opt_.record_decisions)
          o.decisions_.push_back(DecisionRecord{t.k, c, v, e});
        record_trig(t, c, e);
        if (!t.undecided) on_decided(t);
      } else {
        if (v != (t.fame[c] == Fame::Famous)) ++o.agreement_violations_;
        record_trig(t, c, e);
      }
      // deciding the last slot or recording the last trigger can dismantle
      // the tower, freeing the vote rows this loop reads; the remaining
      // slots need nothing once the tower is covered
      if (t.dismantled) break;
    }
  }

  void free_base_rows() {
    while (base_free_ptr < towers.size()) {
      Tower& t = towers[base_free_ptr];
      if (!t.dismantled || t.k >= min_hw) break;
      Tier& t0 = t.tiers[0];
      kill_row(t0.row_f);
      kill_row(t0.row_ss);
      kill_row(t0.row_sf);
      t0.row_f = t0.row_ss = t0.row_sf = kNoSlot;
      ++base_free_ptr;
    }
  }

  void sweep_dead_rows() {
    if (dead_rows.empty()) return;
    std::sort(dead_rows.begin(), dead_rows.end());
    auto is_dead = [&](std::uint32_t slot) {
      return std::binary_search(dead_rows.begin(), dead_rows.end(), slot);
    };
    live_rows.erase(
        std::remove_if(live_rows.begin(), live_rows.end(), is_dead),
        live_rows.end());
    for (std::size_t i = 0; i < live_list.size();) {
      Col& col = cols[live_list[i]];
      col.subs.erase(std::remove_if(col.subs.begin(), col.subs.end(),
                                    [&](const Sub& s) { return is_dead(s.row); }),
                     col.subs.end());
      if (col.subs.empty()) {
        col_free(live_list[i]);  // swap-removes live_list[i]
      } else {
        ++i;
      }
    }
    for (std::uint32_t slot : dead_rows) pool.release(slot);
    dead_rows.clear();
  }

  void advance(EventId e) {
    assert(e == next_expected);
    ++next_expected;
    const Event& ev = g.event(e);
    NodeId c = ev.digest.creator;
    std::uint64_t cb = bit_of(c);
    EventId sp = g.self_parent_id(e);
    EventId op = g.other_parent_id(e);
    pool.begin(e);
    auto& vec = pool.at(e);
    for (std::uint32_t row : live_rows) vec[row] = pool.inherited(sp, op, row);
    for (std::uint32_t idx : live_list) {
      Col& col = cols[idx];
      std::uint64_t mm = pool.inherited(sp, op, col.slot);
      if (!mm) continue;
      mm |= cb;
      vec[col.slot] = mm;
      std::uint32_t p = pop(mm);
      for (const Sub& sub : col.subs)
        if (p >= sub.thr) vec[sub.row] |= bit_of(sub.bit);
      if (p >= col.max_thr) {
        col.crossed |= cb;
        if (!(active & ~col.crossed)) dying_cols.push_back(idx);
      }
    }
    for (std::uint32_t idx : dying_cols) col_free(idx);
    dying_cols.clear();

    base_pass(e, ev, c, cb, vec);
    while (first_live < towers.size() && towers[first_live].dismantled)
      ++first_live;
    for (std::uint32_t ti = first_live; ti < towers.size(); ++ti) {
      Tower& t = towers[ti];
      if (!join_open(t)) continue;
      if (dec_open(t)) decide_pass(t, e, vec);
      // a tower dismantled by that pass must not grow fresh tiers
      if (!t.dismantled) join_pass(t, e, c, cb, vec);
    }

    cur_hw[c] = spec.base == BaseKind::S ? rt->chain_hw(e) : chw[e];
    bool retire = last_of[c] == e;
    if (retire) {
      active &= ~cb;
      for (std::size_t i = 0; i < live_list.size();) {
        Col& col = cols[live_list[i]];
        if (!(active & ~col.crossed)) col_free(live_list[i]);
        else ++i;
      }
      if (o.opt_.coverage)
        for (std::uint32_t ti = first_live; ti < towers.size(); ++ti)
          try_cover(towers[ti]);
    }
    min_hw = ~0u;
    for (NodeId d = 0; d < n; ++d)
      if (active >> d & 1) min_hw = std::min(min_hw, cur_hw[d]);
    free_base_rows();
    sweep_dead_rows();
    for (EventId dd : drop_at[e]) pool.drop(dd);
  }
};

// ---------------------------------------------------------------------------
// slow path: literal evaluation of the definitions, fork tolerant

struct BvcEngine::Slow {
  struct STier {
    std::vector<std::vector<EventId>> members;  // per creator, ascending
  };
  struct Entry {
    EventId el = kNoEvent;
    Fame fame = Fame::Undecided;
  };
  struct STower {
    std::uint32_t k = 0;
    std::vector<STier> tiers;
    std::vector<std::vector<Entry>> slots;  // per creator
    std::vector<Fame> phantom;              // per creator
    bool decided_all = false;
    bool lemma_checked = false;
    std::vector<EventId> famous_els;
    mutable std::unordered_map<std::uint64_t, char> memo;
  };

  BvcEngine& o;
  const Hashgraph& g;
  const AlgorithmSpec& spec;
  const RoundTable* rt;
  std::uint32_t n, f, m;
  bool lemma_wanted;
  std::vector<STower> towers;
  EventId next_expected = 0;

  Slow(BvcEngine& owner) : o(owner), g(owner.g_), spec(owner.spec_), rt(owner.rt_) {
    n = g.node_count();
    f = g.fault_bound();
    m = spec.m;
    lemma_wanted = spec.vote == VoteKind::S || spec.vote == VoteKind::SPrime;
    // ids at and above 0x0fffff00 are reserved for never-created members in
    // the vote memo keys
    if (g.size() >= 0x0fffff00u)
      fail(Errc::MalformedScenario, "graph too large for the literal engine");
  }

  bool vote_rel(EventId a, EventId b) const {
    switch (spec.vote) {
      case VoteKind::A: return g.clearly_follows(a, b);
      case VoteKind::S: return g.strongly_sees(a, b);
      case VoteKind::SPrime: return g.strongly_follows(a, b);
    }
    return false;
  }

  // vote of consensus-or-voting element v (level jj) on entry (c, el);
  // el == kNoEvent is the never-created member
  bool vote(const STower& t, std::uint32_t jj, EventId v, NodeId c,
            EventId el) const {
    std::uint64_t ekey = el == kNoEvent ? 0x0fffff00ull + c : el;
    std::uint64_t key = (std::uint64_t(jj) << 56) | (std::uint64_t(v) << 28) | ekey;
    auto it = t.memo.find(key);
    if (it != t.memo.end()) return it->second != 0;
    bool res;
    if (jj == 0) {
      res = el != kNoEvent && g.clearly_follows(v, el);
    } else {
      const STier& below = t.tiers[m + jj - 1];
      std::uint32_t sz = 0, cnt = 0;
      for (NodeId d = 0; d < n; ++d) {
        for (EventId x : below.members[d]) {
          if (!g.strongly_follows(v, x)) continue;
          ++sz;
          if (vote(t, jj - 1, x, c, el)) ++cnt;
        }
      }
      res = 2 * cnt >= sz;  // ties go to true
    }
    t.memo.emplace(key, res ? 1 : 0);
    return res;
  }

  void check_decided(STower& t) {
    for (NodeId c = 0; c < n; ++c) {
      if (t.phantom[c] == Fame::Undecided) return;
      for (const Entry& en : t.slots[c])
        if (en.fame == Fame::Undecided) return;
    }
    t.decided_all = true;
    t.famous_els.clear();
    for (NodeId c = 0; c < n; ++c)
      for (const Entry& en : t.slots[c])
        if (en.fame == Fame::Famous) t.famous_els.push_back(en.el);
  }

  void decide_pass(STower& t, EventId e) {
    if (t.tiers.size() <= m || t.decided_all) return;
    std::vector<EventId> s;
    std::uint32_t kk = 0;
    bool found = false;
    for (std::uint32_t j = static_cast<std::uint32_t>(t.tiers.size()) - m;
         j-- > 0;) {
      s.clear();
      const STier& tier = t.tiers[m + j];
      for (NodeId d = 0; d < n; ++d)
        for (EventId x : tier.members[d])
          if (g.strongly_follows(e, x)) s.push_back(x);
      if (2 * s.size() > n + f) {
        kk = j;
        found = true;
        break;
      }
    }
    if (!found) return;
    std::uint32_t sz = static_cast<std::uint32_t>(s.size());
    for (NodeId c = 0; c < n; ++c) {
      auto decide_entry = [&](EventId el) -> Fame {
        std::uint32_t cnt = 0;
        for (EventId x : s)
          if (vote(t, kk, x, c, el)) ++cnt;
        bool v = 2 * cnt >= sz;
        std::uint32_t nv = v ? cnt : sz - cnt;
        if (2 * nv <= n + f) return Fame::Undecided;
        return v ? Fame::Famous : Fame::NotFamous;
      };
      for (Entry& en : t.slots[c]) {
        if (en.fame != Fame::Undecided) continue;
        Fame r = decide_entry(en.el);
        if (r == Fame::Undecided) continue;
        en.fame = r;
        if (o.opt_.record_decisions)
          o.decisions_.push_back(DecisionRecord{t.k, c, r == Fame::Famous, e});
      }
      if (t.phantom[c] == Fame::Undecided) {
        Fame r = decide_entry(kNoEvent);
        if (r != Fame::Undecided) t.phantom[c] = r;
      }
    }
    check_decided(t);
  }

  // no member of the same creator that e follows may already be in the tier
  bool earliest_in(const std::vector<EventId>& mine, EventId e) const {
    for (EventId x : mine)
      if (g.follows(e, x)) return false;
    return true;
  }

  STower& ensure_tower(std::uint32_t k) {
    if (k > towers.size()) {
      assert(k == towers.size() + 1);
      towers.emplace_back();
      STower& t = towers.back();
      t.k = k;
      t.tiers.emplace_back();
      t.tiers[0].members.assign(n, {});
      t.slots.assign(n, {});
      t.phantom.assign(n, Fame::Undecided);
      if (!lemma_wanted) t.lemma_checked = true;
    }
    return towers[k - 1];
  }

  void join_base(std::uint32_t k, EventId e, NodeId c) {
    STower& t = ensure_tower(k);
    if (!earliest_in(t.tiers[0].members[c], e)) return;
    t.tiers[0].members[c].push_back(e);
    Entry en;
    en.el = e;
    if (t.phantom[c] != Fame::Undecided) en.fame = Fame::NotFamous;
    t.slots[c].push_back(en);
  }

  bool base_pred(std::uint32_t k, EventId e) const {
    const STier& below = towers[k - 2].tiers[0];
    if (spec.base == BaseKind::A ||
        ((spec.base == BaseKind::C || spec.base == BaseKind::CPrime) &&
         k % spec.b == 0)) {
      std::uint32_t creators = 0;
      for (NodeId d = 0; d < n; ++d)
        for (EventId x : below.members[d])
          if (g.follows(e, x)) {
            ++creators;
            break;
          }
      return creators >= n - f;
    }
    if (spec.base == BaseKind::C || spec.base == BaseKind::CPrime) {
      std::uint32_t cnt = 0;
      for (NodeId d = 0; d < n; ++d)
        for (EventId x : below.members[d])
          if (!(spec.base == BaseKind::CPrime && x == e) && g.follows(e, x))
            ++cnt;
      return cnt >= spec.a;
    }
    // S': strongly follows n - f members from different creators
    std::uint32_t creators = 0;
    for (NodeId d = 0; d < n; ++d)
      for (EventId x : below.members[d])
        if (g.strongly_follows(e, x)) {
          ++creators;
          break;
        }
    return creators >= n - f;
  }

  void base_pass(EventId e, const Event& ev, NodeId c) {
    if (spec.base == BaseKind::S) {
      if (!rt->witness(e)) return;
      EventId sp = g.self_parent_id(e);
      std::uint32_t lo = sp == kNoEvent ? 1 : rt->chain_hw(sp) + 1;
      std::uint32_t hi = rt->round(e);
      for (std::uint32_t k = lo; k <= hi; ++k) join_base(k, e, c);
      return;
    }
    if (ev.digest.index == 0) join_base(1, e, c);
    for (std::uint32_t k = 2; k <= towers.size() + 1; ++k) {
      if (k - 1 > towers.size()) break;
      if (base_pred(k, e)) join_base(k, e, c);
    }
  }

  void lemma_check(STower& t) {
    t.lemma_checked = true;
    if (g.has_forks()) return;
    bool any = false;
    for (NodeId c = 0; c < n; ++c)
      for (const Entry& en : t.slots[c]) any = any || en.fame == Fame::Famous;
    if (!any) ++o.lemma_violations_;
  }

  void join_pass(STower& t, EventId e, NodeId c) {
    // with forks the relations are not monotone across tiers, so every
    // tier is evaluated independently
    for (std::uint32_t j = 1; j <= t.tiers.size(); ++j) {
      const STier& below = t.tiers[j - 1];
      std::uint32_t creators = 0;
      for (NodeId d = 0; d < n; ++d) {
        for (EventId x : below.members[d]) {
          bool rel = j > m ? g.strongly_follows(e, x) : vote_rel(e, x);
          if (rel) {
            ++creators;
            break;
          }
        }
      }
      if (creators < n - f) continue;
      if (j == t.tiers.size()) {
        t.tiers.emplace_back();
        t.tiers.back().members.assign(n, {});
        t.tiers[j].members[c].push_back(e);
        if (j == m + 2 && !t.lemma_checked) lemma_check(t);
      } else if (earliest_in(t.tiers[j].members[c], e)) {
        t.tiers[j].members[c].push_back(e);
      }
    }
  }

  void advance(EventId e) {
    assert(e == next_expected);
    ++next_expected;
    const Event& ev = g.event(e);
    NodeId c = ev.digest.creator;
    base_pass(e, ev, c);
    for (STower& t : towers) {
      decide_pass(t, e);
      join_pass(t, e, c);
    }
  }
};

// ---------------------------------------------------------------------------
// facade

BvcEngine::BvcEngine(const Hashgraph& g, const AlgorithmSpec& spec,
                     const RoundTable* rounds, FameOptions opt)
    : g_(g), spec_(spec), rt_(rounds), opt_(opt) {
  if (spec.reference_hg)
    fail(Errc::MalformedScenario, "the reference algorithm has no layer engine");
  spec.validate(g.node_count());
  if (g.node_count() < 2)
    fail(Errc::MalformedScenario, "need at least two nodes");
  if (g.node_count() > 64)
    fail(Errc::MalformedScenario, "at most 64 nodes are supported");
  if (spec.base == BaseKind::S && rt_ == nullptr)
    fail(Errc::MalformedScenario, "round table required for this base");
  if (!g.has_forks() && !opt_.force_slow) {
    fast_ = std::make_unique<Fast>(*this);
  } else {
    if (opt_.coverage)
      fail(Errc::MalformedScenario, "coverage tracking needs the mask path");
    slow_ = std::make_unique<Slow>(*this);
  }
}

BvcEngine::~BvcEngine() = default;

void BvcEngine::advance(EventId e) {
  if (fast_) fast_->advance(e);
  else slow_->advance(e);
}

std::uint32_t BvcEngine::tower_count() const {
  return fast_ ? static_cast<std::uint32_t>(fast_->towers.size())
               : static_cast<std::uint32_t>(slow_->towers.size());
}

bool BvcEngine::tower_decided(std::uint32_t k) const {
  if (k == 0 || k > tower_count()) return false;
  return fast_ ? fast_->towers[k - 1].decided_all
               : slow_->towers[k - 1].decided_all;
}

const std::vector<EventId>& BvcEngine::famous(std::uint32_t k) const {
  if (k == 0 || k > tower_count()) return no_events_;
  return fast_ ? fast_->towers[k - 1].famous_els : slow_->towers[k - 1].famous_els;
}

Fame BvcEngine::slot_fame(std::uint32_t k, NodeId c) const {
  if (k == 0 || k > tower_count()) return Fame::Undecided;
  if (fast_) return fast_->towers[k - 1].fame[c];
  const Slow::STower& t = slow_->towers[k - 1];
  bool all = true;
  for (const auto& en : t.slots[c]) {
    if (en.fame == Fame::Famous) return Fame::Famous;
    all = all && en.fame != Fame::Undecided;
  }
  if (t.slots[c].empty())
    return t.phantom[c];
  return all && t.phantom[c] != Fame::Undecided ? Fame::NotFamous
                                                : Fame::Undecided;
}

EventId BvcEngine::slot_element(std::uint32_t k, NodeId c) const {
  if (k == 0 || k > tower_count()) return kNoEvent;
  if (fast_) return fast_->towers[k - 1].element[c];
  const Slow::STower& t = slow_->towers[k - 1];
  for (const auto& en : t.slots[c])
    if (en.fame == Fame::Famous) return en.el;
  return t.slots[c].empty() ? kNoEvent : t.slots[c].front().el;
}

const std::vector<std::uint32_t>& BvcEngine::triggers(std::uint32_t k) const {
  if (!fast_ || k == 0 || k > tower_count()) return no_trig_;
  return fast_->towers[k - 1].trig;
}

TowerSnapshot BvcEngine::snapshot(std::uint32_t k) const {
  TowerSnapshot out;
  out.index = k;
  if (k == 0 || k > tower_count()) return out;
  std::uint32_t n = g_.node_count();
  out.decided = tower_decided(k);
  if (fast_) {
    const Fast::Tower& t = fast_->towers[k - 1];
    for (const auto& tier : t.tiers) {
      TierSnapshot ts;
      ts.members.assign(n, {});
      for (NodeId c = 0; c < n; ++c)
        if (tier.member[c] != kNoEvent) ts.members[c].push_back(tier.member[c]);
      out.tiers.push_back(std::move(ts));
    }
    out.slots.assign(n, {});
    for (NodeId c = 0; c < n; ++c) {
      if (t.element[c] != kNoEvent)
        out.slots[c].elements.push_back({t.element[c], t.fame[c]});
      else
        out.slots[c].absent = t.fame[c];
    }
  } else {
    const Slow::STower& t = slow_->towers[k - 1];
    for (const auto& tier : t.tiers) {
      TierSnapshot ts;
      ts.members = tier.members;
      out.tiers.push_back(std::move(ts));
    }
    out.slots.assign(n, {});
    for (NodeId c = 0; c < n; ++c) {
      for (const auto& en : t.slots[c])
        out.slots[c].elements.push_back({en.el, en.fame});
      // absent fame is only meaningful while the slot has no members
      if (t.slots[c].empty()) out.slots[c].absent = t.phantom[c];
    }
  }
  return out;
}

bool BvcEngine::fast() const { return fast_ != nullptr; }

// ---------------------------------------------------------------------------
// reference fame voting

const std::vector<EventId> HgFame::empty_;
const std::vector<std::uint32_t> HgFame::no_trig_;

HgFame::HgFame(const Hashgraph& g, const RoundTable& rt, FameOptions opt)
    : g_(g), rt_(rt), opt_(opt), n_(g.node_count()) {
  if (g.has_forks())
    fail(Errc::MalformedScenario,
         "the reference fame path supports fork-free histories only");
  if (n_ < 2 || n_ > 64)
    fail(Errc::MalformedScenario, "between 2 and 64 nodes are supported");
  fame_.assign(g.size(), Fame::Undecided);
  last_of_.assign(n_, kNoEvent);
  for (NodeId c = 0; c < n_; ++c) {
    if (!g.events_of(c).empty()) {
      last_of_[c] = g.events_of(c).back();
      active_ |= 1ull << c;
    }
  }
}

bool HgFame::covered(EventId x) const {
  auto it = cov_.find(x);
  if (it == cov_.end()) return true;
  return (active_ & ~it->second.rec) == 0;
}

bool HgFame::decide_or_compare(EventId x, bool v, EventId y) {
  std::uint32_t rx = rt_.round(x);
  if (fame_[x] == Fame::Undecided) {
    fame_[x] = v ? Fame::Famous : Fame::NotFamous;
    assert(open_left_[rx - 1] > 0);
    --open_left_[rx - 1];
    if (rx <= settled_ && v) ++late_violations_;
    if (opt_.record_decisions)
      decisions_.push_back(DecisionRecord{rx, g_.event(x).digest.creator, v, y});
  } else if (v != (fame_[x] == Fame::Famous)) {
    ++agreement_violations_;
  }
  if (opt_.coverage) {
    Cov& cv = cov_[x];
    if (cv.trig.empty()) cv.trig.assign(n_, kNoTrigger);
    NodeId d = g_.event(y).digest.creator;
    if (cv.trig[d] == kNoTrigger) {
      cv.trig[d] = g_.event(y).digest.index;
      cv.rec |= 1ull << d;
    }
    return (active_ & ~cv.rec) == 0;
  }
  return true;
}

bool HgFame::vote_on(EventId y, EventId x) {
  std::uint32_t rx = rt_.round(x);
  std::uint32_t ry = rt_.round(y);
  std::uint32_t d = ry - rx;
  assert(d >= 1);
  auto& vx = votes_[x];
  if (vx.size() < d) vx.resize(d, 0);
  std::uint64_t yb = 1ull << g_.event(y).digest.creator;
  if (d == 1) {
    bool val = g_.latest_index(y, g_.event(x).digest.creator) >=
               static_cast<std::int32_t>(g_.event(x).digest.index);
    if (val) vx[0] |= yb;
    return false;
  }
  std::uint64_t s = rt_.prev_seen(y);
  std::uint64_t vmask = vx[d - 2];
  std::uint32_t sz = pop(s);
  std::uint32_t cnt = pop(s & vmask);
  assert(sz > 0);
  bool val = 2 * cnt >= sz;
  if (val) vx[d - 1] |= yb;
  std::uint32_t t = val ? cnt : sz - cnt;
  if (3 * t > 2 * n_) {
    bool closed = decide_or_compare(x, val, y);
    if (closed) return fame_[x] != Fame::Undecided;
  }
  return false;
}

void HgFame::try_settle() {
  while (settled_ < seen_rounds_ && open_left_[settled_] == 0) {
    ++settled_;
    std::vector<EventId> fw;
    for (EventId w : rt_.witnesses(settled_))
      if (w < next_expected_ && fame_[w] == Fame::Famous) fw.push_back(w);
    ufw_.push_back(std::move(fw));
  }
}

void HgFame::advance(EventId e) {
  assert(e == next_expected_);
  ++next_expected_;
  NodeId c = g_.event(e).digest.creator;
  if (rt_.witness(e)) {
    std::uint32_t r = rt_.round(e);
    if (r > seen_rounds_) {
      assert(r == seen_rounds_ + 1);
      seen_rounds_ = r;
      open_.resize(seen_rounds_);
      open_left_.resize(seen_rounds_, 0);
    }
    open_[r - 1].push_back(e);
    ++open_left_[r - 1];
    votes_.emplace(e, std::vector<std::uint64_t>{});
    // votes already owed to e by previously processed higher-round witnesses
    for (std::uint32_t rr = r + 1; rr <= seen_rounds_; ++rr) {
      bool closed = false;
      for (EventId y : rt_.witnesses(rr)) {
        if (y >= e) continue;
        if (vote_on(y, e)) {
          closed = true;
          break;
        }
      }
      if (closed) {
        auto& lst = open_[r - 1];
        lst.erase(std::find(lst.begin(), lst.end(), e));
        break;
      }
    }
    // e votes on everything still in flight below its round
    for (std::uint32_t rr = 1; rr < r; ++rr) {
      auto& lst = open_[rr - 1];
      for (std::size_t i = 0; i < lst.size();) {
        if (vote_on(e, lst[i])) {
          lst[i] = lst.back();
          lst.pop_back();
        } else {
          ++i;
        }
      }
    }
  }
  if (last_of_[c] == e) {
    active_ &= ~(1ull << c);
    // coverage needs may have shrunk
    for (auto& lst : open_) {
      for (std::size_t i = 0; i < lst.size();) {
        if (fame_[lst[i]] != Fame::Undecided && covered(lst[i])) {
          lst[i] = lst.back();
          lst.pop_back();
        } else {
          ++i;
        }
      }
    }
  }
  try_settle();
}

const std::vector<EventId>& HgFame::famous(std::uint32_t r) const {
  if (r == 0 || r > settled_) return empty_;
  return ufw_[r - 1];
}

Fame HgFame::fame(EventId w) const { return fame_[w]; }

const std::vector<std::uint32_t>& HgFame::triggers(EventId w) const {
  auto it = cov_.find(w);
  return it == cov_.end() ? no_trig_ : it->second.trig;
}

}  // namespace bvcast
