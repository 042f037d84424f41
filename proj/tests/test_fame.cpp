#include "doctest.h"

#include <algorithm>
#include <tuple>
#include <vector>

#include "bvcast/algorithm_spec.hpp"
#include "bvcast/errors.hpp"
#include "bvcast/fame.hpp"
#include "bvcast/layers.hpp"
#include "support/dag_builder.hpp"

using namespace bvcast;
using namespace bvcast::testing;

namespace {

// Round-robin gossip: every sweep each creator receives from its predecessor
// and appends one event. Dense enough that rounds advance every few sweeps.
Hashgraph spiral(std::uint32_t n, std::uint32_t sweeps) {
  Hashgraph hg(n);
  std::vector<EventId> tip(n);
  for (NodeId c = 0; c < n; ++c)
    tip[c] = hg.insert(make_event(c, std::nullopt, std::nullopt, 0));
  std::int64_t ts = 1;
  for (std::uint32_t t = 0; t < sweeps; ++t) {
    for (NodeId c = 0; c < n; ++c) {
      NodeId from = (c + n - 1) % n;
      tip[c] = hg.insert(make_event(c, hg.event(tip[c]).digest,
                                    hg.event(tip[from]).digest, ts++));
    }
  }
  return hg;
}

// Same shape with one silent creator that only owns its starting event.
Hashgraph spiral_with_mute(std::uint32_t n, NodeId mute, std::uint32_t sweeps) {
  Hashgraph hg(n);
  std::vector<EventId> tip(n);
  for (NodeId c = 0; c < n; ++c)
    tip[c] = hg.insert(make_event(c, std::nullopt, std::nullopt, 0));
  std::vector<NodeId> active;
  for (NodeId c = 0; c < n; ++c)
    if (c != mute) active.push_back(c);
  std::int64_t ts = 1;
  for (std::uint32_t t = 0; t < sweeps; ++t) {
    for (std::size_t i = 0; i < active.size(); ++i) {
      NodeId c = active[i];
      NodeId from = active[(i + active.size() - 1) % active.size()];
      tip[c] = hg.insert(make_event(c, hg.event(tip[c]).digest,
                                    hg.event(tip[from]).digest, ts++));
    }
  }
  return hg;
}

template <class Engine>
void feed(Engine& eng, const Hashgraph& g) {
  for (EventId e = 0; e < g.size(); ++e) eng.advance(e);
}

using DecKey = std::tuple<std::uint32_t, NodeId, bool, EventId>;

std::vector<DecKey> decision_keys(const std::vector<DecisionRecord>& recs) {
  std::vector<DecKey> out;
  for (const DecisionRecord& d : recs)
    out.emplace_back(d.tower, d.slot, d.famous, d.trigger);
  std::sort(out.begin(), out.end());
  return out;
}

void check_paths_agree(const Hashgraph& g, const AlgorithmSpec& spec,
                       const RoundTable& rt) {
  FameOptions keep;
  keep.keep_layers = true;
  keep.record_decisions = true;
  FameOptions lit = keep;
  lit.force_slow = true;
  BvcEngine fast(g, spec, &rt, keep);
  BvcEngine slow(g, spec, &rt, lit);
  REQUIRE(fast.fast());
  REQUIRE(!slow.fast());
  for (EventId e = 0; e < g.size(); ++e) {
    fast.advance(e);
    slow.advance(e);
  }
  CHECK(fast.tower_count() == slow.tower_count());
  CHECK(fast.lemma_violations() == slow.lemma_violations());
  std::uint32_t kt = std::min(fast.tower_count(), slow.tower_count());
  for (std::uint32_t k = 1; k <= kt; ++k) {
    CAPTURE(k);
    CHECK(fast.tower_decided(k) == slow.tower_decided(k));
    CHECK(fast.famous(k) == slow.famous(k));
    for (NodeId c = 0; c < g.node_count(); ++c) {
      CAPTURE(c);
      CHECK(fast.slot_fame(k, c) == slow.slot_fame(k, c));
      CHECK(fast.slot_element(k, c) == slow.slot_element(k, c));
    }
    TowerSnapshot fs = fast.snapshot(k);
    TowerSnapshot ss = slow.snapshot(k);
    CHECK(fs.decided == ss.decided);
    CHECK(fs.tiers.size() == ss.tiers.size());
    for (std::size_t j = 0; j < std::min(fs.tiers.size(), ss.tiers.size()); ++j) {
      CAPTURE(j);
      CHECK(fs.tiers[j].members == ss.tiers[j].members);
    }
    for (NodeId c = 0; c < g.node_count(); ++c) {
      CAPTURE(c);
      CHECK(fs.slots[c].elements == ss.slots[c].elements);
      CHECK(fs.slots[c].absent == ss.slots[c].absent);
    }
  }
  CHECK(decision_keys(fast.decisions()) == decision_keys(slow.decisions()));
}

}  // namespace

TEST_SUITE_BEGIN("fame");

TEST_CASE("construction guards") {
  Hashgraph g = spiral(4, 3);
  RoundTable rt = RoundTable::compute(g);
  CHECK_THROWS_AS((BvcEngine{g, AlgorithmSpec::hg(), &rt}), Error);
  // the rounds base cannot run without a round table
  CHECK_THROWS_AS((BvcEngine{g, AlgorithmSpec::bvc_hg(), nullptr}), Error);
  BvcEngine ok{g, parse_algorithm("BVC.A.A(1)"), nullptr};
  feed(ok, g);

  Splitmix64 rng(77);
  Hashgraph forked = random_dag(rng, 4, 60, 0.4);
  REQUIRE(forked.has_forks());
  FameOptions cov;
  cov.coverage = true;
  CHECK_THROWS_AS((BvcEngine{forked, parse_algorithm("BVC.A.A(1)"), nullptr, cov}),
                  Error);
  RoundTable frt = RoundTable::compute(forked);
  CHECK_THROWS_AS((HgFame{forked, frt}), Error);
}

TEST_CASE("first tower of the rounds base on dense gossip") {
  Hashgraph g = spiral(4, 12);
  RoundTable rt = RoundTable::compute(g);
  FameOptions opt;
  opt.keep_layers = true;
  opt.record_decisions = true;
  BvcEngine eng(g, AlgorithmSpec::bvc_hg(), &rt, opt);
  feed(eng, g);

  CHECK(eng.tower_count() == rt.max_round());
  REQUIRE(eng.tower_decided(1));
  // everyone talks to everyone, so all four starts end up famous
  CHECK(eng.famous(1).size() == 4);
  for (NodeId c = 0; c < 4; ++c) {
    CHECK(eng.slot_fame(1, c) == Fame::Famous);
    CHECK(eng.slot_element(1, c) == c);  // starts got ids 0..3
  }
  CHECK(eng.lemma_violations() == 0);
  CHECK(eng.agreement_violations() == 0);
  REQUIRE(!eng.decisions().empty());
  for (const DecisionRecord& d : eng.decisions()) {
    CHECK(d.tower >= 1);
    CHECK(d.slot < 4);
    CHECK(d.trigger < g.size());
    if (d.tower == 1) CHECK(d.famous);
  }

  // the base tier of tower k holds exactly the round k witnesses
  for (std::uint32_t k = 1; k <= eng.tower_count(); ++k) {
    CAPTURE(k);
    TowerSnapshot snap = eng.snapshot(k);
    std::vector<EventId> base;
    for (const auto& per_creator : snap.tiers.at(0).members)
      for (EventId e : per_creator) base.push_back(e);
    std::sort(base.begin(), base.end());
    std::vector<EventId> wits = rt.witnesses(k);
    std::sort(wits.begin(), wits.end());
    CHECK(base == wits);
  }
}

TEST_CASE("a silent creator is decided in absentia") {
  Hashgraph g = spiral_with_mute(4, 3, 14);
  RoundTable rt = RoundTable::compute(g);
  FameOptions opt;
  opt.keep_layers = true;
  BvcEngine eng(g, AlgorithmSpec::bvc_hg(), &rt, opt);
  feed(eng, g);

  REQUIRE(eng.tower_count() >= 3);
  REQUIRE(eng.tower_decided(1));
  // the mute start exists but nobody ever reaches it
  CHECK(eng.slot_element(1, 3) == 3);
  CHECK(eng.slot_fame(1, 3) == Fame::NotFamous);
  for (NodeId c = 0; c < 3; ++c) CHECK(eng.slot_fame(1, c) == Fame::Famous);

  REQUIRE(eng.tower_decided(2));
  CHECK(eng.slot_element(2, 3) == kNoEvent);
  CHECK(eng.slot_fame(2, 3) == Fame::NotFamous);
  TowerSnapshot snap = eng.snapshot(2);
  CHECK(snap.slots[3].elements.empty());
  CHECK(snap.slots[3].absent == Fame::NotFamous);
  CHECK(eng.famous(2).size() >= 1);
  CHECK(eng.famous(2).size() <= 3);
  CHECK(eng.lemma_violations() == 0);
}

TEST_CASE("mask and literal paths agree across configurations") {
  const char* algos[] = {
      "BVC.HG",
      "BVC.S'.S'(1)",
      "BVC.A.A(1)",
      "BVC.A.A(2)",
      "BVC.A.S'(1)",
      "BVC.S.A(1)",
      "BVC.S'.A(1)",
      "BVC.C(2,10000).A(1)",
      "BVC.C'(1,10000).S'(1)",
      "BVC.C'(3,10000).S'(1)",
  };
  Splitmix64 rng(0xfa3e11u);
  for (std::uint32_t n : {4u, 5u, 7u}) {
    for (int rep = 0; rep < 2; ++rep) {
      Hashgraph g = random_dag(rng, n, 30 * n, 0.0);
      REQUIRE(!g.has_forks());
      RoundTable rt = RoundTable::compute(g);
      for (const char* name : algos) {
        CAPTURE(n);
        CAPTURE(rep);
        CAPTURE(name);
        check_paths_agree(g, parse_algorithm(name), rt);
      }
    }
  }
}

TEST_CASE("rounds-base fame decisions match the reference voting") {
  Splitmix64 rng(0xbead5u);
  int compared = 0;
  for (std::uint32_t n : {4u, 5u, 6u}) {
    for (int rep = 0; rep < 3; ++rep) {
      CAPTURE(n);
      CAPTURE(rep);
      Hashgraph g = random_dag(rng, n, 50 * n, 0.0);
      RoundTable rt = RoundTable::compute(g);
      HgFame ref(g, rt);
      BvcEngine eng(g, AlgorithmSpec::bvc_hg(), &rt);
      feed(ref, g);
      feed(eng, g);
      CHECK(ref.late_violations() == 0);
      CHECK(ref.agreement_violations() == 0);
      CHECK(eng.lemma_violations() == 0);
      for (std::uint32_t r = 1; r <= rt.max_round(); ++r) {
        for (EventId w : rt.witnesses(r)) {
          Fame fh = ref.fame(w);
          if (fh == Fame::Undecided) continue;
          NodeId c = g.event(w).digest.creator;
          Fame fb = eng.slot_fame(r, c);
          if (fb == Fame::Undecided) continue;
          CAPTURE(r);
          CAPTURE(w);
          CHECK(fb == fh);
          CHECK(eng.slot_element(r, c) == w);
          ++compared;
        }
      }
      // settled rounds expose the frozen famous sets
      for (std::uint32_t r = 1; r <= ref.settled(); ++r) {
        std::vector<EventId> fam;
        for (EventId w : rt.witnesses(r))
          if (ref.fame(w) == Fame::Famous) fam.push_back(w);
        CHECK(ref.famous(r) == fam);
      }
    }
  }
  CHECK(compared > 40);
}

TEST_CASE("coverage tracking finds no disagreement") {
  Splitmix64 rng(0xc0ffe3u);
  Hashgraph g = random_dag(rng, 5, 260, 0.0);
  RoundTable rt = RoundTable::compute(g);
  FameOptions cov;
  cov.coverage = true;
  cov.record_decisions = true;

  BvcEngine eng(g, AlgorithmSpec::bvc_hg(), &rt, cov);
  feed(eng, g);
  CHECK(eng.agreement_violations() == 0);
  CHECK(eng.lemma_violations() == 0);
  REQUIRE(eng.tower_count() > 2);
  int filled = 0;
  for (std::uint32_t k = 1; k <= eng.tower_count(); ++k) {
    const std::vector<std::uint32_t>& trig = eng.triggers(k);
    if (trig.empty()) continue;
    REQUIRE(trig.size() == 25);
    for (NodeId slot = 0; slot < 5; ++slot) {
      for (NodeId c = 0; c < 5; ++c) {
        std::uint32_t at = trig[slot * 5 + c];
        if (at == kNoTrigger) continue;
        CHECK(at < g.events_of(c).size());
        ++filled;
      }
    }
  }
  CHECK(filled > 0);

  HgFame ref(g, rt, cov);
  feed(ref, g);
  CHECK(ref.agreement_violations() == 0);
  CHECK(ref.late_violations() == 0);
  int rows = 0;
  for (std::uint32_t r = 1; r <= rt.max_round(); ++r) {
    for (EventId w : rt.witnesses(r)) {
      const std::vector<std::uint32_t>& row = ref.triggers(w);
      if (row.empty()) continue;
      ++rows;
      REQUIRE(row.size() == 5);
      for (NodeId c = 0; c < 5; ++c) {
        if (row[c] == kNoTrigger) continue;
        CHECK(row[c] < g.events_of(c).size());
      }
    }
  }
  CHECK(rows > 0);
}

TEST_CASE("forked graphs run on the literal path and stay consistent") {
  Splitmix64 rng(0xdeadbeeu);
  int forked_runs = 0;
  for (int rep = 0; rep < 4; ++rep) {
    Hashgraph g = random_dag(rng, 5, 140, 0.2);
    if (!g.has_forks()) continue;
    ++forked_runs;
    RoundTable rt = RoundTable::compute(g);
    for (const char* name : {"BVC.HG", "BVC.A.A(1)", "BVC.S'.S'(1)"}) {
      CAPTURE(rep);
      CAPTURE(name);
      FameOptions opt;
      opt.keep_layers = true;
      BvcEngine eng(g, parse_algorithm(name), &rt, opt);
      REQUIRE(!eng.fast());
      feed(eng, g);
      for (std::uint32_t k = 1; k <= eng.tower_count(); ++k) {
        CAPTURE(k);
        if (!eng.tower_decided(k)) continue;
        TowerSnapshot snap = eng.snapshot(k);
        // the famous list is exactly the famous slot entries, creator order
        std::vector<EventId> fam;
        for (NodeId c = 0; c < 5; ++c)
          for (const auto& [el, fame] : snap.slots[c].elements)
            if (fame == Fame::Famous) fam.push_back(el);
        CHECK(eng.famous(k) == fam);
        for (NodeId c = 0; c < 5; ++c) CHECK(eng.slot_fame(k, c) != Fame::Undecided);
      }
    }
  }
  CHECK(forked_runs > 0);
}

TEST_SUITE_END();
