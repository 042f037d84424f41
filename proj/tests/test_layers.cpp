#include "doctest.h"

#include <string>
#include <vector>

#include "bvcast/algorithm_spec.hpp"
#include "bvcast/errors.hpp"
#include "bvcast/layers.hpp"
#include "support/brute.hpp"
#include "support/dag_builder.hpp"

using namespace bvcast;
using namespace bvcast::testing;

namespace {

// Round recurrence evaluated straight from the brute-force predicates; no
// lane machinery involved.
struct BruteRounds {
  std::vector<std::uint32_t> round;
  std::vector<bool> witness;
  std::vector<std::uint32_t> chain_hw;
  std::vector<std::uint64_t> prev_seen;
  std::vector<std::vector<EventId>> by_round;
};

BruteRounds brute_rounds(const Hashgraph& g) {
  BruteOracle oracle(g);
  const std::uint32_t n = g.node_count();
  BruteRounds out;
  out.round.resize(g.size());
  out.witness.resize(g.size());
  out.chain_hw.resize(g.size());
  out.prev_seen.resize(g.size(), 0);
  for (EventId e = 0; e < g.size(); ++e) {
    EventId sp = g.self_parent_id(e);
    EventId op = g.other_parent_id(e);
    std::uint32_t r_base = 1;
    if (sp != kNoEvent) r_base = std::max(r_base, out.round[sp]);
    if (op != kNoEvent) r_base = std::max(r_base, out.round[op]);
    std::uint32_t seen = 0;
    if (r_base <= out.by_round.size()) {
      for (EventId w : out.by_round[r_base - 1])
        if (oracle.strongly_sees(e, w)) ++seen;
    }
    std::uint32_t r = r_base + (3 * seen > 2 * n ? 1 : 0);
    out.round[e] = r;
    out.witness[e] = sp == kNoEvent || r > out.round[sp];
    out.chain_hw[e] = sp == kNoEvent ? 0 : out.chain_hw[sp];
    if (out.witness[e]) {
      out.chain_hw[e] = r;
      if (r >= 2) {
        for (EventId w : out.by_round[r - 2])
          if (oracle.strongly_sees(e, w))
            out.prev_seen[e] |= 1ull << g.event(w).digest.creator;
      }
      if (out.by_round.size() < r) out.by_round.resize(r);
      out.by_round[r - 1].push_back(e);
    }
  }
  return out;
}

void check_against_brute(const Hashgraph& g, bool check_masks) {
  RoundTable rt = RoundTable::compute(g);
  BruteRounds ref = brute_rounds(g);
  for (EventId e = 0; e < g.size(); ++e) {
    CAPTURE(e);
    CHECK(rt.round(e) == ref.round[e]);
    CHECK(rt.witness(e) == ref.witness[e]);
    CHECK(rt.chain_hw(e) == ref.chain_hw[e]);
    if (check_masks && ref.witness[e]) CHECK(rt.prev_seen(e) == ref.prev_seen[e]);
  }
  CHECK(rt.max_round() == ref.by_round.size());
  for (std::uint32_t r = 1; r <= rt.max_round(); ++r) {
    CAPTURE(r);
    CHECK(rt.witnesses(r) == ref.by_round[r - 1]);
  }
}

}  // namespace

TEST_SUITE_BEGIN("layers");

TEST_CASE("algorithm names parse and format round trip") {
  for (const AlgorithmSpec& spec : paper_preset()) {
    AlgorithmSpec again = parse_algorithm(spec.format());
    CHECK(again == spec);
    CHECK(again.format() == spec.format());
  }
  CHECK(parse_algorithm("HG").reference_hg);
  CHECK(parse_algorithm("HG").format() == "HG");
  CHECK(parse_algorithm("BVC.HG") == AlgorithmSpec::bvc_hg());
  // the long form normalizes to the alias
  CHECK(parse_algorithm("BVC.S.S(1)") == AlgorithmSpec::bvc_hg());
  CHECK(parse_algorithm("BVC.S.S(1)").format() == "BVC.HG");
  AlgorithmSpec cp = parse_algorithm("BVC.C'(3,10000).S'(1)");
  CHECK(cp.base == BaseKind::CPrime);
  CHECK(cp.a == 3);
  CHECK(cp.b == 10000);
  CHECK(cp.vote == VoteKind::SPrime);
  CHECK(cp.m == 1);
  AlgorithmSpec deep = parse_algorithm("BVC.S'.A(2)");
  CHECK(deep.base == BaseKind::SPrime);
  CHECK(deep.vote == VoteKind::A);
  CHECK(deep.m == 2);
}

TEST_CASE("malformed algorithm names are rejected") {
  const char* bad[] = {
      "",          "H",           "HGX",          "BVC",        "BVC.",
      "BVC.X.A(1)", "BVC.A.A",    "BVC.A.A()",    "BVC.A.A(0)", "BVC.C.A(1)",
      "BVC.C(2).A(1)", "BVC.C(2,).A(1)", "BVC.A.B(1)", "BVC.A.A(1)x",
      "BVC.A.A(1) ", " HG",       "BVC.A.A(99999999999)",
  };
  for (const char* name : bad) {
    CAPTURE(name);
    CHECK_THROWS_AS(parse_algorithm(name), Error);
  }
}

TEST_CASE("validate checks the width window") {
  // n=4 tolerates one fault, so widths run up to n-f=3
  parse_algorithm("BVC.C(2,10000).A(1)").validate(4);
  parse_algorithm("BVC.C(3,10000).A(1)").validate(4);
  CHECK_THROWS_AS(parse_algorithm("BVC.C(4,10000).A(1)").validate(4), Error);
  parse_algorithm("BVC.C'(1,10000).A(1)").validate(4);
  CHECK_THROWS_AS(parse_algorithm("BVC.C'(4,10000).A(1)").validate(4), Error);
  CHECK_THROWS_AS(parse_algorithm("BVC.C'(5,10000).S'(1)").validate(5), Error);
  parse_algorithm("BVC.C'(5,10000).S'(1)").validate(6);
  AlgorithmSpec zero_b = parse_algorithm("BVC.C(2,1).A(1)");
  zero_b.b = 0;
  CHECK_THROWS_AS(zero_b.validate(4), Error);
  AlgorithmSpec::hg().validate(4);
  AlgorithmSpec::bvc_hg().validate(4);
}

TEST_CASE("preset has the eighteen table rows in order") {
  std::vector<AlgorithmSpec> preset = paper_preset();
  REQUIRE(preset.size() == 18);
  CHECK(preset[0].reference_hg);
  CHECK(preset[1] == AlgorithmSpec::bvc_hg());
  CHECK(preset[2].format() == "BVC.S'.S'(1)");
  CHECK(preset[15].format() == "BVC.C'(3,10000).S'(1)");
  // every row except the wide C' tails is valid at every bench size
  for (std::size_t i = 0; i < preset.size(); ++i) {
    CAPTURE(i);
    if (preset[i].a >= 4) continue;
    for (std::uint32_t n : {4u, 5u, 6u, 10u, 50u}) preset[i].validate(n);
  }
}

TEST_CASE("lane pool guards recycled slots by birth id") {
  LanePool pool;
  pool.begin(0);
  std::uint32_t s = pool.alloc(0);
  pool.begin(1);
  pool.at(1)[s] = 5;
  CHECK(pool.read(1, s) == 5);
  CHECK(pool.read(0, s) == 0);  // event 0 was sized before the slot existed
  CHECK(pool.read(kNoEvent, s) == 0);
  CHECK(pool.read(1, kNoSlot) == 0);
  pool.release(s);
  std::uint32_t s2 = pool.alloc(3);
  CHECK(s2 == s);  // recycled
  // the old tenant's value must not leak through the new lane
  CHECK(pool.read(1, s2) == 0);
  pool.begin(4);
  pool.at(4)[s2] = 9;
  CHECK(pool.read(4, s2) == 9);
  CHECK(pool.inherited(1, 4, s2) == 9);
}

TEST_CASE("rounds on a small hand graph") {
  DagBuilder d(4);
  d.start("a0", 0);
  d.start("b0", 1);
  d.start("c0", 2);
  d.start("d0", 3);
  d.ev("b1", 1, "b0", "a0");
  d.ev("c1", 2, "c0", "b1");
  d.ev("d1", 3, "d0", "c1");
  d.ev("a1", 0, "a0", "d1");
  d.ev("b2", 1, "b1", "a1");
  RoundTable rt = RoundTable::compute(d.hg);
  CHECK(rt.fast());

  for (const char* name : {"a0", "b0", "c0", "d0"}) {
    CAPTURE(name);
    CHECK(rt.round(d.id(name)) == 1);
    CHECK(rt.witness(d.id(name)));
    CHECK(rt.chain_hw(d.id(name)) == 1);
    CHECK(rt.prev_seen(d.id(name)) == 0);
  }
  for (const char* name : {"b1", "c1", "d1"}) {
    CAPTURE(name);
    CHECK(rt.round(d.id(name)) == 1);
    CHECK(!rt.witness(d.id(name)));
  }
  // a1 strongly sees a0, b0, c0 but reaches d0 through too few creators
  CHECK(rt.round(d.id("a1")) == 2);
  CHECK(rt.witness(d.id("a1")));
  CHECK(rt.prev_seen(d.id("a1")) == 0b0111);
  CHECK(rt.chain_hw(d.id("a1")) == 2);
  // b2 inherits round 2 from its other parent and is a witness by chain rule
  CHECK(rt.round(d.id("b2")) == 2);
  CHECK(rt.witness(d.id("b2")));
  CHECK(rt.prev_seen(d.id("b2")) == 0b1111);

  CHECK(rt.max_round() == 2);
  CHECK(rt.witnesses(1) == std::vector<EventId>{d.id("a0"), d.id("b0"),
                                                d.id("c0"), d.id("d0")});
  CHECK(rt.witnesses(2) == std::vector<EventId>{d.id("a1"), d.id("b2")});
  CHECK(rt.witnesses(0).empty());
  CHECK(rt.witnesses(3).empty());

  check_against_brute(d.hg, true);
}

TEST_CASE("fast rounds match the brute recurrence on random graphs") {
  Splitmix64 rng(0x1a7e5u);
  for (std::uint32_t n : {2u, 4u, 5u, 7u, 10u}) {
    for (int rep = 0; rep < 3; ++rep) {
      CAPTURE(n);
      CAPTURE(rep);
      Hashgraph g = random_dag(rng, n, 40 * n, 0.0);
      REQUIRE(!g.has_forks());
      check_against_brute(g, true);
    }
  }
}

TEST_CASE("forked graphs fall back to the literal pass") {
  Splitmix64 rng(0xf03b2u);
  int forked = 0;
  for (std::uint32_t n : {4u, 5u, 6u}) {
    for (int rep = 0; rep < 4; ++rep) {
      CAPTURE(n);
      CAPTURE(rep);
      Hashgraph g = random_dag(rng, n, 30 * n, 0.15);
      RoundTable rt = RoundTable::compute(g);
      if (g.has_forks()) {
        ++forked;
        CHECK(!rt.fast());
      }
      // masks are only maintained on the fast path
      check_against_brute(g, !g.has_forks());
    }
  }
  CHECK(forked > 0);
}

TEST_CASE("round table rejects more than 64 nodes") {
  Hashgraph g(65);
  CHECK_THROWS_AS(RoundTable::compute(g), Error);
}

TEST_SUITE_END();
