#include "doctest.h"

#include "bvcast/bits.hpp"
#include "bvcast/hashgraph.hpp"
#include "support/brute.hpp"
#include "support/dag_builder.hpp"

using namespace bvcast;
using namespace bvcast::testing;

TEST_SUITE_BEGIN("hashgraph");

TEST_CASE("bits basics") {
  Bits a, b;
  a.set(3);
  a.set(200);
  CHECK(a.test(3));
  CHECK(a.test(200));
  CHECK(!a.test(4));
  CHECK(!a.test(100000));
  b.set(4);
  CHECK(!a.intersects(b));
  b.set(200);
  CHECK(a.intersects(b));
  b.or_with(a);
  CHECK(b.test(3));
  CHECK(a.subset_of(b));
  CHECK(!b.subset_of(a));
  CHECK(b.count() == 3);
  std::vector<std::size_t> got;
  b.for_each([&](std::size_t i) { got.push_back(i); });
  CHECK(got == std::vector<std::size_t>{3, 4, 200});
}

TEST_CASE("event digests chain by self-parent index") {
  Event a = make_event(1, std::nullopt, std::nullopt, 0);
  CHECK(a.digest.index == 0);
  CHECK(a.digest.creator == 1);
  CHECK(a.pseudo_signature == sign(a.digest.hash, 1));
  Event root = make_event(0, std::nullopt, std::nullopt, 0);
  Event b = make_event(1, a.digest, root.digest, 5);
  CHECK(b.digest.index == 1);
  CHECK(b.digest.hash != a.digest.hash);
  Event b2 = make_event(1, a.digest, root.digest, 6);
  CHECK(b2.digest.hash != b.digest.hash);
}

TEST_CASE("insert validation") {
  Hashgraph hg(3);
  Event a0 = make_event(0, std::nullopt, std::nullopt, 0);
  Event b0 = make_event(1, std::nullopt, std::nullopt, 0);
  hg.insert(a0);
  hg.insert(b0);

  SUBCASE("duplicate") {
    CHECK(hg.check_insert(a0) == Errc::DuplicateEvent);
    CHECK_THROWS_AS(hg.insert(a0), Error);
  }
  SUBCASE("missing parent") {
    Event c0 = make_event(2, std::nullopt, std::nullopt, 0);
    Event c1 = make_event(2, c0.digest, a0.digest, 1);
    CHECK(hg.check_insert(c1) == Errc::MissingParent);
  }
  SUBCASE("tampered content hash") {
    Event e = make_event(0, a0.digest, b0.digest, 1);
    e.timestamp = 99;
    CHECK(hg.check_insert(e) == Errc::MalformedEvent);
  }
  SUBCASE("tampered signature") {
    Event e = make_event(0, a0.digest, b0.digest, 1);
    e.pseudo_signature ^= 1;
    CHECK(hg.check_insert(e) == Errc::MalformedEvent);
  }
  SUBCASE("self-parent by another creator") {
    Event e = make_event(0, b0.digest, a0.digest, 1);
    CHECK(hg.check_insert(e) == Errc::MalformedEvent);
  }
  SUBCASE("other-parent by same creator") {
    Event a1 = make_event(0, a0.digest, b0.digest, 1);
    hg.insert(a1);
    Event e = make_event(0, a1.digest, a0.digest, 2);
    CHECK(hg.check_insert(e) == Errc::MalformedEvent);
  }
  SUBCASE("one parent only") {
    Event e = make_event(0, a0.digest, std::nullopt, 1);
    CHECK(hg.check_insert(e) == Errc::MalformedEvent);
  }
  SUBCASE("accepts a valid event") {
    Event e = make_event(0, a0.digest, b0.digest, 1);
    CHECK(!hg.check_insert(e).has_value());
    EventId id = hg.insert(e);
    CHECK(hg.event(id).digest == e.digest);
    CHECK(hg.find(e.digest.hash) == id);
  }
}

TEST_CASE("follows is reflexive and transitive on a small graph") {
  DagBuilder d(3);
  d.start("a0", 0);
  d.start("b0", 1);
  d.start("c0", 2);
  d.ev("b1", 1, "b0", "a0");
  d.ev("c1", 2, "c0", "b1");
  d.ev("a1", 0, "a0", "c1");

  CHECK(d.hg.follows(d.id("a1"), d.id("a1")));
  CHECK(d.hg.follows(d.id("b1"), d.id("a0")));
  CHECK(d.hg.follows(d.id("c1"), d.id("a0")));
  CHECK(d.hg.follows(d.id("a1"), d.id("b0")));
  CHECK(!d.hg.follows(d.id("b1"), d.id("c0")));
  CHECK(!d.hg.follows(d.id("a0"), d.id("a1")));
  CHECK(d.hg.creation_time(d.id("a0")) == 0);
  CHECK(d.hg.creation_time(d.id("b1")) == 1);
  CHECK(d.hg.creation_time(d.id("c1")) == 2);
  CHECK(d.hg.creation_time(d.id("a1")) == 3);
}

TEST_CASE("fork registry flags forking creators") {
  DagBuilder d(4);
  d.start("a0", 0);
  d.start("b0", 1);
  d.start("c0", 2);
  d.start("d0", 3);
  d.ev("b1", 1, "b0", "a0");
  CHECK(!d.hg.branched(1));
  // second child of b0 opens a branch and a genuine fork
  d.ev("b1x", 1, "b0", "c0");
  CHECK(d.hg.branched(1));
  CHECK(d.hg.creator_forked(1));
  auto pair = d.hg.fork_pair(1);
  REQUIRE(pair.has_value());
  CHECK(d.hg.is_fork(pair->first, pair->second));
  CHECK(d.hg.is_fork(d.id("b1"), d.id("b1x")));
  CHECK(!d.hg.is_fork(d.id("b1"), d.id("b0")));
  CHECK(!d.hg.is_fork(d.id("b1"), d.id("a0")));

  // d2 follows both sides of the fork: it follows b1 and b1x but sees neither
  d.ev("d1", 3, "d0", "b1");
  d.ev("d2", 3, "d1", "b1x");
  CHECK(d.hg.sees(d.id("d1"), d.id("b1")));
  CHECK(d.hg.follows(d.id("d2"), d.id("b1")));
  CHECK(!d.hg.sees(d.id("d2"), d.id("b1")));
  CHECK(!d.hg.sees(d.id("d2"), d.id("b0")));
  // but it still clearly follows b0, which no fork contradicts
  CHECK(d.hg.clearly_follows(d.id("d2"), d.id("b0")));
  CHECK(!d.hg.clearly_follows(d.id("d2"), d.id("b1")));
}

TEST_CASE("two starting events are a fork") {
  Hashgraph hg(4);
  EventId a = hg.insert(make_event(0, std::nullopt, std::nullopt, 0));
  EventId b = hg.insert(make_event(0, std::nullopt, std::nullopt, 1));
  CHECK(hg.branched(0));
  CHECK(hg.creator_forked(0));
  CHECK(hg.is_fork(a, b));
}

static void compare_all(const Hashgraph& hg, std::uint64_t sample_seed) {
  BruteOracle oracle(hg);
  std::uint32_t e = hg.size();
  for (EventId a = 0; a < e; ++a) {
    for (EventId b = 0; b < e; ++b) {
      CHECK(hg.follows(a, b) == oracle.follows(a, b));
      CHECK(hg.is_fork(a, b) == oracle.is_fork(a, b));
    }
  }
  Splitmix64 rng(sample_seed);
  for (int i = 0; i < 500; ++i) {
    EventId a = static_cast<EventId>(rng.below(e));
    EventId b = static_cast<EventId>(rng.below(e));
    CHECK(hg.sees(a, b) == oracle.sees(a, b));
    CHECK(hg.clearly_follows(a, b) == oracle.clearly_follows(a, b));
  }
  for (int i = 0; i < 150; ++i) {
    EventId a = static_cast<EventId>(rng.below(e));
    EventId b = static_cast<EventId>(rng.below(e));
    CHECK(hg.strongly_sees(a, b) == oracle.strongly_sees(a, b));
    CHECK(hg.relaxed_strongly_sees(a, b) == oracle.relaxed_strongly_sees(a, b));
    CHECK(hg.strongly_follows(a, b) == oracle.strongly_follows(a, b));
  }
  for (EventId x = 0; x < e; ++x) {
    CHECK(hg.is_supported(x) == oracle.is_supported(x));
    CHECK(hg.creation_time(x) == oracle.creation_time(x));
  }
}

TEST_CASE("predicates agree with brute-force expansion") {
  SUBCASE("fork-free n=4") {
    Splitmix64 rng(11);
    Hashgraph hg = random_dag(rng, 4, 110, 0.0);
    CHECK(!hg.has_forks());
    compare_all(hg, 101);
  }
  SUBCASE("forked n=4") {
    Splitmix64 rng(12);
    Hashgraph hg = random_dag(rng, 4, 110, 0.15);
    compare_all(hg, 102);
  }
  SUBCASE("forked n=7") {
    Splitmix64 rng(13);
    Hashgraph hg = random_dag(rng, 7, 150, 0.10);
    CHECK(hg.has_forks());
    compare_all(hg, 103);
  }
}

TEST_CASE("unknown ids are rejected") {
  Hashgraph hg(3);
  hg.insert(make_event(0, std::nullopt, std::nullopt, 0));
  CHECK_THROWS_AS(hg.follows(0, 5), Error);
  CHECK_THROWS_AS((void)hg.is_supported(7), Error);
  CHECK_THROWS_AS((void)hg.require(12345), Error);
}

TEST_SUITE_END();
