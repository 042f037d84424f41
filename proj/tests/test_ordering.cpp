#include "doctest.h"

#include <algorithm>
#include <set>
#include <tuple>
#include <vector>

#include "bvcast/algorithm_spec.hpp"
#include "bvcast/fame.hpp"
#include "bvcast/layers.hpp"
#include "bvcast/ordering.hpp"
#include "bvcast/run.hpp"
#include "bvcast/sim.hpp"
#include "support/brute.hpp"
#include "support/dag_builder.hpp"

using namespace bvcast;
using namespace bvcast::testing;

namespace {

using CommitKey = std::tuple<EventId, std::uint32_t, std::uint32_t,
                             std::int64_t, std::uint64_t>;

std::vector<CommitKey> commit_keys(const std::vector<Commit>& v) {
  std::vector<CommitKey> out;
  for (const Commit& c : v)
    out.emplace_back(c.id, c.layer, c.sublayer, c.timestamp, c.key);
  return out;
}

std::int64_t oracle_median(std::vector<std::int64_t> v) {
  std::sort(v.begin(), v.end());
  return v[(v.size() - 1) / 2];
}

}  // namespace

TEST_SUITE_BEGIN("ordering");

TEST_CASE("tower commits are the famous closures peeled in waves") {
  Splitmix64 rng(0x0d0e1u);
  for (std::uint32_t n : {4u, 6u}) {
    Hashgraph g = gossip_dag(rng, n, 35 * n);
    RoundTable rt = RoundTable::compute(g);
    BruteOracle brute(g);
    for (const char* name : {"BVC.HG", "BVC.A.A(1)"}) {
      CAPTURE(n);
      CAPTURE(name);
      BvcEngine eng(g, parse_algorithm(name), &rt);
      FastOrder ord(g, eng);
      for (EventId e = 0; e < g.size(); ++e) {
        eng.advance(e);
        ord.poll();
      }
      CHECK(ord.key_violations() == 0);

      const std::vector<Commit>& stream = ord.stream();
      REQUIRE(!stream.empty());
      std::vector<std::uint32_t> order_of(g.size(), kNoSlot);
      for (std::uint32_t i = 0; i < stream.size(); ++i)
        order_of[stream[i].id] = i;

      std::vector<char> done(g.size(), 0);
      std::size_t pos = 0;
      for (std::uint32_t k = 1; k <= ord.processed_layers(); ++k) {
        CAPTURE(k);
        const auto& fam = eng.famous(k);
        REQUIRE(eng.tower_decided(k));
        if (fam.empty()) continue;
        std::int64_t want_ts;
        {
          std::vector<std::int64_t> ts;
          std::uint64_t wkey = 0;
          for (EventId w : fam) {
            ts.push_back(g.event(w).timestamp);
            wkey ^= g.event(w).pseudo_signature;
          }
          want_ts = oracle_median(ts);
          // the layer segment must be exactly the uncommitted famous closure
          std::set<EventId> expect;
          for (EventId x = 0; x < g.size(); ++x) {
            if (done[x]) continue;
            for (EventId w : fam) {
              if (brute.follows(w, x)) {
                expect.insert(x);
                break;
              }
            }
          }
          std::set<EventId> got;
          while (pos < stream.size() && stream[pos].layer == k) {
            const Commit& c = stream[pos];
            got.insert(c.id);
            CHECK(c.timestamp == want_ts);
            CHECK(c.key == (g.event(c.id).pseudo_signature ^ wkey));
            // parents commit in an earlier wave or an earlier layer
            for (EventId p : {g.self_parent_id(c.id), g.other_parent_id(c.id)}) {
              if (p == kNoEvent) continue;
              REQUIRE(order_of[p] != kNoSlot);
              const Commit& pc = stream[order_of[p]];
              CHECK(std::make_pair(pc.layer, pc.sublayer) <
                    std::make_pair(c.layer, c.sublayer));
            }
            done[c.id] = 1;
            ++pos;
          }
          CHECK(got == expect);
        }
      }
      CHECK(pos == stream.size());
      for (EventId x = 0; x < g.size(); ++x) CHECK(ord.committed(x) == (done[x] != 0));
    }
  }
}

TEST_CASE("incremental and one-shot polling agree") {
  Splitmix64 rng(0x900dbeefu);
  Hashgraph g = gossip_dag(rng, 5, 180);
  RoundTable rt = RoundTable::compute(g);

  BvcEngine e1(g, AlgorithmSpec::bvc_hg(), &rt);
  FastOrder o1(g, e1);
  BvcEngine e2(g, AlgorithmSpec::bvc_hg(), &rt);
  FastOrder o2(g, e2);
  for (EventId e = 0; e < g.size(); ++e) {
    e1.advance(e);
    o1.poll();
    e2.advance(e);
  }
  o2.poll();
  CHECK(commit_keys(o1.stream()) == commit_keys(o2.stream()));

  HgFame f1(g, rt);
  HgOrder h1(g, rt, f1);
  HgFame f2(g, rt);
  HgOrder h2(g, rt, f2);
  for (EventId e = 0; e < g.size(); ++e) {
    f1.advance(e);
    h1.poll(e + 1);
    f2.advance(e);
  }
  h2.poll(g.size());
  CHECK(!h1.stream().empty());
  CHECK(commit_keys(h1.stream()) == commit_keys(h2.stream()));
}

TEST_CASE("reference order matches a direct evaluation") {
  Splitmix64 rng(0x5eed0u);
  for (std::uint32_t n : {4u, 5u}) {
    for (int rep = 0; rep < 2; ++rep) {
      CAPTURE(n);
      CAPTURE(rep);
      Hashgraph g = gossip_dag(rng, n, 45 * n);
      RoundTable rt = RoundTable::compute(g);
      BruteOracle brute(g);
      HgFame fame(g, rt);
      HgOrder ord(g, rt, fame);
      for (EventId e = 0; e < g.size(); ++e) {
        fame.advance(e);
        ord.poll(e + 1);
      }
      ord.poll(g.size());
      CHECK(ord.key_violations() == 0);
      CHECK(ord.processed_layers() == fame.settled());
      REQUIRE(fame.settled() >= 3);
      REQUIRE(!ord.stream().empty());

      // rebuild the stream straight from the definitions
      std::vector<Commit> want;
      std::vector<char> done(g.size(), 0);
      for (std::uint32_t r = 1; r <= fame.settled(); ++r) {
        const auto& fw = fame.famous(r);
        if (fw.empty()) continue;
        std::uint64_t wkey = 0;
        for (EventId w : fw) wkey ^= g.event(w).pseudo_signature;
        struct Row {
          EventId id;
          std::int64_t ts;
          std::uint64_t key;
          std::uint64_t hash;
        };
        std::vector<Row> rows;
        for (EventId x = 0; x < g.size(); ++x) {
          if (done[x]) continue;
          bool all = true;
          for (EventId w : fw) all = all && brute.follows(w, x);
          if (!all) continue;
          std::vector<std::int64_t> ts;
          for (EventId w : fw) {
            const auto& chain = g.events_of(g.event(w).digest.creator);
            bool found = false;
            for (EventId y : chain) {
              if (brute.follows(y, x)) {
                ts.push_back(g.event(y).timestamp);
                found = true;
                break;
              }
            }
            REQUIRE(found);
          }
          rows.push_back(Row{x, oracle_median(ts),
                             g.event(x).pseudo_signature ^ wkey,
                             g.event(x).digest.hash});
        }
        std::sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) {
          if (a.ts != b.ts) return a.ts < b.ts;
          if (a.key != b.key) return a.key < b.key;
          return a.hash < b.hash;
        });
        for (const Row& row : rows) {
          done[row.id] = 1;
          want.push_back(Commit{row.id, r, 0, row.ts, row.key});
        }
      }
      CHECK(commit_keys(ord.stream()) == commit_keys(want));
      for (EventId x = 0; x < g.size(); ++x)
        CHECK(ord.committed(x) == (done[x] != 0));
    }
  }
}

TEST_CASE("driver stamps commits at the observer's flush points") {
  Scenario s = generate_scenario(4, 0, 99);
  Replay rep(s);
  ArrivalView av = rep.arrival_view(0);
  REQUIRE(av.graph.size() > 100);

  for (const char* name : {"HG", "BVC.HG", "BVC.A.S'(1)"}) {
    CAPTURE(name);
    AlgorithmSpec spec = parse_algorithm(name);
    RunOptions batch;
    RunOptions every;
    every.batch = false;
    RunResult rb = run_consensus(av.graph, spec, batch);
    RunResult re = run_consensus(av.graph, spec, every);
    CHECK(rb.lemma_violations == 0);
    CHECK(rb.late_violations == 0);
    CHECK(rb.key_violations == 0);
    REQUIRE(!rb.stream.empty());
    // the committed sequence does not depend on the flush cadence
    CHECK(commit_keys(rb.stream) == commit_keys(re.stream));

    // batch stamps happen at the observer's own events, in unit time
    std::set<std::int64_t> own_ts;
    for (EventId e : av.graph.events_of(0))
      own_ts.insert(av.graph.creation_time(e));
    REQUIRE(rb.commit_time.size() == av.graph.size());
    for (EventId x = 0; x < av.graph.size(); ++x) {
      bool in_stream = false;
      for (const Commit& c : rb.stream) in_stream = in_stream || c.id == x;
      CHECK((rb.commit_time[x] >= 0) == in_stream);
      if (rb.commit_time[x] >= 0) {
        CHECK(own_ts.count(rb.commit_time[x]) == 1);
        CHECK(re.commit_time[x] >= 0);
        CHECK(re.commit_time[x] <= rb.commit_time[x]);
      }
    }
  }
}

TEST_SUITE_END();
