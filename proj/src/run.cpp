#include "bvcast/run.hpp"

#include <algorithm>

#include "bvcast/errors.hpp"
#include "bvcast/layers.hpp"

namespace bvcast {

namespace {

void stamp(RunResult& out, std::size_t from, std::int64_t t) {
  for (std::size_t i = from; i < out.stream.size(); ++i)
    out.commit_time[out.stream[i].id] = t;
}

}  // namespace

RunResult run_consensus(const Hashgraph& g, const AlgorithmSpec& spec,
                        const RunOptions& opt) {
  RunResult out;
  out.commit_time.assign(g.size(), -1);
  FameOptions fo;
  fo.coverage = opt.coverage;
  fo.keep_layers = opt.keep_layers;
  fo.record_decisions = opt.record_decisions;

  if (spec.reference_hg) {
    RoundTable rt = RoundTable::compute(g);
    HgFame fame(g, rt, fo);
    HgOrder ord(g, rt, fame);
    for (EventId e = 0; e < g.size(); ++e) {
      fame.advance(e);
      bool flush = !opt.batch || g.event(e).digest.creator == opt.observer;
      if (!flush) continue;
      std::size_t before = out.stream.size();
      ord.poll(e + 1);
      if (ord.stream().size() > before) {
        out.stream.insert(out.stream.end(), ord.stream().begin() + before,
                          ord.stream().end());
        stamp(out, before, g.creation_time(e));
      }
    }
    std::size_t before = out.stream.size();
    ord.poll(g.size());
    if (ord.stream().size() > before) {
      out.stream.insert(out.stream.end(), ord.stream().begin() + before,
                        ord.stream().end());
      stamp(out, before, g.size() ? g.creation_time(g.size() - 1) : 0);
    }
    out.layers_done = ord.processed_layers();
    out.late_violations = fame.late_violations();
    out.agreement_violations = fame.agreement_violations();
    out.key_violations = ord.key_violations();
    out.decisions = fame.decisions();
    if (opt.coverage) {
      out.round_info.resize(rt.max_round());
      for (std::uint32_t r = 1; r <= rt.max_round(); ++r) {
        HgRoundInfo& info = out.round_info[r - 1];
        for (EventId w : rt.witnesses(r)) {
          info.witnesses.push_back(w);
          info.trig.push_back(fame.triggers(w));
        }
      }
    }
    return out;
  }

  RoundTable rt;
  const RoundTable* rtp = nullptr;
  if (spec.base == BaseKind::S) {
    rt = RoundTable::compute(g);
    rtp = &rt;
  }
  BvcEngine eng(g, spec, rtp, fo);
  FastOrder ord(g, eng);
  for (EventId e = 0; e < g.size(); ++e) {
    eng.advance(e);
    bool flush = !opt.batch || g.event(e).digest.creator == opt.observer;
    if (!flush) continue;
    std::size_t before = out.stream.size();
    ord.poll();
    if (ord.stream().size() > before) {
      out.stream.insert(out.stream.end(), ord.stream().begin() + before,
                        ord.stream().end());
      stamp(out, before, g.creation_time(e));
    }
  }
  std::size_t before = out.stream.size();
  ord.poll();
  if (ord.stream().size() > before) {
    out.stream.insert(out.stream.end(), ord.stream().begin() + before,
                      ord.stream().end());
    stamp(out, before, g.size() ? g.creation_time(g.size() - 1) : 0);
  }
  out.layers_done = ord.processed_layers();
  out.lemma_violations = eng.lemma_violations();
  out.agreement_violations = eng.agreement_violations();
  out.key_violations = ord.key_violations();
  out.decisions = eng.decisions();
  if (opt.coverage) {
    out.tower_trig.resize(eng.tower_count());
    for (std::uint32_t k = 1; k <= eng.tower_count(); ++k)
      out.tower_trig[k - 1] = eng.triggers(k);
  }
  return out;
}

std::vector<std::uint32_t> view_prefixes(const Hashgraph& g,
                                         const RunResult& r, bool reference,
                                         const std::vector<EventId>& tips) {
  std::uint32_t n = g.node_count();
  std::vector<std::uint32_t> out;
  out.reserve(tips.size());
  auto in_view = [&](EventId tip, EventId x) {
    return g.latest_index(tip, g.event(x).digest.creator) >=
           static_cast<std::int32_t>(g.event(x).digest.index);
  };
  auto covered = [&](EventId tip, const std::vector<std::uint32_t>& trig,
                     std::size_t base) {
    for (NodeId d = 0; d < n; ++d) {
      std::uint32_t t = trig[base + d];
      if (t == kNoTrigger) continue;
      if (g.latest_index(tip, d) >= static_cast<std::int32_t>(t)) return true;
    }
    return false;
  };
  for (EventId tip : tips) {
    std::uint32_t stop = 1;  // first layer not fully decided in the view
    if (reference) {
      for (; stop <= r.round_info.size(); ++stop) {
        const HgRoundInfo& info = r.round_info[stop - 1];
        bool ok = true;
        for (std::size_t i = 0; i < info.witnesses.size() && ok; ++i) {
          if (!in_view(tip, info.witnesses[i])) continue;
          const auto& trig = info.trig[i];
          if (trig.empty() || !covered(tip, trig, 0)) ok = false;
        }
        if (!ok) break;
      }
    } else {
      for (; stop <= r.tower_trig.size(); ++stop) {
        const auto& trig = r.tower_trig[stop - 1];
        if (trig.empty()) break;
        bool ok = true;
        for (NodeId c = 0; c < n && ok; ++c)
          if (!covered(tip, trig, std::size_t(c) * n)) ok = false;
        if (!ok) break;
      }
    }
    std::uint32_t cnt = 0;
    for (const Commit& cm : r.stream) {
      if (cm.layer < stop) ++cnt;
      else break;
    }
    out.push_back(cnt);
  }
  return out;
}

}  // namespace bvcast
