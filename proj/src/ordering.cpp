#include "bvcast/ordering.hpp"

#include <algorithm>
#include <cassert>

#include "bvcast/bits.hpp"
#include "bvcast/errors.hpp"

namespace bvcast {

namespace {

struct SortKey {
  std::uint32_t layer;
  std::uint32_t sublayer;
  std::int64_t timestamp;
  std::uint64_t key;
  std::uint64_t hash;

  bool operator<(const SortKey& o) const {
    if (layer != o.layer) return layer < o.layer;
    if (sublayer != o.sublayer) return sublayer < o.sublayer;
    if (timestamp != o.timestamp) return timestamp < o.timestamp;
    if (key != o.key) return key < o.key;
    return hash < o.hash;
  }
};

std::int64_t lower_median(std::vector<std::int64_t>& v) {
  assert(!v.empty());
  std::sort(v.begin(), v.end());
  return v[(v.size() - 1) / 2];
}

}  // namespace

// ---------------------------------------------------------------------------

FastOrder::FastOrder(const Hashgraph& g, const BvcEngine& eng)
    : g_(g), eng_(eng) {
  committed_.assign(g.size(), 0);
}

void FastOrder::poll() {
  while (next_k_ <= eng_.tower_count() && eng_.tower_decided(next_k_)) {
    std::uint32_t k = next_k_++;
    const auto& fam = eng_.famous(k);
    if (fam.empty()) continue;  // nothing is anchored to this layer
    std::vector<std::int64_t> ts;
    std::uint64_t wkey = 0;
    Bits below;
    for (EventId w : fam) {
      ts.push_back(g_.event(w).timestamp);
      wkey ^= g_.event(w).pseudo_signature;
      below.or_with(g_.ancestors(w));
    }
    std::int64_t layer_ts = lower_median(ts);
    std::vector<EventId> todo;
    below.for_each([&](std::size_t i) {
      if (!committed_[i]) todo.push_back(static_cast<EventId>(i));
    });
    std::uint32_t sub = 0;
    std::vector<EventId> wave;
    while (!todo.empty()) {
      wave.clear();
      std::size_t keep = 0;
      for (EventId x : todo) {
        EventId sp = g_.self_parent_id(x);
        EventId op = g_.other_parent_id(x);
        bool ready = (sp == kNoEvent || committed_[sp]) &&
                     (op == kNoEvent || committed_[op]);
        if (ready) wave.push_back(x);
        else todo[keep++] = x;
      }
      todo.resize(keep);
      if (wave.empty())
        fail(Errc::NotAnAncestorChain, "commit wave stalled below a layer");
      std::sort(wave.begin(), wave.end(), [&](EventId a, EventId b) {
        std::uint64_t ka = g_.event(a).pseudo_signature ^ wkey;
        std::uint64_t kb = g_.event(b).pseudo_signature ^ wkey;
        if (ka != kb) return ka < kb;
        return g_.event(a).digest.hash < g_.event(b).digest.hash;
      });
      for (EventId x : wave) {
        committed_[x] = 1;
        Commit cm;
        cm.id = x;
        cm.layer = k;
        cm.sublayer = sub;
        cm.timestamp = layer_ts;
        cm.key = g_.event(x).pseudo_signature ^ wkey;
        if (!stream_.empty()) {
          const Commit& p = stream_.back();
          SortKey pk{p.layer, p.sublayer, 0, p.key, g_.event(p.id).digest.hash};
          SortKey ck{cm.layer, cm.sublayer, 0, cm.key,
                     g_.event(x).digest.hash};
          if (ck < pk) ++key_violations_;
        }
        stream_.push_back(cm);
      }
      ++sub;
    }
  }
}

// ---------------------------------------------------------------------------

HgOrder::HgOrder(const Hashgraph& g, const RoundTable& rt, const HgFame& fame)
    : g_(g), rt_(rt), fame_(fame) {
  committed_.assign(g.size(), 0);
}

void HgOrder::poll(EventId processed) {
  for (; known_ < processed; ++known_) pending_.push_back(known_);
  while (done_ < fame_.settled()) commit_round(++done_);
}

void HgOrder::commit_round(std::uint32_t r) {
  const auto& fw = fame_.famous(r);
  if (fw.empty()) return;  // nothing receives an anchorless round
  std::uint64_t wkey = 0;
  for (EventId w : fw) wkey ^= g_.event(w).pseudo_signature;
  std::vector<EventId> batch;
  std::size_t keep = 0;
  for (EventId x : pending_) {
    if (committed_[x]) continue;
    bool all = rt_.round(x) <= r;
    if (all) {
      NodeId cx = g_.event(x).digest.creator;
      std::int32_t ix = static_cast<std::int32_t>(g_.event(x).digest.index);
      for (EventId w : fw) {
        if (g_.latest_index(w, cx) < ix) {
          all = false;
          break;
        }
      }
    }
    if (all) batch.push_back(x);
    else pending_[keep++] = x;
  }
  pending_.resize(keep);
  if (batch.empty()) return;

  // received-round timestamp: when each famous witness's chain first saw x
  auto s_time = [&](EventId w, EventId x) {
    const auto& chain = g_.events_of(g_.event(w).digest.creator);
    NodeId cx = g_.event(x).digest.creator;
    std::int32_t ix = static_cast<std::int32_t>(g_.event(x).digest.index);
    std::uint32_t lo = 0, hi = g_.event(w).digest.index;
    while (lo < hi) {
      std::uint32_t mid = (lo + hi) / 2;
      if (g_.latest_index(chain[mid], cx) >= ix) hi = mid;
      else lo = mid + 1;
    }
    return g_.event(chain[hi]).timestamp;
  };

  struct Row {
    EventId id;
    std::int64_t ts;
    std::uint64_t key;
    std::uint64_t hash;
  };
  std::vector<Row> rows;
  rows.reserve(batch.size());
  std::vector<std::int64_t> ts;
  for (EventId x : batch) {
    ts.clear();
    for (EventId w : fw) ts.push_back(s_time(w, x));
    rows.push_back(Row{x, lower_median(ts),
                       g_.event(x).pseudo_signature ^ wkey,
                       g_.event(x).digest.hash});
  }
  std::sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) {
    if (a.ts != b.ts) return a.ts < b.ts;
    if (a.key != b.key) return a.key < b.key;
    return a.hash < b.hash;
  });
  for (const Row& row : rows) {
    committed_[row.id] = 1;
    Commit cm;
    cm.id = row.id;
    cm.layer = r;
    cm.sublayer = 0;
    cm.timestamp = row.ts;
    cm.key = row.key;
    if (!stream_.empty()) {
      const Commit& p = stream_.back();
      SortKey pk{p.layer, 0, p.timestamp, p.key, g_.event(p.id).digest.hash};
      SortKey ck{cm.layer, 0, cm.timestamp, cm.key, row.hash};
      if (ck < pk) ++key_violations_;
    }
    stream_.push_back(cm);
  }
}

}  // namespace bvcast
