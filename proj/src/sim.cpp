#include "bvcast/sim.hpp"

#include <algorithm>
#include <charconv>

#include "bvcast/errors.hpp"

namespace bvcast {

namespace {

struct CrashView {
  std::vector<std::int64_t> step;  // -1 when the node never crashes
  explicit CrashView(const Scenario& s) : step(s.n, -1) {
    for (const CrashEntry& c : s.crashes) {
      if (c.node == 0 || c.node >= s.n)
        fail(Errc::MalformedScenario, "crash entry for an invalid node");
      if (step[c.node] != -1)
        fail(Errc::MalformedScenario, "node crashes twice");
      step[c.node] = static_cast<std::int64_t>(c.step);
    }
  }
  bool alive(NodeId v, std::uint32_t at) const {
    return step[v] < 0 || at < static_cast<std::uint64_t>(step[v]);
  }
};

}  // namespace

Scenario generate_scenario(std::uint32_t n, std::uint32_t faults,
                           std::uint64_t seed) {
  if (n < 2) fail(Errc::MalformedScenario, "need at least two nodes");
  std::uint32_t f = (n - 1) / 3;
  if (faults > f) fail(Errc::InvalidFaultCount, "fault count exceeds (n-1)/3");

  Scenario s;
  s.n = n;
  s.seed = seed;
  Splitmix64 rng(seed);
  std::uint32_t steps = 1000 * n;

  std::vector<NodeId> pool;
  for (NodeId v = 1; v < n; ++v) pool.push_back(v);
  for (std::uint32_t i = 0; i < faults; ++i) {
    std::size_t j = i + rng.below(pool.size() - i);
    std::swap(pool[i], pool[j]);
  }
  for (std::uint32_t i = 0; i < faults; ++i) {
    std::uint32_t at = static_cast<std::uint32_t>(1 + rng.below(steps));
    s.crashes.push_back({pool[i], at});
  }
  CrashView crash(s);

  // Undelivered buffer entries per destination, in send-row order. Delivered
  // entries are flagged and compacted lazily.
  struct DstQueue {
    std::vector<std::pair<std::uint32_t, bool>> rows;  // (send row, delivered)
    std::uint32_t live = 0;
  };
  std::vector<DstQueue> queue(n);

  std::vector<NodeId> alive;
  for (std::uint32_t step = 0; step < steps; ++step) {
    alive.clear();
    for (NodeId v = 0; v < n; ++v)
      if (crash.alive(v, step)) alive.push_back(v);

    if (rng.below(2) == 0) {
      std::size_t si = rng.below(alive.size());
      std::size_t di = rng.below(alive.size() - 1);
      if (di >= si) ++di;
      Op op;
      op.kind = Op::Kind::Send;
      op.src = alive[si];
      op.dst = alive[di];
      std::uint32_t row = static_cast<std::uint32_t>(s.ops.size());
      s.ops.push_back(op);
      queue[op.dst].rows.emplace_back(row, false);
      ++queue[op.dst].live;
    } else {
      std::uint64_t total = 0;
      for (NodeId v : alive) total += queue[v].live;
      Op op;
      op.kind = Op::Kind::Recv;
      if (total == 0) {
        op.send_ref = -1;
      } else {
        std::uint64_t r = rng.below(total);
        for (NodeId v : alive) {
          DstQueue& q = queue[v];
          if (r >= q.live) {
            r -= q.live;
            continue;
          }
          for (auto& [row, done] : q.rows) {
            if (done) continue;
            if (r-- == 0) {
              done = true;
              --q.live;
              op.send_ref = static_cast<std::int32_t>(row);
              break;
            }
          }
          if (q.live * 2 < q.rows.size()) {
            std::erase_if(q.rows, [](const auto& e) { return e.second; });
          }
          break;
        }
      }
      s.ops.push_back(op);
    }
  }
  return s;
}

std::vector<Scenario> generate_suite(std::uint64_t master_seed) {
  std::vector<Scenario> out;
  Splitmix64 seq(master_seed);
  for (std::uint32_t n : suite_sizes()) {
    std::uint32_t f = (n - 1) / 3;
    for (std::uint32_t i = 0; i < 20; ++i) {
      std::uint32_t faults = i < 10 ? 0 : 1 + (i - 10) % f;
      out.push_back(generate_scenario(n, faults, seq.next()));
    }
  }
  return out;
}

std::string scenario_filename(const Scenario& s) {
  return "n" + std::to_string(s.n) + "_f" + std::to_string(s.crashes.size()) +
         "_s" + std::to_string(s.seed) + ".csv";
}

std::string to_csv(const Scenario& s) {
  std::string out;
  out += "# n=" + std::to_string(s.n) + "\n";
  out += "# seed=" + std::to_string(s.seed) + "\n";
  out += "# faults=" + std::to_string(s.crashes.size()) + "\n";
  for (const CrashEntry& c : s.crashes)
    out += "# crash=" + std::to_string(c.node) + ":" + std::to_string(c.step) +
           "\n";
  for (const Op& op : s.ops) {
    if (op.kind == Op::Kind::Send)
      out += "SEND," + std::to_string(op.src) + "," + std::to_string(op.dst) +
             "\n";
    else
      out += "RECV," + std::to_string(op.send_ref) + "\n";
  }
  return out;
}

namespace {

[[noreturn]] void parse_fail(std::size_t line, const std::string& what) {
  fail(Errc::ParseError, "line " + std::to_string(line) + ": " + what);
}

std::int64_t parse_int(std::string_view text, std::size_t line) {
  std::int64_t v = 0;
  auto [p, ec] = std::from_chars(text.begin(), text.end(), v);
  if (ec != std::errc() || p != text.end()) parse_fail(line, "bad integer");
  return v;
}

std::string_view next_field(std::string_view& rest, std::size_t line,
                            bool last) {
  std::size_t comma = rest.find(',');
  if (last != (comma == std::string_view::npos))
    parse_fail(line, "wrong field count");
  std::string_view field = rest.substr(0, comma);
  rest = comma == std::string_view::npos ? std::string_view{}
                                         : rest.substr(comma + 1);
  return field;
}

}  // namespace

Scenario from_csv(std::string_view text) {
  Scenario s;
  std::size_t line_no = 0;
  std::size_t header = 0;  // how many header lines were consumed
  std::size_t expected_crashes = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    if (pos == text.size()) break;
    std::size_t nl = text.find('\n', pos);
    std::string_view line = text.substr(
        pos, nl == std::string_view::npos ? text.size() - pos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() : nl + 1;
    ++line_no;
    if (line.empty()) continue;
    if (line.starts_with("#")) {
      std::string_view body = line.substr(1);
      while (body.starts_with(" ")) body.remove_prefix(1);
      auto want = [&](std::string_view key) {
        if (!body.starts_with(key)) return false;
        body.remove_prefix(key.size());
        return true;
      };
      if (header == 0) {
        if (!want("n=")) parse_fail(line_no, "expected n header");
        std::int64_t v = parse_int(body, line_no);
        if (v < 2 || v > 0xffffffffll) parse_fail(line_no, "bad node count");
        s.n = static_cast<std::uint32_t>(v);
      } else if (header == 1) {
        if (!want("seed=")) parse_fail(line_no, "expected seed header");
        std::uint64_t v = 0;
        auto [p, ec] = std::from_chars(body.begin(), body.end(), v);
        if (ec != std::errc() || p != body.end())
          parse_fail(line_no, "bad seed");
        s.seed = v;
      } else if (header == 2) {
        if (!want("faults=")) parse_fail(line_no, "expected faults header");
        std::int64_t v = parse_int(body, line_no);
        if (v < 0) parse_fail(line_no, "bad fault count");
        expected_crashes = static_cast<std::size_t>(v);
      } else {
        if (!want("crash=")) parse_fail(line_no, "expected crash header");
        std::size_t colon = body.find(':');
        if (colon == std::string_view::npos) parse_fail(line_no, "bad crash");
        std::int64_t node = parse_int(body.substr(0, colon), line_no);
        std::int64_t at = parse_int(body.substr(colon + 1), line_no);
        if (node <= 0 || static_cast<std::uint64_t>(node) >= s.n || at < 1)
          parse_fail(line_no, "bad crash entry");
        s.crashes.push_back({static_cast<NodeId>(node),
                             static_cast<std::uint32_t>(at)});
      }
      ++header;
      continue;
    }
    if (header < 3 || s.crashes.size() != expected_crashes)
      parse_fail(line_no, "incomplete header");
    std::string_view rest = line;
    std::string_view tag = next_field(rest, line_no, false);
    Op op;
    if (tag == "SEND") {
      op.kind = Op::Kind::Send;
      std::int64_t src = parse_int(next_field(rest, line_no, false), line_no);
      std::int64_t dst = parse_int(next_field(rest, line_no, true), line_no);
      if (src < 0 || dst < 0 || src >= s.n || dst >= s.n || src == dst)
        parse_fail(line_no, "bad SEND endpoints");
      op.src = static_cast<NodeId>(src);
      op.dst = static_cast<NodeId>(dst);
    } else if (tag == "RECV") {
      op.kind = Op::Kind::Recv;
      std::int64_t ref = parse_int(next_field(rest, line_no, true), line_no);
      if (ref < -1 || ref >= static_cast<std::int64_t>(s.ops.size()))
        parse_fail(line_no, "RECV references a later row");
      if (ref >= 0 && s.ops[static_cast<std::size_t>(ref)].kind != Op::Kind::Send)
        parse_fail(line_no, "RECV references a non-SEND row");
      op.send_ref = static_cast<std::int32_t>(ref);
    } else {
      parse_fail(line_no, "unknown op");
    }
    s.ops.push_back(op);
  }
  if (header < 3 || s.crashes.size() != expected_crashes)
    fail(Errc::ParseError, "truncated header");
  return s;
}

Replay::Replay(const Scenario& s) : graph_(s.n) {
  CrashView crash(s);
  tip_.resize(s.n);
  knowledge_.resize(s.n);
  for (NodeId v = 0; v < s.n; ++v) {
    tip_[v] = graph_.insert(make_event(v, std::nullopt, std::nullopt, 0));
    knowledge_[v].set(tip_[v]);
  }
  std::vector<EventId> snapshot(s.ops.size(), kNoEvent);
  std::vector<bool> taken(s.ops.size(), false);
  for (std::uint32_t step = 0; step < s.ops.size(); ++step) {
    const Op& op = s.ops[step];
    if (op.kind == Op::Kind::Send) {
      if (op.src >= s.n || op.dst >= s.n || op.src == op.dst)
        fail(Errc::MalformedScenario, "bad SEND endpoints");
      if (!crash.alive(op.src, step) || !crash.alive(op.dst, step))
        fail(Errc::MalformedScenario, "SEND involves a crashed node");
      snapshot[step] = tip_[op.src];
      continue;
    }
    if (op.send_ref < 0) {
      ++empty_recvs_;
      continue;
    }
    std::uint32_t row = static_cast<std::uint32_t>(op.send_ref);
    if (row >= step || s.ops[row].kind != Op::Kind::Send)
      fail(Errc::MalformedScenario, "RECV references an invalid row");
    if (taken[row]) fail(Errc::MalformedScenario, "message delivered twice");
    taken[row] = true;
    NodeId dst = s.ops[row].dst;
    if (!crash.alive(dst, step))
      fail(Errc::MalformedScenario, "RECV involves a crashed node");
    EventId snap = snapshot[row];
    if (knowledge_[dst].test(snap)) {
      ++stale_;
      continue;
    }
    Event e = make_event(dst, graph_.event(tip_[dst]).digest,
                         graph_.event(snap).digest,
                         static_cast<std::int64_t>(step));
    EventId id = graph_.insert(std::move(e));
    knowledge_[dst].or_with(graph_.ancestors(snap));
    knowledge_[dst].set(id);
    tip_[dst] = id;
    ++delivered_;
  }
}

std::vector<EventId> Replay::view_events(NodeId observer) const {
  std::vector<EventId> out;
  knowledge_[observer].for_each(
      [&](std::size_t id) { out.push_back(static_cast<EventId>(id)); });
  return out;
}

Hashgraph Replay::project(NodeId observer) const {
  Hashgraph view(graph_.node_count());
  knowledge_[observer].for_each([&](std::size_t id) {
    view.insert(graph_.event(static_cast<EventId>(id)));
  });
  return view;
}

ArrivalView Replay::arrival_view(NodeId observer) const {
  if (graph_.branched(observer))
    fail(Errc::MalformedScenario, "observer's own chain is branched");
  ArrivalView out{Hashgraph(graph_.node_count()), {}};
  // Every event the observer knows is an ancestor of one of its own events,
  // so walking the own chain and flushing each closure covers the view. A
  // batch in ascending full-graph id order is a valid insertion order, and
  // the own event always closes its batch.
  Bits placed;
  for (EventId own : graph_.events_of(observer)) {
    graph_.ancestors(own).for_each([&](std::size_t id) {
      if (placed.test(id)) return;
      placed.set(id);
      out.graph.insert(graph_.event(static_cast<EventId>(id)));
      out.to_global.push_back(static_cast<EventId>(id));
    });
  }
  return out;
}

}  // namespace bvcast
