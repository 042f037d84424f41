// bvcast: scenario suite generation, single consensus runs, latency table
// rendering, and a walkthrough of the fork-aware synchronization protocol.

#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "bvcast/errors.hpp"
#include "bvcast/gossip_sync.hpp"
#include "bvcast/metrics.hpp"
#include "bvcast/run.hpp"
#include "bvcast/sim.hpp"

namespace fs = std::filesystem;
using namespace bvcast;

namespace {

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) fail(Errc::ParseError, "cannot open " + p.string());
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

void write_file(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) fail(Errc::ParseError, "cannot write " + p.string());
  out << text;
  if (!out) fail(Errc::ParseError, "short write to " + p.string());
}

std::vector<AlgorithmSpec> parse_algo_list(const std::string& text) {
  std::vector<AlgorithmSpec> out;
  std::string item;
  std::istringstream in(text);
  while (std::getline(in, item, ',')) {
    if (!item.empty()) out.push_back(parse_algorithm(item));
  }
  if (out.empty()) fail(Errc::SyntaxError, "empty algorithm list");
  return out;
}

int cmd_gen(std::uint64_t seed, const std::string& dir) {
  fs::create_directories(dir);
  std::vector<Scenario> suite = generate_suite(seed);
  for (const Scenario& s : suite)
    write_file(fs::path(dir) / scenario_filename(s), to_csv(s));
  std::cout << "wrote " << suite.size() << " scenarios to " << dir << "\n";
  return 0;
}

std::vector<Scenario> load_suite(const std::string& dir) {
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.path().extension() == ".csv") files.push_back(entry.path());
  }
  if (files.empty()) fail(Errc::ParseError, "no scenario files in " + dir);
  std::sort(files.begin(), files.end());
  std::vector<Scenario> suite;
  for (const fs::path& p : files) suite.push_back(from_csv(read_file(p)));
  return suite;
}

int cmd_run(const std::string& algo_name, const std::string& file,
            std::uint32_t observer) {
  AlgorithmSpec spec = parse_algorithm(algo_name);
  Scenario sc = from_csv(read_file(file));
  spec.validate(sc.n);
  if (observer >= sc.n)
    fail(Errc::MalformedScenario, "observer id exceeds the node count");
  Replay rep(sc);
  ArrivalView av = rep.arrival_view(static_cast<NodeId>(observer));
  RunOptions opt;
  opt.observer = static_cast<NodeId>(observer);
  RunResult res = run_consensus(av.graph, spec, opt);

  std::cout << "# " << spec.format() << " on n=" << sc.n << " seed=" << sc.seed
            << " observer=" << observer << "\n";
  std::cout << "# pos creator index hash layer sublayer consensus_ts commit\n";
  char line[160];
  for (std::size_t i = 0; i < res.stream.size(); ++i) {
    const Commit& c = res.stream[i];
    const Event& e = av.graph.event(c.id);
    std::snprintf(line, sizeof line, "%zu %u %u %016llx %u %u %lld %lld", i,
                  e.digest.creator, e.digest.index,
                  static_cast<unsigned long long>(e.digest.hash), c.layer,
                  c.sublayer, static_cast<long long>(c.timestamp),
                  static_cast<long long>(res.commit_time[c.id]));
    std::cout << line << "\n";
  }
  std::optional<double> lat = commit_latency(av.graph, res);
  if (!lat) {
    std::cout << "warning: no committed events\n";
    return 0;
  }
  std::snprintf(line, sizeof line,
                "# committed %zu of %u events, mean latency %.2f",
                res.stream.size(), av.graph.size(), *lat);
  std::cout << line << "\n";
  return 0;
}

// Per-scenario work unit: one replay, one observer view, one run per valid
// algorithm. Pure, so scenarios can be fanned out to a pool; the reduction
// below walks scenarios in suite order, which keeps the floating-point
// accumulation identical for every parallelism degree.
std::vector<std::optional<double>> scenario_latencies(
    const Scenario& sc, const std::vector<AlgorithmSpec>& algos,
    std::uint32_t observer) {
  if (observer >= sc.n)
    fail(Errc::MalformedScenario, "observer id exceeds the node count");
  Replay rep(sc);
  ArrivalView av = rep.arrival_view(static_cast<NodeId>(observer));
  std::vector<std::optional<double>> out(algos.size());
  for (std::size_t a = 0; a < algos.size(); ++a) {
    try {
      algos[a].validate(sc.n);
    } catch (const Error&) {
      continue;  // combination invalid at this node count
    }
    RunOptions opt;
    opt.observer = static_cast<NodeId>(observer);
    RunResult res = run_consensus(av.graph, algos[a], opt);
    out[a] = commit_latency(av.graph, res);
  }
  return out;
}

LatencyReport build_report(const std::vector<Scenario>& suite,
                           const std::vector<AlgorithmSpec>& algos,
                           std::uint32_t observer, unsigned jobs) {
  std::vector<std::vector<std::optional<double>>> lat(suite.size());
  std::atomic<std::size_t> cursor{0};
  std::mutex mu;
  std::exception_ptr boom;
  auto worker = [&] {
    for (;;) {
      std::size_t i = cursor.fetch_add(1);
      if (i >= suite.size()) return;
      try {
        lat[i] = scenario_latencies(suite[i], algos, observer);
      } catch (...) {
        std::lock_guard<std::mutex> lock(mu);
        if (!boom) boom = std::current_exception();
        return;
      }
    }
  };
  unsigned workers = std::max(1u, jobs);
  if (workers <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < workers; ++t) pool.emplace_back(worker);
    for (std::thread& t : pool) t.join();
  }
  if (boom) std::rethrow_exception(boom);

  LatencyReport rep;
  rep.algos = algos;
  for (const Scenario& s : suite) rep.sizes.push_back(s.n);
  std::sort(rep.sizes.begin(), rep.sizes.end());
  rep.sizes.erase(std::unique(rep.sizes.begin(), rep.sizes.end()),
                  rep.sizes.end());
  std::size_t cols = rep.sizes.size();
  std::vector<std::vector<double>> sum(algos.size(),
                                       std::vector<double>(cols, 0.0));
  rep.count.assign(algos.size(), std::vector<std::uint32_t>(cols, 0));
  std::vector<double> tsum(algos.size(), 0.0);
  std::vector<std::uint32_t> tcnt(algos.size(), 0);
  for (std::size_t i = 0; i < suite.size(); ++i) {
    std::size_t col =
        std::lower_bound(rep.sizes.begin(), rep.sizes.end(), suite[i].n) -
        rep.sizes.begin();
    for (std::size_t a = 0; a < algos.size(); ++a) {
      if (!lat[i][a]) continue;
      sum[a][col] += *lat[i][a];
      ++rep.count[a][col];
      tsum[a] += *lat[i][a];
      ++tcnt[a];
    }
  }
  double nan = std::nan("");
  rep.cell.assign(algos.size(), std::vector<double>(cols, nan));
  rep.total.assign(algos.size(), nan);
  for (std::size_t a = 0; a < algos.size(); ++a) {
    for (std::size_t c = 0; c < cols; ++c) {
      if (rep.count[a][c]) rep.cell[a][c] = sum[a][c] / rep.count[a][c];
    }
    if (tcnt[a]) rep.total[a] = tsum[a] / tcnt[a];
  }
  return rep;
}

int cmd_table(const std::string& algos_text, bool use_preset,
              std::uint64_t seed, const std::string& suite_dir,
              const std::string& baseline_name, const std::string& format,
              std::uint32_t observer, unsigned jobs) {
  std::vector<AlgorithmSpec> algos =
      use_preset ? paper_preset() : parse_algo_list(algos_text);
  AlgorithmSpec baseline = parse_algorithm(baseline_name);
  std::vector<Scenario> suite =
      suite_dir.empty() ? generate_suite(seed) : load_suite(suite_dir);

  LatencyReport rep = build_report(suite, algos, observer, jobs);
  bool md = format == "markdown";
  std::cout << "# commit latency, mean steps from creation to commit\n";
  std::cout << (md ? render_markdown(rep, 1) : render_csv(rep, 1));

  auto base = std::find(algos.begin(), algos.end(), baseline);
  if (base == algos.end()) {
    std::cout << "# baseline " << baseline.format()
              << " not in the algorithm set, ratio table skipped\n";
    return 0;
  }
  LatencyReport ratio = comparative_table(
      rep, static_cast<std::size_t>(base - algos.begin()));
  std::cout << "\n# commit latency relative to " << baseline.format() << "\n";
  std::cout << (md ? render_markdown(ratio, 2) : render_csv(ratio, 2));
  return 0;
}

std::string lia_text(const std::vector<std::int32_t>& lia) {
  std::string out = "[";
  for (std::size_t i = 0; i < lia.size(); ++i) {
    if (i) out += " ";
    out += std::to_string(lia[i]);
  }
  return out + "]";
}

// one request/response/merge round with the wire forms exercised
MergeOutcome demo_round(SyncHolder& dst, SyncHolder& src, const SyncRequest& q) {
  std::vector<std::uint8_t> qw = encode(q);
  SyncResponse resp = src.serve(decode_request(qw));
  std::vector<std::uint8_t> rw = encode(resp);
  MergeOutcome out = dst.merge(1, decode_response(rw));
  std::cout << "  request " << qw.size() << " bytes, lia=" << lia_text(q.lia)
            << ", " << q.cfi.size() << " fork reports; response "
            << resp.events.size() << " events, " << rw.size() << " bytes\n";
  std::cout << "  merged " << out.merged << ", duplicates " << out.duplicates
            << ", deferred " << out.deferred << ", suspects "
            << out.suspects.size() << ", new fork proofs " << out.new_proofs
            << "\n";
  return out;
}

void demo_pull(SyncHolder& dst, SyncHolder& src, const char* label) {
  std::cout << label << "\n";
  MergeOutcome out = demo_round(dst, src, dst.build_request(1));
  int round = 1;
  while (!out.suspects.empty() && round < 8) {
    std::cout << "  follow-up for " << out.suspects.size() << " creator(s)\n";
    out = demo_round(dst, src, dst.followup_request(1, out.suspects));
    ++round;
  }
  std::cout << "  holder now has " << dst.graph().size() << " events\n";
}

int cmd_sync_demo(std::uint64_t seed) {
  const std::uint32_t n = 6;
  Scenario sc = generate_scenario(n, 0, seed);
  Replay rep(sc);
  SyncHolder a(rep.project(0));
  SyncHolder b(rep.project(n - 1));
  std::cout << "# sync demo: n=" << n << " seed=" << seed
            << ", holders are the views of nodes 0 and " << (n - 1) << "\n";
  std::cout << "holder a: " << a.graph().size() << " events, holder b: "
            << b.graph().size() << " events\n";
  demo_pull(a, b, "a pulls from b:");
  demo_pull(b, a, "b pulls from a:");
  bool same = a.graph().size() == b.graph().size();
  for (EventId e = 0; same && e < a.graph().size(); ++e)
    same = b.graph().find(a.graph().event(e).digest.hash).has_value();
  std::cout << "converged: " << (same ? "yes" : "no") << "\n";
  return same ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"benchmark driver for the BVC atomic broadcast family"};
  app.require_subcommand(1);

  std::uint64_t gen_seed = 1;
  std::string gen_dir = "scenarios";
  CLI::App* gen = app.add_subcommand("gen", "write the scenario suite as csv files");
  gen->add_option("--seed", gen_seed, "master seed for the suite");
  gen->add_option("--suite", gen_dir, "output directory");

  std::string run_algo, run_file;
  std::uint32_t run_obs = 0;
  CLI::App* run = app.add_subcommand("run", "run one algorithm over one scenario");
  run->add_option("algorithm", run_algo, "algorithm name, e.g. BVC.HG")
      ->required();
  run->add_option("scenario", run_file, "scenario csv file")->required();
  run->add_option("--observer", run_obs, "observing node id");

  std::string tab_algos, tab_suite, tab_baseline = "BVC.C'(3,10000).S'(1)";
  std::string tab_format = "markdown";
  std::uint64_t tab_seed = 1;
  std::uint32_t tab_obs = 0;
  unsigned tab_jobs = 1;
  bool tab_preset = false;
  CLI::App* tab = app.add_subcommand("table", "latency and ratio tables");
  tab->add_option("--algos", tab_algos, "comma-separated algorithm names");
  tab->add_flag("--preset", tab_preset, "use the eighteen-algorithm roster");
  tab->add_option("--seed", tab_seed, "master seed when generating in memory");
  tab->add_option("--suite", tab_suite, "directory of scenario csv files");
  tab->add_option("--baseline", tab_baseline, "ratio table baseline");
  tab->add_option("--format", tab_format, "output format")
      ->check(CLI::IsMember({"csv", "markdown"}));
  tab->add_option("--observer", tab_obs, "observing node id");
  tab->add_option("--jobs", tab_jobs, "worker threads");

  std::uint64_t demo_seed = 7;
  CLI::App* demo = app.add_subcommand("sync-demo", "two-holder synchronization walkthrough");
  demo->add_option("--seed", demo_seed, "scenario seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  try {
    if (gen->parsed()) return cmd_gen(gen_seed, gen_dir);
    if (run->parsed()) return cmd_run(run_algo, run_file, run_obs);
    if (tab->parsed()) {
      if (!tab_preset && tab_algos.empty()) tab_preset = true;
      return cmd_table(tab_algos, tab_preset, tab_seed, tab_suite,
                       tab_baseline, tab_format, tab_obs, tab_jobs);
    }
    if (demo->parsed()) return cmd_sync_demo(demo_seed);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.code() == Errc::SyntaxError ? 1 : 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}
