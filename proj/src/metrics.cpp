#include "bvcast/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <cstdio>

#include "bvcast/errors.hpp"

namespace bvcast {

namespace {

constexpr double kEmpty = std::numeric_limits<double>::quiet_NaN();

bool valid_at(const AlgorithmSpec& spec, std::uint32_t n) {
  try {
    spec.validate(n);
  } catch (const Error&) {
    return false;
  }
  return true;
}

std::string cell_text(double v, int decimals) {
  if (std::isnan(v)) return "-";
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
  return buf;
}

}  // namespace

std::optional<double> commit_latency(const Hashgraph& g, const RunResult& r) {
  double sum = 0.0;
  std::uint64_t cnt = 0;
  for (EventId e = 0; e < g.size(); ++e) {
    if (r.commit_time[e] < 0) continue;
    sum += static_cast<double>(r.commit_time[e] - g.creation_time(e));
    ++cnt;
  }
  if (cnt == 0) return std::nullopt;
  return sum / static_cast<double>(cnt);
}

LatencyReport latency_table(const std::vector<Scenario>& suite,
                            const std::vector<AlgorithmSpec>& algos) {
  LatencyReport rep;
  rep.algos = algos;
  for (const Scenario& s : suite) {
    if (std::find(rep.sizes.begin(), rep.sizes.end(), s.n) == rep.sizes.end())
      rep.sizes.push_back(s.n);
  }
  std::sort(rep.sizes.begin(), rep.sizes.end());

  // per (algorithm, size): running sum and count of scenario means
  std::vector<std::vector<double>> sum(algos.size(),
                                       std::vector<double>(rep.sizes.size(), 0.0));
  rep.count.assign(algos.size(),
                   std::vector<std::uint32_t>(rep.sizes.size(), 0));
  std::vector<double> tsum(algos.size(), 0.0);
  std::vector<std::uint32_t> tcnt(algos.size(), 0);

  for (const Scenario& s : suite) {
    std::size_t col = static_cast<std::size_t>(
        std::find(rep.sizes.begin(), rep.sizes.end(), s.n) - rep.sizes.begin());
    Replay replay(s);
    ArrivalView view = replay.arrival_view(0);
    for (std::size_t a = 0; a < algos.size(); ++a) {
      if (!valid_at(algos[a], s.n)) continue;
      RunResult r = run_consensus(view.graph, algos[a], {});
      std::optional<double> lat = commit_latency(view.graph, r);
      if (!lat) continue;
      sum[a][col] += *lat;
      rep.count[a][col] += 1;
      tsum[a] += *lat;
      tcnt[a] += 1;
    }
  }

  rep.cell.assign(algos.size(), std::vector<double>(rep.sizes.size(), kEmpty));
  rep.total.assign(algos.size(), kEmpty);
  for (std::size_t a = 0; a < algos.size(); ++a) {
    for (std::size_t c = 0; c < rep.sizes.size(); ++c) {
      if (rep.count[a][c])
        rep.cell[a][c] = sum[a][c] / rep.count[a][c];
    }
    if (tcnt[a]) rep.total[a] = tsum[a] / tcnt[a];
  }
  return rep;
}

LatencyReport comparative_table(const LatencyReport& rep,
                                std::size_t baseline) {
  if (baseline >= rep.algos.size())
    fail(Errc::UnknownEvent, "baseline index out of range");
  LatencyReport out = rep;
  const std::vector<double>& base = rep.cell[baseline];
  for (std::size_t a = 0; a < rep.algos.size(); ++a) {
    for (std::size_t c = 0; c < rep.sizes.size(); ++c)
      out.cell[a][c] = rep.cell[a][c] / base[c];
    out.total[a] = rep.total[a] / rep.total[baseline];
  }
  return out;
}

std::string render_csv(const LatencyReport& rep, int decimals) {
  std::string out = "algorithm";
  for (std::uint32_t n : rep.sizes) out += ",n=" + std::to_string(n);
  out += ",total\n";
  for (std::size_t a = 0; a < rep.algos.size(); ++a) {
    out += rep.algos[a].format();
    for (std::size_t c = 0; c < rep.sizes.size(); ++c)
      out += "," + cell_text(rep.cell[a][c], decimals);
    out += "," + cell_text(rep.total[a], decimals) + "\n";
  }
  return out;
}

std::string render_markdown(const LatencyReport& rep, int decimals) {
  std::size_t cols = rep.sizes.size() + 2;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> head{"algorithm"};
  for (std::uint32_t n : rep.sizes) head.push_back("n=" + std::to_string(n));
  head.push_back("total");
  rows.push_back(head);
  for (std::size_t a = 0; a < rep.algos.size(); ++a) {
    std::vector<std::string> row{rep.algos[a].format()};
    for (std::size_t c = 0; c < rep.sizes.size(); ++c)
      row.push_back(cell_text(rep.cell[a][c], decimals));
    row.push_back(cell_text(rep.total[a], decimals));
    rows.push_back(row);
  }
  std::vector<std::size_t> width(cols, 0);
  for (const auto& row : rows)
    for (std::size_t c = 0; c < cols; ++c)
      width[c] = std::max(width[c], row[c].size());
  std::string out;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    out += "|";
    for (std::size_t c = 0; c < cols; ++c) {
      // right align numbers, left align the name column
      const std::string& cell = rows[r][c];
      std::string pad(width[c] - cell.size(), ' ');
      out += " " + (c == 0 ? cell + pad : pad + cell) + " |";
    }
    out += "\n";
    if (r == 0) {
      out += "|";
      for (std::size_t c = 0; c < cols; ++c) {
        out += c == 0 ? ":" : " ";
        out += std::string(width[c], '-');
        out += c == 0 ? " |" : ":|";
      }
      out += "\n";
    }
  }
  return out;
}

}  // namespace bvcast
