#include "edgespec/harness/report.hpp"

#include <algorithm>
#include <cstdio>
#include <map>
#include <sstream>
#include <tuple>

#include "edgespec/common/error.hpp"

namespace edgespec::harness {

using baselines::Policy;

namespace {

double num(const std::string& s) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("csv: non-numeric field '" + s + "'");
  }
}

std::string fixed(double v, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string percent(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%+.1f%%", 100.0 * v);
  return buf;
}

std::string with_ci(const Summary& s, int digits = 4) { return fixed(s.mean, digits) + " ± " + fixed(s.ci_half, digits); }

}  // namespace

std::vector<DecodeRow> decode_rows_from_csv(const CsvTable& table) {
  if (table.header != decode_csv_header()) throw ConfigError("csv: not a decode study table (header mismatch)");
  std::vector<DecodeRow> rows;
  for (const auto& f : table.rows) {
    if (f[0] != std::to_string(kSchemaVersion)) throw ConfigError("csv: unsupported schema version " + f[0]);
    DecodeRow r;
    r.run_id = f[1];
    r.seed = static_cast<std::uint64_t>(num(f[2]));
    if (f[3] == "conventional") {
      r.engine = Engine::conventional;
    } else if (f[3] == "parallel") {
      r.engine = Engine::parallel;
    } else {
      throw ConfigError("csv: unknown engine '" + f[3] + "'");
    }
    r.profile = f[4];
    r.gamma = static_cast<int>(num(f[5]));
    r.rate_mbps = num(f[6]);
    r.latency.tokens_out = static_cast<int>(num(f[7]));
    r.latency.rounds = static_cast<int>(num(f[8]));
    r.latency.total_s = num(f[9]);
    r.latency.mobile_compute_s = num(f[10]);
    r.latency.uplink_s = num(f[11]);
    r.latency.server_compute_s = num(f[12]);
    r.latency.device_idle_s = num(f[13]);
    r.latency.server_idle_s = num(f[14]);
    rows.push_back(r);
  }
  return rows;
}

const PolicySummary* best_baseline(const std::vector<PolicySummary>& summaries, double w) {
  const PolicySummary* best = nullptr;
  for (const auto& s : summaries) {
    if (s.w != w || s.policy == Policy::tma_masac) continue;
    if (best == nullptr || s.latency.mean < best->latency.mean) best = &s;
  }
  return best;
}

namespace {

void policy_tables(std::ostringstream& out, const std::vector<SlotRow>& slots) {
  const auto summaries = summarize_policies(summarize_runs(slots));
  std::vector<double> ws;
  for (const auto& s : summaries) {
    if (std::find(ws.begin(), ws.end(), s.w) == ws.end()) ws.push_back(s.w);
  }
  for (double w : ws) {
    const PolicySummary* best = best_baseline(summaries, w);
    out << "## Policies at w = " << format_number(w) << "\n\n";
    out << "| policy | seeds | latency s (95% CI) | end-to-end s | objective | energy J/slot | vs best baseline |\n";
    out << "|---|---|---|---|---|---|---|\n";
    for (const auto& s : summaries) {
      if (s.w != w) continue;
      out << "| " << baselines::to_string(s.policy) << " | " << s.latency.n << " | " << with_ci(s.latency) << " | "
          << fixed(s.end_to_end.mean) << " | " << with_ci(s.objective, 3) << " | " << fixed(s.energy.mean, 6) << " | "
          << (best ? percent(improvement(best->latency.mean, s.latency.mean)) : "n/a") << " |\n";
    }
    if (best) {
      out << "\nBest baseline: " << baselines::to_string(best->policy) << ". Improvement is (baseline - policy) / "
          << "baseline on mean latency.\n";
    }
    out << "\n";
  }
  if (ws.size() < 2) return;
  out << "## Energy by battery tier\n\n";
  out << "Tiers are devices with battery >= 0.8 (high) and <= 0.2 (low); changes are relative to w = "
      << format_number(ws.front()) << ".\n\n";
  out << "| policy | w | latency s | energy J/slot | high tier J/slot | low tier J/slot | high tier change | "
         "low tier change |\n";
  out << "|---|---|---|---|---|---|---|---|\n";
  std::vector<Policy> policies;
  for (const auto& s : summaries) {
    if (std::find(policies.begin(), policies.end(), s.policy) == policies.end()) policies.push_back(s.policy);
  }
  for (Policy p : policies) {
    const PolicySummary* first = nullptr;
    for (const auto& s : summaries) {
      if (s.policy != p) continue;
      if (first == nullptr) first = &s;
      auto change = [](double from, double to) { return from > 0.0 ? percent((to - from) / from) : std::string("n/a"); };
      out << "| " << baselines::to_string(p) << " | " << format_number(s.w) << " | " << fixed(s.latency.mean) << " | "
          << fixed(s.energy.mean, 6) << " | " << fixed(s.energy_high_j, 6) << " | " << fixed(s.energy_low_j, 6)
          << " | " << change(first->energy_high_j, s.energy_high_j) << " | "
          << change(first->energy_low_j, s.energy_low_j) << " |\n";
    }
  }
  out << "\n";
}

void decode_table(std::ostringstream& out, const std::vector<DecodeRow>& rows) {
  // (profile, engine, rate) -> gamma -> (latency, tokens/s, idle) sums and count
  struct Acc {
    double latency = 0.0, tps = 0.0, idle = 0.0;
    int n = 0;
  };
  std::vector<std::tuple<std::string, Engine, double>> keys;
  std::map<std::tuple<std::string, int, double, int>, Acc> acc;
  for (const auto& r : rows) {
    const auto key = std::make_tuple(r.profile, r.engine, r.rate_mbps);
    if (std::find(keys.begin(), keys.end(), key) == keys.end()) keys.push_back(key);
    auto& a = acc[{r.profile, static_cast<int>(r.engine), r.rate_mbps, r.gamma}];
    a.latency += r.latency.total_s;
    a.tps += r.tokens_per_s();
    a.idle += r.idle_fraction();
    ++a.n;
  }
  out << "## Decoding study\n\n";
  out << "Means over seeds at the draft length with the lowest mean latency.\n\n";
  out << "| profile | engine | rate Mbps | best gamma | latency s | tokens/s | device idle fraction |\n";
  out << "|---|---|---|---|---|---|---|\n";
  for (const auto& [profile, engine, rate] : keys) {
    int best_gamma = 0;
    Acc best;
    for (const auto& [k, a] : acc) {
      if (std::get<0>(k) != profile || std::get<1>(k) != static_cast<int>(engine) || std::get<2>(k) != rate) continue;
      if (best_gamma == 0 || a.latency / a.n < best.latency / best.n) {
        best_gamma = std::get<3>(k);
        best = a;
      }
    }
    out << "| " << profile << " | " << to_string(engine) << " | " << format_number(rate) << " | " << best_gamma
        << " | " << fixed(best.latency / best.n) << " | " << fixed(best.tps / best.n, 1) << " | "
        << fixed(best.idle / best.n, 3) << " |\n";
  }
  out << "\n";
}

}  // namespace

std::string render_report(const std::vector<SlotRow>& slots, const std::vector<DecodeRow>& decode) {
  if (slots.empty() && decode.empty()) throw ConfigError("report: no rows to summarise");
  std::ostringstream out;
  out << "# Results\n\n";
  if (!slots.empty()) policy_tables(out, slots);
  if (!decode.empty()) decode_table(out, decode);
  return out.str();
}

std::string report_from_files(const std::vector<std::filesystem::path>& files) {
  if (files.empty()) throw ConfigError("report: no input files");
  std::vector<SlotRow> slots;
  std::vector<DecodeRow> decode;
  for (const auto& f : files) {
    const CsvTable t = read_csv(f);
    if (t.header == slot_csv_header()) {
      auto rows = slot_rows_from_csv(t);
      slots.insert(slots.end(), rows.begin(), rows.end());
    } else if (t.header == decode_csv_header()) {
      auto rows = decode_rows_from_csv(t);
      decode.insert(decode.end(), rows.begin(), rows.end());
    } else {
      throw ConfigError("report: " + f.string() + " is not a metrics table");
    }
  }
  return render_report(slots, decode);
}

}  // namespace edgespec::harness
