#include <algorithm>
#include <charconv>
#include <istream>
#include <ostream>
#include <set>

#include "dfjss/analysis.hpp"
#include "json.hpp"

namespace dfjss::analysis {

using nlohmann::ordered_json;

std::string to_json_line(const RunRecord& r) {
  ordered_json j;
  j["method"] = r.method;
  j["scenario"] = r.scenario;
  j["preference"] = r.preference;
  j["master_seed"] = r.master_seed;
  j["run"] = r.run;
  j["run_seed"] = r.run_seed;
  j["train_fitness"] = r.train_fitness;
  j["test_fitness"] = r.test_fitness;
  j["best_genome"] = r.best_genome;
  j["log_file"] = r.log_file;
  j["initial_fitness"] = r.initial_fitness;
  j["best_series"] = r.best_series;
  j["diversity_series"] = r.diversity_series;
  return j.dump();
}

RunRecord record_from_json(std::string_view line) {
  const auto j = ordered_json::parse(line);
  RunRecord r;
  r.method = j.at("method").get<std::string>();
  r.scenario = j.at("scenario").get<std::string>();
  r.preference = j.value("preference", "");
  r.master_seed = j.value("master_seed", std::uint64_t{0});
  r.run = j.value("run", 0);
  r.run_seed = j.value("run_seed", std::uint64_t{0});
  r.train_fitness = j.value("train_fitness", 0.0);
  r.test_fitness = j.at("test_fitness").get<double>();
  r.best_genome = j.value("best_genome", "");
  r.log_file = j.value("log_file", "");
  r.initial_fitness = j.value("initial_fitness", std::vector<double>{});
  r.best_series = j.value("best_series", std::vector<double>{});
  r.diversity_series = j.value("diversity_series", std::vector<double>{});
  return r;
}

std::vector<RunRecord> read_records(std::istream& in) {
  std::vector<RunRecord> out;
  int line_no = 0;
  for (std::string line; std::getline(in, line);) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(record_from_json(line));
    } catch (const nlohmann::json::exception& e) {
      throw AnalysisError("run record line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

ResultTable Summary::means() const {
  ResultTable t;
  t.methods = methods;
  t.scenarios = scenarios;
  t.cells.assign(methods.size(), std::vector<std::optional<double>>(scenarios.size()));
  for (std::size_t s = 0; s < scenarios.size(); ++s)
    for (std::size_t m = 0; m < methods.size(); ++m) t.cells[m][s] = cells[s][m].mean;
  return t;
}

Summary summarize(std::span<const RunRecord> records, const std::string& baseline, double alpha) {
  if (records.empty()) throw AnalysisError("no run records");
  std::map<std::pair<std::string, std::string>, std::vector<double>> samples;  // (scenario, method)
  std::set<std::string> methods, scenarios;
  for (const auto& r : records) {
    samples[{r.scenario, r.method}].push_back(r.test_fitness);
    methods.insert(r.method);
    scenarios.insert(r.scenario);
  }
  if (!methods.contains(baseline)) throw AnalysisError("baseline method " + baseline + " has no records");

  Summary out;
  out.baseline = baseline;
  out.methods.push_back(baseline);
  for (const auto& m : methods)
    if (m != baseline) out.methods.push_back(m);
  out.scenarios.assign(scenarios.begin(), scenarios.end());

  const std::size_t expected = samples.begin()->second.size();
  std::string problems;
  for (const auto& s : out.scenarios) {
    for (const auto& m : out.methods) {
      auto it = samples.find({s, m});
      if (it == samples.end()) {
        problems += "\n  missing cell: scenario " + s + ", method " + m;
      } else if (it->second.size() != expected) {
        problems += "\n  unbalanced cell: scenario " + s + ", method " + m + " has " +
                    std::to_string(it->second.size()) + " runs, expected " + std::to_string(expected);
      }
    }
  }
  if (!problems.empty()) throw AnalysisError("run records are not balanced:" + problems);

  out.cells.assign(out.scenarios.size(), std::vector<SummaryCell>(out.methods.size()));
  out.tallies.assign(out.methods.size(), {});
  for (std::size_t si = 0; si < out.scenarios.size(); ++si) {
    const auto& base = samples.at({out.scenarios[si], baseline});
    for (std::size_t mi = 0; mi < out.methods.size(); ++mi) {
      const auto& v = samples.at({out.scenarios[si], out.methods[mi]});
      SummaryCell& c = out.cells[si][mi];
      std::tie(c.mean, c.std) = mean_std(v);
      c.runs = static_cast<int>(v.size());
      if (v.size() < 2) continue;
      const RankSumResult r = wilcoxon_rank_sum(v, base, alpha);
      c.marker = r.marker;
      c.p = r.p;
      WinDrawLose& t = out.tallies[mi];
      (r.marker == Marker::Better ? t.win : r.marker == Marker::Worse ? t.lose : t.draw) += 1;
    }
  }
  return out;
}

std::map<std::string, std::vector<double>> initial_fitness_distribution(std::span<const RunLog> logs) {
  if (logs.empty()) throw AnalysisError("no run logs");
  std::map<std::string, std::vector<double>> out;
  for (const auto& l : logs) {
    auto& v = out[l.method];
    v.insert(v.end(), l.initial_fitness.begin(), l.initial_fitness.end());
  }
  return out;
}

TerminalFrequency terminal_frequency_report(std::span<const RulePair> best) {
  if (best.empty()) throw AnalysisError("no individuals");
  TerminalFrequency f;
  for (Terminal t : kAllTerminals) f.routing[t] = f.sequencing[t] = 0.0;
  for (const auto& r : best) {
    for (const auto& [t, n] : terminal_histogram(r.routing)) f.routing[t] += n;
    for (const auto& [t, n] : terminal_histogram(r.sequencing)) f.sequencing[t] += n;
  }
  const double n = static_cast<double>(best.size());
  for (Terminal t : kAllTerminals) {
    f.routing[t] /= n;
    f.sequencing[t] /= n;
  }
  return f;
}

std::vector<double> diversity_series(std::span<const RunLog> logs) {
  if (logs.empty()) throw AnalysisError("no run logs");
  const std::size_t len = logs.front().diversity.size();
  std::vector<double> out(len, 0.0);
  for (const auto& l : logs) {
    if (l.diversity.size() != len) throw AnalysisError("run logs have different generation counts");
    for (std::size_t g = 0; g < len; ++g) out[g] += l.diversity[g];
  }
  for (double& v : out) v /= static_cast<double>(logs.size());
  return out;
}

// ---------------------------------------------------------------------------

namespace {

std::string num(double v) {
  char buf[32];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, end);
}

// Fixed precision for human-facing table cells.
std::string cell_num(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::fixed, 4);
  return std::string(buf, end);
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace

void write_comparison_csv(std::ostream& out, const Summary& s) {
  out << "scenario";
  for (const auto& m : s.methods) out << ',' << csv_field(m);
  out << '\n';
  for (std::size_t si = 0; si < s.scenarios.size(); ++si) {
    out << csv_field(s.scenarios[si]);
    for (const auto& c : s.cells[si]) {
      out << ',' << cell_num(c.mean) << '(' << cell_num(c.std) << ')';
      if (c.marker) out << symbol(*c.marker);
    }
    out << '\n';
  }
}

void write_tally_csv(std::ostream& out, const Summary& s) {
  out << "method,win,draw,lose\n";
  for (std::size_t m = 0; m < s.methods.size(); ++m)
    out << csv_field(s.methods[m]) << ',' << s.tallies[m].win << ',' << s.tallies[m].draw << ',' << s.tallies[m].lose << '\n';
}

void write_ranks_csv(std::ostream& out, const ResultTable& table, std::span<const double> ranks) {
  out << "method,average_rank\n";
  for (std::size_t m = 0; m < table.methods.size() && m < ranks.size(); ++m)
    out << csv_field(table.methods[m]) << ',' << num(ranks[m]) << '\n';
}

void write_distribution_csv(std::ostream& out, const std::map<std::string, std::vector<double>>& samples) {
  out << "method,value\n";
  for (const auto& [m, values] : samples)
    for (double v : values) out << csv_field(m) << ',' << num(v) << '\n';
}

void write_terminal_csv(std::ostream& out, const TerminalFrequency& f) {
  out << "terminal,routing,sequencing\n";
  for (Terminal t : kAllTerminals) out << to_string(t) << ',' << num(f.routing.at(t)) << ',' << num(f.sequencing.at(t)) << '\n';
}

void write_series_csv(std::ostream& out, const std::vector<std::string>& names,
                      const std::vector<std::vector<double>>& columns) {
  if (names.size() != columns.size()) throw AnalysisError("series names and columns differ in count");
  const std::size_t len = columns.empty() ? 0 : columns.front().size();
  for (const auto& c : columns)
    if (c.size() != len) throw AnalysisError("series have different lengths");
  out << "generation";
  for (const auto& n : names) out << ',' << csv_field(n);
  out << '\n';
  for (std::size_t g = 0; g < len; ++g) {
    out << g;
    for (const auto& c : columns) out << ',' << num(c[g]);
    out << '\n';
  }
}

}  // namespace dfjss::analysis
