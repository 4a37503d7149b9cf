#pragma once

// Multi-run statistics: rank-sum tests, Friedman ranks, comparison tables and
// the series behind the fitness-distribution, terminal-usage and diversity
// plots.

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "dfjss/expr.hpp"
#include "dfjss/rule_pair.hpp"

namespace dfjss::analysis {

class AnalysisError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// ---------------------------------------------------------------------------
// Wilcoxon rank-sum

/// Better: first sample significantly lower (minimization). Printed ↑ ↓ =.
enum class Marker { Better, Worse, Equal };

std::string_view symbol(Marker m);

struct RankSumResult {
  double p = 1.0;
  Marker marker = Marker::Equal;
  double w = 0;     // rank sum of the first sample, midranks on ties
  bool exact = false;
};

/// Largest sample size handled by exact enumeration.
inline constexpr std::size_t kExactLimit = 8;

/// Two-sided test. Exact when both samples have at most kExactLimit values,
/// normal approximation otherwise. Throws AnalysisError on an empty sample.
RankSumResult wilcoxon_rank_sum(std::span<const double> a, std::span<const double> b, double alpha = 0.05);

/// Exact two-sided p-value, min(1, 2 * smaller tail) of the rank-sum
/// distribution under all C(n1+n2, n1) assignments of the pooled midranks.
double wilcoxon_exact_p(std::span<const double> a, std::span<const double> b);

/// Normal approximation with tie-corrected variance and continuity correction.
double wilcoxon_normal_p(std::span<const double> a, std::span<const double> b);

/// Midranks (1-based) of the pooled values, in input order.
std::vector<double> midranks(std::span<const double> values);

// ---------------------------------------------------------------------------
// Friedman ranks

struct ResultTable {
  std::vector<std::string> methods;
  std::vector<std::string> scenarios;
  std::vector<std::vector<std::optional<double>>> cells;  // [method][scenario], lower is better
};

/// Average rank per method (1 = best, midranks on ties). Throws AnalysisError
/// on fewer than 2 methods or scenarios, ragged rows, or a missing cell.
std::vector<double> friedman_ranks(const ResultTable& table);

// ---------------------------------------------------------------------------
// Run records and summaries

struct RunRecord {
  std::string method;
  std::string scenario;
  std::string preference;  // training preference, e.g. "0.2×Fmean + 0.8×WTmean"
  std::uint64_t master_seed = 0;
  int run = 0;
  std::uint64_t run_seed = 0;
  double train_fitness = 0;
  double test_fitness = 0;
  std::string best_genome;  // format_rule_pair text
  std::string log_file;     // per-generation CSV, relative to the record
  std::vector<double> initial_fitness;
  std::vector<double> best_series;       // per generation
  std::vector<double> diversity_series;  // per generation
};

/// One JSON object, no trailing newline; keys in a fixed order.
std::string to_json_line(const RunRecord& record);
RunRecord record_from_json(std::string_view line);
/// Skips blank lines. Throws AnalysisError naming the line.
std::vector<RunRecord> read_records(std::istream& in);

struct SummaryCell {
  double mean = 0;
  double std = 0;  // sample standard deviation, 0 for a single run
  int runs = 0;
  std::optional<Marker> marker;  // vs baseline, absent with < 2 runs
  double p = 1.0;
};

struct WinDrawLose {
  int win = 0;
  int draw = 0;
  int lose = 0;
};

struct Summary {
  std::string baseline;
  std::vector<std::string> methods;    // baseline first, the rest sorted
  std::vector<std::string> scenarios;  // sorted
  std::vector<std::vector<SummaryCell>> cells;  // [scenario][method]
  std::vector<WinDrawLose> tallies;             // per method vs baseline

  ResultTable means() const;
};

/// Mean, sample std and rank-sum marker vs the baseline per (scenario,
/// method). Throws AnalysisError listing missing or unbalanced cells.
Summary summarize(std::span<const RunRecord> records, const std::string& baseline, double alpha = 0.05);

/// Sample mean and n-1 standard deviation.
std::pair<double, double> mean_std(std::span<const double> values);

// ---------------------------------------------------------------------------
// Plot series

struct RunLog {
  std::string method;
  std::vector<double> initial_fitness;
  std::vector<double> diversity;
};

/// Generation-0 fitness values concatenated per method. Throws on no logs.
std::map<std::string, std::vector<double>> initial_fitness_distribution(std::span<const RunLog> logs);

struct TerminalFrequency {
  std::map<Terminal, double> routing;     // every terminal present, 0 if unused
  std::map<Terminal, double> sequencing;
};

/// Mean terminal counts over best individuals. Throws on an empty set.
TerminalFrequency terminal_frequency_report(std::span<const RulePair> best);

/// Generation-wise mean diversity. Throws on no logs or unequal lengths.
std::vector<double> diversity_series(std::span<const RunLog> logs);

// ---------------------------------------------------------------------------
// CSV output

/// scenario,<method>,... with cells "mean(std)marker".
void write_comparison_csv(std::ostream& out, const Summary& summary);
/// method,win,draw,lose
void write_tally_csv(std::ostream& out, const Summary& summary);
/// method,average_rank
void write_ranks_csv(std::ostream& out, const ResultTable& table, std::span<const double> ranks);
/// method,value
void write_distribution_csv(std::ostream& out, const std::map<std::string, std::vector<double>>& samples);
/// terminal,routing,sequencing
void write_terminal_csv(std::ostream& out, const TerminalFrequency& freq);
/// generation,<column>...; all columns have the same length.
void write_series_csv(std::ostream& out, const std::vector<std::string>& names,
                      const std::vector<std::vector<double>>& columns);

}  // namespace dfjss::analysis
