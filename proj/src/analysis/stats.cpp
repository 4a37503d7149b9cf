#include <algorithm>
#include <cmath>
#include <numeric>

#include "dfjss/analysis.hpp"

namespace dfjss::analysis {

std::string_view symbol(Marker m) {
  switch (m) {
    case Marker::Better: return "↑";
    case Marker::Worse: return "↓";
    case Marker::Equal: return "=";
  }
  return "?";
}

std::vector<double> midranks(std::span<const double> values) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return values[x] < values[y]; });
  std::vector<double> ranks(values.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && values[order[j + 1]] == values[order[i]]) ++j;
    const double r = (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = r;
    i = j + 1;
  }
  return ranks;
}

namespace {

std::vector<double> pooled(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) throw AnalysisError("rank-sum test needs two nonempty samples");
  std::vector<double> all(a.begin(), a.end());
  all.insert(all.end(), b.begin(), b.end());
  return all;
}

double rank_sum(const std::vector<double>& ranks, std::size_t n1) {
  return std::accumulate(ranks.begin(), ranks.begin() + static_cast<std::ptrdiff_t>(n1), 0.0);
}

}  // namespace

double wilcoxon_exact_p(std::span<const double> a, std::span<const double> b) {
  const std::vector<double> ranks = midranks(pooled(a, b));
  const std::size_t n1 = a.size();
  // Doubled midranks are integers, so the rank-sum distribution is a
  // subset-sum count over them.
  std::vector<int> twice(ranks.size());
  for (std::size_t i = 0; i < ranks.size(); ++i) twice[i] = static_cast<int>(std::lround(2 * ranks[i]));
  const int max_sum = std::accumulate(twice.begin(), twice.end(), 0);
  std::vector<std::vector<double>> ways(n1 + 1, std::vector<double>(static_cast<std::size_t>(max_sum) + 1, 0.0));
  ways[0][0] = 1;
  for (int r : twice) {
    for (std::size_t k = n1; k >= 1; --k) {
      for (int s = max_sum; s >= r; --s) ways[k][static_cast<std::size_t>(s)] += ways[k - 1][static_cast<std::size_t>(s - r)];
    }
  }
  const int w = static_cast<int>(std::lround(2 * rank_sum(ranks, n1)));
  double total = 0, low = 0, high = 0;
  for (int s = 0; s <= max_sum; ++s) {
    const double c = ways[n1][static_cast<std::size_t>(s)];
    total += c;
    if (s <= w) low += c;
    if (s >= w) high += c;
  }
  return std::min(1.0, 2.0 * std::min(low, high) / total);
}

double wilcoxon_normal_p(std::span<const double> a, std::span<const double> b) {
  const std::vector<double> all = pooled(a, b);
  const std::vector<double> ranks = midranks(all);
  const double n1 = static_cast<double>(a.size()), n2 = static_cast<double>(b.size());
  const double n = n1 + n2;

  std::vector<double> sorted = all;
  std::sort(sorted.begin(), sorted.end());
  double ties = 0;
  for (std::size_t i = 0; i < sorted.size();) {
    std::size_t j = i;
    while (j < sorted.size() && sorted[j] == sorted[i]) ++j;
    const double t = static_cast<double>(j - i);
    ties += t * t * t - t;
    i = j;
  }
  const double var = n1 * n2 / 12.0 * ((n + 1) - ties / (n * (n - 1)));
  if (!(var > 0)) return 1.0;
  const double diff = std::abs(rank_sum(ranks, a.size()) - n1 * (n + 1) / 2.0);
  const double z = std::max(0.0, diff - 0.5) / std::sqrt(var);
  return std::min(1.0, std::erfc(z / std::sqrt(2.0)));
}

RankSumResult wilcoxon_rank_sum(std::span<const double> a, std::span<const double> b, double alpha) {
  const std::vector<double> ranks = midranks(pooled(a, b));
  RankSumResult r;
  r.w = rank_sum(ranks, a.size());
  r.exact = a.size() <= kExactLimit && b.size() <= kExactLimit;
  r.p = r.exact ? wilcoxon_exact_p(a, b) : wilcoxon_normal_p(a, b);
  const double expected = static_cast<double>(a.size()) * static_cast<double>(ranks.size() + 1) / 2.0;
  if (r.p < alpha && r.w != expected) r.marker = r.w < expected ? Marker::Better : Marker::Worse;
  return r;
}

std::vector<double> friedman_ranks(const ResultTable& t) {
  const std::size_t m = t.methods.size(), s = t.scenarios.size();
  if (m < 2) throw AnalysisError("Friedman ranks need at least 2 methods");
  if (s < 2) throw AnalysisError("Friedman ranks need at least 2 scenarios");
  if (t.cells.size() != m) throw AnalysisError("table has " + std::to_string(t.cells.size()) + " rows for " + std::to_string(m) + " methods");
  for (std::size_t i = 0; i < m; ++i) {
    if (t.cells[i].size() != s) throw AnalysisError("row " + t.methods[i] + " has the wrong number of cells");
    for (std::size_t j = 0; j < s; ++j)
      if (!t.cells[i][j]) throw AnalysisError("missing cell: method " + t.methods[i] + ", scenario " + t.scenarios[j]);
  }
  std::vector<double> avg(m, 0.0);
  for (std::size_t j = 0; j < s; ++j) {
    std::vector<double> column(m);
    for (std::size_t i = 0; i < m; ++i) column[i] = *t.cells[i][j];
    const auto r = midranks(column);
    for (std::size_t i = 0; i < m; ++i) avg[i] += r[i];
  }
  for (double& v : avg) v /= static_cast<double>(s);
  return avg;
}

std::pair<double, double> mean_std(std::span<const double> values) {
  if (values.empty()) throw AnalysisError("mean of an empty sample");
  // Sorted summation keeps results independent of input order.
  std::vector<double> v(values.begin(), values.end());
  std::sort(v.begin(), v.end());
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  if (v.size() < 2) return {mean, 0.0};
  double ss = 0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return {mean, std::sqrt(ss / static_cast<double>(v.size() - 1))};
}

}  // namespace dfjss::analysis
