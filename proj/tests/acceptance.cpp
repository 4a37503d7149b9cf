// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 on any
// failure.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <thread>

#include "audit.hpp"
#include "cli_support.hpp"
#include "dfjss/analysis.hpp"
#include "dfjss/gp.hpp"
#include "dfjss/llm.hpp"
#include "dfjss/seeding.hpp"
#include "dfjss/simulator.hpp"
#include "golden.hpp"
#include "test_support.hpp"
#include "wilcoxon_oracle.hpp"

using namespace dfjss;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

int threads() { return static_cast<int>(std::max(1u, std::min(8u, std::thread::hardware_concurrency()))); }

std::string fmt(double v, int digits = 4) {
  std::ostringstream s;
  s.precision(digits);
  s << v;
  return s.str();
}

double median_of(std::vector<double> v) { return median(std::move(v)); }

// ---------------------------------------------------------------------------

Outcome simulator_oracle() {
  const Instance inst = test::golden_instance();
  int mismatches = 0;
  for (const std::string rule : {"fifo", "spt"}) {
    const auto golden = test::golden_case(rule);
    const SimResult r = simulate(test::golden_rules(rule), inst, {.record_trace = true});
    for (const auto& op : golden.ops) {
      const auto it = std::find_if(r.trace.begin(), r.trace.end(),
                                   [&](const TraceRecord& t) { return t.job == op.job && t.op == op.op; });
      if (it == r.trace.end() || it->machine != op.machine || it->start != op.start || it->end != op.end) ++mismatches;
    }
    for (const auto& [job, c] : golden.completion)
      if (r.counted_jobs.at(static_cast<std::size_t>(job)).completion != c) ++mismatches;
    for (const auto& [name, v] : golden.objectives)
      if (r.objectives[*objective_from_string(name)] != v) ++mismatches;
  }
  return {mismatches == 0, std::to_string(mismatches) + " mismatches against the hand-computed schedule"};
}

Outcome constraint_audit() {
  const SimConfig config;
  std::mt19937_64 rng(99);
  long violations = 0, ops = 0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const Instance inst = generate_instance(config, seed);
    const RulePair rules = seed % 2 ? reference_rules() : RulePair{test::random_expr(rng), test::random_expr(rng)};
    const SimResult r = simulate(rules, inst, {.record_trace = true});
    const auto report = test::audit_trace(inst, r.trace);
    violations += report.total();
    ops += static_cast<long>(r.trace.size());
  }
  return {violations == 0, std::to_string(violations) + " violations over " + std::to_string(ops) + " operations"};
}

Outcome utilization_calibration() {
  std::string detail;
  bool ok = true;
  for (const auto& [target, lo, hi] : {std::tuple{0.85, 0.82, 0.88}, std::tuple{0.95, 0.91, 0.98}}) {
    SimConfig config;
    config.utilization = target;
    double sum = 0;
    for (std::uint64_t seed = 1; seed <= 3; ++seed) sum += simulate(reference_rules(), generate_instance(config, seed)).utilization();
    const double mean = sum / 3;
    ok = ok && mean >= lo && mean <= hi;
    detail += "target " + fmt(target) + " measured " + fmt(mean) + "; ";
  }
  return {ok, detail};
}

SimConfig reduced_config() {
  SimConfig c;
  c.total_jobs = 1000;
  c.warmup_jobs = 200;
  c.utilization = 0.85;
  return c;
}

GPParams reduced_params() {
  GPParams p;
  p.population_size = 30;
  p.generations = 20;
  return p;
}

Scenario fmean_scenario() {
  Scenario s;
  s.objectives = {Objective::Fmean};
  s.lambdas = {1.0};
  s.utilization = 0.85;
  for (std::uint64_t i = 1; i <= 50; ++i) s.training_seeds.push_back(i);
  for (std::uint64_t i = 10001; i <= 10005; ++i) s.test_seeds.push_back(i);
  s.name = default_scenario_name(s);
  return s;
}

// Shared with the depth check: every evolved individual of criterion 4.
int g_max_depth_seen = 0;
long g_individuals_checked = 0;

Outcome gp_progress() {
  const GPParams params = reduced_params();
  const Scenario scenario = fmean_scenario();
  const FitnessEvaluator evaluator(reduced_config(), scenario);
  std::vector<std::uint64_t> used(scenario.training_seeds.begin(), scenario.training_seeds.begin() + params.generations);
  auto training_mean = [&](const RulePair& r) {
    double s = 0;
    for (auto seed : used) s += evaluator.fitness(r, seed);
    return s / static_cast<double>(used.size());
  };

  std::vector<double> gen0_best, run_best, run_test;
  for (std::uint64_t run = 1; run <= 5; ++run) {
    EvolveOptions opts{.threads = threads(), .on_generation = [&](const GenerationStats& g) {
                         g_max_depth_seen = std::max(g_max_depth_seen, g.max_depth_seen);
                         g_individuals_checked += params.population_size;
                       }};
    const EvolutionResult res = evolve(params, evaluator, {}, derive_seed(2024, run), opts);
    const auto& init = res.log.initial_population;
    const auto best0 = std::min_element(init.begin(), init.end(),
                                        [](const Individual& a, const Individual& b) { return *a.fitness < *b.fitness; });
    for (const auto& ind : init)
      g_max_depth_seen = std::max({g_max_depth_seen, ind.genome.routing.depth(), ind.genome.sequencing.depth()});
    gen0_best.push_back(training_mean(best0->genome));
    run_best.push_back(training_mean(res.best.genome));
    run_test.push_back(test_performance(res.best.genome, evaluator));
  }
  const double m0 = median_of(gen0_best), m1 = median_of(run_best);
  const double improvement = (m0 - m1) / m0;
  double evolved_test = 0;
  for (double v : run_test) evolved_test += v;
  evolved_test /= static_cast<double>(run_test.size());
  const double reference_test = test_performance(reference_rules(), evaluator);
  return {improvement >= 0.05 && evolved_test < reference_test,
          "median gen-0 best " + fmt(m0) + " -> best-of-run " + fmt(m1) + " (" + fmt(100 * improvement, 3) +
              "% better); test mean evolved " + fmt(evolved_test) + " vs WIQ/PT " + fmt(reference_test)};
}

Outcome warm_start() {
  const GPParams params = reduced_params();
  const std::vector<RulePair> strong{
      {parse("WIQ + PT + TRANT"), parse("PT")},
      reference_rules(),
  };
  int wins = 0;
  for (std::uint64_t k = 1; k <= 10; ++k) {
    Scenario s = fmean_scenario();
    s.training_seeds = {k};
    const FitnessEvaluator evaluator(reduced_config(), s);
    std::mt19937_64 rng_a(derive_seed(k, 0)), rng_b(derive_seed(k, 0));
    Population random_pop = init_random(params, rng_a);
    Population seeded_pop = init_seeded(strong, params, rng_b);
    evaluate_population(random_pop, evaluator, k, threads());
    evaluate_population(seeded_pop, evaluator, k, threads());
    auto best = [](const Population& p) {
      double b = *p.front().fitness;
      for (const auto& i : p) b = std::min(b, *i.fitness);
      return b;
    };
    const double rb = best(random_pop), sb = best(seeded_pop);
    if (sb <= rb) ++wins;
  }
  return {wins >= 9, "seeded gen-0 best <= random gen-0 best on " + std::to_string(wins) + "/10 paired seeds"};
}

Outcome depth_and_totality() {
  std::mt19937_64 rng(7);
  long nonfinite = 0;
  std::vector<DecisionContext> contexts;
  for (int i = 0; i < 1000; ++i) contexts.push_back(test::random_context(rng));
  for (int i = 0; i < 10000; ++i) {
    const Expr e = test::random_expr(rng);
    for (const auto& ctx : contexts)
      if (!std::isfinite(e.evaluate(ctx))) ++nonfinite;
  }
  const bool evolved_ok = g_individuals_checked > 0 && g_max_depth_seen <= 8;
  return {nonfinite == 0 && evolved_ok,
          std::to_string(nonfinite) + " non-finite of 10^7 evaluations; max depth " + std::to_string(g_max_depth_seen) +
              " over " + std::to_string(g_individuals_checked) + " evolved individuals"};
}

Outcome parser_round_trip() {
  std::mt19937_64 rng(8);
  int failures = 0;
  for (int i = 0; i < 10000; ++i) {
    const Expr e = test::random_expr(rng);
    if (!(parse(format(e)) == e)) ++failures;
  }
  return {failures == 0, std::to_string(failures) + " of 10000 expressions failed the round trip"};
}

Outcome wilcoxon() {
  std::mt19937_64 rng(9);
  double max_exact = 0;
  int pairs = 0;
  for (int n1 = 1; n1 <= 11; ++n1)
    for (int n2 = 1; n1 + n2 <= 12; ++n2)
      for (int rep = 0; rep < 5; ++rep) {
        std::uniform_int_distribution<int> v(0, rep < 2 ? 4 : 1000);  // small ranges force ties
        std::vector<double> a, b;
        for (int i = 0; i < n1; ++i) a.push_back(v(rng));
        for (int i = 0; i < n2; ++i) b.push_back(v(rng));
        max_exact = std::max(max_exact, std::abs(analysis::wilcoxon_exact_p(a, b) - test::brute_force_rank_sum_p(a, b)));
        ++pairs;
      }
  double max_approx = 0;
  std::normal_distribution<double> noise(0, 1);
  for (int rep = 0; rep < 300; ++rep) {
    std::vector<double> a, b;
    const double shift = 0.25 * (rep % 8);
    for (int i = 0; i < 8; ++i) a.push_back(noise(rng));
    for (int i = 0; i < 8; ++i) b.push_back(noise(rng) + shift);
    max_approx = std::max(max_approx, std::abs(analysis::wilcoxon_normal_p(a, b) - analysis::wilcoxon_exact_p(a, b)));
  }
  return {max_exact <= 1e-12 && max_approx <= 0.02,
          "max |exact - brute force| " + fmt(max_exact) + " over " + std::to_string(pairs) +
              " samples; max |normal - exact| at 8v8 " + fmt(max_approx)};
}

Outcome friedman() {
  analysis::ResultTable t;
  for (int m = 0; m < 6; ++m) t.methods.push_back("M" + std::to_string(m));
  for (int s = 0; s < 4; ++s) t.scenarios.push_back("S" + std::to_string(s));
  // Method m is the (m+1)-th best on every scenario, listed in scrambled order.
  const int order[6] = {3, 0, 5, 1, 4, 2};
  for (int m = 0; m < 6; ++m) {
    t.cells.emplace_back();
    for (int s = 0; s < 4; ++s) t.cells.back().push_back(10.0 * (s + 1) + order[m]);
  }
  const auto ranks = analysis::friedman_ranks(t);
  bool ok = true;
  for (int m = 0; m < 6; ++m) ok = ok && ranks[m] == order[m] + 1;

  analysis::ResultTable ties{{"A", "B", "C"}, {"S0", "S1"}, {{{1.0}, {5.0}}, {{1.0}, {6.0}}, {{2.0}, {4.0}}}};
  const auto tr = analysis::friedman_ranks(ties);
  const bool ties_ok = tr == std::vector<double>{(1.5 + 2) / 2, (1.5 + 3) / 2, (3 + 1) / 2.0};
  return {ok && ties_ok, std::string("known order ") + (ok ? "recovered" : "wrong") + ", midranks on ties " +
                             (ties_ok ? "correct" : "wrong")};
}

Outcome diversity() {
  auto pop_of = [](std::vector<double> f) {
    Population p;
    for (double v : f) p.push_back({reference_rules(), v, Origin::Random});
    return p;
  };
  const double distinct = phenotypic_diversity(pop_of({1, 2, 3, 4}));
  const double same = phenotypic_diversity(pop_of({5, 5, 5, 5, 5}));
  const double mixed = phenotypic_diversity(pop_of({1, 1, 2}));
  return {distinct == 1.0 && same == 1.0 / 5 && mixed == 2.0 / 3,
          "distinct " + fmt(distinct) + ", identical " + fmt(same) + ", {1,1,2} " + fmt(mixed)};
}

// ---------------------------------------------------------------------------
// Offline pipeline and determinism

const char* kCanned =
    "```\nrouting: WIQ + PT + TRANT\nsequencing: PT\n```\n\n"
    "```\nrouting: min(WIQ, NIQ)\nsequencing: PT - OWT\n```\n\n"
    "```\nrouting: WIQ\nsequencing: PT * W\n```\n\n## Insights\n\nShort operations first.\n";

struct Pipeline {
  test::TempDir dir{"acceptance"};
  std::string config, scenario, provider, refs;

  Pipeline() {
    config = dir / "config.json";
    scenario = dir / "scenario.json";
    provider = dir / "provider.json";
    refs = dir / "refs.rule";
    test::write_text(config, R"({"simulation": {"total_jobs": 300, "warmup_jobs": 50},
                                 "gp": {"population_size": 20, "generations": 5}})");
    test::write_text(scenario, R"({"objectives": ["Fmean", "WTmean"], "lambdas": [0.2, 0.8], "normalize": true,
      "utilization": 0.85, "training_seeds": {"first": 1, "count": 5}, "test_seeds": {"first": 10001, "count": 3}})");
    test::write_text(refs, format_rule_pair(reference_rules()));
    test::write_mock_provider(provider, dir.path() / "mock", dir.path() / "audit.jsonl");
    test::write_text(dir / "manifest.json", R"({"config": "config.json", "scenario": "scenario.json", "init": "llm",
      "references": "refs.rule", "n_requested": 3, "provider": "provider.json", "runs": 2, "master_seed": 11,
      "jobs": 2, "threads": 2})");
  }

  bool can(std::vector<std::string> dump, const std::string& reply) {
    dump.push_back("--dump-prompt");
    dump.push_back(dir / "prompt.txt");
    const auto r = test::run_cli(dump);
    if (r.code != 0) return false;
    test::write_text(dir.path() / "mock" / (test::digest_of(r) + ".txt"), reply);
    return true;
  }
};

Outcome offline_pipeline() {
  Pipeline p;
  const long http_before = llm::HttpTransport::attempts();
  std::vector<std::string> problems;
  if (!p.can({"init-llm", "--manifest", p.dir / "manifest.json"}, kCanned)) problems.push_back("dump failed");

  const auto init = test::run_cli({"init-llm", "--manifest", p.dir / "manifest.json", "--out", p.dir / "llm.seeds"});
  if (init.code != 0) problems.push_back("init-llm exit " + std::to_string(init.code) + ": " + init.err);

  const auto ev = test::run_cli({"evolve", "--manifest", p.dir / "manifest.json", "--init", "file", "--seeds",
                                 p.dir / "llm.seeds", "--out", p.dir / "out"});
  if (ev.code != 0) problems.push_back("evolve exit " + std::to_string(ev.code) + ": " + ev.err);

  const auto canned = llm::extract_heuristics(kCanned).accepted;
  std::istringstream gen0(test::slurp(p.dir.path() / "out" / "run-001.gen0.csv"));
  std::string line;
  std::getline(gen0, line);
  for (const auto& pair : canned) {
    std::getline(gen0, line);
    if (line.find(",\"" + format(pair.routing) + "\",\"" + format(pair.sequencing) + "\"") == std::string::npos)
      problems.push_back("gen 0 row differs: " + line);
  }

  const std::string best_rule = p.dir / "out/run-001.best.rule";
  const std::vector<std::string> explain{"explain", "--rules", best_rule, "--scenario", p.scenario};
  if (!p.can(explain, "## Decision logic\n\nRoutes to the least loaded machine.\n")) problems.push_back("dump failed");
  const auto ex = test::run_cli({"explain", "--rules", best_rule, "--scenario", p.scenario, "--provider", p.provider,
                                 "--out", p.dir / "report.md"});
  if (ex.code != 0) problems.push_back("explain exit " + std::to_string(ex.code) + ": " + ex.err);
  const RulePair best = parse_rule_pairs(test::slurp(best_rule)).at(0);
  const auto [r, s] = test::report_histograms(test::slurp(p.dir / "report.md"));
  if (r != terminal_histogram(best.routing) || s != terminal_histogram(best.sequencing))
    problems.push_back("appendix histogram differs from the genome");

  const long http_calls = llm::HttpTransport::attempts() - http_before;
  if (http_calls != 0) problems.push_back(std::to_string(http_calls) + " network requests");
  std::string detail = problems.empty() ? "init-llm -> evolve -> explain, " + std::to_string(canned.size()) +
                                              " canned genomes first in gen 0, histogram matches, 0 network requests"
                                        : problems.front();
  return {problems.empty(), detail};
}

Outcome determinism() {
  Pipeline p;
  if (!p.can({"init-llm", "--manifest", p.dir / "manifest.json"}, kCanned)) return {false, "dump failed"};
  std::vector<std::string> bytes[2];
  for (int k = 0; k < 2; ++k) {
    const std::string out = p.dir / ("out" + std::to_string(k));
    const auto r = test::run_cli({"evolve", "--manifest", p.dir / "manifest.json", "--out", out});
    if (r.code != 0) return {false, "evolve exit " + std::to_string(r.code) + ": " + r.err};
    for (const char* f : {"run-001.record.jsonl", "run-002.record.jsonl"}) bytes[k].push_back(test::slurp(fs::path(out) / f));
  }
  const bool same = bytes[0] == bytes[1] && !bytes[0][0].empty() && bytes[0][0] != bytes[0][1];
  return {same, same ? "2 runs x 2 invocations (2 jobs, 2 threads), records byte-identical"
                     : "records differ between invocations"};
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    std::function<Outcome()> check;
    double limit_seconds;
  };
  const std::vector<Criterion> criteria{
      {1, "simulator oracle", simulator_oracle, 1},
      {2, "constraint audit", constraint_audit, 120},
      {3, "utilization calibration", utilization_calibration, 300},
      {4, "GP progress", gp_progress, 900},
      {5, "warm start", warm_start, 600},
      {6, "depth and totality", depth_and_totality, 600},
      {7, "parser round trip", parser_round_trip, 600},
      {8, "Wilcoxon correctness", wilcoxon, 600},
      {9, "Friedman correctness", friedman, 600},
      {10, "diversity metric", diversity, 600},
      {11, "offline LLM pipeline", offline_pipeline, 600},
      {12, "determinism", determinism, 600},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.check();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (secs > c.limit_seconds) {
      o.pass = false;
      o.detail += " (over the " + fmt(c.limit_seconds) + " s limit)";
    }
    failed += o.pass ? 0 : 1;
    std::printf("%s %2d %s: %s [%.2f s]\n", o.pass ? "PASS" : "FAIL", c.id, c.name, o.detail.c_str(), secs);
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
