#include <fnmatch.h>

#include <algorithm>
#include <atomic>
#include <charconv>
#include <exception>
#include <fstream>
#include <iostream>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "dfjss/analysis.hpp"
#include "dfjss/cli.hpp"
#include "dfjss/seeding.hpp"
#include "dfjss/simulator.hpp"

namespace dfjss::cli {

namespace fs = std::filesystem;

namespace {

std::string num(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, end);
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CliError(kDataError, "cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<RulePair> read_rules(const fs::path& path) {
  const std::string text = read_text(path);
  try {
    return parse_rule_pairs(text);
  } catch (const RuleFileError& e) {
    throw CliError(kDataError, path.string() + ": " + e.what());
  }
}

RulePair read_single_rule(const fs::path& path) {
  auto pairs = read_rules(path);
  if (pairs.empty()) throw CliError(kDataError, path.string() + ": no rule pair found");
  return pairs.front();
}

Instance read_instance_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw CliError(kDataError, "cannot read " + path.string());
  try {
    return read_instance(in);
  } catch (const InstanceFormatError& e) {
    throw CliError(kDataError, path.string() + ": " + e.what());
  }
}

void revalidate(Config& c) {
  try {
    validate(c.sim);
    validate(c.gp);
  } catch (const ConfigError& e) {
    throw CliError(kConfigError, e.what());
  }
}

Config config_or_default(const fs::path& path) { return path.empty() ? Config{} : load_config(path); }

void require(bool ok, const std::string& what) {
  if (!ok) throw CliError(kConfigError, what);
}

std::vector<llm::ReferenceHeuristic> load_references(const fs::path& path, const std::string& label) {
  std::vector<llm::ReferenceHeuristic> refs;
  if (path.empty()) return refs;
  for (auto& pair : read_rules(path))
    refs.push_back({std::move(pair), label.empty() ? path.stem().string() : label, ""});
  return refs;
}

struct SeedRequest {
  Scenario scenario;
  std::vector<llm::ReferenceHeuristic> references;
  int n_requested = 100;
  std::optional<Scenario> source;  // transfer from this scenario
  std::string insights;
};

llm::PromptSpec seed_prompt(const SeedRequest& req) {
  const auto prefs = llm::preferences_of(req.scenario);
  try {
    if (req.source)
      return llm::build_transfer_prompt(req.references, *req.source, req.scenario, prefs, req.n_requested,
                                        req.insights);
    return llm::build_init_prompt(req.scenario, req.references, prefs, req.n_requested);
  } catch (const std::invalid_argument& e) {
    throw CliError(kConfigError, e.what());
  }
}

/// Queries once and writes <out>.seeds plus the insights next to it.
llm::ExtractionResult query_seeds(const SeedRequest& req, const llm::ProviderConfig& provider,
                                  const fs::path& seeds_out, int max_depth, std::ostream& out) {
  const llm::PromptSpec prompt = seed_prompt(req);
  std::string reply;
  try {
    reply = llm::query(provider, prompt);
  } catch (const llm::ProviderError& e) {
    throw CliError(kProviderError, std::string("provider ") + std::string(llm::to_string(e.kind())) + ": " + e.what());
  }
  auto result = llm::extract_heuristics(reply, max_depth);
  write_atomic(seeds_out, llm::format_seeds_file(result));
  if (!result.insights.empty()) {
    fs::path insights = seeds_out;
    insights.replace_extension(".insights.md");
    write_atomic(insights, result.insights + "\n");
  }
  out << "prompt " << llm::prompt_digest(prompt) << "\n"
      << "accepted " << result.accepted.size() << " rejected " << result.rejected.size() << "\n";
  return result;
}

std::string run_name(int run) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "run-%03d", run);
  return buf;
}

std::string default_method(const std::string& init) {
  if (init == "llm") return "LLM-GP";
  if (init == "file") return "Seeded-GP";
  return "GP";
}

// ---------------------------------------------------------------------------
// gen-instance

struct GenArgs {
  fs::path config;
  std::uint64_t seed = 1;
  fs::path out;
  std::optional<int> jobs;
  std::optional<int> warmup;
  std::optional<double> utilization;
};

int cmd_gen_instance(const GenArgs& a, std::ostream& out) {
  Config c = config_or_default(a.config);
  if (a.jobs) c.sim.total_jobs = *a.jobs;
  if (a.warmup) c.sim.warmup_jobs = *a.warmup;
  if (a.utilization) c.sim.utilization = *a.utilization;
  revalidate(c);
  const Instance inst = generate_instance(c.sim, a.seed);
  std::ostringstream text;
  write_instance(text, inst);
  if (a.out.empty() || a.out == "-") {
    out << text.str();
  } else {
    write_atomic(a.out, text.str());
    out << "wrote " << a.out.string() << " (" << inst.jobs.size() << " jobs)\n";
  }
  return kOk;
}

// ---------------------------------------------------------------------------
// simulate

struct SimArgs {
  fs::path rules;
  fs::path instance;
  fs::path trace;
};

int cmd_simulate(const SimArgs& a, std::ostream& out) {
  const RulePair rules = a.rules.empty() ? reference_rules() : read_single_rule(a.rules);
  const Instance inst = read_instance_file(a.instance);
  const SimResult r = simulate(rules, inst, {.record_trace = !a.trace.empty()});
  for (Objective o : {Objective::Tmax, Objective::Tmean, Objective::Fmean, Objective::WTmean, Objective::WFmean})
    out << to_string(o) << " " << num(r.objectives[o]) << "\n";
  if (!a.trace.empty()) {
    std::ostringstream csv;
    write_trace_csv(csv, r.trace);
    write_atomic(a.trace, csv.str());
  }
  return kOk;
}

// ---------------------------------------------------------------------------
// evolve

struct EvolveArgs {
  fs::path manifest;
  fs::path config, scenario, seeds, references, provider, out;
  std::optional<std::string> init, method;
  std::optional<std::uint64_t> seed;
  std::optional<int> runs, jobs, threads, n_requested, generations, population;
};

Manifest merge(const EvolveArgs& a) {
  Manifest m = a.manifest.empty() ? Manifest{} : load_manifest(a.manifest);
  if (!a.config.empty()) m.config = a.config;
  if (!a.scenario.empty()) m.scenario = a.scenario;
  if (!a.seeds.empty()) m.seeds_file = a.seeds;
  if (!a.references.empty()) m.references = a.references;
  if (!a.provider.empty()) m.provider = a.provider;
  if (!a.out.empty()) m.out = a.out;
  if (a.init) m.init = *a.init;
  if (a.method) m.method = *a.method;
  if (a.seed) m.master_seed = *a.seed;
  if (a.runs) m.runs = *a.runs;
  if (a.jobs) m.jobs = *a.jobs;
  if (a.threads) m.threads = *a.threads;
  if (a.n_requested) m.n_requested = *a.n_requested;
  require(!m.scenario.empty(), "a scenario file is required (--scenario or manifest)");
  require(m.init == "random" || m.init == "llm" || m.init == "file", "init must be random, llm or file");
  require(m.runs >= 1, "runs must be at least 1");
  require(m.jobs >= 1, "jobs must be at least 1");
  require(m.threads >= 1, "threads must be at least 1");
  require(m.n_requested >= 1, "n-requested must be at least 1");
  require(m.init != "file" || !m.seeds_file.empty(), "init file needs a seeds file (--seeds)");
  require(m.init != "llm" || !m.provider.empty(), "init llm needs a provider file (--provider)");
  if (m.method.empty()) m.method = default_method(m.init);
  return m;
}

struct RunOutput {
  analysis::RunRecord record;
  std::string log_csv;
  std::string gen0_csv;
  std::string best_rule;
};

RunOutput one_run(const Manifest& m, const GPParams& params, const FitnessEvaluator& evaluator,
                  const std::vector<RulePair>& seeds, int run) {
  const std::uint64_t run_seed = derive_seed(m.master_seed, static_cast<std::uint64_t>(run));
  const EvolutionResult res = evolve(params, evaluator, seeds, run_seed, {.threads = m.threads, .on_generation = {}});

  RunOutput o;
  const std::string name = run_name(run);
  auto& rec = o.record;
  rec.method = m.method;
  rec.scenario = evaluator.scenario().name;
  rec.preference = llm::objective_expression(llm::preferences_of(evaluator.scenario()));
  rec.master_seed = m.master_seed;
  rec.run = run;
  rec.run_seed = run_seed;
  rec.train_fitness = *res.best.fitness;
  rec.test_fitness = test_performance(res.best.genome, evaluator);
  rec.best_genome = format_rule_pair(res.best.genome);
  rec.log_file = name + ".log.csv";
  rec.initial_fitness = res.log.initial_fitness;

  std::ostringstream log;
  log << "generation,instance_seed,best,mean,diversity,crossovers,mutations,reproductions\n";
  for (const auto& g : res.log.generations) {
    rec.best_series.push_back(g.best);
    rec.diversity_series.push_back(g.diversity);
    log << g.generation << "," << g.instance_seed << "," << num(g.best) << "," << num(g.mean) << ","
        << num(g.diversity) << "," << g.crossovers << "," << g.mutations << "," << g.reproductions << "\n";
  }
  o.log_csv = log.str();

  std::ostringstream gen0;
  gen0 << "index,origin,fitness,routing,sequencing\n";
  for (std::size_t i = 0; i < res.log.initial_population.size(); ++i) {
    const auto& ind = res.log.initial_population[i];
    gen0 << i << "," << to_string(ind.origin) << "," << num(*ind.fitness) << ",\"" << format(ind.genome.routing)
         << "\",\"" << format(ind.genome.sequencing) << "\"\n";
  }
  o.gen0_csv = gen0.str();
  o.best_rule = rec.best_genome;
  return o;
}

int cmd_evolve(const EvolveArgs& a, std::ostream& out) {
  const Manifest m = merge(a);
  Config c = config_or_default(m.config);
  if (a.generations) c.gp.generations = *a.generations;
  if (a.population) c.gp.population_size = *a.population;
  revalidate(c);
  const Scenario scenario = load_scenario(m.scenario);
  c.sim.utilization = scenario.utilization;
  revalidate(c);

  fs::create_directories(m.out);
  std::vector<RulePair> seeds;
  if (m.init == "file") {
    seeds = read_rules(m.seeds_file);
    if (seeds.empty()) throw CliError(kDataError, m.seeds_file.string() + ": no rule pairs");
  } else if (m.init == "llm") {
    SeedRequest req{scenario, load_references(m.references, m.references_label), m.n_requested, {}, {}};
    auto result = query_seeds(req, load_provider(m.provider), m.out / "init-llm.seeds", c.gp.max_depth, out);
    if (result.accepted.empty()) throw CliError(kDataError, "the provider reply contained no usable rule pairs");
    seeds = std::move(result.accepted);
  }
  if (!seeds.empty()) {
    const auto issues = check_seeds(seeds, c.gp);
    if (!issues.empty())
      throw CliError(kDataError, "seed " + std::to_string(issues.front().index) + ": " + issues.front().cause);
  }

  write_atomic(m.out / "config.json", config_to_json(c));
  const FitnessEvaluator evaluator(c.sim, scenario);

  std::vector<std::optional<RunOutput>> results(m.runs);
  std::atomic<int> next{0};
  std::mutex failure_mutex;
  std::exception_ptr failure;
  auto worker = [&] {
    for (int i; (i = next.fetch_add(1)) < m.runs;) {
      try {
        RunOutput o = one_run(m, c.gp, evaluator, seeds, i + 1);
        const std::string name = run_name(i + 1);
        write_atomic(m.out / (name + ".log.csv"), o.log_csv);
        write_atomic(m.out / (name + ".gen0.csv"), o.gen0_csv);
        write_atomic(m.out / (name + ".best.rule"), o.best_rule);
        // The record goes last: its presence marks a finished run.
        write_atomic(m.out / (name + ".record.jsonl"), analysis::to_json_line(o.record) + "\n");
        results[i] = std::move(o);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  const int workers = std::min(m.jobs, m.runs);
  if (workers <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
  }
  if (failure) std::rethrow_exception(failure);

  for (const auto& r : results) {
    const auto& rec = r->record;
    out << run_name(rec.run) << " seed " << rec.run_seed << " train " << num(rec.train_fitness) << " test "
        << num(rec.test_fitness) << "\n";
  }
  return kOk;
}

// ---------------------------------------------------------------------------
// init-llm

struct InitArgs {
  fs::path manifest, scenario, references, provider, out, dump_prompt, transfer_from, insights, config;
  std::string label;
  std::optional<int> n_requested;
};

int cmd_init_llm(const InitArgs& a, std::ostream& out) {
  Manifest m = a.manifest.empty() ? Manifest{} : load_manifest(a.manifest);
  if (!a.scenario.empty()) m.scenario = a.scenario;
  if (!a.references.empty()) m.references = a.references;
  if (!a.provider.empty()) m.provider = a.provider;
  if (!a.config.empty()) m.config = a.config;
  if (!a.label.empty()) m.references_label = a.label;
  if (a.n_requested) m.n_requested = *a.n_requested;
  require(!m.scenario.empty(), "a scenario file is required (--scenario or manifest)");
  require(m.n_requested >= 1, "n-requested must be at least 1");

  SeedRequest req{load_scenario(m.scenario), load_references(m.references, m.references_label), m.n_requested, {}, {}};
  if (!a.transfer_from.empty()) {
    req.source = load_scenario(a.transfer_from);
    if (!a.insights.empty()) req.insights = read_text(a.insights);
  }
  if (!a.dump_prompt.empty()) {
    const auto prompt = seed_prompt(req);
    write_atomic(a.dump_prompt, prompt.text);
    out << llm::prompt_digest(prompt) << "\n";
    return kOk;
  }
  require(!m.provider.empty(), "a provider file is required (--provider or manifest)");
  const fs::path seeds_out = a.out.empty() ? m.out / "init-llm.seeds" : a.out;
  const Config c = config_or_default(m.config);
  const auto result = query_seeds(req, load_provider(m.provider), seeds_out, c.gp.max_depth, out);
  for (const auto& r : result.rejected)
    out << "rejected " << llm::to_string(r.cause) << ": " << r.detail << "\n";
  if (result.accepted.empty()) throw CliError(kDataError, "the provider reply contained no usable rule pairs");
  return kOk;
}

// ---------------------------------------------------------------------------
// explain

struct ExplainArgs {
  fs::path rules, scenario, provider, out, config, dump_prompt;
  bool test_performance = false;
};

int cmd_explain(const ExplainArgs& a, std::ostream& out, std::ostream& err) {
  const RulePair best = read_single_rule(a.rules);
  const Scenario scenario = load_scenario(a.scenario);
  if (!a.dump_prompt.empty()) {
    const auto prompt = llm::build_explain_prompt(best, scenario);
    write_atomic(a.dump_prompt, prompt.text);
    out << llm::prompt_digest(prompt) << "\n";
    return kOk;
  }
  require(!a.provider.empty(), "--provider is required");
  require(!a.out.empty(), "--out is required");
  const llm::ProviderConfig provider = load_provider(a.provider);
  std::optional<double> perf;
  if (a.test_performance) {
    Config c = config_or_default(a.config);
    c.sim.utilization = scenario.utilization;
    revalidate(c);
    perf = dfjss::test_performance(best, FitnessEvaluator(c.sim, scenario));
  }
  const llm::Report report = llm::generate_report(best, scenario, provider, perf);
  write_atomic(a.out, report.text);
  out << "wrote " << a.out.string() << "\n";
  if (!report.narrative_available) {
    err << "dfjss: provider failed, report has the appendix only: " << report.error << "\n";
    return kProviderError;
  }
  return kOk;
}

// ---------------------------------------------------------------------------
// compare

struct CompareArgs {
  std::vector<std::string> records;
  std::string baseline;
  fs::path out;
  double alpha = 0.05;
};

bool has_glob(const std::string& s) { return s.find_first_of("*?[") != std::string::npos; }

void collect_record_files(const std::string& source, std::vector<fs::path>& files) {
  const fs::path p(source);
  if (has_glob(source)) {
    const fs::path dir = p.has_parent_path() ? p.parent_path() : fs::path(".");
    if (has_glob(dir.string())) throw CliError(kConfigError, "wildcards are only supported in the file name: " + source);
    if (!fs::is_directory(dir)) throw CliError(kDataError, "no such directory " + dir.string());
    const std::string pattern = p.filename().string();
    for (const auto& e : fs::directory_iterator(dir))
      if (e.is_regular_file() && ::fnmatch(pattern.c_str(), e.path().filename().c_str(), 0) == 0)
        files.push_back(e.path());
  } else if (fs::is_directory(p)) {
    for (const auto& e : fs::recursive_directory_iterator(p)) {
      const std::string name = e.path().filename().string();
      if (e.is_regular_file() && name.ends_with(".record.jsonl")) files.push_back(e.path());
    }
  } else if (fs::is_regular_file(p)) {
    files.push_back(p);
  } else {
    throw CliError(kDataError, "no such file or directory " + source);
  }
}

std::string csv_text(const auto& write) {
  std::ostringstream ss;
  write(ss);
  return ss.str();
}

/// Mean of equal-length series per method; empty when lengths differ.
std::optional<std::vector<double>> mean_series(const std::vector<const std::vector<double>*>& runs) {
  if (runs.empty() || runs.front()->empty()) return std::nullopt;
  const std::size_t n = runs.front()->size();
  std::vector<double> mean(n, 0.0);
  for (const auto* s : runs) {
    if (s->size() != n) return std::nullopt;
    for (std::size_t i = 0; i < n; ++i) mean[i] += (*s)[i];
  }
  for (double& v : mean) v /= static_cast<double>(runs.size());
  return mean;
}

int cmd_compare(const CompareArgs& a, std::ostream& out, std::ostream& err) {
  std::vector<fs::path> files;
  for (const auto& source : a.records) collect_record_files(source, files);
  std::sort(files.begin(), files.end());
  files.erase(std::unique(files.begin(), files.end()), files.end());
  if (files.empty()) throw CliError(kDataError, "no record files found");

  std::vector<analysis::RunRecord> records;
  for (const auto& f : files) {
    std::ifstream in(f);
    try {
      for (auto& r : analysis::read_records(in)) records.push_back(std::move(r));
    } catch (const analysis::AnalysisError& e) {
      throw CliError(kDataError, f.string() + ": " + e.what());
    }
  }

  const analysis::Summary summary = analysis::summarize(records, a.baseline, a.alpha);
  fs::create_directories(a.out);
  write_atomic(a.out / "comparison.csv", csv_text([&](std::ostream& s) { analysis::write_comparison_csv(s, summary); }));
  write_atomic(a.out / "tally.csv", csv_text([&](std::ostream& s) { analysis::write_tally_csv(s, summary); }));

  const analysis::ResultTable table = summary.means();
  if (table.methods.size() >= 2 && table.scenarios.size() >= 2) {
    const auto ranks = analysis::friedman_ranks(table);
    write_atomic(a.out / "ranks.csv", csv_text([&](std::ostream& s) { analysis::write_ranks_csv(s, table, ranks); }));
  } else {
    err << "dfjss: ranks.csv skipped, average ranks need at least 2 methods and 2 scenarios\n";
  }

  std::vector<analysis::RunLog> logs;
  std::vector<RulePair> best;
  std::map<std::string, std::vector<const std::vector<double>*>> diversity, convergence;
  for (const auto& r : records) {
    logs.push_back({r.method, r.initial_fitness, r.diversity_series});
    try {
      for (auto& pair : parse_rule_pairs(r.best_genome)) best.push_back(std::move(pair));
    } catch (const RuleFileError& e) {
      throw CliError(kDataError, "record " + r.method + " run " + std::to_string(r.run) + ": " + e.what());
    }
    diversity[r.method].push_back(&r.diversity_series);
    convergence[r.method].push_back(&r.best_series);
  }
  write_atomic(a.out / "initial_fitness.csv", csv_text([&](std::ostream& s) {
                 analysis::write_distribution_csv(s, analysis::initial_fitness_distribution(logs));
               }));
  write_atomic(a.out / "terminals.csv", csv_text([&](std::ostream& s) {
                 analysis::write_terminal_csv(s, analysis::terminal_frequency_report(best));
               }));

  auto write_series = [&](const char* file, const auto& per_method) {
    std::vector<std::string> names;
    std::vector<std::vector<double>> columns;
    for (const auto& [method, runs] : per_method) {
      auto mean = mean_series(runs);
      if (!mean || (!columns.empty() && mean->size() != columns.front().size())) {
        err << "dfjss: " << file << " skipped, runs differ in generation count\n";
        return;
      }
      names.push_back(method);
      columns.push_back(std::move(*mean));
    }
    write_atomic(a.out / file, csv_text([&](std::ostream& s) { analysis::write_series_csv(s, names, columns); }));
  };
  write_series("diversity.csv", diversity);
  write_series("convergence.csv", convergence);

  out << records.size() << " records, " << summary.methods.size() << " methods, " << summary.scenarios.size()
      << " scenarios\n";
  for (std::size_t m = 0; m < summary.methods.size(); ++m) {
    const auto& t = summary.tallies[m];
    out << summary.methods[m] << " win " << t.win << " draw " << t.draw << " lose " << t.lose << "\n";
  }
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Evolve, simulate and explain routing/sequencing rules for dynamic flexible job shops.", "dfjss"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "dfjss 1.0");

  GenArgs gen;
  auto* g = app.add_subcommand("gen-instance", "Generate a simulation instance");
  g->add_option("--config", gen.config, "Config JSON (default: built-in defaults)")->check(CLI::ExistingFile);
  g->add_option("--seed", gen.seed, "Instance seed")->capture_default_str();
  g->add_option("--out", gen.out, "Output file, '-' for stdout")->required();
  g->add_option("--jobs", gen.jobs, "Total number of jobs");
  g->add_option("--warmup", gen.warmup, "Warm-up jobs excluded from objectives");
  g->add_option("--utilization", gen.utilization, "Target machine utilization in (0, 1)");

  SimArgs sim;
  auto* s = app.add_subcommand("simulate", "Simulate a rule pair on an instance and print objectives");
  s->add_option("--rules", sim.rules, "Rule pair file (default: WIQ routing, PT sequencing)");
  s->add_option("--instance", sim.instance, "Instance file from gen-instance")->required();
  s->add_option("--trace", sim.trace, "Write a queue/start/finish event CSV here");

  EvolveArgs ev;
  auto* e = app.add_subcommand("evolve", "Run genetic programming experiments");
  e->add_option("--manifest", ev.manifest, "Experiment manifest JSON; flags override it")->check(CLI::ExistingFile);
  e->add_option("--config", ev.config, "Config JSON (simulation and gp sections)");
  e->add_option("--scenario", ev.scenario, "Scenario JSON");
  e->add_option("--seed", ev.seed, "Master seed; run r uses a seed derived from (seed, r)");
  e->add_option("--runs", ev.runs, "Independent runs");
  e->add_option("--jobs", ev.jobs, "Runs executed in parallel");
  e->add_option("--threads", ev.threads, "Evaluation threads per run");
  e->add_option("--init", ev.init, "Initial population: random, llm or file")
      ->check(CLI::IsMember({"random", "llm", "file"}));
  e->add_option("--seeds", ev.seeds, "Rule pairs file for --init file");
  e->add_option("--references", ev.references, "Reference rule pairs shown to the provider (--init llm)");
  e->add_option("--n-requested", ev.n_requested, "Rule pairs requested from the provider");
  e->add_option("--provider", ev.provider, "Provider JSON (--init llm)");
  e->add_option("--out", ev.out, "Output directory");
  e->add_option("--method", ev.method, "Method label in run records");
  e->add_option("--generations", ev.generations, "Override gp.generations");
  e->add_option("--population", ev.population, "Override gp.population_size");

  InitArgs in;
  auto* i = app.add_subcommand("init-llm", "Ask the provider for initial rule pairs");
  i->add_option("--manifest", in.manifest, "Experiment manifest JSON; flags override it")->check(CLI::ExistingFile);
  i->add_option("--scenario", in.scenario, "Target scenario JSON");
  i->add_option("--references", in.references, "Reference rule pairs file (omit for zero-shot)");
  i->add_option("--label", in.label, "Provenance label for the references");
  i->add_option("--n-requested", in.n_requested, "Rule pairs requested");
  i->add_option("--provider", in.provider, "Provider JSON");
  i->add_option("--config", in.config, "Config JSON, for the depth limit");
  i->add_option("--out", in.out, "Seeds file to write (default: <manifest out>/init-llm.seeds)");
  i->add_option("--transfer-from", in.transfer_from, "Source scenario JSON; builds a transfer prompt");
  i->add_option("--insights", in.insights, "Insights from an earlier reply, for transfer prompts");
  i->add_option("--dump-prompt", in.dump_prompt, "Write the prompt text here, print its digest and exit");

  ExplainArgs ex;
  auto* x = app.add_subcommand("explain", "Write a plain-language report for a rule pair");
  x->add_option("--rules", ex.rules, "Rule pair file")->required();
  x->add_option("--scenario", ex.scenario, "Scenario JSON")->required();
  x->add_option("--provider", ex.provider, "Provider JSON");
  x->add_option("--out", ex.out, "Report file (markdown)");
  x->add_option("--config", ex.config, "Config JSON for --test-performance");
  x->add_flag("--test-performance", ex.test_performance, "Simulate the test seeds and include the result");
  x->add_option("--dump-prompt", ex.dump_prompt, "Write the prompt text here, print its digest and exit");

  CompareArgs cmp;
  auto* c = app.add_subcommand("compare", "Summarize run records into comparison tables");
  c->add_option("--records", cmp.records, "Record files, directories or file-name globs")->required();
  c->add_option("--baseline", cmp.baseline, "Method the others are tested against")->required();
  c->add_option("--out", cmp.out, "Output directory")->required();
  c->add_option("--alpha", cmp.alpha, "Significance level")->capture_default_str();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& pe) {
    const int code = app.exit(pe, out, err);
    return code == 0 ? kOk : kConfigError;
  }

  try {
    if (g->parsed()) return cmd_gen_instance(gen, out);
    if (s->parsed()) return cmd_simulate(sim, out);
    if (e->parsed()) return cmd_evolve(ev, out);
    if (i->parsed()) return cmd_init_llm(in, out);
    if (x->parsed()) return cmd_explain(ex, out, err);
    if (c->parsed()) return cmd_compare(cmp, out, err);
    return kConfigError;
  } catch (const CliError& ce) {
    err << "dfjss: " << ce.what() << "\n";
    return ce.code();
  } catch (const ConfigError& ce) {
    err << "dfjss: config: " << ce.what() << "\n";
    return kConfigError;
  } catch (const llm::ProviderError& pe) {
    err << "dfjss: provider " << llm::to_string(pe.kind()) << ": " << pe.what() << "\n";
    return kProviderError;
  } catch (const std::exception& ex2) {
    err << "dfjss: " << ex2.what() << "\n";
    return kDataError;
  }
}

}  // namespace dfjss::cli
