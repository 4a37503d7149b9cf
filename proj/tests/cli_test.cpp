#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdlib>
#include <set>

#include "cli_support.hpp"
#include "dfjss/analysis.hpp"
#include "golden.hpp"

using namespace dfjss;
using test::run_cli;
using test::TempDir;
namespace fs = std::filesystem;

namespace {

const std::string kTinyConfig = R"({
  "simulation": {"num_machines": 4, "total_jobs": 80, "warmup_jobs": 20},
  "gp": {"population_size": 10, "generations": 3}
})";

const std::string kTinyScenario = R"({
  "objectives": ["Fmean"],
  "utilization": 0.85,
  "training_seeds": {"first": 1, "count": 3},
  "test_seeds": [101, 102]
})";

const std::string kCanned =
    "Here are two heuristics.\n\n```\nrouting: WIQ + PT\nsequencing: PT - OWT\n```\n\n"
    "```\nrouting: min(NIQ, TRANT)\nsequencing: PT * W\n```\n\n"
    "```\nrouting: WIQ + 3\nsequencing: PT\n```\n\n## Insights\n\nShort jobs first keeps flow low.\n";

struct Workspace {
  TempDir dir{"cli"};
  std::string config, scenario, provider, mock;
  Workspace() {
    config = dir / "config.json";
    scenario = dir / "scenario.json";
    provider = dir / "provider.json";
    mock = dir / "mock";
    test::write_text(config, kTinyConfig);
    test::write_text(scenario, kTinyScenario);
    fs::create_directories(mock);
    test::write_mock_provider(provider, mock);
  }
  /// Stores `reply` under the digest of the prompt built by the given dump command.
  void canned(std::vector<std::string> dump_args, const std::string& reply) {
    dump_args.push_back("--dump-prompt");
    dump_args.push_back(dir / "prompt.txt");
    const auto r = run_cli(dump_args);
    REQUIRE(r.code == 0);
    test::write_text(fs::path(mock) / (test::digest_of(r) + ".txt"), reply);
  }
};

std::vector<std::string> plus(std::vector<std::string> a, const std::vector<std::string>& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

std::map<std::string, double> parse_objectives(const std::string& text) {
  std::map<std::string, double> m;
  std::istringstream in(text);
  std::string key;
  std::string value;
  while (in >> key >> value) m[key] = std::strtod(value.c_str(), nullptr);
  return m;
}

}  // namespace

TEST_CASE("simulate prints the golden objectives") {
  for (const std::string rule : {"fifo", "spt"}) {
    const auto r = run_cli({"simulate", "--rules", test::data_path("golden_" + rule + ".rule"), "--instance",
                            test::data_path("golden_3job.instance")});
    REQUIRE(r.code == 0);
    const auto got = parse_objectives(r.out);
    const auto want = test::golden_case(rule).objectives;
    REQUIRE(got.size() == 5);
    for (const auto& [k, v] : want) CHECK(got.at(k) == v);
    CHECK(run_cli({"simulate", "--rules", test::data_path("golden_" + rule + ".rule"), "--instance",
                   test::data_path("golden_3job.instance")})
              .out == r.out);
  }
}

TEST_CASE("simulate reports the location of a bad rule") {
  TempDir dir("bad-rule");
  test::write_text(dir / "bad.rule", "routing: WIQ\nsequencing: PT + 2\n");
  const auto r = run_cli({"simulate", "--rules", dir / "bad.rule", "--instance", test::data_path("golden_3job.instance")});
  CHECK(r.code == cli::kDataError);
  CHECK(r.err.find("bad.rule: line 2, column 18") != std::string::npos);

  const auto missing = run_cli({"simulate", "--instance", dir / "none.instance"});
  CHECK(missing.code == cli::kDataError);
}

TEST_CASE("gen-instance") {
  TempDir dir("gen");
  SUBCASE("deterministic, with overrides honored") {
    const auto a = run_cli({"gen-instance", "--seed", "1", "--jobs", "100", "--warmup", "10", "--out", dir / "a.txt"});
    const auto b = run_cli({"gen-instance", "--seed", "1", "--jobs", "100", "--warmup", "10", "--out", dir / "b.txt"});
    REQUIRE(a.code == 0);
    REQUIRE(b.code == 0);
    CHECK(test::slurp(dir / "a.txt") == test::slurp(dir / "b.txt"));
    std::ifstream in(dir / "a.txt");
    const Instance inst = read_instance(in);
    CHECK(inst.jobs.size() == 100);
    CHECK(inst.warmup_jobs == 10);
    run_cli({"gen-instance", "--seed", "2", "--jobs", "100", "--warmup", "10", "--out", dir / "c.txt"});
    CHECK(test::slurp(dir / "a.txt") != test::slurp(dir / "c.txt"));
  }
  SUBCASE("invalid utilization is a config error") {
    const auto r = run_cli({"gen-instance", "--utilization", "1.2", "--out", dir / "x.txt"});
    CHECK(r.code == cli::kConfigError);
    CHECK(r.err.find("utilization") != std::string::npos);
    CHECK_FALSE(fs::exists(dir / "x.txt"));
  }
  SUBCASE("unknown flags and keys fail fast") {
    CHECK(run_cli({"gen-instance", "--out", dir / "x.txt", "--bogus"}).code == cli::kConfigError);
    test::write_text(dir / "c.json", R"({"simulation": {"num_machine": 4}})");
    const auto r = run_cli({"gen-instance", "--config", dir / "c.json", "--out", dir / "x.txt"});
    CHECK(r.code == cli::kConfigError);
    CHECK(r.err.find("simulation.num_machine") != std::string::npos);
  }
  SUBCASE("help documents every flag") {
    const auto r = run_cli({"gen-instance", "--help"});
    CHECK(r.code == 0);
    for (const char* flag : {"--config", "--seed", "--out", "--jobs", "--warmup", "--utilization"})
      CHECK(r.out.find(flag) != std::string::npos);
  }
}

TEST_CASE("shipped config files load") {
  const fs::path root = fs::path(DFJSS_TEST_DATA).parent_path().parent_path() / "config";
  const cli::Config c = cli::load_config(root / "default.json");
  const cli::Config d;
  CHECK(cli::config_to_json(c) == cli::config_to_json(d));
  int scenarios = 0;
  for (const auto& e : fs::directory_iterator(root / "scenarios")) {
    const Scenario s = cli::load_scenario(e.path());
    CHECK(s.training_seeds.size() == 50);
    CHECK(s.test_seeds.size() == 30);
    CHECK(s.test_seeds.front() == 10001);
    ++scenarios;
  }
  CHECK(scenarios == 10);
}

TEST_CASE("evolve writes one record per run with distinct derived seeds") {
  Workspace w;
  const std::string out = w.dir / "out";
  const auto r = run_cli({"evolve", "--config", w.config, "--scenario", w.scenario, "--runs", "2", "--jobs", "2",
                          "--seed", "7", "--out", out});
  REQUIRE(r.code == 0);
  std::set<std::uint64_t> seeds;
  for (const char* name : {"run-001", "run-002"}) {
    std::ifstream in(fs::path(out) / (std::string(name) + ".record.jsonl"));
    const auto recs = analysis::read_records(in);
    REQUIRE(recs.size() == 1);
    CHECK(recs[0].master_seed == 7);
    CHECK(recs[0].method == "GP");
    CHECK(recs[0].best_series.size() == 3);
    CHECK(recs[0].initial_fitness.size() == 10);
    seeds.insert(recs[0].run_seed);
    CHECK(fs::exists(fs::path(out) / (std::string(name) + ".best.rule")));
    CHECK(fs::exists(fs::path(out) / (std::string(name) + ".gen0.csv")));
  }
  CHECK(seeds.size() == 2);
  for (const auto& e : fs::directory_iterator(out)) CHECK(e.path().string().find(".tmp") == std::string::npos);

  SUBCASE("a manifest gives the same records") {
    test::write_text(w.dir / "manifest.json", R"({"config": "config.json", "scenario": "scenario.json",
      "runs": 2, "master_seed": 7, "out": "out2"})");
    REQUIRE(run_cli({"evolve", "--manifest", w.dir / "manifest.json"}).code == 0);
    for (const char* name : {"run-001.record.jsonl", "run-002.record.jsonl"})
      CHECK(test::slurp(fs::path(out) / name) == test::slurp(w.dir.path() / "out2" / name));
  }
  SUBCASE("bad manifest values are config errors") {
    CHECK(run_cli({"evolve", "--config", w.config, "--scenario", w.scenario, "--runs", "0"}).code == cli::kConfigError);
    CHECK(run_cli({"evolve", "--config", w.config}).code == cli::kConfigError);
    CHECK(run_cli({"evolve", "--scenario", w.scenario, "--init", "guess"}).code == cli::kConfigError);
  }
}

TEST_CASE("evolve --init file puts the seeds first") {
  Workspace w;
  test::write_text(w.dir / "seeds.rule", "routing: WIQ\nsequencing: PT\n");
  const auto r = run_cli({"evolve", "--config", w.config, "--scenario", w.scenario, "--init", "file", "--seeds",
                          w.dir / "seeds.rule", "--out", w.dir / "out"});
  REQUIRE(r.code == 0);
  const std::string gen0 = test::slurp(w.dir.path() / "out" / "run-001.gen0.csv");
  CHECK(gen0.find("\n0,seeded,") != std::string::npos);
  CHECK(gen0.find(",\"WIQ\",\"PT\"\n") != std::string::npos);

  test::write_text(w.dir / "deep.rule",
                   "routing: WIQ\nsequencing: PT+(PT+(PT+(PT+(PT+(PT+(PT+(PT+(PT+PT))))))))\n");
  CHECK(run_cli({"evolve", "--config", w.config, "--scenario", w.scenario, "--init", "file", "--seeds",
                 w.dir / "deep.rule", "--out", w.dir / "out"})
            .code == cli::kDataError);
}

TEST_CASE("init-llm and evolve --init llm with the mock provider") {
  Workspace w;
  test::write_text(w.dir / "refs.rule", "routing: WIQ\nsequencing: PT\n");
  const std::vector<std::string> base{"init-llm", "--scenario", w.scenario, "--references", w.dir / "refs.rule",
                                      "--n-requested", "5"};
  w.canned(base, kCanned);

  SUBCASE("seeds file with accepted pairs and rejections") {
    auto args = plus(base, {"--provider", w.provider, "--out", w.dir / "init.seeds"});
    const auto r = run_cli(args);
    REQUIRE(r.code == 0);
    CHECK(r.out.find("accepted 2 rejected 1") != std::string::npos);
    const auto pairs = parse_rule_pairs(test::slurp(w.dir / "init.seeds"));
    REQUIRE(pairs.size() == 2);
    CHECK(format(pairs[0].routing) == "(WIQ + PT)");
    CHECK(test::slurp(w.dir / "init.insights.md").find("Short jobs first") != std::string::npos);
  }
  SUBCASE("n-requested changes the prompt") {
    auto a = base;
    a.back() = "6";
    a.push_back("--dump-prompt");
    a.push_back(w.dir / "p6.txt");
    auto b = base;
    b.push_back("--dump-prompt");
    b.push_back(w.dir / "p5.txt");
    CHECK(test::digest_of(run_cli(a)) != test::digest_of(run_cli(b)));
  }
  SUBCASE("gen 0 holds the canned genomes") {
    const auto r = run_cli({"evolve", "--config", w.config, "--scenario", w.scenario, "--init", "llm", "--references",
                            w.dir / "refs.rule", "--n-requested", "5", "--provider", w.provider, "--out",
                            w.dir / "out"});
    REQUIRE(r.code == 0);
    const std::string gen0 = test::slurp(w.dir.path() / "out" / "run-001.gen0.csv");
    CHECK(gen0.find("\n0,seeded,") != std::string::npos);
    CHECK(gen0.find(",\"(WIQ + PT)\",\"(PT - OWT)\"\n") != std::string::npos);
    CHECK(gen0.find(",\"min(NIQ, TRANT)\",\"(PT * W)\"\n") != std::string::npos);
    std::ifstream in(w.dir.path() / "out" / "run-001.record.jsonl");
    CHECK(analysis::read_records(in).at(0).method == "LLM-GP");
  }
  SUBCASE("missing canned reply is a provider error") {
    auto args = base;
    args.back() = "9";
    CHECK(run_cli(plus(args, {"--provider", w.provider, "--out", w.dir / "x.seeds"})).code == cli::kProviderError);
  }
}

TEST_CASE("live provider without a credential fails before any request") {
  Workspace w;
  ::unsetenv("DFJSS_TEST_ABSENT_KEY");
  test::write_text(w.dir / "live.json", R"({"kind": "openai", "endpoint": "http://127.0.0.1:9/v1/chat/completions",
    "credential_env": "DFJSS_TEST_ABSENT_KEY"})");
  const long before = llm::HttpTransport::attempts();
  const auto r = run_cli({"init-llm", "--scenario", w.scenario, "--provider", w.dir / "live.json", "--out",
                          w.dir / "x.seeds"});
  CHECK(r.code == cli::kProviderError);
  CHECK(r.err.find("DFJSS_TEST_ABSENT_KEY") != std::string::npos);
  CHECK(llm::HttpTransport::attempts() == before);
}

TEST_CASE("explain") {
  Workspace w;
  test::write_text(w.dir / "best.rule", "routing: WIQ + WIQ\nsequencing: min(PT, OWT)\n");
  const std::vector<std::string> base{"explain", "--rules", w.dir / "best.rule", "--scenario", w.scenario};
  SUBCASE("narrative and appendix") {
    w.canned(base, "## Decision logic\n\nPrefers idle machines.\n");
    auto args = plus(base, {"--provider", w.provider, "--out", w.dir / "report.md"});
    REQUIRE(run_cli(args).code == 0);
    const std::string report = test::slurp(w.dir / "report.md");
    CHECK(report.find("Prefers idle machines.") != std::string::npos);
    const auto [routing, sequencing] = test::report_histograms(report);
    CHECK(routing == terminal_histogram(parse("WIQ + WIQ")));
    CHECK(sequencing == terminal_histogram(parse("min(PT, OWT)")));
  }
  SUBCASE("provider failure leaves an appendix-only report") {
    auto args = plus(base, {"--provider", w.provider, "--out", w.dir / "report.md"});
    CHECK(run_cli(args).code == cli::kProviderError);
    const std::string report = test::slurp(w.dir / "report.md");
    CHECK(report.find(llm::kNarrativeUnavailable) != std::string::npos);
    CHECK(report.find("| WIQ | 2 | 0 |") != std::string::npos);
  }
}

namespace {

void write_record(const fs::path& dir, const std::string& method, const std::string& scenario, int run, double fit) {
  analysis::RunRecord r;
  r.method = method;
  r.scenario = scenario;
  r.run = run;
  r.test_fitness = fit;
  r.train_fitness = fit;
  r.best_genome = "routing: WIQ\nsequencing: PT\n";
  r.initial_fitness = {fit + 1, fit + 2};
  r.best_series = {fit + 1, fit};
  r.diversity_series = {1.0, 0.5};
  test::write_text(dir / (method + "-" + std::to_string(run) + "-" + std::to_string(scenario.size()) + ".record.jsonl"),
                   analysis::to_json_line(r) + "\n");
}

}  // namespace

TEST_CASE("compare") {
  TempDir dir("compare");
  const fs::path recs = dir.path() / "records";
  for (int run = 1; run <= 4; ++run) {
    write_record(recs, "A", "s1", run, 10 + run);
    write_record(recs, "A", "s22", run, 20 + run);
  }
  SUBCASE("self-comparison marks every cell =") {
    const auto r = run_cli({"compare", "--records", recs.string(), "--baseline", "A", "--out", dir / "out"});
    REQUIRE(r.code == 0);
    const std::string csv = test::slurp(dir / "out/comparison.csv");
    CHECK(csv == "scenario,A\ns1,12.5000(1.2910)=\ns22,22.5000(1.2910)=\n");
    for (const char* f : {"tally.csv", "initial_fitness.csv", "terminals.csv", "diversity.csv", "convergence.csv"})
      CHECK(fs::exists(dir.path() / "out" / f));
  }
  SUBCASE("glob selects files") {
    const auto r = run_cli({"compare", "--records", (recs / "A-*-2.record.jsonl").string(), "--baseline", "A", "--out",
                            dir / "out"});
    REQUIRE(r.code == 0);
    CHECK(test::slurp(dir / "out/comparison.csv") == "scenario,A\ns1,12.5000(1.2910)=\n");
  }
  SUBCASE("missing cell is a data error naming the cell") {
    for (int run = 1; run <= 4; ++run) write_record(recs, "B", "s1", run, 5 + run);
    const auto r = run_cli({"compare", "--records", recs.string(), "--baseline", "A", "--out", dir / "out"});
    CHECK(r.code == cli::kDataError);
    CHECK(r.err.find("B") != std::string::npos);
    CHECK(r.err.find("s22") != std::string::npos);
  }
  SUBCASE("two methods give one row per scenario and ranks") {
    for (int run = 1; run <= 4; ++run) {
      write_record(recs, "B", "s1", run, 5 + run);
      write_record(recs, "B", "s22", run, 50 + run);
    }
    REQUIRE(run_cli({"compare", "--records", recs.string(), "--baseline", "A", "--out", dir / "out"}).code == 0);
    CHECK(test::slurp(dir / "out/comparison.csv") ==
          "scenario,A,B\ns1,12.5000(1.2910)=,7.5000(1.2910)↑\ns22,22.5000(1.2910)=,52.5000(1.2910)↓\n");
    CHECK(test::slurp(dir / "out/ranks.csv").find("B,1.5") != std::string::npos);
  }
  SUBCASE("no records") {
    CHECK(run_cli({"compare", "--records", (dir.path() / "nothing").string(), "--baseline", "A", "--out",
                   dir / "out"})
              .code == cli::kDataError);
  }
}
