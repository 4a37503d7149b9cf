#include <fstream>
#include <set>
#include <sstream>
#include <unistd.h>

#include "dfjss/cli.hpp"
#include "json.hpp"

namespace dfjss::cli {

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

namespace {

[[noreturn]] void config_fail(const fs::path& file, const std::string& msg) {
  throw CliError(kConfigError, file.string() + ": " + msg);
}

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) config_fail(path, "cannot open");
  json j = json::parse(in, nullptr, false);
  if (j.is_discarded()) config_fail(path, "not valid JSON");
  if (!j.is_object()) config_fail(path, "expected a JSON object");
  return j;
}

// Reads known keys from an object and rejects the rest.
class Fields {
 public:
  Fields(const json& j, fs::path file, std::string where) : j_(j), file_(std::move(file)), where_(std::move(where)) {}

  template <class T>
  void get(const char* key, T& into) {
    seen_.insert(key);
    if (!j_.contains(key)) return;
    try {
      into = j_.at(key).get<T>();
    } catch (const json::exception&) {
      config_fail(file_, where_ + key + " has the wrong type");
    }
  }
  bool has(const char* key) {
    seen_.insert(key);
    return j_.contains(key);
  }
  const json& at(const char* key) const { return j_.at(key); }
  void finish() const {
    for (const auto& [k, v] : j_.items())
      if (!seen_.contains(k)) config_fail(file_, "unknown key " + where_ + k);
  }

 private:
  const json& j_;
  fs::path file_;
  std::string where_;
  std::set<std::string> seen_;
};

fs::path resolve(const fs::path& base_file, const fs::path& p) {
  if (p.empty() || p.is_absolute()) return p;
  return base_file.parent_path() / p;
}

std::vector<std::uint64_t> seed_list(const json& j, const fs::path& file, const std::string& key) {
  try {
    if (j.is_array()) return j.get<std::vector<std::uint64_t>>();
    if (j.is_object()) {
      const auto first = j.at("first").get<std::uint64_t>();
      const auto count = j.at("count").get<std::uint64_t>();
      for (const auto& [k, v] : j.items())
        if (k != "first" && k != "count") config_fail(file, "unknown key " + key + "." + k);
      std::vector<std::uint64_t> out;
      for (std::uint64_t i = 0; i < count; ++i) out.push_back(first + i);
      return out;
    }
  } catch (const json::exception&) {
  }
  config_fail(file, key + " must be a list of seeds or {\"first\": n, \"count\": k}");
}

}  // namespace

Config load_config(const fs::path& path) {
  const json j = read_json(path);
  Config c;
  Fields top(j, path, "");
  if (top.has("simulation")) {
    const json& s = top.at("simulation");
    if (!s.is_object()) config_fail(path, "simulation must be an object");
    Fields f(s, path, "simulation.");
    f.get("num_machines", c.sim.num_machines);
    f.get("total_jobs", c.sim.total_jobs);
    f.get("warmup_jobs", c.sim.warmup_jobs);
    f.get("min_rate", c.sim.min_rate);
    f.get("max_rate", c.sim.max_rate);
    f.get("min_workload", c.sim.min_workload);
    f.get("max_workload", c.sim.max_workload);
    f.get("min_ops", c.sim.min_ops);
    f.get("max_ops", c.sim.max_ops);
    f.get("min_distance", c.sim.min_distance);
    f.get("max_distance", c.sim.max_distance);
    f.get("transport_speed", c.sim.transport_speed);
    f.get("due_date_factor", c.sim.due_date_factor);
    f.get("utilization", c.sim.utilization);
    if (f.has("weight_mix")) {
      c.sim.weight_mix.clear();
      try {
        for (const auto& [w, share] : f.at("weight_mix").get<std::map<std::string, double>>())
          c.sim.weight_mix.push_back({std::stoi(w), share});
      } catch (const std::exception&) {
        config_fail(path, "simulation.weight_mix must map weights to shares, e.g. {\"1\": 0.2}");
      }
    }
    f.finish();
  }
  if (top.has("gp")) {
    const json& g = top.at("gp");
    if (!g.is_object()) config_fail(path, "gp must be an object");
    Fields f(g, path, "gp.");
    f.get("population_size", c.gp.population_size);
    f.get("generations", c.gp.generations);
    f.get("init_min_depth", c.gp.init_min_depth);
    f.get("init_max_depth", c.gp.init_max_depth);
    f.get("max_depth", c.gp.max_depth);
    f.get("crossover_rate", c.gp.crossover_rate);
    f.get("mutation_rate", c.gp.mutation_rate);
    f.get("reproduction_rate", c.gp.reproduction_rate);
    f.get("tournament_size", c.gp.tournament_size);
    f.get("terminal_rate", c.gp.terminal_rate);
    f.get("mutation_max_depth", c.gp.mutation_max_depth);
    f.get("elites", c.gp.elites);
    f.finish();
  }
  top.finish();
  try {
    validate(c.sim);
    validate(c.gp);
  } catch (const ConfigError& e) {
    config_fail(path, e.what());
  }
  return c;
}

std::string config_to_json(const Config& c) {
  ordered_json sim;
  sim["num_machines"] = c.sim.num_machines;
  sim["total_jobs"] = c.sim.total_jobs;
  sim["warmup_jobs"] = c.sim.warmup_jobs;
  sim["min_rate"] = c.sim.min_rate;
  sim["max_rate"] = c.sim.max_rate;
  sim["min_workload"] = c.sim.min_workload;
  sim["max_workload"] = c.sim.max_workload;
  sim["min_ops"] = c.sim.min_ops;
  sim["max_ops"] = c.sim.max_ops;
  sim["min_distance"] = c.sim.min_distance;
  sim["max_distance"] = c.sim.max_distance;
  sim["transport_speed"] = c.sim.transport_speed;
  ordered_json mix = ordered_json::object();
  for (const auto& w : c.sim.weight_mix) mix[std::to_string(w.weight)] = w.share;
  sim["weight_mix"] = mix;
  sim["due_date_factor"] = c.sim.due_date_factor;
  sim["utilization"] = c.sim.utilization;
  ordered_json gp;
  gp["population_size"] = c.gp.population_size;
  gp["generations"] = c.gp.generations;
  gp["init_min_depth"] = c.gp.init_min_depth;
  gp["init_max_depth"] = c.gp.init_max_depth;
  gp["max_depth"] = c.gp.max_depth;
  gp["crossover_rate"] = c.gp.crossover_rate;
  gp["mutation_rate"] = c.gp.mutation_rate;
  gp["reproduction_rate"] = c.gp.reproduction_rate;
  gp["tournament_size"] = c.gp.tournament_size;
  gp["terminal_rate"] = c.gp.terminal_rate;
  gp["mutation_max_depth"] = c.gp.mutation_max_depth;
  gp["elites"] = c.gp.elites;
  ordered_json top;
  top["simulation"] = sim;
  top["gp"] = gp;
  return top.dump(2) + "\n";
}

Scenario load_scenario(const fs::path& path) {
  const json j = read_json(path);
  Scenario s;
  Fields f(j, path, "");
  f.get("name", s.name);
  std::vector<std::string> objectives;
  f.get("objectives", objectives);
  for (const auto& name : objectives) {
    auto o = objective_from_string(name);
    if (!o) config_fail(path, "unknown objective " + name + " (expected Tmax, Tmean, Fmean, WTmean or WFmean)");
    s.objectives.push_back(*o);
  }
  f.get("lambdas", s.lambdas);
  if (s.lambdas.empty() && s.objectives.size() == 1) s.lambdas = {1.0};
  f.get("utilization", s.utilization);
  f.get("normalize", s.normalize);
  if (f.has("training_seeds")) s.training_seeds = seed_list(f.at("training_seeds"), path, "training_seeds");
  if (f.has("test_seeds")) s.test_seeds = seed_list(f.at("test_seeds"), path, "test_seeds");
  f.finish();
  if (s.name.empty() && !s.objectives.empty()) s.name = default_scenario_name(s);
  try {
    validate(s);
  } catch (const std::invalid_argument& e) {
    config_fail(path, e.what());
  }
  if (!(s.utilization > 0 && s.utilization < 1)) config_fail(path, "utilization must lie in (0, 1)");
  if (s.training_seeds.empty()) config_fail(path, "training_seeds is empty");
  if (s.test_seeds.empty()) config_fail(path, "test_seeds is empty");
  return s;
}

llm::ProviderConfig load_provider(const fs::path& path) {
  const json j = read_json(path);
  llm::ProviderConfig p;
  Fields f(j, path, "");
  f.get("kind", p.kind);
  f.get("endpoint", p.endpoint);
  f.get("model", p.model);
  f.get("credential_env", p.credential_env);
  f.get("temperature", p.temperature);
  f.get("max_tokens", p.max_tokens);
  f.get("timeout_seconds", p.timeout_seconds);
  f.get("retry_budget", p.retry_budget);
  f.get("retry_backoff_seconds", p.retry_backoff_seconds);
  f.get("mock_dir", p.mock_dir);
  f.get("audit_log", p.audit_log);
  f.finish();
  p.mock_dir = resolve(path, p.mock_dir).string();
  p.audit_log = resolve(path, p.audit_log).string();
  try {
    llm::validate(p);
  } catch (const std::invalid_argument& e) {
    config_fail(path, e.what());
  }
  return p;
}

Manifest load_manifest(const fs::path& path) {
  const json j = read_json(path);
  Manifest m;
  Fields f(j, path, "");
  std::string config, scenario, seeds, refs, provider, out;
  f.get("config", config);
  f.get("scenario", scenario);
  f.get("init", m.init);
  f.get("seeds_file", seeds);
  f.get("references", refs);
  f.get("references_label", m.references_label);
  f.get("n_requested", m.n_requested);
  f.get("provider", provider);
  f.get("runs", m.runs);
  f.get("master_seed", m.master_seed);
  f.get("out", out);
  f.get("method", m.method);
  f.get("jobs", m.jobs);
  f.get("threads", m.threads);
  f.finish();
  m.config = resolve(path, config);
  m.scenario = resolve(path, scenario);
  m.seeds_file = resolve(path, seeds);
  m.references = resolve(path, refs);
  m.provider = resolve(path, provider);
  if (!out.empty()) m.out = resolve(path, out);
  return m;
}

void write_atomic(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  const fs::path tmp = path.string() + ".tmp-" + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw CliError(kDataError, "cannot write " + tmp.string());
    out << content;
    out.flush();
    if (!out) {
      std::error_code ec;
      fs::remove(tmp, ec);
      throw CliError(kDataError, "failed writing " + tmp.string());
    }
  }
  fs::rename(tmp, path);
}

}  // namespace dfjss::cli
