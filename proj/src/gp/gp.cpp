#include "dfjss/gp.hpp"

#include <algorithm>
#include <chrono>
#include <limits>
#include <cmath>
#include <numeric>
#include <set>
#include <thread>

#include "dfjss/seeding.hpp"
#include "dfjss/simulator.hpp"

namespace dfjss {

std::string_view to_string(Origin o) {
  switch (o) {
    case Origin::Random: return "random";
    case Origin::Seeded: return "seeded";
    case Origin::Crossover: return "crossover";
    case Origin::Mutation: return "mutation";
    case Origin::Reproduction: return "reproduction";
  }
  return "?";
}

void validate(const GPParams& p) {
  auto fail = [](const std::string& msg) { throw ConfigError(msg); };
  if (p.population_size < 1) fail("population_size must be at least 1");
  if (p.generations < 0) fail("generations must be non-negative");
  if (p.init_min_depth < 1 || p.init_min_depth > p.init_max_depth) fail("initial depth range must satisfy 1 <= min <= max");
  if (p.max_depth < p.init_max_depth || p.max_depth > kMaxSupportedDepth) {
    fail("max_depth must lie in [init_max_depth, 8]");
  }
  for (double r : {p.crossover_rate, p.mutation_rate, p.reproduction_rate}) {
    if (!(r >= 0 && r <= 1)) fail("operator rates must lie in [0, 1]");
  }
  if (std::abs(p.crossover_rate + p.mutation_rate + p.reproduction_rate - 1.0) > 1e-9) {
    fail("crossover, mutation and reproduction rates must sum to 1");
  }
  if (p.tournament_size < 1) fail("tournament_size must be at least 1");
  if (!(p.terminal_rate >= 0 && p.terminal_rate <= 1)) fail("terminal_rate must lie in [0, 1]");
  if (p.mutation_max_depth < 1 || p.mutation_max_depth > kMaxSupportedDepth) {
    fail("mutation_max_depth must lie in [1, 8]");
  }
  if (p.elites < 0 || p.elites > p.population_size) fail("elites must lie in [0, population_size]");
}

// ---------------------------------------------------------------------------
// Initialization

Population init_random(const GPParams& params, std::mt19937_64& rng, int count) {
  Population pop;
  if (count <= 0) return pop;
  pop.reserve(static_cast<std::size_t>(count));
  const int levels = params.init_max_depth - params.init_min_depth + 1;
  const int per_level = count / levels;
  const int remainder = count % levels;
  for (int level = 0; level < levels; ++level) {
    const int depth = params.init_min_depth + level;
    const int n = per_level + (level < remainder ? 1 : 0);
    for (int i = 0; i < n; ++i) {
      const bool full = i < (n + 1) / 2;
      Expr routing = full ? random_tree(rng, TreeMode::Full, depth, depth, params.terminal_rate)
                          : random_tree(rng, TreeMode::Grow, std::min(params.init_min_depth, depth), depth,
                                        params.terminal_rate);
      Expr sequencing = full ? random_tree(rng, TreeMode::Full, depth, depth, params.terminal_rate)
                             : random_tree(rng, TreeMode::Grow, std::min(params.init_min_depth, depth), depth,
                                           params.terminal_rate);
      pop.push_back({RulePair{std::move(routing), std::move(sequencing)}, std::nullopt, Origin::Random});
    }
  }
  return pop;
}

Population init_random(const GPParams& params, std::mt19937_64& rng) {
  return init_random(params, rng, params.population_size);
}

std::vector<SeedIssue> check_seeds(std::span<const RulePair> seeds, const GPParams& params) {
  std::vector<SeedIssue> issues;
  for (std::size_t i = 0; i < seeds.size(); ++i) {
    if (seeds[i].routing.depth() > params.max_depth || seeds[i].sequencing.depth() > params.max_depth) {
      issues.push_back({i, "max depth exceeded"});
    }
  }
  return issues;
}

Population init_seeded(std::span<const RulePair> seeds, const GPParams& params, std::mt19937_64& rng) {
  if (auto issues = check_seeds(seeds, params); !issues.empty()) throw SeedError(issues.front());
  const std::size_t take = std::min(seeds.size(), static_cast<std::size_t>(params.population_size));
  Population pop;
  pop.reserve(static_cast<std::size_t>(params.population_size));
  for (std::size_t i = 0; i < take; ++i) pop.push_back({seeds[i], std::nullopt, Origin::Seeded});
  Population rest = init_random(params, rng, params.population_size - static_cast<int>(take));
  for (auto& ind : rest) pop.push_back(std::move(ind));
  return pop;
}

// ---------------------------------------------------------------------------
// Evaluation

FitnessEvaluator::FitnessEvaluator(SimConfig config, Scenario scenario)
    : config_(std::move(config)), scenario_(std::move(scenario)) {
  config_.utilization = scenario_.utilization;
  validate(config_);
  validate(scenario_);
}

FitnessEvaluator::Entry& FitnessEvaluator::entry(std::uint64_t seed) const {
  std::lock_guard lock(mutex_);
  auto& slot = cache_[seed];
  if (!slot) {
    auto e = std::make_unique<Entry>();
    e->instance = generate_instance(config_, seed);
    if (scenario_.needs_reference()) e->reference = simulate(reference_rules(), e->instance).objectives;
    slot = std::move(e);
  }
  return *slot;
}

const Instance& FitnessEvaluator::instance(std::uint64_t seed) const { return entry(seed).instance; }

const ObjectiveVector& FitnessEvaluator::reference(std::uint64_t seed) const {
  Entry& e = entry(seed);
  std::lock_guard lock(mutex_);
  if (!e.reference) e.reference = simulate(reference_rules(), e.instance).objectives;
  return *e.reference;
}

ObjectiveVector FitnessEvaluator::objectives(const RulePair& rules, std::uint64_t seed) const {
  const Instance& inst = instance(seed);
  ++simulations_;
  return simulate(rules, inst).objectives;
}

double FitnessEvaluator::fitness(const RulePair& rules, std::uint64_t seed) const {
  const ObjectiveVector obj = objectives(rules, seed);
  if (!scenario_.needs_reference()) return weighted_fitness(obj, scenario_);
  return weighted_fitness(obj, scenario_, reference(seed));
}

std::uint64_t training_seed_for_generation(const Scenario& scenario, int generation) {
  if (scenario.training_seeds.empty()) throw std::invalid_argument("scenario has no training seeds");
  return scenario.training_seeds[static_cast<std::size_t>(generation) % scenario.training_seeds.size()];
}

void evaluate_population(Population& pop, const FitnessEvaluator& evaluator, std::uint64_t instance_seed,
                         int threads) {
  // Warm the cache before fanning out.
  (void)evaluator.instance(instance_seed);
  if (threads <= 1 || pop.size() < 2) {
    for (auto& ind : pop) ind.fitness = evaluator.fitness(ind.genome, instance_seed);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::mutex error_mutex;
  std::exception_ptr error;
  auto worker = [&] {
    for (std::size_t i = next++; i < pop.size(); i = next++) {
      try {
        pop[i].fitness = evaluator.fitness(pop[i].genome, instance_seed);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
      }
    }
  };
  {
    std::vector<std::jthread> workers;
    const auto n = std::min<std::size_t>(static_cast<std::size_t>(threads), pop.size());
    for (std::size_t t = 0; t < n; ++t) workers.emplace_back(worker);
  }
  if (error) std::rethrow_exception(error);
}

double test_performance(const RulePair& rules, const FitnessEvaluator& evaluator) {
  const auto& seeds = evaluator.scenario().test_seeds;
  if (seeds.empty()) throw std::invalid_argument("scenario has no test seeds");
  double total = 0;
  for (auto s : seeds) total += evaluator.fitness(rules, s);
  return total / static_cast<double>(seeds.size());
}

double phenotypic_diversity(const Population& pop) {
  if (pop.empty()) throw std::invalid_argument("diversity of an empty population");
  std::set<double> distinct;
  for (const auto& ind : pop) {
    if (!ind.fitness) throw std::invalid_argument("diversity needs every individual evaluated");
    distinct.insert(*ind.fitness);
  }
  return static_cast<double>(distinct.size()) / static_cast<double>(pop.size());
}

// ---------------------------------------------------------------------------
// Variation

std::size_t tournament_select(const Population& pop, std::mt19937_64& rng, int tournament_size) {
  if (pop.empty()) throw std::invalid_argument("tournament on an empty population");
  std::uniform_int_distribution<std::size_t> pick(0, pop.size() - 1);
  std::size_t winner = pick(rng);
  for (int i = 1; i < tournament_size; ++i) {
    const std::size_t c = pick(rng);
    const double fc = pop[c].fitness.value_or(std::numeric_limits<double>::infinity());
    const double fw = pop[winner].fitness.value_or(std::numeric_limits<double>::infinity());
    if (fc < fw || (fc == fw && c < winner)) winner = c;
  }
  return winner;
}

int pick_node(const Expr& tree, std::mt19937_64& rng, double terminal_rate) {
  std::vector<int> functions;
  std::vector<int> leaves;
  // Preorder walk collecting indices by node class.
  std::vector<std::pair<const Expr*, int>> stack{{&tree, 0}};
  while (!stack.empty()) {
    auto [e, idx] = stack.back();
    stack.pop_back();
    if (e->is_leaf()) {
      leaves.push_back(idx);
    } else {
      functions.push_back(idx);
      stack.push_back({&e->rhs(), idx + 1 + e->lhs().size()});
      stack.push_back({&e->lhs(), idx + 1});
    }
  }
  bool want_leaf = functions.empty();
  if (!want_leaf) {
    std::bernoulli_distribution coin(terminal_rate);
    want_leaf = coin(rng);
  }
  const auto& pool = want_leaf ? leaves : functions;
  std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
  return pool[pick(rng)];
}

std::pair<Expr, Expr> swap_subtrees(const Expr& a, int index_a, const Expr& b, int index_b) {
  const Expr sub_a = a.subtree(index_a);
  const Expr sub_b = b.subtree(index_b);
  return {a.replace(index_a, sub_b), b.replace(index_b, sub_a)};
}

namespace {

Slot pick_slot(std::mt19937_64& rng) {
  std::bernoulli_distribution coin(0.5);
  return coin(rng) ? Slot::Sequencing : Slot::Routing;
}

Expr& slot_of(RulePair& r, Slot s) { return s == Slot::Routing ? r.routing : r.sequencing; }
const Expr& slot_of(const RulePair& r, Slot s) { return s == Slot::Routing ? r.routing : r.sequencing; }

}  // namespace

std::pair<Individual, Individual> crossover(const Individual& a, const Individual& b, std::mt19937_64& rng,
                                            const GPParams& params) {
  const Slot slot = pick_slot(rng);
  const Expr& ta = slot_of(a.genome, slot);
  const Expr& tb = slot_of(b.genome, slot);
  const int ia = pick_node(ta, rng, params.terminal_rate);
  const int ib = pick_node(tb, rng, params.terminal_rate);
  auto [ca, cb] = swap_subtrees(ta, ia, tb, ib);

  Individual child_a{a.genome, std::nullopt, Origin::Crossover};
  Individual child_b{b.genome, std::nullopt, Origin::Crossover};
  if (ca.depth() <= params.max_depth) slot_of(child_a.genome, slot) = std::move(ca);
  if (cb.depth() <= params.max_depth) slot_of(child_b.genome, slot) = std::move(cb);
  return {std::move(child_a), std::move(child_b)};
}

Individual mutate(const Individual& parent, std::mt19937_64& rng, const GPParams& params) {
  const Slot slot = pick_slot(rng);
  const Expr& tree = slot_of(parent.genome, slot);
  std::uniform_int_distribution<int> pick(0, tree.size() - 1);
  const int index = pick(rng);
  Expr replacement = random_tree(rng, TreeMode::Grow, 1, params.mutation_max_depth, params.terminal_rate);
  Expr mutated = tree.replace(index, replacement);

  Individual child{parent.genome, std::nullopt, Origin::Mutation};
  if (mutated.depth() <= params.max_depth) slot_of(child.genome, slot) = std::move(mutated);
  return child;
}

// ---------------------------------------------------------------------------
// Evolution

namespace {

constexpr std::uint64_t kInitStream = 0xFFFFFFFFULL;

std::size_t best_index(const Population& pop) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < pop.size(); ++i) {
    if (*pop[i].fitness < *pop[best].fitness) best = i;
  }
  return best;
}

Population breed(const Population& pop, const GPParams& params, std::mt19937_64& rng, GenerationStats& stats) {
  Population next;
  next.reserve(pop.size());

  std::vector<std::size_t> order(pop.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t x, std::size_t y) { return *pop[x].fitness < *pop[y].fitness; });
  for (int e = 0; e < params.elites && static_cast<std::size_t>(e) < pop.size(); ++e) {
    Individual elite = pop[order[static_cast<std::size_t>(e)]];
    elite.fitness.reset();
    elite.origin = Origin::Reproduction;
    next.push_back(std::move(elite));
  }

  double selected_sum = 0;
  int selected = 0;
  auto select = [&]() -> const Individual& {
    const Individual& w = pop[tournament_select(pop, rng, params.tournament_size)];
    selected_sum += *w.fitness;
    ++selected;
    return w;
  };

  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const std::size_t target = pop.size();
  while (next.size() < target) {
    const double u = unit(rng);
    if (u < params.crossover_rate) {
      const Individual& pa = select();
      const Individual& pb = select();
      auto [c1, c2] = crossover(pa, pb, rng, params);
      next.push_back(std::move(c1));
      if (next.size() < target) next.push_back(std::move(c2));
      ++stats.crossovers;
    } else if (u < params.crossover_rate + params.mutation_rate) {
      next.push_back(mutate(select(), rng, params));
      ++stats.mutations;
    } else {
      Individual copy = select();
      copy.fitness.reset();
      copy.origin = Origin::Reproduction;
      next.push_back(std::move(copy));
      ++stats.reproductions;
    }
  }
  stats.mean_selected = selected ? selected_sum / selected : 0.0;
  return next;
}

GenerationStats describe_generation(const Population& pop, int generation, std::uint64_t instance_seed) {
  GenerationStats s;
  s.generation = generation;
  s.instance_seed = instance_seed;
  const std::size_t b = best_index(pop);
  s.best = *pop[b].fitness;
  double sum = 0;
  for (const auto& ind : pop) {
    sum += *ind.fitness;
    s.max_depth_seen = std::max({s.max_depth_seen, ind.genome.routing.depth(), ind.genome.sequencing.depth()});
  }
  s.mean = sum / static_cast<double>(pop.size());
  s.diversity = phenotypic_diversity(pop);
  s.best_genome = format_rule_pair(pop[b].genome);
  return s;
}

}  // namespace

EvolutionResult evolve(const GPParams& params, const FitnessEvaluator& evaluator, std::span<const RulePair> seeds,
                       std::uint64_t seed, const EvolveOptions& options) {
  validate(params);
  std::mt19937_64 init_rng(derive_seed(seed, kInitStream));
  Population pop = seeds.empty() ? init_random(params, init_rng) : init_seeded(seeds, params, init_rng);

  EvolutionResult result{pop.front(), {}};
  result.log.initial_population = pop;

  const Scenario& scenario = evaluator.scenario();
  const int generations = std::max(params.generations, 1);
  for (int g = 0; g < generations; ++g) {
    const auto started = std::chrono::steady_clock::now();
    const std::uint64_t instance_seed = training_seed_for_generation(scenario, g);
    evaluate_population(pop, evaluator, instance_seed, options.threads);

    if (g == 0) {
      for (std::size_t i = 0; i < pop.size(); ++i) {
        result.log.initial_fitness.push_back(*pop[i].fitness);
        result.log.initial_population[i].fitness = pop[i].fitness;
      }
    }
    const std::size_t b = best_index(pop);
    if (g == 0 || *pop[b].fitness < *result.best.fitness) result.best = pop[b];

    if (params.generations == 0) break;

    GenerationStats stats = describe_generation(pop, g, instance_seed);
    std::mt19937_64 rng(derive_seed(seed, static_cast<std::uint64_t>(g)));
    Population next = breed(pop, params, rng, stats);
    stats.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    if (options.on_generation) options.on_generation(stats);
    result.log.generations.push_back(std::move(stats));
    pop = std::move(next);
  }
  return result;
}

}  // namespace dfjss
