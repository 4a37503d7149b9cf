#pragma once

// Multi-tree genetic programming over routing/sequencing rule pairs.

#include <atomic>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "dfjss/instance.hpp"
#include "dfjss/objectives.hpp"
#include "dfjss/rule_pair.hpp"

namespace dfjss {

enum class Origin { Random, Seeded, Crossover, Mutation, Reproduction };

std::string_view to_string(Origin o);

struct Individual {
  RulePair genome;
  std::optional<double> fitness;
  Origin origin = Origin::Random;
};

using Population = std::vector<Individual>;

struct GPParams {
  int population_size = 100;
  int generations = 50;
  int init_min_depth = 2;
  int init_max_depth = 6;
  int max_depth = 8;
  double crossover_rate = 0.80;
  double mutation_rate = 0.15;
  double reproduction_rate = 0.05;
  int tournament_size = 4;
  double terminal_rate = 0.10;
  int mutation_max_depth = 4;  // grow depth of the replacement subtree
  int elites = 1;
};

/// Throws ConfigError on the first violated constraint.
void validate(const GPParams& params);

// ---------------------------------------------------------------------------
// Initialization

/// Ramped half-and-half: `count` individuals spread evenly over depth levels
/// init_min_depth..init_max_depth (earlier levels take the remainder), half
/// full and half grow per level. Routing and sequencing trees are drawn
/// independently.
Population init_random(const GPParams& params, std::mt19937_64& rng, int count);
Population init_random(const GPParams& params, std::mt19937_64& rng);

struct SeedIssue {
  std::size_t index;
  std::string cause;
};

class SeedError : public std::invalid_argument {
 public:
  SeedError(SeedIssue issue)
      : std::invalid_argument("seed " + std::to_string(issue.index) + ": " + issue.cause), issue_(std::move(issue)) {}
  const SeedIssue& issue() const noexcept { return issue_; }

 private:
  SeedIssue issue_;
};

/// All seeds that violate the depth cap, with cause "max depth exceeded".
std::vector<SeedIssue> check_seeds(std::span<const RulePair> seeds, const GPParams& params);

/// Seeds first, verbatim and in order (truncated to the population size),
/// the remainder from init_random. Throws SeedError for the first bad seed.
Population init_seeded(std::span<const RulePair> seeds, const GPParams& params, std::mt19937_64& rng);

// ---------------------------------------------------------------------------
// Evaluation

/// Simulates rule pairs on scenario instances. Instances and reference-rule
/// objectives are generated once per seed and cached; safe to share across
/// threads.
class FitnessEvaluator {
 public:
  FitnessEvaluator(SimConfig config, Scenario scenario);

  const SimConfig& config() const noexcept { return config_; }
  const Scenario& scenario() const noexcept { return scenario_; }

  const Instance& instance(std::uint64_t seed) const;
  /// Objectives of reference_rules() on the seed's instance.
  const ObjectiveVector& reference(std::uint64_t seed) const;

  ObjectiveVector objectives(const RulePair& rules, std::uint64_t seed) const;
  double fitness(const RulePair& rules, std::uint64_t seed) const;

  /// Simulations run for fitness() calls, excluding reference runs.
  long simulations() const noexcept { return simulations_.load(); }

 private:
  struct Entry {
    Instance instance;
    std::optional<ObjectiveVector> reference;
  };
  Entry& entry(std::uint64_t seed) const;

  SimConfig config_;
  Scenario scenario_;
  mutable std::mutex mutex_;
  mutable std::map<std::uint64_t, std::unique_ptr<Entry>> cache_;
  mutable std::atomic<long> simulations_{0};
};

/// Training seed for generation g: training_seeds[g mod count].
std::uint64_t training_seed_for_generation(const Scenario& scenario, int generation);

/// Sets every individual's fitness on the given instance seed.
void evaluate_population(Population& pop, const FitnessEvaluator& evaluator, std::uint64_t instance_seed,
                         int threads = 1);

/// Mean fitness over the scenario's test seeds.
double test_performance(const RulePair& rules, const FitnessEvaluator& evaluator);

/// Fraction of distinct fitness values. Throws on unevaluated individuals.
double phenotypic_diversity(const Population& pop);

// ---------------------------------------------------------------------------
// Variation

/// Index of the winner of a size-k tournament drawn uniformly with
/// replacement; lowest fitness wins, ties go to the lower index.
std::size_t tournament_select(const Population& pop, std::mt19937_64& rng, int tournament_size = 4);

enum class Slot { Routing, Sequencing };

/// Preorder index of a node: with probability 1 - terminal_rate a function
/// node (when the tree has any), otherwise a leaf, uniform within the class.
int pick_node(const Expr& tree, std::mt19937_64& rng, double terminal_rate);

/// Exchanges the subtrees at the given preorder indices.
std::pair<Expr, Expr> swap_subtrees(const Expr& a, int index_a, const Expr& b, int index_b);

/// Subtree crossover on one randomly chosen slot, shared by both parents.
/// A child deeper than max_depth is replaced by its unmodified parent.
std::pair<Individual, Individual> crossover(const Individual& a, const Individual& b, std::mt19937_64& rng,
                                            const GPParams& params);

/// Replaces a uniformly chosen subtree of one random slot by a grow tree.
/// A result deeper than max_depth returns the parent unchanged.
Individual mutate(const Individual& parent, std::mt19937_64& rng, const GPParams& params);

// ---------------------------------------------------------------------------
// Evolution

struct GenerationStats {
  int generation = 0;
  std::uint64_t instance_seed = 0;
  double best = 0;
  double mean = 0;
  double diversity = 0;
  std::string best_genome;  // format_rule_pair text
  double wall_seconds = 0;
  int max_depth_seen = 0;
  // Operator applications that bred the next generation.
  int crossovers = 0;
  int mutations = 0;
  int reproductions = 0;
  // Mean fitness of the tournament winners used for breeding.
  double mean_selected = 0;
};

struct EvolutionLog {
  std::vector<GenerationStats> generations;
  std::vector<double> initial_fitness;  // generation 0, population order
  std::vector<Individual> initial_population;
};

struct EvolutionResult {
  Individual best;
  EvolutionLog log;
};

struct EvolveOptions {
  int threads = 1;
  std::function<void(const GenerationStats&)> on_generation;
};

/// Generational loop: evaluate on the generation's training instance, keep
/// the best as an elite, fill the rest by crossover/mutation/reproduction
/// chosen per offspring by rate. Empty `seeds` means random initialization.
/// Returns the best individual by training fitness over all generations.
EvolutionResult evolve(const GPParams& params, const FitnessEvaluator& evaluator, std::span<const RulePair> seeds,
                       std::uint64_t seed, const EvolveOptions& options = {});

}  // namespace dfjss
