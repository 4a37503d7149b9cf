#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace dfjss {

enum class Objective { Tmax, Tmean, Fmean, WTmean, WFmean };

std::string_view to_string(Objective o);
std::optional<Objective> objective_from_string(std::string_view name);

struct ObjectiveVector {
  double tmax = 0;
  double tmean = 0;
  double fmean = 0;
  double wtmean = 0;
  double wfmean = 0;

  double operator[](Objective o) const noexcept;
  friend bool operator==(const ObjectiveVector&, const ObjectiveVector&) = default;
};

struct CompletedJob {
  double release = 0;
  double due = 0;
  double completion = 0;
  int weight = 1;
};

/// Max tardiness, mean tardiness, mean flowtime, mean weighted tardiness and
/// mean weighted flowtime of the given jobs. Throws on an empty set or on a
/// completion before release.
ObjectiveVector compute_objectives(std::span<const CompletedJob> jobs);

/// Optimization task: which objectives, their preference weights, shop load,
/// and the instance seeds used for training and testing.
struct Scenario {
  std::string name;
  std::vector<Objective> objectives;
  std::vector<double> lambdas;
  double utilization = 0.85;
  std::vector<std::uint64_t> training_seeds;
  std::vector<std::uint64_t> test_seeds;
  /// Divide each objective by the reference rule's value. Off by default for
  /// single-objective scenarios, which report raw time units.
  bool normalize = false;

  bool needs_reference() const noexcept { return normalize; }
};

/// Throws std::invalid_argument if objectives/lambdas are empty, mismatched,
/// outside [0,1], or do not sum to 1.
void validate(const Scenario& scenario);

/// Scenario name in the "<Fmean-WTmean, 0.85>" style.
std::string default_scenario_name(const Scenario& scenario);

/// Weighted sum over the scenario's objectives. With normalization each term
/// is divided by the reference value; a zero reference value throws.
double weighted_fitness(const ObjectiveVector& obj, const Scenario& scenario,
                        const std::optional<ObjectiveVector>& reference = std::nullopt);

}  // namespace dfjss
