#include "dfjss/objectives.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace dfjss {

std::string_view to_string(Objective o) {
  switch (o) {
    case Objective::Tmax: return "Tmax";
    case Objective::Tmean: return "Tmean";
    case Objective::Fmean: return "Fmean";
    case Objective::WTmean: return "WTmean";
    case Objective::WFmean: return "WFmean";
  }
  return "?";
}

std::optional<Objective> objective_from_string(std::string_view name) {
  for (Objective o : {Objective::Tmax, Objective::Tmean, Objective::Fmean, Objective::WTmean, Objective::WFmean}) {
    if (to_string(o) == name) return o;
  }
  return std::nullopt;
}

double ObjectiveVector::operator[](Objective o) const noexcept {
  switch (o) {
    case Objective::Tmax: return tmax;
    case Objective::Tmean: return tmean;
    case Objective::Fmean: return fmean;
    case Objective::WTmean: return wtmean;
    case Objective::WFmean: return wfmean;
  }
  return 0;
}

ObjectiveVector compute_objectives(std::span<const CompletedJob> jobs) {
  if (jobs.empty()) throw std::invalid_argument("objectives of an empty job set");
  ObjectiveVector v;
  double sum_t = 0, sum_f = 0, sum_wt = 0, sum_wf = 0;
  for (const auto& j : jobs) {
    if (j.completion < j.release) throw std::invalid_argument("job completes before its release");
    const double tardiness = std::max(0.0, j.completion - j.due);
    const double flowtime = j.completion - j.release;
    v.tmax = std::max(v.tmax, tardiness);
    sum_t += tardiness;
    sum_f += flowtime;
    sum_wt += j.weight * tardiness;
    sum_wf += j.weight * flowtime;
  }
  const double n = static_cast<double>(jobs.size());
  v.tmean = sum_t / n;
  v.fmean = sum_f / n;
  v.wtmean = sum_wt / n;
  v.wfmean = sum_wf / n;
  return v;
}

void validate(const Scenario& s) {
  if (s.objectives.empty()) throw std::invalid_argument("scenario has no objectives");
  if (s.objectives.size() != s.lambdas.size()) {
    throw std::invalid_argument("scenario needs one preference weight per objective");
  }
  double sum = 0;
  for (double l : s.lambdas) {
    if (!(l >= 0.0 && l <= 1.0)) throw std::invalid_argument("preference weights must lie in [0, 1]");
    sum += l;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw std::invalid_argument("preference weights must sum to 1");
  if (!(s.utilization > 0 && s.utilization < 1)) throw std::invalid_argument("utilization must lie in (0, 1)");
}

std::string default_scenario_name(const Scenario& s) {
  std::ostringstream out;
  out << '<';
  for (std::size_t i = 0; i < s.objectives.size(); ++i) {
    if (i) out << '-';
    out << to_string(s.objectives[i]);
  }
  out << ", " << s.utilization << '>';
  return out.str();
}

double weighted_fitness(const ObjectiveVector& obj, const Scenario& s, const std::optional<ObjectiveVector>& reference) {
  if (s.objectives.size() != s.lambdas.size()) {
    throw std::invalid_argument("scenario needs one preference weight per objective");
  }
  if (s.normalize && !reference) throw std::invalid_argument("normalized fitness needs reference objectives");
  double total = 0;
  for (std::size_t i = 0; i < s.objectives.size(); ++i) {
    if (s.lambdas[i] == 0.0) continue;
    const Objective o = s.objectives[i];
    double value = obj[o];
    if (s.normalize) {
      const double ref = (*reference)[o];
      if (ref == 0.0) {
        throw std::domain_error("reference value of " + std::string(to_string(o)) + " is zero; cannot normalize");
      }
      value /= ref;
    }
    total += s.lambdas[i] * value;
  }
  return total;
}

}  // namespace dfjss
