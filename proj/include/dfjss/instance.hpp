#pragma once

// Dynamic flexible job shop instances: generator configuration, job and
// shop-floor data, and a line-oriented text format for dump/load.

#include <cstdint>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace dfjss {

struct WeightShare {
  int weight;
  double share;
};

struct SimConfig {
  int num_machines = 10;
  int total_jobs = 5000;
  int warmup_jobs = 1000;
  double min_rate = 10.0;
  double max_rate = 15.0;
  int min_workload = 100;
  int max_workload = 1000;
  int min_ops = 2;
  int max_ops = 10;
  int min_distance = 35;
  int max_distance = 500;
  double transport_speed = 5.0;
  std::vector<WeightShare> weight_mix = {{1, 0.2}, {2, 0.6}, {4, 0.2}};
  double due_date_factor = 1.5;
  double utilization = 0.85;
};

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Throws ConfigError describing the first violated constraint.
void validate(const SimConfig& config);

struct MachineOption {
  int machine;
  double rate;
  double processing_time;  // workload / rate
};

struct Operation {
  int job = 0;
  int index = 0;
  int workload = 0;
  std::vector<MachineOption> options;  // sorted by machine index
  double median_processing_time = 0;   // median over options

  const MachineOption* option_for(int machine) const noexcept;
};

struct Job {
  int id = 0;
  double release = 0;
  int weight = 1;
  double due = 0;
  std::vector<Operation> ops;
};

/// Location index used for the shop entry/exit point.
inline constexpr int kEntry = -1;

struct ShopLayout {
  std::vector<double> rates;                 // per machine
  std::vector<int> entry_distance;           // machine <-> entry/exit
  std::vector<std::vector<int>> distance;    // symmetric, zero diagonal
  double transport_speed = 5.0;

  int num_machines() const noexcept { return static_cast<int>(rates.size()); }
  /// Travel time between two locations (kEntry or a machine index).
  double travel_time(int from, int to) const;
};

struct Instance {
  ShopLayout shop;
  std::vector<Job> jobs;  // in release order, ids 0..n-1
  int warmup_jobs = 0;
};

/// Poisson arrival rate giving the configured long-run machine utilization:
/// utilization * machines / (E[ops per job] * E[processing time per op]).
double arrival_rate_for_utilization(const SimConfig& config);

/// Same flow balance, with the expected processing time taken over the
/// sampled machine rates (mean workload * mean of 1/rate) instead of the
/// nominal mean rate. The generator uses this rate.
double arrival_rate_for_shop(const SimConfig& config, const std::vector<double>& machine_rates);

/// Deterministic in (config, seed).
Instance generate_instance(const SimConfig& config, std::uint64_t seed);

/// Median of a nonempty sequence; mean of the middle pair for even sizes.
double median(std::vector<double> values);

/// Due date offset for a job released now: factor * sum of median processing times.
double due_allowance(const Job& job, double due_date_factor);

void write_instance(std::ostream& out, const Instance& instance);
Instance read_instance(std::istream& in);

class InstanceFormatError : public std::runtime_error {
 public:
  InstanceFormatError(int line, const std::string& what) : std::runtime_error(what), line_(line) {}
  int line() const noexcept { return line_; }

 private:
  int line_;
};

}  // namespace dfjss
