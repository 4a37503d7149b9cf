#pragma once

// Event-driven simulation of a dynamic flexible job shop under a rule pair.
//
// When an operation becomes ready (job release or predecessor completion) the
// routing rule scores each eligible machine and the lowest score wins; the job
// then travels to that machine and joins its queue. Whenever a machine is idle
// with a nonempty queue, the sequencing rule scores the queued operations and
// the lowest score starts, running to completion. Ties go to the lower machine
// index for routing, and to the earlier queue arrival, then lower job id, for
// sequencing.

#include <iosfwd>
#include <stdexcept>
#include <vector>

#include "dfjss/expr.hpp"
#include "dfjss/instance.hpp"
#include "dfjss/objectives.hpp"
#include "dfjss/rule_pair.hpp"

namespace dfjss {

/// State of one machine as seen at a decision point.
struct MachineSnapshot {
  double ready_time = 0;  // completion of current op if busy, else when it went idle
  int queue_length = 0;
  double queue_work = 0;  // sum of queued processing times on this machine
};

/// An operation awaiting a decision.
struct PendingOperation {
  const Job* job = nullptr;
  int op_index = 0;
  double ready_time = 0;  // routing: when it became ready; sequencing: queue arrival
  int from = kEntry;      // location the job travels from to reach the machine
};

DecisionContext build_routing_context(const ShopLayout& shop, double now, const PendingOperation& op,
                                      int machine, const MachineSnapshot& state);

DecisionContext build_sequencing_context(const ShopLayout& shop, double now, const PendingOperation& op,
                                         int machine, const MachineSnapshot& state);

struct TraceRecord {
  int job = 0;
  int op = 0;
  int machine = 0;
  double routed = 0;  // decision time, op ready
  double queued = 0;  // arrival at machine queue
  double start = 0;
  double end = 0;
};

struct SimOptions {
  bool record_trace = false;
};

struct SimResult {
  ObjectiveVector objectives;
  std::vector<CompletedJob> counted_jobs;  // post warm-up, in id order
  std::vector<double> busy_time;           // per machine, whole run
  double horizon = 0;                      // release time of the last job
  std::vector<double> busy_within_horizon; // per machine, clipped to [0, horizon]
  double end_time = 0;
  long processed_operations = 0;
  long decisions = 0;
  std::vector<TraceRecord> trace;          // filled when requested, in start order

  /// Mean machine busy fraction over [0, horizon].
  double utilization() const;
};

class SimulationError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Runs until every post warm-up job completes. Deterministic in its inputs.
SimResult simulate(const RulePair& rules, const Instance& instance, const SimOptions& options = {});

/// CSV with columns time,machine,job,op,event (event = queue|start|finish).
void write_trace_csv(std::ostream& out, const std::vector<TraceRecord>& trace);

/// Least work-in-queue routing with shortest-processing-time sequencing.
RulePair reference_rules();

}  // namespace dfjss
