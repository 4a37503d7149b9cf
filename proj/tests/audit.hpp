#pragma once

// Independent schedule checker over a simulation trace.

#include <algorithm>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "dfjss/instance.hpp"
#include "dfjss/simulator.hpp"

namespace dfjss::test {

struct AuditReport {
  int precedence = 0;      // op k+1 routed or started before op k finished
  int preemption = 0;      // duration differs from the machine's processing time
  int capacity = 0;        // overlapping intervals on one machine
  int assignment = 0;      // op missing, duplicated, or on an ineligible machine
  std::vector<std::string> details;

  int total() const { return precedence + preemption + capacity + assignment; }
};

// Every op of every job that completed is expected exactly once; jobs after
// the last counted one may be partially processed when the run stops.
inline AuditReport audit_trace(const Instance& inst, const std::vector<TraceRecord>& trace) {
  AuditReport rep;
  auto note = [&](int& counter, std::string msg) {
    ++counter;
    if (rep.details.size() < 20) rep.details.push_back(std::move(msg));
  };

  std::map<std::pair<int, int>, const TraceRecord*> by_op;
  for (const auto& r : trace) {
    if (r.job < 0 || r.job >= static_cast<int>(inst.jobs.size()) || r.op < 0 ||
        r.op >= static_cast<int>(inst.jobs[static_cast<std::size_t>(r.job)].ops.size())) {
      note(rep.assignment, "unknown op");
      continue;
    }
    if (!by_op.emplace(std::pair{r.job, r.op}, &r).second)
      note(rep.assignment, "op " + std::to_string(r.job) + "/" + std::to_string(r.op) + " assigned twice");
    const Operation& op = inst.jobs[static_cast<std::size_t>(r.job)].ops[static_cast<std::size_t>(r.op)];
    const MachineOption* opt = op.option_for(r.machine);
    if (!opt) {
      note(rep.assignment, "op on ineligible machine");
      continue;
    }
    if (r.end != r.start + opt->processing_time || r.start < r.queued || r.queued < r.routed)
      note(rep.preemption, "op " + std::to_string(r.job) + "/" + std::to_string(r.op) + " interval broken");
  }

  for (const auto& job : inst.jobs) {
    const int n = static_cast<int>(job.ops.size());
    for (int k = 0; k < n; ++k) {
      auto it = by_op.find({job.id, k});
      if (it == by_op.end()) {
        // ops may stop at the end of the run, but never leave a gap
        for (int later = k + 1; later < n; ++later)
          if (by_op.count({job.id, later})) note(rep.assignment, "job " + std::to_string(job.id) + " skips an op");
        break;
      }
      if (k == 0 && it->second->routed < job.release) note(rep.precedence, "op before release");
      if (k > 0) {
        const TraceRecord* prev = by_op.at({job.id, k - 1});
        if (it->second->routed < prev->end || it->second->start < prev->end)
          note(rep.precedence, "job " + std::to_string(job.id) + " op " + std::to_string(k) + " before predecessor");
      }
    }
  }

  std::map<int, std::vector<std::pair<double, double>>> per_machine;
  for (const auto& r : trace) per_machine[r.machine].emplace_back(r.start, r.end);
  for (auto& [m, iv] : per_machine) {
    std::sort(iv.begin(), iv.end());
    for (std::size_t i = 1; i < iv.size(); ++i)
      if (iv[i].first < iv[i - 1].second) note(rep.capacity, "overlap on machine " + std::to_string(m));
  }
  return rep;
}

}  // namespace dfjss::test
