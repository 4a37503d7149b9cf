#include "dfjss/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <queue>
#include <string>

namespace dfjss {

namespace {

DecisionContext make_context(const ShopLayout& shop, double now, const PendingOperation& p, int machine,
                             const MachineSnapshot& state) {
  const Job& job = *p.job;
  const auto k = static_cast<std::size_t>(p.op_index);
  const Operation& op = job.ops[k];
  const MachineOption* option = op.option_for(machine);
  if (!option) throw SimulationError("machine is not eligible for the operation");

  double later_work = 0;
  for (std::size_t i = k + 1; i < job.ops.size(); ++i) later_work += job.ops[i].median_processing_time;

  DecisionContext ctx;
  ctx.niq = state.queue_length;
  ctx.wiq = state.queue_work;
  ctx.mwt = now - state.ready_time;
  ctx.pt = option->processing_time;
  ctx.npt = k + 1 < job.ops.size() ? job.ops[k + 1].median_processing_time : 0.0;
  ctx.owt = now - p.ready_time;
  ctx.wkr = option->processing_time + later_work;
  ctx.nor = static_cast<double>(job.ops.size() - k);
  ctx.rdd = job.due - now;
  ctx.slack = ctx.rdd - ctx.wkr;
  ctx.w = job.weight;
  ctx.tis = now - job.release;
  ctx.trant = shop.travel_time(p.from, machine);
  return ctx;
}

}  // namespace

DecisionContext build_routing_context(const ShopLayout& shop, double now, const PendingOperation& op, int machine,
                                      const MachineSnapshot& state) {
  return make_context(shop, now, op, machine, state);
}

DecisionContext build_sequencing_context(const ShopLayout& shop, double now, const PendingOperation& op,
                                         int machine, const MachineSnapshot& state) {
  return make_context(shop, now, op, machine, state);
}

double SimResult::utilization() const {
  if (busy_within_horizon.empty() || !(horizon > 0)) return 0.0;
  double total = 0;
  for (double b : busy_within_horizon) total += b;
  return total / (horizon * static_cast<double>(busy_within_horizon.size()));
}

RulePair reference_rules() { return RulePair{Expr::leaf(Terminal::WIQ), Expr::leaf(Terminal::PT)}; }

namespace {

enum class EventKind { Completion = 0, Arrival = 1, Release = 2 };

struct Event {
  double time;
  EventKind kind;
  long seq;
  int job;
  int op;
  int machine;
  int from;
  double routed;
};

struct EventLater {
  bool operator()(const Event& a, const Event& b) const noexcept {
    if (a.time != b.time) return a.time > b.time;
    if (a.kind != b.kind) return a.kind > b.kind;
    return a.seq > b.seq;
  }
};

struct QueueEntry {
  int job;
  int op;
  int from;
  double routed;
  double queued;
  double processing_time;
};

struct Running {
  QueueEntry entry;
  double start;
  double end;
};

struct MachineState {
  bool busy = false;
  double ready_time = 0;
  std::vector<QueueEntry> queue;
  double queue_work = 0;
  Running running{};
};

class Engine {
 public:
  Engine(const RulePair& rules, const Instance& inst, const SimOptions& options)
      : rules_(rules), inst_(inst), options_(options) {
    const int m = inst.shop.num_machines();
    if (m < 1) throw std::invalid_argument("instance has no machines");
    if (inst.jobs.empty()) throw std::invalid_argument("instance has no jobs");
    if (inst.warmup_jobs < 0 || static_cast<std::size_t>(inst.warmup_jobs) >= inst.jobs.size()) {
      throw std::invalid_argument("warm-up job count must lie in [0, jobs)");
    }
    machines_.resize(static_cast<std::size_t>(m));
    result_.busy_time.assign(static_cast<std::size_t>(m), 0.0);
    result_.busy_within_horizon.assign(static_cast<std::size_t>(m), 0.0);
    result_.horizon = inst.jobs.back().release;
    counted_.resize(inst.jobs.size() - static_cast<std::size_t>(inst.warmup_jobs));
  }

  SimResult run() {
    push({inst_.jobs.front().release, EventKind::Release, 0, 0, 0, 0, kEntry, 0});
    const std::size_t to_count = counted_.size();
    while (counted_done_ < to_count) {
      if (events_.empty()) throw SimulationError("simulation stalled: no event can fire but jobs remain");
      const double now = events_.top().time;
      while (!events_.empty() && events_.top().time == now) {
        const Event e = events_.top();
        events_.pop();
        handle(e);
      }
      dispatch_idle(now);
      end_time_ = now;
    }
    finish();
    return std::move(result_);
  }

 private:
  void push(Event e) {
    e.seq = seq_++;
    events_.push(e);
  }

  void handle(const Event& e) {
    switch (e.kind) {
      case EventKind::Release: {
        const auto next = static_cast<std::size_t>(e.job) + 1;
        if (next < inst_.jobs.size()) {
          push({inst_.jobs[next].release, EventKind::Release, 0, static_cast<int>(next), 0, 0, kEntry, 0});
        }
        route(e.job, 0, kEntry, e.time);
        break;
      }
      case EventKind::Arrival: {
        auto& ms = machines_[static_cast<std::size_t>(e.machine)];
        const Operation& op = inst_.jobs[static_cast<std::size_t>(e.job)].ops[static_cast<std::size_t>(e.op)];
        const double pt = op.option_for(e.machine)->processing_time;
        ms.queue.push_back({e.job, e.op, e.from, e.routed, e.time, pt});
        ms.queue_work += pt;
        break;
      }
      case EventKind::Completion: complete(e.machine, e.time); break;
    }
  }

  MachineSnapshot snapshot(int machine) const {
    const auto& ms = machines_[static_cast<std::size_t>(machine)];
    return {ms.ready_time, static_cast<int>(ms.queue.size()), ms.queue_work};
  }

  double score(const Expr& rule, const DecisionContext& ctx) {
    const double s = rule.evaluate(ctx);
    if (!std::isfinite(s)) throw SimulationError("rule produced a non-finite priority");
    return s;
  }

  void route(int job_id, int op_index, int from, double now) {
    const Job& job = inst_.jobs[static_cast<std::size_t>(job_id)];
    const Operation& op = job.ops[static_cast<std::size_t>(op_index)];
    const PendingOperation pending{&job, op_index, now, from};
    int best_machine = -1;
    double best = 0;
    for (const auto& option : op.options) {
      const auto ctx = build_routing_context(inst_.shop, now, pending, option.machine, snapshot(option.machine));
      const double s = score(rules_.routing, ctx);
      if (best_machine < 0 || s < best) {
        best = s;
        best_machine = option.machine;
      }
    }
    ++result_.decisions;
    const double arrival = now + inst_.shop.travel_time(from, best_machine);
    push({arrival, EventKind::Arrival, 0, job_id, op_index, best_machine, from, now});
  }

  void dispatch_idle(double now) {
    for (std::size_t m = 0; m < machines_.size(); ++m) {
      auto& ms = machines_[m];
      if (ms.busy || ms.queue.empty()) continue;
      const MachineSnapshot state = snapshot(static_cast<int>(m));
      std::size_t best_idx = 0;
      double best = 0;
      for (std::size_t i = 0; i < ms.queue.size(); ++i) {
        const auto& q = ms.queue[i];
        const Job& job = inst_.jobs[static_cast<std::size_t>(q.job)];
        const PendingOperation pending{&job, q.op, q.queued, q.from};
        const double s = score(rules_.sequencing,
                               build_sequencing_context(inst_.shop, now, pending, static_cast<int>(m), state));
        if (i == 0 || s < best || (s == best && before(q, ms.queue[best_idx]))) {
          best = s;
          best_idx = i;
        }
      }
      ++result_.decisions;
      const QueueEntry chosen = ms.queue[best_idx];
      ms.queue.erase(ms.queue.begin() + static_cast<std::ptrdiff_t>(best_idx));
      ms.queue_work = ms.queue.empty() ? 0.0 : ms.queue_work - chosen.processing_time;
      ms.busy = true;
      ms.running = {chosen, now, now + chosen.processing_time};
      ms.ready_time = ms.running.end;
      if (options_.record_trace) {
        result_.trace.push_back({chosen.job, chosen.op, static_cast<int>(m), chosen.routed, chosen.queued, now,
                                 ms.running.end});
      }
      push({ms.running.end, EventKind::Completion, 0, chosen.job, chosen.op, static_cast<int>(m), kEntry, 0});
    }
  }

  static bool before(const QueueEntry& a, const QueueEntry& b) {
    if (a.queued != b.queued) return a.queued < b.queued;
    if (a.job != b.job) return a.job < b.job;
    return a.op < b.op;
  }

  void account_busy(std::size_t m, double start, double end) {
    result_.busy_time[m] += end - start;
    const double h = result_.horizon;
    result_.busy_within_horizon[m] += std::max(0.0, std::min(end, h) - std::min(start, h));
  }

  void complete(int machine, double now) {
    auto& ms = machines_[static_cast<std::size_t>(machine)];
    const Running done = ms.running;
    ms.busy = false;
    ms.ready_time = now;
    account_busy(static_cast<std::size_t>(machine), done.start, done.end);
    ++result_.processed_operations;

    const int job_id = done.entry.job;
    const Job& job = inst_.jobs[static_cast<std::size_t>(job_id)];
    const int next = done.entry.op + 1;
    if (static_cast<std::size_t>(next) < job.ops.size()) {
      route(job_id, next, machine, now);
      return;
    }
    if (job_id >= inst_.warmup_jobs) {
      counted_[static_cast<std::size_t>(job_id - inst_.warmup_jobs)] = {job.release, job.due, now, job.weight};
      ++counted_done_;
    }
  }

  void finish() {
    for (std::size_t m = 0; m < machines_.size(); ++m) {
      const auto& ms = machines_[m];
      if (ms.busy) account_busy(m, ms.running.start, std::min(ms.running.end, end_time_));
    }
    result_.end_time = end_time_;
    result_.counted_jobs = std::move(counted_);
    result_.objectives = compute_objectives(result_.counted_jobs);
  }

  const RulePair& rules_;
  const Instance& inst_;
  SimOptions options_;
  std::priority_queue<Event, std::vector<Event>, EventLater> events_;
  std::vector<MachineState> machines_;
  std::vector<CompletedJob> counted_;
  std::size_t counted_done_ = 0;
  long seq_ = 0;
  double end_time_ = 0;
  SimResult result_;
};

}  // namespace

SimResult simulate(const RulePair& rules, const Instance& instance, const SimOptions& options) {
  return Engine(rules, instance, options).run();
}

void write_trace_csv(std::ostream& out, const std::vector<TraceRecord>& trace) {
  struct Row {
    double time;
    int order;
    int machine;
    int job;
    int op;
  };
  std::vector<Row> rows;
  rows.reserve(trace.size() * 3);
  for (const auto& r : trace) {
    rows.push_back({r.queued, 0, r.machine, r.job, r.op});
    rows.push_back({r.start, 1, r.machine, r.job, r.op});
    rows.push_back({r.end, 2, r.machine, r.job, r.op});
  }
  std::stable_sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) {
    if (a.time != b.time) return a.time < b.time;
    return a.order > b.order;  // finish before start before queue at equal times
  });
  static constexpr const char* kNames[] = {"queue", "start", "finish"};
  out << "time,machine,job,op,event\n";
  const auto old_precision = out.precision(17);
  for (const auto& r : rows) {
    out << r.time << ',' << r.machine << ',' << r.job << ',' << r.op << ',' << kNames[r.order] << '\n';
  }
  out.precision(old_precision);
}

}  // namespace dfjss
