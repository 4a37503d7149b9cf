#include "dfjss/instance.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>

namespace dfjss {

void validate(const SimConfig& c) {
  auto fail = [](const std::string& msg) { throw ConfigError(msg); };
  if (c.num_machines < 1) fail("num_machines must be at least 1");
  if (c.total_jobs < 1) fail("total_jobs must be at least 1");
  if (c.warmup_jobs < 0 || c.warmup_jobs >= c.total_jobs) fail("warmup_jobs must lie in [0, total_jobs)");
  if (!(c.min_rate > 0) || c.min_rate > c.max_rate) fail("rate range must satisfy 0 < min <= max");
  if (c.min_workload < 1 || c.min_workload > c.max_workload) fail("workload range must satisfy 1 <= min <= max");
  if (c.min_ops < 1 || c.min_ops > c.max_ops) fail("ops-per-job range must satisfy 1 <= min <= max");
  if (c.min_distance < 0 || c.min_distance > c.max_distance) fail("distance range must satisfy 0 <= min <= max");
  if (!(c.transport_speed > 0)) fail("transport_speed must be positive");
  if (c.weight_mix.empty()) fail("weight_mix must not be empty");
  double share = 0;
  for (const auto& w : c.weight_mix) {
    if (w.weight < 1) fail("job weights must be positive");
    if (!(w.share >= 0)) fail("weight shares must be non-negative");
    share += w.share;
  }
  if (std::abs(share - 1.0) > 1e-9) fail("weight_mix shares must sum to 1");
  if (!(c.due_date_factor > 0)) fail("due_date_factor must be positive");
  if (!(c.utilization > 0 && c.utilization < 1)) {
    std::ostringstream msg;
    msg << "utilization must lie in (0, 1), got " << c.utilization;
    fail(msg.str());
  }
}

const MachineOption* Operation::option_for(int machine) const noexcept {
  for (const auto& o : options) {
    if (o.machine == machine) return &o;
  }
  return nullptr;
}

double ShopLayout::travel_time(int from, int to) const {
  if (from == to) return 0.0;
  int d = 0;
  if (from == kEntry) d = entry_distance.at(static_cast<std::size_t>(to));
  else if (to == kEntry) d = entry_distance.at(static_cast<std::size_t>(from));
  else d = distance.at(static_cast<std::size_t>(from)).at(static_cast<std::size_t>(to));
  return d / transport_speed;
}

double arrival_rate_for_utilization(const SimConfig& c) {
  const double mean_ops = 0.5 * (c.min_ops + c.max_ops);
  const double mean_workload = 0.5 * (c.min_workload + c.max_workload);
  const double mean_rate = 0.5 * (c.min_rate + c.max_rate);
  const double mean_processing = mean_workload / mean_rate;
  return c.utilization * c.num_machines / (mean_ops * mean_processing);
}

double arrival_rate_for_shop(const SimConfig& c, const std::vector<double>& machine_rates) {
  if (machine_rates.empty()) throw std::invalid_argument("shop has no machines");
  double inverse = 0;
  for (double r : machine_rates) inverse += 1.0 / r;
  inverse /= static_cast<double>(machine_rates.size());
  const double mean_ops = 0.5 * (c.min_ops + c.max_ops);
  const double mean_workload = 0.5 * (c.min_workload + c.max_workload);
  return c.utilization * c.num_machines / (mean_ops * mean_workload * inverse);
}

double median(std::vector<double> v) {
  if (v.empty()) throw std::invalid_argument("median of an empty sequence");
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  const double upper = v[mid];
  if (v.size() % 2 == 1) return upper;
  const double lower = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lower + upper);
}

double due_allowance(const Job& job, double due_date_factor) {
  double total = 0;
  for (const auto& op : job.ops) total += op.median_processing_time;
  return due_date_factor * total;
}

namespace {

void finish_operation(Operation& op) {
  std::sort(op.options.begin(), op.options.end(),
            [](const MachineOption& a, const MachineOption& b) { return a.machine < b.machine; });
  std::vector<double> times;
  times.reserve(op.options.size());
  for (auto& o : op.options) {
    o.processing_time = op.workload / o.rate;
    times.push_back(o.processing_time);
  }
  op.median_processing_time = median(std::move(times));
}

}  // namespace

Instance generate_instance(const SimConfig& config, std::uint64_t seed) {
  validate(config);
  std::mt19937_64 rng(seed);
  const int m = config.num_machines;

  Instance inst;
  inst.warmup_jobs = config.warmup_jobs;
  ShopLayout& shop = inst.shop;
  shop.transport_speed = config.transport_speed;

  std::uniform_real_distribution<double> rate_dist(config.min_rate, config.max_rate);
  std::uniform_int_distribution<int> distance_dist(config.min_distance, config.max_distance);
  for (int j = 0; j < m; ++j) shop.rates.push_back(rate_dist(rng));
  for (int j = 0; j < m; ++j) shop.entry_distance.push_back(distance_dist(rng));
  shop.distance.assign(static_cast<std::size_t>(m), std::vector<int>(static_cast<std::size_t>(m), 0));
  for (int a = 0; a < m; ++a) {
    for (int b = a + 1; b < m; ++b) {
      const int d = distance_dist(rng);
      shop.distance[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)] = d;
      shop.distance[static_cast<std::size_t>(b)][static_cast<std::size_t>(a)] = d;
    }
  }

  const double lambda = arrival_rate_for_shop(config, shop.rates);
  std::exponential_distribution<double> unit_exp(1.0);
  std::uniform_int_distribution<int> ops_dist(config.min_ops, config.max_ops);
  std::uniform_int_distribution<int> workload_dist(config.min_workload, config.max_workload);
  std::uniform_int_distribution<int> eligible_count_dist(1, m);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  std::vector<int> machines(static_cast<std::size_t>(m));
  double t = 0;
  inst.jobs.reserve(static_cast<std::size_t>(config.total_jobs));
  for (int id = 0; id < config.total_jobs; ++id) {
    t += unit_exp(rng) / lambda;
    Job job;
    job.id = id;
    job.release = t;

    const int n_ops = ops_dist(rng);
    for (int k = 0; k < n_ops; ++k) {
      Operation op;
      op.job = id;
      op.index = k;
      op.workload = workload_dist(rng);
      const int count = eligible_count_dist(rng);
      std::iota(machines.begin(), machines.end(), 0);
      for (int i = 0; i < count; ++i) {
        std::uniform_int_distribution<int> pick(i, m - 1);
        std::swap(machines[static_cast<std::size_t>(i)], machines[static_cast<std::size_t>(pick(rng))]);
        const int mc = machines[static_cast<std::size_t>(i)];
        op.options.push_back({mc, shop.rates[static_cast<std::size_t>(mc)], 0.0});
      }
      finish_operation(op);
      job.ops.push_back(std::move(op));
    }

    const double u = unit(rng);
    double cumulative = 0;
    job.weight = config.weight_mix.back().weight;
    for (const auto& w : config.weight_mix) {
      cumulative += w.share;
      if (u < cumulative) {
        job.weight = w.weight;
        break;
      }
    }
    job.due = job.release + due_allowance(job, config.due_date_factor);
    inst.jobs.push_back(std::move(job));
  }
  return inst;
}

// ---------------------------------------------------------------------------
// Text format
//
//   dfjss-instance 1
//   shop <machines> <transport speed> <warm-up jobs> <jobs>
//   machine <index> <rate> <entry distance>
//   distance <index> <d_0> ... <d_{m-1}>
//   job <id> <release> <weight> <due> <ops>
//   op <workload> <machine>:<rate> ...
//
// Reals are written in shortest round-trip form so a load reproduces the
// generated instance exactly.

namespace {

std::string num(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, end);
}

class LineReader {
 public:
  explicit LineReader(std::istream& in) : in_(in) {}

  std::istringstream next(std::string_view expected_tag) {
    std::string line;
    while (std::getline(in_, line)) {
      ++line_no_;
      if (line.empty() || line[0] == '#') continue;
      std::istringstream ss(line);
      std::string tag;
      ss >> tag;
      if (tag != expected_tag) fail("expected '" + std::string(expected_tag) + "', found '" + tag + "'");
      return ss;
    }
    fail("unexpected end of file, expected '" + std::string(expected_tag) + "'");
  }

  [[noreturn]] void fail(const std::string& msg) const {
    throw InstanceFormatError(line_no_, "instance line " + std::to_string(line_no_) + ": " + msg);
  }

  int line() const { return line_no_; }

 private:
  std::istream& in_;
  int line_no_ = 0;
};

double parse_double(LineReader& r, std::string_view token) {
  double v = 0;
  auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
  if (ec != std::errc() || ptr != token.data() + token.size() || !std::isfinite(v)) {
    r.fail("invalid number '" + std::string(token) + "'");
  }
  return v;
}

template <typename T>
T read_field(LineReader& r, std::istringstream& ss, const char* what) {
  T v{};
  if constexpr (std::is_same_v<T, double>) {
    std::string tok;
    if (!(ss >> tok)) r.fail(std::string("missing ") + what);
    return parse_double(r, tok);
  } else {
    if (!(ss >> v)) r.fail(std::string("missing or invalid ") + what);
    return v;
  }
}

}  // namespace

void write_instance(std::ostream& out, const Instance& inst) {
  const auto& shop = inst.shop;
  const int m = shop.num_machines();
  out << "dfjss-instance 1\n";
  out << "shop " << m << ' ' << num(shop.transport_speed) << ' ' << inst.warmup_jobs << ' ' << inst.jobs.size() << '\n';
  for (int j = 0; j < m; ++j) {
    out << "machine " << j << ' ' << num(shop.rates[static_cast<std::size_t>(j)]) << ' '
        << shop.entry_distance[static_cast<std::size_t>(j)] << '\n';
  }
  for (int a = 0; a < m; ++a) {
    out << "distance " << a;
    for (int b = 0; b < m; ++b) out << ' ' << shop.distance[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)];
    out << '\n';
  }
  for (const auto& job : inst.jobs) {
    out << "job " << job.id << ' ' << num(job.release) << ' ' << job.weight << ' ' << num(job.due) << ' '
        << job.ops.size() << '\n';
    for (const auto& op : job.ops) {
      out << "op " << op.workload;
      for (const auto& o : op.options) out << ' ' << o.machine << ':' << num(o.rate);
      out << '\n';
    }
  }
}

Instance read_instance(std::istream& in) {
  LineReader r(in);
  Instance inst;
  {
    auto ss = r.next("dfjss-instance");
    if (read_field<int>(r, ss, "format version") != 1) r.fail("unsupported format version");
  }
  int m = 0;
  std::size_t n_jobs = 0;
  {
    auto ss = r.next("shop");
    m = read_field<int>(r, ss, "machine count");
    inst.shop.transport_speed = read_field<double>(r, ss, "transport speed");
    inst.warmup_jobs = read_field<int>(r, ss, "warm-up job count");
    n_jobs = read_field<std::size_t>(r, ss, "job count");
    if (m < 1) r.fail("machine count must be positive");
    if (!(inst.shop.transport_speed > 0)) r.fail("transport speed must be positive");
    if (inst.warmup_jobs < 0 || static_cast<std::size_t>(inst.warmup_jobs) >= n_jobs) {
      r.fail("warm-up job count must lie in [0, jobs)");
    }
  }
  for (int j = 0; j < m; ++j) {
    auto ss = r.next("machine");
    if (read_field<int>(r, ss, "machine index") != j) r.fail("machines must be listed in index order");
    const double rate = read_field<double>(r, ss, "rate");
    if (!(rate > 0)) r.fail("machine rate must be positive");
    inst.shop.rates.push_back(rate);
    inst.shop.entry_distance.push_back(read_field<int>(r, ss, "entry distance"));
  }
  for (int a = 0; a < m; ++a) {
    auto ss = r.next("distance");
    if (read_field<int>(r, ss, "row index") != a) r.fail("distance rows must be listed in index order");
    std::vector<int> row;
    for (int b = 0; b < m; ++b) row.push_back(read_field<int>(r, ss, "distance"));
    inst.shop.distance.push_back(std::move(row));
  }
  for (int a = 0; a < m; ++a) {
    for (int b = 0; b < m; ++b) {
      const auto& d = inst.shop.distance;
      if (d[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)] != d[static_cast<std::size_t>(b)][static_cast<std::size_t>(a)] ||
          (a == b && d[static_cast<std::size_t>(a)][static_cast<std::size_t>(a)] != 0)) {
        r.fail("distance matrix must be symmetric with a zero diagonal");
      }
    }
  }

  double last_release = 0;
  for (std::size_t i = 0; i < n_jobs; ++i) {
    Job job;
    std::size_t n_ops = 0;
    {
      auto ss = r.next("job");
      job.id = read_field<int>(r, ss, "job id");
      job.release = read_field<double>(r, ss, "release");
      job.weight = read_field<int>(r, ss, "weight");
      job.due = read_field<double>(r, ss, "due date");
      n_ops = read_field<std::size_t>(r, ss, "operation count");
      if (job.id != static_cast<int>(i)) r.fail("job ids must be 0..n-1 in order");
      if (job.release < last_release) r.fail("jobs must be listed in release order");
      if (job.weight < 1) r.fail("job weight must be positive");
      if (n_ops < 1) r.fail("a job needs at least one operation");
      last_release = job.release;
    }
    for (std::size_t k = 0; k < n_ops; ++k) {
      auto ss = r.next("op");
      Operation op;
      op.job = job.id;
      op.index = static_cast<int>(k);
      op.workload = read_field<int>(r, ss, "workload");
      if (op.workload < 1) r.fail("workload must be positive");
      std::string pair;
      while (ss >> pair) {
        const auto colon = pair.find(':');
        if (colon == std::string::npos) r.fail("expected <machine>:<rate>, found '" + pair + "'");
        int mc = -1;
        auto [p, ec] = std::from_chars(pair.data(), pair.data() + colon, mc);
        if (ec != std::errc() || p != pair.data() + colon || mc < 0 || mc >= m) {
          r.fail("invalid machine in '" + pair + "'");
        }
        if (op.option_for(mc)) r.fail("machine listed twice in '" + pair + "'");
        const double rate = parse_double(r, std::string_view(pair).substr(colon + 1));
        if (!(rate > 0)) r.fail("rate must be positive");
        op.options.push_back({mc, rate, 0.0});
      }
      if (op.options.empty()) r.fail("operation has no eligible machine");
      finish_operation(op);
      job.ops.push_back(std::move(op));
    }
    inst.jobs.push_back(std::move(job));
  }
  return inst;
}

}  // namespace dfjss
