#pragma once

// Loader for the hand-computed 3-job schedule in data/golden_3job.schedule.

#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "dfjss/instance.hpp"
#include "dfjss/objectives.hpp"
#include "dfjss/rule_pair.hpp"

namespace dfjss::test {

struct GoldenOp {
  int job, op, machine;
  double start, end;
};

struct GoldenCase {
  std::vector<GoldenOp> ops;
  std::map<int, double> completion;
  std::map<std::string, double> objectives;  // exact numerator / denominator
};

inline std::string data_path(const std::string& name) { return std::string(DFJSS_TEST_DATA) + "/" + name; }

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline Instance golden_instance() {
  std::ifstream in(data_path("golden_3job.instance"));
  return read_instance(in);
}

inline RulePair golden_rules(const std::string& rule) {
  return parse_rule_pairs(read_file(data_path("golden_" + rule + ".rule"))).at(0);
}

inline GoldenCase golden_case(const std::string& rule) {
  GoldenCase g;
  std::istringstream in(read_file(data_path("golden_3job.schedule")));
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    std::string kind, name;
    ls >> kind >> name;
    if (name != rule) continue;
    if (kind == "op") {
      GoldenOp op{};
      ls >> op.job >> op.op >> op.machine >> op.start >> op.end;
      g.ops.push_back(op);
    } else if (kind == "done") {
      int job;
      double c;
      ls >> job >> c;
      g.completion[job] = c;
    } else if (kind == "obj") {
      std::string key;
      double num, den;
      ls >> key >> num >> den;
      g.objectives[key] = num / den;
    }
  }
  return g;
}

}  // namespace dfjss::test
