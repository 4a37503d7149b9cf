#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "dfjss/expr.hpp"

namespace dfjss {

/// Routing rule scores eligible machines for a ready operation; sequencing
/// rule scores queued operations for an idle machine. Lower score wins.
struct RulePair {
  Expr routing;
  Expr sequencing;

  friend bool operator==(const RulePair&, const RulePair&) = default;
};

/// Two lines:
///   routing: <expr>
///   sequencing: <expr>
std::string format_rule_pair(const RulePair& rules);

/// Reads zero or more rule pairs written by format_rule_pair. Blank lines and
/// lines starting with '#' are ignored. Throws RuleFileError naming the line.
std::vector<RulePair> parse_rule_pairs(std::string_view text);

class RuleFileError : public std::runtime_error {
 public:
  RuleFileError(int line, const std::string& what) : std::runtime_error(what), line_(line) {}
  int line() const noexcept { return line_; }

 private:
  int line_;
};

}  // namespace dfjss
