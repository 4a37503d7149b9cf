#include "dfjss/rule_pair.hpp"

#include <optional>
#include <sstream>

namespace dfjss {

namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

std::string format_rule_pair(const RulePair& rules) {
  return "routing: " + format(rules.routing) + "\nsequencing: " + format(rules.sequencing) + "\n";
}

std::vector<RulePair> parse_rule_pairs(std::string_view text) {
  std::vector<RulePair> out;
  std::optional<Expr> routing;
  int routing_line = 0;
  int line_no = 0;

  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto nl = text.find('\n', pos);
    const std::string_view raw = text.substr(pos, nl == std::string_view::npos ? text.size() - pos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;

    const std::string_view line = trim(raw);
    if (line.empty() || line.front() == '#') continue;

    const auto colon = line.find(':');
    if (colon == std::string_view::npos) {
      throw RuleFileError(line_no, "line " + std::to_string(line_no) + ": expected 'routing:' or 'sequencing:'");
    }
    const std::string_view key = trim(line.substr(0, colon));
    const std::string_view body = line.substr(colon + 1);

    auto parse_body = [&]() {
      try {
        return parse(body);
      } catch (const ParseError& e) {
        const std::size_t col = static_cast<std::size_t>(body.data() - raw.data()) + e.offset() + 1;
        throw RuleFileError(line_no, "line " + std::to_string(line_no) + ", column " + std::to_string(col) +
                                         ": " + e.what());
      }
    };

    if (key == "routing") {
      if (routing) {
        throw RuleFileError(line_no, "line " + std::to_string(line_no) + ": routing rule on line " +
                                         std::to_string(routing_line) + " has no sequencing rule");
      }
      routing = parse_body();
      routing_line = line_no;
    } else if (key == "sequencing") {
      if (!routing) {
        throw RuleFileError(line_no, "line " + std::to_string(line_no) + ": sequencing rule without a routing rule");
      }
      out.push_back(RulePair{*routing, parse_body()});
      routing.reset();
    } else {
      throw RuleFileError(line_no, "line " + std::to_string(line_no) + ": unknown key '" + std::string(key) + "'");
    }
  }
  if (routing) {
    throw RuleFileError(routing_line, "line " + std::to_string(routing_line) + ": routing rule has no sequencing rule");
  }
  return out;
}

}  // namespace dfjss
