#include <algorithm>
#include <cctype>
#include <optional>
#include <sstream>

#include "dfjss/llm.hpp"

namespace dfjss::llm {

std::string_view to_string(RejectCause c) {
  switch (c) {
    case RejectCause::Syntax: return "syntax";
    case RejectCause::UnknownSymbol: return "unknown symbol";
    case RejectCause::Arity: return "arity";
    case RejectCause::Depth: return "depth";
    case RejectCause::MissingHalf: return "missing pair half";
  }
  return "?";
}

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

// Drops list markers and emphasis around a label: "- ", "* ", "1. ", "2) ", "**".
std::string_view strip_marker(std::string_view s) {
  s = trim(s);
  if (s.starts_with("- ") || s.starts_with("* ")) s = trim(s.substr(2));
  std::size_t digits = 0;
  while (digits < s.size() && std::isdigit(static_cast<unsigned char>(s[digits]))) ++digits;
  if (digits && digits + 1 < s.size() && (s[digits] == '.' || s[digits] == ')') && s[digits + 1] == ' ')
    s = trim(s.substr(digits + 2));
  while (s.starts_with("*")) s.remove_prefix(1);
  return s;
}

// "routing: X" or "sequencing: X" (case-insensitive label) -> slot, X.
std::optional<std::pair<bool, std::string_view>> labeled(std::string_view line) {
  std::string_view s = strip_marker(line);
  for (auto [label, routing] : {std::pair{std::string_view("routing"), true}, {std::string_view("sequencing"), false}}) {
    if (s.size() <= label.size()) continue;
    bool match = true;
    for (std::size_t i = 0; i < label.size(); ++i)
      match &= std::tolower(static_cast<unsigned char>(s[i])) == label[i];
    if (!match) continue;
    std::string_view rest = s.substr(label.size());
    while (rest.starts_with("*")) rest.remove_prefix(1);
    rest = trim(rest);
    if (!rest.starts_with(":")) continue;
    rest = trim(rest.substr(1));
    while (rest.starts_with("*")) rest = trim(rest.substr(1));
    if (rest.size() >= 2 && rest.front() == '`' && rest.back() == '`') rest = trim(rest.substr(1, rest.size() - 2));
    return std::pair{routing, rest};
  }
  return std::nullopt;
}

RejectCause cause_of(ParseError::Kind k) {
  switch (k) {
    case ParseError::Kind::Syntax: return RejectCause::Syntax;
    case ParseError::Kind::UnknownSymbol: return RejectCause::UnknownSymbol;
    case ParseError::Kind::Arity: return RejectCause::Arity;
  }
  return RejectCause::Syntax;
}

bool is_heading(std::string_view line) { return trim(line).starts_with("#"); }

bool is_insights_heading(std::string_view line) {
  std::string_view s = trim(line);
  if (!s.starts_with("#")) return false;
  while (s.starts_with("#")) s.remove_prefix(1);
  std::string lower;
  for (char c : trim(s)) lower += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return lower.starts_with("insight");
}

}  // namespace

ExtractionResult extract_heuristics(std::string_view reply, int max_depth) {
  ExtractionResult out;
  out.raw = std::string(reply);

  struct Half {
    std::string text;
    std::string line;
  };
  std::optional<Half> pending_routing;

  auto reject = [&](std::string snippet, RejectCause cause, std::string detail) {
    out.rejected.push_back({std::move(snippet), cause, std::move(detail)});
  };
  auto flush_pending = [&] {
    if (pending_routing) reject(pending_routing->line, RejectCause::MissingHalf, "no sequencing rule follows");
    pending_routing.reset();
  };
  auto finish = [&](const Half& routing, const std::string& seq_text, const std::string& seq_line) {
    const std::string snippet = routing.line + "\n" + seq_line;
    try {
      RulePair pair{parse(routing.text), parse(seq_text)};
      if (pair.routing.depth() > max_depth || pair.sequencing.depth() > max_depth) {
        reject(snippet, RejectCause::Depth, "depth exceeds " + std::to_string(max_depth));
        return;
      }
      out.accepted.push_back(std::move(pair));
    } catch (const ParseError& e) {
      reject(snippet, cause_of(e.kind()), e.what());
    }
  };

  bool in_fence = false;
  bool in_insights = false;
  std::string insights;
  std::istringstream lines{std::string(reply)};
  std::string line;
  while (std::getline(lines, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).starts_with("```")) {
      if (in_fence) flush_pending();
      in_fence = !in_fence;
      continue;
    }
    if (!in_fence && is_heading(line)) {
      flush_pending();
      in_insights = is_insights_heading(line);
      continue;
    }
    if (in_insights && !in_fence) {
      insights += line + "\n";
      continue;
    }
    auto lab = labeled(line);
    if (!lab) continue;
    const std::string text(lab->second);
    const std::string raw_line(trim(line));
    if (lab->first) {
      flush_pending();
      pending_routing = Half{text, raw_line};
    } else if (pending_routing) {
      finish(*pending_routing, text, raw_line);
      pending_routing.reset();
    } else {
      reject(raw_line, RejectCause::MissingHalf, "no routing rule precedes");
    }
  }
  flush_pending();
  out.insights = std::string(trim(insights));
  return out;
}

std::string format_seeds_file(const ExtractionResult& result) {
  std::ostringstream out;
  out << "# accepted " << result.accepted.size() << ", rejected " << result.rejected.size() << "\n";
  for (const auto& r : result.rejected) {
    std::string flat = r.snippet;
    std::replace(flat.begin(), flat.end(), '\n', ' ');
    out << "# rejected (" << to_string(r.cause) << "): " << flat << "\n";
  }
  for (const auto& pair : result.accepted) out << "\n" << format_rule_pair(pair);
  return out.str();
}

}  // namespace dfjss::llm
