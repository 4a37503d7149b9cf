#pragma once

#include <charconv>
#include <string>

namespace dfjss::llm::detail {

// Shortest round-trip decimal text.
inline std::string num(double v) {
  char buf[32];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, end);
}

}  // namespace dfjss::llm::detail
