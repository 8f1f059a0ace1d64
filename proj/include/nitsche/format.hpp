#pragma once

#include <charconv>
#include <string>
#include <system_error>

namespace nitsche {

/// Shortest decimal string that parses back to exactly `value`.
inline std::string format_double(double value) {
  char buffer[32];
  auto [end, ec] = std::to_chars(buffer, buffer + sizeof(buffer), value);
  if (ec != std::errc{}) return "nan";
  return std::string(buffer, end);
}

}  // namespace nitsche
