#pragma once

#include <charconv>
#include <string>
#include <system_error>

#include "mvb/error.hpp"

namespace mvb {

/// Shortest round-trip decimal form of a double; deterministic and
/// locale-independent, used by every CSV/JSONL writer.
inline std::string format_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

inline double parse_double(const std::string& text, const std::string& what) {
  double v = 0.0;
  const char* begin = text.data();
  const char* end = begin + text.size();
  const auto res = std::from_chars(begin, end, v);
  if (res.ec != std::errc{} || res.ptr != end)
    throw ParseError(what + ": not a number: '" + text + "'");
  return v;
}

inline long parse_long(const std::string& text, const std::string& what) {
  long v = 0;
  const char* begin = text.data();
  const char* end = begin + text.size();
  const auto res = std::from_chars(begin, end, v);
  if (res.ec != std::errc{} || res.ptr != end)
    throw ParseError(what + ": not an integer: '" + text + "'");
  return v;
}

}  // namespace mvb
