#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace referee {

struct Segment {
  size_t index = 0;
  std::string text;                          // trimmed sentence text
  std::pair<size_t, size_t> char_range{0, 0}; // [start, end) into the summary
};

// Deterministic rule-based sentence splitter. Boundaries occur after ./!/?
// followed by whitespace and an uppercase letter, digit, or opening
// quote/backtick; suppressed inside backtick spans, inside brackets, after
// protected abbreviations and single-letter initials, and inside decimal
// numbers or dotted identifiers. A blank line always forces a boundary.
std::vector<Segment> segment(std::string_view summary);

}  // namespace referee
