#include "referee/segment.hpp"

#include <array>
#include <cctype>
#include <string>

namespace referee {

namespace {

bool is_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

bool is_word_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
}

// Abbreviations whose trailing period never ends a sentence. Compared
// case-insensitively against the token ending at the period.
constexpr std::array<std::string_view, 5> kProtected = {"e.g.", "i.e.", "etc.",
                                                        "vs.", "cf."};

bool iequals(std::string_view a, std::string_view b) {
  if (a.size() != b.size()) return false;
  for (size_t i = 0; i < a.size(); ++i) {
    if (std::tolower(static_cast<unsigned char>(a[i])) !=
        std::tolower(static_cast<unsigned char>(b[i])))
      return false;
  }
  return true;
}

// Token containing position i (inclusive), extended left over word chars and
// interior dots, e.g. the token ending at the final '.' of "e.g." is "e.g.".
std::string_view token_ending_at(std::string_view s, size_t dot) {
  size_t begin = dot;
  while (begin > 0) {
    char c = s[begin - 1];
    if (is_word_char(c) || c == '.') {
      --begin;
    } else {
      break;
    }
  }
  return s.substr(begin, dot - begin + 1);
}

bool protected_abbreviation(std::string_view s, size_t dot) {
  std::string_view token = token_ending_at(s, dot);
  for (auto abbr : kProtected) {
    if (token.size() >= abbr.size() &&
        iequals(token.substr(token.size() - abbr.size()), abbr))
      return true;
  }
  // Single-letter initial: "J. Smith", "A. Turing".
  if (token.size() == 2 && std::isupper(static_cast<unsigned char>(token[0])))
    return true;
  return false;
}

bool opens_sentence(char c) {
  return std::isupper(static_cast<unsigned char>(c)) ||
         std::isdigit(static_cast<unsigned char>(c)) || c == '"' || c == '\'' ||
         c == '`';
}

std::string cleaned_text(std::string_view raw) {
  std::string out(raw);
  for (char& c : out) {
    if (c == '\n' || c == '\r' || c == '\t') c = ' ';
  }
  return out;
}

}  // namespace

std::vector<Segment> segment(std::string_view summary) {
  std::vector<Segment> out;
  size_t start = std::string_view::npos;
  size_t last_nonws = 0;
  bool in_code = false;  // inside a backtick span
  int bracket_depth = 0;

  auto close = [&](size_t end) {
    if (start == std::string_view::npos || end <= start) return;
    Segment seg;
    seg.index = out.size();
    seg.char_range = {start, end};
    seg.text = cleaned_text(summary.substr(start, end - start));
    out.push_back(std::move(seg));
    start = std::string_view::npos;
    in_code = false;
    bracket_depth = 0;
  };

  size_t n = summary.size();
  for (size_t i = 0; i < n; ++i) {
    char c = summary[i];
    if (is_space(c)) {
      if (start == std::string_view::npos) continue;
      // A blank line always separates sentences.
      size_t j = i;
      int newlines = 0;
      while (j < n && is_space(summary[j])) {
        if (summary[j] == '\n') ++newlines;
        ++j;
      }
      if (newlines >= 2) {
        close(last_nonws + 1);
        i = j - 1;
      }
      continue;
    }
    if (start == std::string_view::npos) start = i;
    last_nonws = i;
    if (c == '`') {
      in_code = !in_code;
      continue;
    }
    if (in_code) continue;
    if (c == '(' || c == '[' || c == '{') {
      ++bracket_depth;
      continue;
    }
    if (c == ')' || c == ']' || c == '}') {
      if (bracket_depth > 0) --bracket_depth;
      continue;
    }
    if ((c == '.' || c == '!' || c == '?') && bracket_depth == 0) {
      if (c == '.' && protected_abbreviation(summary, i)) continue;
      size_t j = i + 1;
      if (j >= n || !is_space(summary[j])) continue;  // dotted name, decimal, EOF
      while (j < n && is_space(summary[j])) ++j;
      if (j < n && !opens_sentence(summary[j])) continue;
      close(i + 1);
      i = j - 1;
    }
  }
  if (start != std::string_view::npos) close(last_nonws + 1);
  return out;
}

}  // namespace referee
