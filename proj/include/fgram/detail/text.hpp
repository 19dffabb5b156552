#pragma once

#include <cctype>
#include <cstddef>
#include <string>
#include <string_view>

#include "fgram/error.hpp"

namespace fgram::detail {

// Characters that never appear inside a symbol (attribute, constant, variable
// name, terminal, nonterminal). `%` is reserved for solver-minted variables.
inline constexpr std::string_view kReserved = "=&#?[]:,'@%";

inline bool is_symbol_char(char c) {
  return !std::isspace(static_cast<unsigned char>(c)) &&
         kReserved.find(c) == std::string_view::npos;
}

inline bool is_symbol(std::string_view s) {
  if (s.empty()) return false;
  for (char c : s)
    if (!is_symbol_char(c)) return false;
  return true;
}

// Character cursor with line/column bookkeeping.
class Cursor {
 public:
  explicit Cursor(std::string_view text) : text_(text) {}

  bool at_end() const { return pos_ >= text_.size(); }
  char peek() const { return at_end() ? '\0' : text_[pos_]; }
  char peek(std::size_t ahead) const {
    return pos_ + ahead < text_.size() ? text_[pos_ + ahead] : '\0';
  }
  std::size_t line() const { return line_; }
  std::size_t column() const { return column_; }

  char get() {
    char c = text_[pos_++];
    if (c == '\n') {
      ++line_;
      column_ = 1;
    } else {
      ++column_;
    }
    return c;
  }

  // Skips whitespace and, when `comment` is non-zero, line comments that
  // start with that character.
  void skip_space(char comment = '\0') {
    while (!at_end()) {
      char c = peek();
      if (std::isspace(static_cast<unsigned char>(c))) {
        get();
      } else if (comment != '\0' && c == comment) {
        while (!at_end() && peek() != '\n') get();
      } else {
        break;
      }
    }
  }

  std::string read_symbol() {
    std::string out;
    while (!at_end() && is_symbol_char(peek())) out.push_back(get());
    return out;
  }

  [[noreturn]] void fail(const std::string& message) const {
    throw ParseError(message, line_, column_);
  }

 private:
  std::string_view text_;
  std::size_t pos_ = 0;
  std::size_t line_ = 1;
  std::size_t column_ = 1;
};

}  // namespace fgram::detail
