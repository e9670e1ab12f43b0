#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace blade {

struct SourcePos {
  std::size_t line = 1;
  std::size_t column = 1;
};

/// Raised for malformed dialect text. what() already carries "line:column".
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& message, SourcePos pos);
  SourcePos pos() const { return pos_; }
  const std::string& detail() const { return detail_; }

 private:
  SourcePos pos_;
  std::string detail_;
};

struct SExpr {
  enum class Kind { Symbol, List };

  Kind kind = Kind::Symbol;
  std::string text;           // symbol text, untouched
  std::vector<SExpr> items;   // list children
  SourcePos pos;

  bool is_list() const { return kind == Kind::List; }
  bool is_symbol() const { return kind == Kind::Symbol; }
  // Case-insensitive comparison against a symbol.
  bool is_symbol(std::string_view s) const;
  // Head symbol of a list, lowercased; empty for symbols and empty lists.
  std::string head() const;
};

/// Reads every top-level expression. Comments start with ';' and run to end of line.
std::vector<SExpr> read_sexprs(std::string_view text);

std::string lowercase(std::string_view s);

}  // namespace blade
