#include "blade/sexpr.hpp"

#include <algorithm>
#include <cctype>

namespace blade {

namespace {

std::string with_pos(const std::string& message, SourcePos pos) {
  return std::to_string(pos.line) + ":" + std::to_string(pos.column) + ": " + message;
}

class Reader {
 public:
  explicit Reader(std::string_view text) : text_(text) {}

  std::vector<SExpr> read_all() {
    std::vector<SExpr> out;
    skip_blank();
    while (i_ < text_.size()) {
      out.push_back(read_one());
      skip_blank();
    }
    return out;
  }

 private:
  SExpr read_one() {
    skip_blank();
    if (i_ >= text_.size()) throw ParseError("unexpected end of input", pos_);
    char c = text_[i_];
    if (c == ')') throw ParseError("unexpected ')'", pos_);
    if (c == '(') {
      SExpr list;
      list.kind = SExpr::Kind::List;
      list.pos = pos_;
      advance();
      for (;;) {
        skip_blank();
        if (i_ >= text_.size()) throw ParseError("unbalanced '(' opened here", list.pos);
        if (text_[i_] == ')') {
          advance();
          return list;
        }
        list.items.push_back(read_one());
      }
    }
    SExpr sym;
    sym.pos = pos_;
    std::size_t start = i_;
    while (i_ < text_.size()) {
      char d = text_[i_];
      if (std::isspace(static_cast<unsigned char>(d)) || d == '(' || d == ')' || d == ';') break;
      advance();
    }
    sym.text = std::string(text_.substr(start, i_ - start));
    return sym;
  }

  void skip_blank() {
    while (i_ < text_.size()) {
      char c = text_[i_];
      if (c == ';') {
        while (i_ < text_.size() && text_[i_] != '\n') advance();
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        advance();
      } else {
        break;
      }
    }
  }

  void advance() {
    if (text_[i_] == '\n') {
      ++pos_.line;
      pos_.column = 1;
    } else {
      ++pos_.column;
    }
    ++i_;
  }

  std::string_view text_;
  std::size_t i_ = 0;
  SourcePos pos_;
};

}  // namespace

ParseError::ParseError(const std::string& message, SourcePos pos)
    : std::runtime_error(with_pos(message, pos)), pos_(pos), detail_(message) {}

std::string lowercase(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

bool SExpr::is_symbol(std::string_view s) const {
  return kind == Kind::Symbol && lowercase(text) == lowercase(s);
}

std::string SExpr::head() const {
  if (kind != Kind::List || items.empty() || !items.front().is_symbol()) return {};
  return lowercase(items.front().text);
}

std::vector<SExpr> read_sexprs(std::string_view text) { return Reader(text).read_all(); }

}  // namespace blade
