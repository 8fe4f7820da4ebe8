// Copyright 2026 The NMP Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "nmp/reader.hpp"

#include <cctype>
#include <charconv>
#include <optional>

#include "nmp/error.hpp"

namespace nmp {
namespace {

enum class Tok { kName, kVar, kInt, kFloat, kPunct, kEnd, kEof };

struct Token {
  Tok kind = Tok::kEof;
  std::string text;
  std::int64_t value = 0;
  bool functor = false;      // name immediately followed by '('
  bool layout_after = true;  // whitespace (or EOF) follows the token
  int line = 1;
  int column = 1;
};

bool is_symbol_char(char c) {
  return std::string_view("+-*/\\^<>=~:.?@#&$").find(c) !=
         std::string_view::npos;
}

bool is_alnum(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) != 0 || c == '_';
}

class Lexer {
 public:
  explicit Lexer(std::string_view text) : text_(text) {}

  Token next() {
    skip_layout();
    Token tok;
    tok.line = line_;
    tok.column = column_;
    if (pos_ >= text_.size()) {
      tok.kind = Tok::kEof;
      return tok;
    }
    char c = text_[pos_];
    if (std::isdigit(static_cast<unsigned char>(c))) {
      std::size_t start = pos_;
      while (pos_ < text_.size() &&
             std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
        advance();
      }
      tok.kind = Tok::kInt;
      if (pos_ + 1 < text_.size() && text_[pos_] == '.' &&
          std::isdigit(static_cast<unsigned char>(text_[pos_ + 1]))) {
        advance();
        while (pos_ < text_.size() &&
               std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
          advance();
        }
        tok.kind = Tok::kFloat;
      }
      tok.text = std::string(text_.substr(start, pos_ - start));
      if (tok.kind == Tok::kFloat) return finish(tok);
      auto res = std::from_chars(tok.text.data(),
                                 tok.text.data() + tok.text.size(), tok.value);
      if (res.ec != std::errc()) {
        throw SyntaxError("integer literal out of range: " + tok.text,
                          tok.line, tok.column);
      }
    } else if (std::isupper(static_cast<unsigned char>(c)) || c == '_') {
      std::size_t start = pos_;
      while (pos_ < text_.size() && is_alnum(text_[pos_])) advance();
      tok.kind = Tok::kVar;
      tok.text = std::string(text_.substr(start, pos_ - start));
    } else if (std::islower(static_cast<unsigned char>(c))) {
      std::size_t start = pos_;
      while (pos_ < text_.size() && is_alnum(text_[pos_])) advance();
      tok.kind = Tok::kName;
      tok.text = std::string(text_.substr(start, pos_ - start));
    } else if (c == '\'') {
      tok.kind = Tok::kName;
      tok.text = quoted(tok);
    } else if (c == '(' || c == ')' || c == '[' || c == ']' || c == ',' ||
               c == '|') {
      advance();
      tok.kind = Tok::kPunct;
      tok.text = std::string(1, c);
    } else if (c == '!' || c == ';') {
      advance();
      tok.kind = Tok::kName;
      tok.text = std::string(1, c);
    } else if (c == '.' && end_follows(pos_ + 1)) {
      advance();
      tok.kind = Tok::kEnd;
      tok.text = ".";
    } else if (is_symbol_char(c)) {
      std::size_t start = pos_;
      while (pos_ < text_.size() && is_symbol_char(text_[pos_])) {
        if (text_[pos_] == '.' && end_follows(pos_ + 1) && pos_ > start) break;
        advance();
      }
      tok.kind = Tok::kName;
      tok.text = std::string(text_.substr(start, pos_ - start));
    } else {
      throw SyntaxError(std::string("unexpected character '") + c + "'",
                        tok.line, tok.column);
    }
    return finish(tok);
  }

 private:
  Token& finish(Token& tok) const {
    tok.functor = tok.kind == Tok::kName && pos_ < text_.size() &&
                  text_[pos_] == '(';
    tok.layout_after =
        pos_ >= text_.size() ||
        std::isspace(static_cast<unsigned char>(text_[pos_])) != 0 ||
        text_[pos_] == '%';
    return tok;
  }

  bool end_follows(std::size_t p) const {
    return p >= text_.size() ||
           std::isspace(static_cast<unsigned char>(text_[p])) != 0 ||
           text_[p] == '%';
  }

  void advance() {
    if (text_[pos_] == '\n') {
      ++line_;
      column_ = 1;
    } else {
      ++column_;
    }
    ++pos_;
  }

  void skip_layout() {
    while (pos_ < text_.size()) {
      char c = text_[pos_];
      if (std::isspace(static_cast<unsigned char>(c))) {
        advance();
      } else if (c == '%') {
        while (pos_ < text_.size() && text_[pos_] != '\n') advance();
      } else if (c == '/' && pos_ + 1 < text_.size() && text_[pos_ + 1] == '*') {
        int line = line_;
        int col = column_;
        advance();
        advance();
        while (pos_ + 1 < text_.size() &&
               !(text_[pos_] == '*' && text_[pos_ + 1] == '/')) {
          advance();
        }
        if (pos_ + 1 >= text_.size()) {
          throw SyntaxError("unterminated block comment", line, col);
        }
        advance();
        advance();
      } else {
        break;
      }
    }
  }

  std::string quoted(const Token& tok) {
    advance();  // opening quote
    std::string out;
    while (true) {
      if (pos_ >= text_.size()) {
        throw SyntaxError("unterminated quoted atom", tok.line, tok.column);
      }
      char c = text_[pos_];
      if (c == '\'') {
        advance();
        if (pos_ < text_.size() && text_[pos_] == '\'') {
          out += '\'';
          advance();
          continue;
        }
        return out;
      }
      if (c == '\\' && pos_ + 1 < text_.size()) {
        advance();
        out += text_[pos_];
        advance();
        continue;
      }
      out += c;
      advance();
    }
  }

  std::string_view text_;
  std::size_t pos_ = 0;
  int line_ = 1;
  int column_ = 1;
};

enum class Assoc { kXfx, kXfy, kYfx };

struct InfixOp {
  int priority;
  Assoc assoc;
};

std::optional<InfixOp> infix_op(const std::string& name) {
  if (name == ":-") return InfixOp{1200, Assoc::kXfx};
  if (name == ";") return InfixOp{1100, Assoc::kXfy};
  if (name == "->") return InfixOp{1050, Assoc::kXfy};
  if (name == ",") return InfixOp{1000, Assoc::kXfy};
  if (name == "=" || name == "==" || name == "\\==" || name == "<" ||
      name == ">" || name == "=<" || name == ">=" || name == "is" ||
      name == "\\=" || name == "=:=" || name == "=\\=" || name == "=..") {
    return InfixOp{700, Assoc::kXfx};
  }
  if (name == "+" || name == "-") return InfixOp{500, Assoc::kYfx};
  if (name == "*" || name == "//" || name == "/" || name == "mod") {
    return InfixOp{400, Assoc::kYfx};
  }
  if (name == ":") return InfixOp{200, Assoc::kXfy};
  return std::nullopt;
}

// Prefix operators: priority and whether the argument may have equal
// priority (fy) or must be strictly lower (fx).
std::optional<std::pair<int, bool>> prefix_op(const std::string& name) {
  if (name == "-" || name == "+") return std::make_pair(200, true);
  if (name == "\\+") return std::make_pair(900, true);
  if (name == ":-") return std::make_pair(1200, false);
  return std::nullopt;
}

class Parser {
 public:
  Parser(std::string_view text, ReaderOptions options)
      : lexer_(text), options_(options) {
    tok_ = lexer_.next();
  }

  bool at_eof() const { return tok_.kind == Tok::kEof; }

  ReadTerm clause() {
    ReadTerm out;
    out.line = tok_.line;
    out.column = tok_.column;
    anon_ = 0;
    out.term = parse(1200).first;
    if (tok_.kind != Tok::kEnd) {
      fail(tok_.kind == Tok::kEof ? "missing '.' at end of clause"
                                  : "operator expected before '" + tok_.text +
                                        "'");
    }
    shift();
    return out;
  }

  Term single() {
    Term t = parse(1200).first;
    if (tok_.kind != Tok::kEof) fail("unexpected '" + tok_.text + "'");
    return t;
  }

 private:
  [[noreturn]] void fail(const std::string& msg) const {
    throw SyntaxError(msg, tok_.line, tok_.column);
  }

  void shift() { tok_ = lexer_.next(); }

  bool is_punct(const char* p) const {
    return tok_.kind == Tok::kPunct && tok_.text == p;
  }

  void expect(const char* p) {
    if (!is_punct(p)) {
      fail(std::string("expected '") + p + "'" +
           (tok_.kind == Tok::kEof ? " before end of input"
                                   : " but found '" + tok_.text + "'"));
    }
    shift();
  }

  bool starts_term() const {
    switch (tok_.kind) {
      case Tok::kInt:
      case Tok::kFloat:
      case Tok::kVar:
        return true;
      case Tok::kName:
        return !infix_op(tok_.text).has_value() || tok_.functor ||
               prefix_op(tok_.text).has_value();
      case Tok::kPunct:
        return tok_.text == "(" || tok_.text == "[";
      default:
        return false;
    }
  }

  std::vector<Term> arguments() {
    std::vector<Term> args;
    expect("(");
    args.push_back(parse(999).first);
    while (is_punct(",")) {
      shift();
      args.push_back(parse(999).first);
    }
    expect(")");
    return args;
  }

  Term list() {
    if (!options_.allow_lists) {
      fail("lists are not supported here");
    }
    shift();  // '['
    if (is_punct("]")) {
      shift();
      return Term::Atom("[]");
    }
    std::vector<Term> items;
    items.push_back(parse(999).first);
    while (is_punct(",")) {
      shift();
      items.push_back(parse(999).first);
    }
    Term tail = Term::Atom("[]");
    if (is_punct("|")) {
      shift();
      tail = parse(999).first;
    }
    expect("]");
    for (auto it = items.rbegin(); it != items.rend(); ++it) {
      tail = Term::Compound("[|]", {std::move(*it), std::move(tail)});
    }
    return tail;
  }

  std::pair<Term, int> primary(int max_prec) {
    switch (tok_.kind) {
      case Tok::kInt: {
        Term t = Term::Int(tok_.value);
        shift();
        return {t, 0};
      }
      case Tok::kFloat: {
        // Only option values may carry decimals; they stay uninterpreted.
        if (!options_.allow_lists) {
          fail("floating-point literals are not supported");
        }
        Term t = Term::Atom(tok_.text);
        shift();
        return {t, 0};
      }
      case Tok::kVar: {
        std::string name = tok_.text;
        if (name == "_") name = "_G" + std::to_string(anon_++);
        shift();
        return {Term::Var(std::move(name)), 0};
      }
      case Tok::kPunct:
        if (tok_.text == "(") {
          shift();
          Term t = parse(1200).first;
          expect(")");
          return {t, 0};
        }
        if (tok_.text == "[") {
          return {list(), 0};
        }
        fail("unexpected '" + tok_.text + "'");
      case Tok::kEnd:
        fail("unexpected end of clause");
      case Tok::kEof:
        fail("unexpected end of input");
      case Tok::kName:
        break;
    }

    std::string name = tok_.text;
    if (tok_.functor) {
      shift();
      return {Term::Compound(name, arguments()), 0};
    }
    bool layout = tok_.layout_after;
    shift();
    if (name == "-" && !layout && tok_.kind == Tok::kInt) {
      Term t = Term::Int(-tok_.value);
      shift();
      return {t, 0};
    }
    if (auto pre = prefix_op(name); pre && starts_term()) {
      auto [prio, fy] = *pre;
      if (prio > max_prec) fail("operator priority clash at '" + name + "'");
      Term arg = parse(fy ? prio : prio - 1).first;
      return {Term::Compound(name, {std::move(arg)}), prio};
    }
    return {Term::Atom(name), 0};
  }

  std::pair<Term, int> parse(int max_prec) {
    auto [left, left_prec] = primary(max_prec);
    while (true) {
      std::string name;
      if (tok_.kind == Tok::kName) {
        name = tok_.text;
      } else if (is_punct(",")) {
        name = ",";
      } else {
        break;
      }
      auto op = infix_op(name);
      if (!op || op->priority > max_prec) break;
      int left_max = op->assoc == Assoc::kYfx ? op->priority : op->priority - 1;
      if (left_prec > left_max) break;
      shift();
      int right_max =
          op->assoc == Assoc::kXfy ? op->priority : op->priority - 1;
      Term right = parse(right_max).first;
      left = Term::Compound(name, {std::move(left), std::move(right)});
      left_prec = op->priority;
    }
    return {std::move(left), left_prec};
  }

  Lexer lexer_;
  ReaderOptions options_;
  Token tok_;
  int anon_ = 0;
};

}  // namespace

std::vector<ReadTerm> read_terms(std::string_view text, ReaderOptions options) {
  Parser parser(text, options);
  std::vector<ReadTerm> out;
  while (!parser.at_eof()) out.push_back(parser.clause());
  return out;
}

Term read_term(std::string_view text) {
  Parser parser(text, ReaderOptions{.allow_lists = true});
  return parser.single();
}

}  // namespace nmp
