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

#include "nmp/term.hpp"

#include <algorithm>
#include <cctype>
#include <stdexcept>

namespace nmp {

Term Term::Atom(std::string name) {
  Term t;
  t.kind_ = Kind::kAtom;
  t.name_ = std::move(name);
  return t;
}

Term Term::Int(std::int64_t value) {
  Term t;
  t.kind_ = Kind::kInt;
  t.value_ = value;
  return t;
}

Term Term::Var(std::string name) {
  Term t;
  t.kind_ = Kind::kVar;
  t.name_ = std::move(name);
  return t;
}

Term Term::Compound(std::string functor, std::vector<Term> args) {
  if (args.empty()) return Atom(std::move(functor));
  Term t;
  t.kind_ = Kind::kCompound;
  t.name_ = std::move(functor);
  t.args_ = std::move(args);
  return t;
}

bool Term::is_ground() const {
  switch (kind_) {
    case Kind::kVar:
      return false;
    case Kind::kCompound:
      return std::all_of(args_.begin(), args_.end(),
                         [](const Term& a) { return a.is_ground(); });
    default:
      return true;
  }
}

void Term::collect_vars(std::vector<std::string>& out) const {
  if (kind_ == Kind::kVar) {
    if (std::find(out.begin(), out.end(), name_) == out.end()) {
      out.push_back(name_);
    }
    return;
  }
  for (const Term& a : args_) a.collect_vars(out);
}

bool Term::contains_var(const std::string& var) const {
  if (kind_ == Kind::kVar) return name_ == var;
  return std::any_of(args_.begin(), args_.end(),
                     [&](const Term& a) { return a.contains_var(var); });
}

std::string Term::indicator() const {
  return name_ + "/" + std::to_string(arity());
}

namespace {

bool is_symbol_char(char c) {
  return std::string_view("+-*/\\^<>=~:.?@#&$").find(c) !=
         std::string_view::npos;
}

bool is_infix(const std::string& name) {
  static const char* const kOps[] = {":-", ";",  ",",  "=",  "==", "\\==",
                                     "<",  ">",  "=<", ">=", "is", "+",
                                     "-",  "*",  "//", ":"};
  return std::find(std::begin(kOps), std::end(kOps), name) != std::end(kOps);
}

bool is_prefix(const std::string& name) { return name == "-" || name == "+"; }

// Every name the reader treats as an operator.
bool is_operator_atom(const Term& t) {
  static const char* const kNames[] = {
      ":-", ";",  "->",  ",",   "=",  "==", "\\==", "<",   ">",  "=<", ">=",
      "is", "\\=", "=:=", "=\\=", "=..", "+", "-",    "*",   "//", "/",  "mod",
      ":",  "\\+"};
  return t.is_atom() && std::find(std::begin(kNames), std::end(kNames),
                                  t.name()) != std::end(kNames);
}

void print(const Term& t, std::string& out);

// Operands of operator terms; operator atoms there need parentheses.
void print_operand(const Term& t, std::string& out) {
  if (is_operator_atom(t)) {
    out += '(';
    print(t, out);
    out += ')';
  } else {
    print(t, out);
  }
}

std::string quote_atom(const std::string& name) {
  if (name.empty()) return "''";
  if (name == "[]" || name == "!" || name == ";" || name == ",") {
    return name == "," ? "','" : name;
  }
  unsigned char first = static_cast<unsigned char>(name[0]);
  bool plain = std::islower(first) != 0;
  if (plain) {
    plain = std::all_of(name.begin(), name.end(), [](char c) {
      return std::isalnum(static_cast<unsigned char>(c)) != 0 || c == '_';
    });
  } else {
    plain = std::all_of(name.begin(), name.end(), is_symbol_char) &&
            name.back() != '.';
  }
  if (plain) return name;
  std::string out = "'";
  for (char c : name) {
    if (c == '\'' || c == '\\') out += '\\';
    out += c;
  }
  out += '\'';
  return out;
}

void print(const Term& t, std::string& out) {
  switch (t.kind()) {
    case Term::Kind::kInt:
      out += std::to_string(t.value());
      return;
    case Term::Kind::kVar:
      out += t.name();
      return;
    case Term::Kind::kAtom:
      out += quote_atom(t.name());
      return;
    case Term::Kind::kCompound:
      break;
  }
  const auto& args = t.args();
  if (t.name() == "[|]" && args.size() == 2) {
    out += '[';
    print(args[0], out);
    const Term* tail = &args[1];
    while (tail->is_compound() && tail->name() == "[|]" &&
           tail->arity() == 2) {
      out += ", ";
      print(tail->args()[0], out);
      tail = &tail->args()[1];
    }
    if (!(tail->is_atom() && tail->name() == "[]")) {
      out += " | ";
      print(*tail, out);
    }
    out += ']';
    return;
  }
  if (args.size() == 2 && is_infix(t.name())) {
    out += '(';
    print_operand(args[0], out);
    out += ' ';
    out += t.name();
    out += ' ';
    print_operand(args[1], out);
    out += ')';
    return;
  }
  if (args.size() == 1 && is_prefix(t.name())) {
    out += '(';
    out += t.name();
    out += ' ';
    print_operand(args[0], out);
    out += ')';
    return;
  }
  out += quote_atom(t.name());
  out += '(';
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (i > 0) out += ',';
    print(args[i], out);
  }
  out += ')';
}

int kind_rank(Term::Kind k) {
  switch (k) {
    case Term::Kind::kVar:
      return 0;
    case Term::Kind::kInt:
      return 1;
    case Term::Kind::kAtom:
      return 2;
    case Term::Kind::kCompound:
      return 3;
  }
  return 4;
}

}  // namespace

std::string Term::str() const {
  std::string out;
  print(*this, out);
  return out;
}

std::strong_ordering compare_terms(const Term& a, const Term& b) {
  if (a.kind() != b.kind()) return kind_rank(a.kind()) <=> kind_rank(b.kind());
  switch (a.kind()) {
    case Term::Kind::kInt:
      return a.value() <=> b.value();
    case Term::Kind::kVar:
    case Term::Kind::kAtom:
      return a.name().compare(b.name()) <=> 0;
    case Term::Kind::kCompound:
      break;
  }
  if (auto c = a.arity() <=> b.arity(); c != 0) return c;
  if (auto c = a.name().compare(b.name()) <=> 0; c != 0) return c;
  for (std::size_t i = 0; i < a.arity(); ++i) {
    if (auto c = compare_terms(a.args()[i], b.args()[i]); c != 0) return c;
  }
  return std::strong_ordering::equal;
}

bool lexicographic_less(const std::vector<Term>& a,
                        const std::vector<Term>& b) {
  return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end(),
                                      TermLess{});
}

// ---------------------------------------------------------------------------
// Substitution

const Term* Substitution::lookup(const std::string& var) const {
  auto it = bindings_.find(var);
  return it == bindings_.end() ? nullptr : &it->second;
}

void Substitution::bind(const std::string& var, Term value) {
  bindings_[var] = std::move(value);
}

const Term& Substitution::walk(const Term& t) const {
  const Term* cur = &t;
  while (cur->is_var()) {
    const Term* next = lookup(cur->name());
    if (next == nullptr) break;
    cur = next;
  }
  return *cur;
}

Term Substitution::resolve(const Term& t) const {
  const Term& w = walk(t);
  if (!w.is_compound()) return w;
  std::vector<Term> args;
  args.reserve(w.arity());
  for (const Term& a : w.args()) args.push_back(resolve(a));
  return Term::Compound(w.name(), std::move(args));
}

Substitution Substitution::restrict_to(
    const std::vector<std::string>& vars) const {
  Substitution out;
  for (const std::string& v : vars) {
    Term r = resolve(Term::Var(v));
    if (r.is_var() && r.name() == v) continue;
    out.bind(v, std::move(r));
  }
  return out;
}

std::string Substitution::str() const {
  std::vector<std::string> names;
  names.reserve(bindings_.size());
  for (const auto& [k, v] : bindings_) names.push_back(k);
  std::sort(names.begin(), names.end());
  std::string out = "{";
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (i > 0) out += ", ";
    out += names[i];
    out += '=';
    out += resolve(Term::Var(names[i])).str();
  }
  out += '}';
  return out;
}

namespace {

bool occurs(const std::string& var, const Term& t, const Substitution& s) {
  const Term& w = s.walk(t);
  if (w.is_var()) return w.name() == var;
  for (const Term& a : w.args()) {
    if (occurs(var, a, s)) return true;
  }
  return false;
}

}  // namespace

bool unify_into(const Term& a, const Term& b, Substitution& s) {
  const Term& x = s.walk(a);
  const Term& y = s.walk(b);
  if (x.is_var() && y.is_var() && x.name() == y.name()) return true;
  if (x.is_var()) {
    if (occurs(x.name(), y, s)) return false;
    s.bind(x.name(), y);
    return true;
  }
  if (y.is_var()) {
    if (occurs(y.name(), x, s)) return false;
    s.bind(y.name(), x);
    return true;
  }
  if (x.kind() != y.kind()) return false;
  switch (x.kind()) {
    case Term::Kind::kInt:
      return x.value() == y.value();
    case Term::Kind::kAtom:
      return x.name() == y.name();
    default:
      break;
  }
  if (x.name() != y.name() || x.arity() != y.arity()) return false;
  // References into the node-based map survive later insertions.
  for (std::size_t i = 0; i < x.arity(); ++i) {
    if (!unify_into(x.args()[i], y.args()[i], s)) return false;
  }
  return true;
}

std::optional<Substitution> unify(const Term& a, const Term& b,
                                  Substitution s) {
  if (!unify_into(a, b, s)) return std::nullopt;
  return s;
}

Term rename_vars(const Term& t, const std::string& suffix) {
  switch (t.kind()) {
    case Term::Kind::kVar:
      return Term::Var(t.name() + suffix);
    case Term::Kind::kCompound: {
      std::vector<Term> args;
      args.reserve(t.arity());
      for (const Term& a : t.args()) args.push_back(rename_vars(a, suffix));
      return Term::Compound(t.name(), std::move(args));
    }
    default:
      return t;
  }
}

}  // namespace nmp
