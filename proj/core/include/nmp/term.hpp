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

#ifndef NMP_TERM_HPP_
#define NMP_TERM_HPP_

#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

namespace nmp {

// First-order term: atom, integer, variable or compound. Atoms are the
// arity-0 case; compounds always carry at least one argument.
class Term {
 public:
  enum class Kind { kAtom, kInt, kVar, kCompound };

  Term() = default;

  static Term Atom(std::string name);
  static Term Int(std::int64_t value);
  static Term Var(std::string name);
  static Term Compound(std::string functor, std::vector<Term> args);

  Kind kind() const { return kind_; }
  bool is_atom() const { return kind_ == Kind::kAtom; }
  bool is_int() const { return kind_ == Kind::kInt; }
  bool is_var() const { return kind_ == Kind::kVar; }
  bool is_compound() const { return kind_ == Kind::kCompound; }
  // Atom or compound: something that can head a clause or be called.
  bool is_callable() const { return is_atom() || is_compound(); }

  // Atom name, functor or variable name.
  const std::string& name() const { return name_; }
  std::int64_t value() const { return value_; }
  const std::vector<Term>& args() const { return args_; }
  std::size_t arity() const { return args_.size(); }

  bool is_ground() const;
  void collect_vars(std::vector<std::string>& out) const;
  bool contains_var(const std::string& var) const;

  // "name/arity" for callables.
  std::string indicator() const;

  // Canonical Prolog syntax; operator terms are fully parenthesized so the
  // output always re-reads to the same term.
  std::string str() const;

  friend bool operator==(const Term&, const Term&) = default;

 private:
  Kind kind_ = Kind::kAtom;
  std::string name_;
  std::int64_t value_ = 0;
  std::vector<Term> args_;
};

// Standard order: variables < integers (by value) < atoms (by name) <
// compounds (arity, then name, then arguments left to right).
std::strong_ordering compare_terms(const Term& a, const Term& b);

struct TermLess {
  bool operator()(const Term& a, const Term& b) const {
    return compare_terms(a, b) < 0;
  }
};

bool lexicographic_less(const std::vector<Term>& a, const std::vector<Term>& b);

// Variable bindings. Bindings may chain (X -> Y -> a); resolve() follows
// them. The occurs check keeps every binding acyclic.
class Substitution {
 public:
  bool empty() const { return bindings_.empty(); }
  std::size_t size() const { return bindings_.size(); }

  const Term* lookup(const std::string& var) const;
  void bind(const std::string& var, Term value);

  // Follows variable chains at the top level only.
  const Term& walk(const Term& t) const;
  // Applies the substitution everywhere in t.
  Term resolve(const Term& t) const;

  // Fully resolved bindings restricted to the given variables.
  Substitution restrict_to(const std::vector<std::string>& vars) const;

  const std::unordered_map<std::string, Term>& bindings() const {
    return bindings_;
  }

  // "{X=a, Y=b}" with variables sorted by name.
  std::string str() const;

  friend bool operator==(const Substitution& a, const Substitution& b) {
    return a.bindings_ == b.bindings_;
  }

 private:
  std::unordered_map<std::string, Term> bindings_;
};

// Most general unifier of a and b extending s, with occurs check.
std::optional<Substitution> unify(const Term& a, const Term& b,
                                  Substitution s);

// In-place variant used by the solver; on failure s is left partially
// extended and must be discarded.
bool unify_into(const Term& a, const Term& b, Substitution& s);

// Renames every variable in t by appending a suffix, consistently.
Term rename_vars(const Term& t, const std::string& suffix);

}  // namespace nmp

#endif  // NMP_TERM_HPP_
