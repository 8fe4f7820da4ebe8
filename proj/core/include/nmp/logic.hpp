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

#ifndef NMP_LOGIC_HPP_
#define NMP_LOGIC_HPP_

#include <cstddef>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "nmp/term.hpp"

namespace nmp {

// Definite clause. An empty body makes it a fact. Body goals are the
// top-level conjuncts; a goal may itself be a disjunction.
struct Clause {
  Term head;
  std::vector<Term> body;
  int line = 0;

  std::string str() const;
  friend bool operator==(const Clause& a, const Clause& b) {
    return a.head == b.head && a.body == b.body;
  }
};

// Splits a ','-conjunction into its conjuncts, left to right.
std::vector<Term> flatten_conjunction(const Term& t);

bool is_builtin(const std::string& name, std::size_t arity);

// Throws SyntaxError for goals outside the supported subset: cut,
// negation, assert/retract, meta-calls, unsupported arithmetic.
void check_goal(const Term& goal, int line, int column);

// Deterministic (pure Prolog) section. Comments are stripped; clauses come
// back in source order.
std::vector<Clause> parse_deterministic(std::string_view text);

// Immutable clause database indexed by predicate indicator. Safe to share
// between threads; every solve call keeps its own tables.
class Program {
 public:
  Program() = default;
  explicit Program(std::vector<Clause> clauses);

  const std::vector<Clause>& clauses() const { return clauses_; }
  const std::vector<std::size_t>& clauses_for(const std::string& indicator) const;
  bool defines(const std::string& indicator) const {
    return index_.count(indicator) != 0;
  }

 private:
  std::vector<Clause> clauses_;
  std::map<std::string, std::vector<std::size_t>> index_;
};

struct SolveLimits {
  std::size_t max_answers = 1'000'000;
  std::size_t max_depth = 10'000;
};

// All distinct answers to the conjunction of goals, restricted to the
// goals' variables and sorted by the printed form of their bindings.
// Calls to user predicates are tabled per call variant, so left-recursive
// and symmetric rules terminate with their minimal-model answers.
std::vector<Substitution> solve(const Program& program,
                                const std::vector<Term>& goals,
                                const SolveLimits& limits = {});

}  // namespace nmp

#endif  // NMP_LOGIC_HPP_
