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

#include "nmp/logic.hpp"

#include <algorithm>
#include <climits>
#include <functional>
#include <memory>
#include <set>
#include <unordered_map>
#include <unordered_set>

#include "nmp/error.hpp"
#include "nmp/reader.hpp"

namespace nmp {

std::string Clause::str() const {
  std::string out = head.str();
  if (!body.empty()) {
    out += " :- ";
    for (std::size_t i = 0; i < body.size(); ++i) {
      if (i > 0) out += ", ";
      out += body[i].str();
    }
  }
  out += '.';
  return out;
}

std::vector<Term> flatten_conjunction(const Term& t) {
  std::vector<Term> out;
  const Term* cur = &t;
  while (cur->is_compound() && cur->name() == "," && cur->arity() == 2) {
    auto rest = flatten_conjunction(cur->args()[0]);
    out.insert(out.end(), rest.begin(), rest.end());
    cur = &cur->args()[1];
  }
  out.push_back(*cur);
  return out;
}

namespace {

bool is_comparison(const std::string& name) {
  return name == "<" || name == ">" || name == "=<" || name == ">=";
}

bool is_control(const Term& t) {
  return t.is_compound() && t.arity() == 2 &&
         (t.name() == "," || t.name() == ";");
}

// Constructs named in errors when they show up in a program.
bool is_unsupported(const std::string& name) {
  static const std::set<std::string> kNames = {
      "!",       "->",     "*->",    "\\+",     "not",     "call",
      "assert",  "asserta", "assertz", "retract", "retractall",
      "findall", "bagof",  "setof",  "forall",  "\\=",     "=..",
      "=:=",     "=\\=",   "fail",   "false",   "once",    "catch",
      "throw",   "functor", "arg",   "copy_term", "var",   "nonvar",
      "atom",    "number", "integer", "format",  "write",   "nl"};
  return kNames.count(name) != 0;
}

void check_expression(const Term& e, int line, int column) {
  switch (e.kind()) {
    case Term::Kind::kInt:
    case Term::Kind::kVar:
      return;
    case Term::Kind::kAtom:
      throw SyntaxError("unsupported arithmetic operand '" + e.str() + "'",
                        line, column);
    case Term::Kind::kCompound:
      break;
  }
  bool binary = e.arity() == 2 && (e.name() == "+" || e.name() == "-" ||
                                   e.name() == "*" || e.name() == "//");
  bool unary = e.arity() == 1 && e.name() == "-";
  if (!binary && !unary) {
    throw SyntaxError("unsupported arithmetic operator '" + e.indicator() + "'",
                      line, column);
  }
  for (const Term& a : e.args()) check_expression(a, line, column);
}

}  // namespace

bool is_builtin(const std::string& name, std::size_t arity) {
  if (arity == 2) {
    return name == "is" || name == "=" || name == "==" || name == "\\==" ||
           is_comparison(name);
  }
  if (arity == 3) return name == "between";
  if (arity == 0) return name == "true";
  return false;
}

void check_goal(const Term& goal, int line, int column) {
  if (goal.is_var()) {
    throw SyntaxError("unsupported construct: variable goal '" + goal.name() +
                          "' (meta-call)",
                      line, column);
  }
  if (goal.is_int()) {
    throw SyntaxError("goal is not callable: " + goal.str(), line, column);
  }
  if (is_control(goal)) {
    check_goal(goal.args()[0], line, column);
    check_goal(goal.args()[1], line, column);
    return;
  }
  if (is_unsupported(goal.name())) {
    throw SyntaxError("unsupported construct '" + goal.name() + "'", line,
                      column);
  }
  if (goal.name() == "is" && goal.arity() == 2) {
    check_expression(goal.args()[1], line, column);
    if (!goal.args()[0].is_var() && !goal.args()[0].is_int()) {
      throw SyntaxError("left side of is/2 must be a variable or integer",
                        line, column);
    }
  } else if (goal.arity() == 2 && is_comparison(goal.name())) {
    check_expression(goal.args()[0], line, column);
    check_expression(goal.args()[1], line, column);
  }
}

std::vector<Clause> parse_deterministic(std::string_view text) {
  std::vector<Clause> out;
  for (ReadTerm& rt : read_terms(text)) {
    Clause clause;
    clause.line = rt.line;
    const Term& t = rt.term;
    if (t.is_compound() && t.name() == ":-" && t.arity() == 1) {
      throw SyntaxError("unsupported construct ':-' (directive)", rt.line,
                        rt.column);
    }
    if (t.is_compound() && t.name() == ":-" && t.arity() == 2) {
      clause.head = t.args()[0];
      clause.body = flatten_conjunction(t.args()[1]);
    } else {
      clause.head = t;
    }
    if (!clause.head.is_callable()) {
      throw SyntaxError("clause head is not callable: " + clause.head.str(),
                        rt.line, rt.column);
    }
    if (is_builtin(clause.head.name(), clause.head.arity()) ||
        is_control(clause.head) || is_unsupported(clause.head.name())) {
      throw SyntaxError("cannot redefine builtin " + clause.head.indicator(),
                        rt.line, rt.column);
    }
    for (const Term& g : clause.body) check_goal(g, rt.line, rt.column);
    out.push_back(std::move(clause));
  }
  return out;
}

Program::Program(std::vector<Clause> clauses) : clauses_(std::move(clauses)) {
  for (std::size_t i = 0; i < clauses_.size(); ++i) {
    index_[clauses_[i].head.indicator()].push_back(i);
  }
}

const std::vector<std::size_t>& Program::clauses_for(
    const std::string& indicator) const {
  static const std::vector<std::size_t> kNone;
  auto it = index_.find(indicator);
  return it == index_.end() ? kNone : it->second;
}

namespace {

// Singly linked continuation of pending goals, allocated on the C++ stack.
struct GoalList {
  const Term* goal;
  const GoalList* next;
};

using Consumer = std::function<void(const Substitution&)>;

std::string variant_key(const Term& t) {
  std::vector<std::string> vars;
  t.collect_vars(vars);
  if (vars.empty()) return t.str();
  Substitution s;
  for (std::size_t i = 0; i < vars.size(); ++i) {
    s.bind(vars[i], Term::Var("_V" + std::to_string(i)));
  }
  return s.resolve(t).str();
}

std::int64_t checked(bool overflow, const std::int64_t* v) {
  if (overflow) throw Error("evaluation error: integer overflow");
  return *v;
}

std::int64_t eval(const Term& e, const Substitution& s) {
  const Term& w = s.walk(e);
  switch (w.kind()) {
    case Term::Kind::kInt:
      return w.value();
    case Term::Kind::kVar:
      throw InstantiationError("instantiation error: arithmetic on unbound " +
                               e.str());
    case Term::Kind::kAtom:
      throw Error("type error: not evaluable: " + w.str());
    case Term::Kind::kCompound:
      break;
  }
  if (w.arity() == 1 && w.name() == "-") {
    std::int64_t r = 0;
    return checked(__builtin_sub_overflow(0, eval(w.args()[0], s), &r), &r);
  }
  if (w.arity() != 2) throw Error("type error: not evaluable: " + w.indicator());
  std::int64_t a = eval(w.args()[0], s);
  std::int64_t b = eval(w.args()[1], s);
  std::int64_t r = 0;
  if (w.name() == "+") return checked(__builtin_add_overflow(a, b, &r), &r);
  if (w.name() == "-") return checked(__builtin_sub_overflow(a, b, &r), &r);
  if (w.name() == "*") return checked(__builtin_mul_overflow(a, b, &r), &r);
  if (w.name() == "//") {
    if (b == 0) throw Error("evaluation error: zero_divisor");
    if (a == INT64_MIN && b == -1) checked(true, nullptr);
    return a / b;
  }
  throw Error("type error: not evaluable: " + w.indicator());
}

class Solver {
 public:
  Solver(const Program& program, const SolveLimits& limits)
      : program_(program), limits_(limits) {}

  void run(const std::vector<Term>& goals, const Consumer& k) {
    if (goals.empty()) {
      k(Substitution{});
      return;
    }
    // Build the continuation chain back to front.
    std::vector<GoalList> nodes(goals.size());
    for (std::size_t i = goals.size(); i-- > 0;) {
      nodes[i] = GoalList{&goals[i],
                          i + 1 < goals.size() ? &nodes[i + 1] : nullptr};
    }
    Substitution s;
    solve(&nodes[0], s, k);
  }

 private:
  struct Table {
    std::vector<Term> answers;
    std::unordered_set<std::string> keys;
    bool complete = false;
    bool in_completion_stack = false;
    int stack_pos = -1;
    int link = INT_MAX;
    std::uint64_t epoch = 0;
  };

  void solve(const GoalList* goals, const Substitution& s, const Consumer& k) {
    if (goals == nullptr) {
      k(s);
      return;
    }
    const Term& goal = s.walk(*goals->goal);
    if (goal.is_var()) {
      throw InstantiationError("instantiation error: unbound goal " +
                               goal.name());
    }
    if (goal.is_int()) throw Error("type error: callable expected, got " +
                                   goal.str());
    const std::string& name = goal.name();
    std::size_t arity = goal.arity();

    if (arity == 2 && name == ",") {
      GoalList right{&goal.args()[1], goals->next};
      GoalList left{&goal.args()[0], &right};
      solve(&left, s, k);
      return;
    }
    if (arity == 2 && name == ";") {
      GoalList left{&goal.args()[0], goals->next};
      solve(&left, s, k);
      GoalList right{&goal.args()[1], goals->next};
      solve(&right, s, k);
      return;
    }
    if (is_builtin(name, arity)) {
      builtin(goal, goals->next, s, k);
      return;
    }
    call(goal, goals->next, s, k);
  }

  void builtin(const Term& goal, const GoalList* next, const Substitution& s,
               const Consumer& k) {
    const std::string& name = goal.name();
    if (name == "true") {
      solve(next, s, k);
      return;
    }
    const auto& args = goal.args();
    if (name == "=") {
      Substitution s2 = s;
      if (unify_into(args[0], args[1], s2)) solve(next, s2, k);
      return;
    }
    if (name == "==" || name == "\\==") {
      bool same = s.resolve(args[0]) == s.resolve(args[1]);
      if (same == (name == "==")) solve(next, s, k);
      return;
    }
    if (name == "is") {
      Term value = Term::Int(eval(args[1], s));
      Substitution s2 = s;
      if (unify_into(args[0], value, s2)) solve(next, s2, k);
      return;
    }
    if (is_comparison(name)) {
      std::int64_t a = eval(args[0], s);
      std::int64_t b = eval(args[1], s);
      bool ok = name == "<"    ? a < b
                : name == ">"  ? a > b
                : name == "=<" ? a <= b
                               : a >= b;
      if (ok) solve(next, s, k);
      return;
    }
    // between/3
    const Term& lo = s.walk(args[0]);
    const Term& hi = s.walk(args[1]);
    if (lo.is_var() || hi.is_var()) {
      throw InstantiationError(
          "instantiation error: between/3 needs bound bounds in " +
          s.resolve(goal).str());
    }
    if (!lo.is_int() || !hi.is_int()) {
      throw Error("type error: integer expected in " + s.resolve(goal).str());
    }
    const Term& x = s.walk(args[2]);
    if (x.is_int()) {
      if (x.value() >= lo.value() && x.value() <= hi.value()) solve(next, s, k);
      return;
    }
    if (!x.is_var()) return;
    std::string var = x.name();
    for (std::int64_t v = lo.value(); v <= hi.value(); ++v) {
      Substitution s2 = s;
      s2.bind(var, Term::Int(v));
      solve(next, s2, k);
      if (v == INT64_MAX) break;
    }
  }

  void call(const Term& goal, const GoalList* next, const Substitution& s,
            const Consumer& k) {
    Term resolved = s.resolve(goal);
    Table& table = evaluate(resolved);
    // The table may still grow while we consume it (recursive call).
    for (std::size_t i = 0; i < table.answers.size(); ++i) {
      Term answer = rename_vars(table.answers[i], fresh_suffix());
      Substitution s2 = s;
      if (unify_into(resolved, answer, s2)) solve(next, s2, k);
    }
  }

  std::string fresh_suffix() { return "__" + std::to_string(++rename_counter_); }

  Table& evaluate(const Term& call) {
    std::string key = variant_key(call);
    auto [it, inserted] = tables_.try_emplace(key);
    if (inserted) it->second = std::make_unique<Table>();
    Table& t = *it->second;
    if (t.complete) return t;
    if (t.stack_pos >= 0) {
      link_ = std::min(link_, t.stack_pos);
      return t;
    }
    if (t.epoch == epoch_ && !inserted) {
      link_ = std::min(link_, t.link);
      return t;
    }
    if (call_stack_.size() >= limits_.max_depth) {
      throw ResourceLimitError("derivation depth limit (" +
                               std::to_string(limits_.max_depth) +
                               ") exceeded at " + call.str());
    }

    t.stack_pos = static_cast<int>(call_stack_.size());
    call_stack_.push_back(&t);
    if (!t.in_completion_stack) {
      completion_stack_.push_back(&t);
      t.in_completion_stack = true;
    }
    int saved_link = link_;
    const std::string indicator = call.indicator();
    const auto& clause_ids = program_.clauses_for(indicator);
    while (true) {
      link_ = INT_MAX;
      t.epoch = epoch_;
      std::size_t before = total_answers_;
      for (std::size_t id : clause_ids) {
        const Clause& clause = program_.clauses()[id];
        std::string suffix = fresh_suffix();
        Term head = rename_vars(clause.head, suffix);
        Substitution s;
        if (!unify_into(call, head, s)) continue;
        std::vector<Term> body;
        body.reserve(clause.body.size());
        for (const Term& g : clause.body) body.push_back(rename_vars(g, suffix));
        std::vector<GoalList> nodes(body.size());
        for (std::size_t i = body.size(); i-- > 0;) {
          nodes[i] = GoalList{&body[i],
                              i + 1 < body.size() ? &nodes[i + 1] : nullptr};
        }
        Consumer add = [&](const Substitution& sol) {
          add_answer(t, sol.resolve(call));
        };
        solve(body.empty() ? nullptr : &nodes[0], s, add);
      }
      int my_link = link_;
      if (my_link < t.stack_pos) {
        // Part of an SCC led further down the stack.
        t.link = my_link;
        link_ = std::min(saved_link, my_link);
        break;
      }
      if (my_link == t.stack_pos && total_answers_ != before) {
        ++epoch_;  // leader: another pass over the SCC
        continue;
      }
      while (!completion_stack_.empty()) {
        Table* done = completion_stack_.back();
        completion_stack_.pop_back();
        done->complete = true;
        done->in_completion_stack = false;
        if (done == &t) break;
      }
      link_ = saved_link;
      break;
    }
    call_stack_.pop_back();
    t.stack_pos = -1;
    return t;
  }

  void add_answer(Table& t, Term answer) {
    std::string key = variant_key(answer);
    if (!t.keys.insert(key).second) return;
    t.answers.push_back(std::move(answer));
    if (++total_answers_ > limits_.max_answers) {
      throw ResourceLimitError("answer limit (" +
                               std::to_string(limits_.max_answers) +
                               ") exceeded");
    }
  }

  const Program& program_;
  const SolveLimits& limits_;
  std::unordered_map<std::string, std::unique_ptr<Table>> tables_;
  std::vector<Table*> call_stack_;
  std::vector<Table*> completion_stack_;
  std::size_t total_answers_ = 0;
  std::uint64_t epoch_ = 1;
  std::uint64_t rename_counter_ = 0;
  int link_ = INT_MAX;
};

}  // namespace

std::vector<Substitution> solve(const Program& program,
                                const std::vector<Term>& goals,
                                const SolveLimits& limits) {
  std::vector<std::string> vars;
  for (const Term& g : goals) g.collect_vars(vars);

  std::vector<std::pair<std::vector<std::string>, Substitution>> found;
  std::unordered_set<std::string> seen;
  std::size_t count = 0;
  Solver solver(program, limits);
  std::vector<Term> var_terms;
  for (const std::string& v : vars) var_terms.push_back(Term::Var(v));
  const Term tuple = Term::Compound("answer", var_terms);
  solver.run(goals, [&](const Substitution& s) {
    // Normalize leftover variables so variant answers collapse.
    Term normalized = read_term(variant_key(s.resolve(tuple)));
    if (!seen.insert(normalized.str()).second) return;
    if (++count > limits.max_answers) {
      throw ResourceLimitError("answer limit (" +
                               std::to_string(limits.max_answers) +
                               ") exceeded");
    }
    std::vector<std::string> printed;
    printed.reserve(vars.size());
    for (const Term& a : normalized.args()) printed.push_back(a.str());
    found.emplace_back(std::move(printed), s.restrict_to(vars));
  });
  std::sort(found.begin(), found.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  std::vector<Substitution> out;
  out.reserve(found.size());
  for (auto& f : found) out.push_back(std::move(f.second));
  return out;
}

}  // namespace nmp
