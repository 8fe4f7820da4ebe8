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

#include "nmp/nmp_program.hpp"

#include <algorithm>

#include "nmp/error.hpp"
#include "nmp/reader.hpp"

namespace nmp {

const char* activation_name(Activation a) {
  switch (a) {
    case Activation::kSigmoid:
      return "sigmoid";
    case Activation::kRelu:
      return "relu";
    case Activation::kLinear:
      return "linear";
  }
  return "?";
}

std::optional<Activation> parse_activation(std::string_view name) {
  if (name == "sigmoid") return Activation::kSigmoid;
  if (name == "relu") return Activation::kRelu;
  if (name == "linear") return Activation::kLinear;
  return std::nullopt;
}

namespace {

bool is_literal(const Term& t) {
  if (!t.is_callable()) return false;
  if (is_builtin(t.name(), t.arity())) return false;
  if (t.arity() == 2 && (t.name() == "," || t.name() == ";")) return false;
  return true;
}

bool is_option_block(const Term& t) {
  return t.is_compound() && t.name() == "+" && t.arity() == 1;
}

std::string rule_prefix(int rule_id) {
  return "rule " + std::to_string(rule_id) + ": ";
}

std::vector<Term> list_items(const Term& list, int rule_id) {
  std::vector<Term> items;
  const Term* cur = &list;
  while (cur->is_compound() && cur->name() == "[|]" && cur->arity() == 2) {
    items.push_back(cur->args()[0]);
    cur = &cur->args()[1];
  }
  if (!(cur->is_atom() && cur->name() == "[]")) {
    throw CompileError(rule_prefix(rule_id) +
                       "option block must be a list, got " + list.str());
  }
  return items;
}

void parse_options(const Term& block, InterpretedRule& rule) {
  const Term& list = block.args()[0];
  std::vector<Term> items = list_items(list, rule.rule_id);
  std::vector<std::string> seen;
  std::string current;
  std::vector<Term> values;

  auto flush = [&]() {
    if (current.empty()) return;
    if (current == "untethered") {
      for (const Term& v : values) {
        if (!v.is_var()) {
          throw CompileError(rule_prefix(rule.rule_id) +
                             "untethered expects variables, got " + v.str());
        }
        if (std::find(rule.untethered.begin(), rule.untethered.end(),
                      v.name()) != rule.untethered.end()) {
          throw CompileError(rule_prefix(rule.rule_id) +
                             "duplicate untethered variable " + v.name());
        }
        rule.untethered.push_back(v.name());
      }
    } else {
      if (values.size() != 1 || !values[0].is_atom()) {
        std::string got;
        for (const Term& v : values) got += (got.empty() ? "" : ", ") + v.str();
        throw CompileError(rule_prefix(rule.rule_id) +
                           "activation expects one name, got " + got);
      }
      auto act = parse_activation(values[0].name());
      if (!act) {
        throw CompileError(rule_prefix(rule.rule_id) +
                           "unsupported activation '" + values[0].name() +
                           "' (expected sigmoid, relu or linear)");
      }
      rule.activation = *act;
      rule.explicit_activation = true;
    }
    values.clear();
  };

  for (const Term& item : items) {
    if (item.is_compound() && item.name() == ":" && item.arity() == 2) {
      flush();
      const Term& key = item.args()[0];
      if (!key.is_atom()) {
        throw CompileError(rule_prefix(rule.rule_id) + "bad option key " +
                           key.str());
      }
      if (key.name() != "untethered" && key.name() != "activation") {
        throw CompileError(rule_prefix(rule.rule_id) +
                           "unrecognized option '" + key.name() +
                           "' (recognized options: untethered, activation)");
      }
      if (std::find(seen.begin(), seen.end(), key.name()) != seen.end()) {
        throw CompileError(rule_prefix(rule.rule_id) + "duplicate option '" +
                           key.name() + "'");
      }
      seen.push_back(key.name());
      current = key.name();
      values.push_back(item.args()[1]);
    } else if (current.empty()) {
      throw CompileError(rule_prefix(rule.rule_id) + "option value " +
                         item.str() + " has no key");
    } else {
      values.push_back(item);
    }
  }
  flush();
}

}  // namespace

std::vector<InterpretedRule> parse_interpreted(std::string_view text) {
  std::vector<InterpretedRule> rules;
  for (ReadTerm& rt : read_terms(text, ReaderOptions{.allow_lists = true})) {
    InterpretedRule rule;
    rule.rule_id = static_cast<int>(rules.size());
    rule.line = rt.line;
    const Term& t = rt.term;
    if (!(t.is_compound() && t.name() == ":-" && t.arity() == 2)) {
      throw SyntaxError(rule_prefix(rule.rule_id) +
                            "interpreted rule must have the form "
                            "head :- body, query, +[options]",
                        rt.line, rt.column);
    }
    rule.head = t.args()[0];
    if (!is_literal(rule.head)) {
      throw SyntaxError(rule_prefix(rule.rule_id) +
                            "head must be a positive literal, got " +
                            rule.head.str(),
                        rt.line, rt.column);
    }
    std::vector<Term> conjuncts = flatten_conjunction(t.args()[1]);
    if (is_option_block(conjuncts.back())) {
      parse_options(conjuncts.back(), rule);
      conjuncts.pop_back();
    }
    if (conjuncts.empty()) {
      throw SyntaxError(rule_prefix(rule.rule_id) + "missing body literal",
                        rt.line, rt.column);
    }
    rule.body = conjuncts.front();
    if (!is_literal(rule.body)) {
      throw SyntaxError(rule_prefix(rule.rule_id) +
                            "body must be a positive literal, got " +
                            rule.body.str(),
                        rt.line, rt.column);
    }
    for (std::size_t i = 1; i < conjuncts.size(); ++i) {
      if (is_option_block(conjuncts[i])) {
        throw SyntaxError(
            rule_prefix(rule.rule_id) + "option block must be the last conjunct",
            rt.line, rt.column);
      }
      check_goal(conjuncts[i], rt.line, rt.column);
      rule.query.push_back(conjuncts[i]);
    }
    rules.push_back(std::move(rule));
  }
  return rules;
}

std::string InterpretedRule::str() const {
  std::string out = head.str() + " :- " + body.str();
  for (const Term& g : query) out += ", " + g.str();
  if (!untethered.empty() || explicit_activation) {
    out += ", +[";
    bool first = true;
    if (!untethered.empty()) {
      out += "untethered: ";
      for (std::size_t i = 0; i < untethered.size(); ++i) {
        if (i > 0) out += ", ";
        out += untethered[i];
      }
      first = false;
    }
    if (explicit_activation) {
      if (!first) out += ", ";
      out += "activation: ";
      out += activation_name(activation);
    }
    out += ']';
  }
  out += '.';
  return out;
}

std::string NmpProgram::str() const {
  std::string out;
  for (const Clause& c : deterministic) out += c.str() + "\n";
  out += kInterpretedMarker;
  out += '\n';
  for (const InterpretedRule& r : interpreted) out += r.str() + "\n";
  return out;
}

SourceSections split_sections(std::string_view text) {
  SourceSections out;
  std::size_t line_start = 0;
  while (line_start <= text.size()) {
    std::size_t end = text.find('\n', line_start);
    std::string_view line = text.substr(
        line_start, end == std::string_view::npos ? std::string_view::npos
                                                  : end - line_start);
    std::string_view trimmed = line;
    while (!trimmed.empty() &&
           (trimmed.back() == '\r' || trimmed.back() == ' ' ||
            trimmed.back() == '\t')) {
      trimmed.remove_suffix(1);
    }
    if (trimmed == kInterpretedMarker) {
      out.has_marker = true;
      out.deterministic = std::string(text.substr(0, line_start));
      std::size_t lines_before =
          std::count(text.begin(), text.begin() + line_start, '\n') + 1;
      out.interpreted = std::string(lines_before, '\n');
      if (end != std::string_view::npos) {
        out.interpreted += std::string(text.substr(end + 1));
      }
      return out;
    }
    if (end == std::string_view::npos) break;
    line_start = end + 1;
  }
  out.interpreted = std::string(text);
  return out;
}

NmpProgram assemble_program(std::string_view det_text,
                            std::string_view nmp_text) {
  NmpProgram program;
  SourceSections sections = split_sections(nmp_text);
  program.deterministic = parse_deterministic(det_text);
  if (sections.has_marker) {
    auto extra = parse_deterministic(sections.deterministic);
    program.deterministic.insert(program.deterministic.end(), extra.begin(),
                                 extra.end());
  }
  program.interpreted = parse_interpreted(sections.interpreted);
  if (program.interpreted.empty()) {
    throw CompileError(
        "missing interpreted section: the program defines no network");
  }
  for (const InterpretedRule& rule : program.interpreted) {
    std::vector<std::string> vars;
    rule.head.collect_vars(vars);
    rule.body.collect_vars(vars);
    for (const Term& g : rule.query) g.collect_vars(vars);
    for (const std::string& u : rule.untethered) {
      if (std::find(vars.begin(), vars.end(), u) == vars.end()) {
        throw CompileError(rule_prefix(rule.rule_id) + "untethered variable " +
                           u + " occurs nowhere in the rule");
      }
    }
    program.neuron_predicates.insert(rule.head.indicator());
    program.neuron_predicates.insert(rule.body.indicator());
  }
  return program;
}

}  // namespace nmp
