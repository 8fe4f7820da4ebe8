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

#ifndef NMP_NMP_PROGRAM_HPP_
#define NMP_NMP_PROGRAM_HPP_

#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "nmp/logic.hpp"
#include "nmp/term.hpp"

namespace nmp {

enum class Activation { kSigmoid, kRelu, kLinear };

const char* activation_name(Activation a);
std::optional<Activation> parse_activation(std::string_view name);

// One interpreted line:
//
//   head :- body, query..., +[untethered: V1,...,Vn, activation: act].
//
// The first conjunct after ':-' is the body literal; everything up to the
// trailing option block is the grounding query.
struct InterpretedRule {
  int rule_id = 0;
  Term head;
  Term body;
  std::vector<Term> query;
  std::vector<std::string> untethered;
  Activation activation = Activation::kSigmoid;
  // Whether activation was written explicitly (kept for printing).
  bool explicit_activation = false;
  int line = 0;

  std::string str() const;
  friend bool operator==(const InterpretedRule& a, const InterpretedRule& b) {
    return a.rule_id == b.rule_id && a.head == b.head && a.body == b.body &&
           a.query == b.query && a.untethered == b.untethered &&
           a.activation == b.activation;
  }
};

struct NmpProgram {
  std::vector<Clause> deterministic;
  std::vector<InterpretedRule> interpreted;
  // Predicate indicators that name neurons (heads and bodies of rules).
  std::set<std::string> neuron_predicates;

  // Combined-file rendering: deterministic clauses, the section marker,
  // then the interpreted rules. Re-parses to an identical program.
  std::string str() const;
};

inline constexpr std::string_view kInterpretedMarker = "%% interpreted";

std::vector<InterpretedRule> parse_interpreted(std::string_view text);

// Validates and assembles both sections. A marker inside nmp_text splits off
// an extra deterministic part. Throws CompileError when there are no
// interpreted rules or an untethered variable occurs nowhere in its rule.
NmpProgram assemble_program(std::string_view det_text,
                            std::string_view nmp_text);

// Splits a combined file at the "%% interpreted" marker line. Without the
// marker the whole text is treated as the interpreted section. The
// interpreted part keeps its original line numbers (the deterministic
// lines are blanked).
struct SourceSections {
  std::string deterministic;
  std::string interpreted;
  bool has_marker = false;
};
SourceSections split_sections(std::string_view text);

}  // namespace nmp

#endif  // NMP_NMP_PROGRAM_HPP_
