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

#ifndef NMP_GROUNDER_HPP_
#define NMP_GROUNDER_HPP_

#include <optional>
#include <set>
#include <string>
#include <vector>

#include "nmp/logic.hpp"
#include "nmp/nmp_program.hpp"
#include "nmp/term.hpp"

namespace nmp {

// Declared input/output predicates as "name/arity". An empty input set
// means "not declared"; outputs must be non-empty for a build.
struct IoSpec {
  std::set<std::string> inputs;
  std::set<std::string> outputs;

  friend bool operator==(const IoSpec&, const IoSpec&) = default;
};

// Parses "p/1,q/2" into a predicate set.
std::set<std::string> parse_predicate_list(const std::string& text);

// Inputs are predicates never used as a rule head, outputs are predicates
// never used as a rule body.
IoSpec infer_io(const NmpProgram& program);

enum class Role { kInput, kHidden, kOutput };
const char* role_name(Role r);
std::optional<Role> parse_role(const std::string& name);

struct Neuron {
  int id = 0;
  Term atom;
  Role role = Role::kHidden;
  std::optional<Activation> activation;  // none for inputs
  std::optional<int> bias_group;         // none for inputs

  friend bool operator==(const Neuron&, const Neuron&) = default;
};

// One trainable weight: a rule and one combination of its untethered
// variable bindings (in declaration order).
struct WeightGroup {
  int id = 0;
  int rule_id = 0;
  std::vector<Term> key;

  friend bool operator==(const WeightGroup&, const WeightGroup&) = default;
};

// One trainable bias shared by neurons of the same head predicate whose
// head arguments at `positions` (bound by untethered variables) agree.
struct BiasGroup {
  int id = 0;
  std::string predicate;
  std::vector<int> positions;
  std::vector<Term> values;
  std::vector<int> members;

  friend bool operator==(const BiasGroup&, const BiasGroup&) = default;
};

// Directed body -> head connection.
struct Edge {
  int id = 0;
  int from = 0;
  int to = 0;
  int weight_group = 0;

  friend bool operator==(const Edge&, const Edge&) = default;
};

// Feed-forward network. Every record list is sorted by id; ids are stable
// across pruning, so they may have gaps.
struct NetworkGraph {
  std::vector<Neuron> neurons;
  std::vector<Edge> edges;
  std::vector<WeightGroup> weight_groups;
  std::vector<BiasGroup> bias_groups;
  IoSpec io;
  std::vector<int> topological_order;

  const Neuron& neuron(int id) const;
  const WeightGroup& weight_group(int id) const;
  const BiasGroup& bias_group(int id) const;
  const Neuron* find_neuron(const std::string& atom_text) const;

  // Largest id + 1 (0 when empty); sizes dense per-id arrays.
  int neuron_id_bound() const;
  int weight_group_id_bound() const;
  int bias_group_id_bound() const;

  std::size_t count(Role role) const;

  friend bool operator==(const NetworkGraph&, const NetworkGraph&) = default;
};

// (head atom, body atom, untethered key) for one answer of a rule's query.
struct GroundInstance {
  Term head;
  Term body;
  std::vector<Term> key;

  friend bool operator==(const GroundInstance&, const GroundInstance&) = default;
};

// Distinct ground instances of a rule, sorted by (key, head, body).
std::vector<GroundInstance> ground_rule(const InterpretedRule& rule,
                                        const Program& program,
                                        const SolveLimits& limits = {});

struct BuildOptions {
  SolveLimits limits;
  // Ground rules on separate threads; the result does not depend on it.
  bool parallel = true;
  bool prune = true;
};

NetworkGraph build_network(const NmpProgram& program, const IoSpec& io,
                           const BuildOptions& options = {});

// Keeps exactly the neurons with a directed path to an output neuron.
// Throws CompileError("no output reachable") when nothing survives.
NetworkGraph prune_unreachable(const NetworkGraph& graph);

// Deterministic Kahn order (smallest id first). Throws CompileError naming
// one cycle when the graph is cyclic.
std::vector<int> topological_sort(const NetworkGraph& graph);

// Checks id uniqueness, references, roles, group consistency, acyclicity
// and the stored topological order. Throws SchemaError.
void validate_graph(const NetworkGraph& graph);

}  // namespace nmp

#endif  // NMP_GROUNDER_HPP_
