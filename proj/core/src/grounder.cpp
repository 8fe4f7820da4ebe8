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

#include "nmp/grounder.hpp"

#include <algorithm>
#include <future>
#include <map>
#include <queue>
#include <sstream>
#include <tuple>

#include "nmp/error.hpp"

namespace nmp {

std::set<std::string> parse_predicate_list(const std::string& text) {
  std::set<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    auto b = item.find_first_not_of(" \t");
    auto e = item.find_last_not_of(" \t");
    if (b == std::string::npos) continue;
    item = item.substr(b, e - b + 1);
    auto slash = item.rfind('/');
    if (slash == std::string::npos || slash == 0 || slash + 1 == item.size() ||
        item.find_first_not_of("0123456789", slash + 1) != std::string::npos) {
      throw Error("bad predicate indicator '" + item +
                  "' (expected name/arity)");
    }
    out.insert(item);
  }
  return out;
}

IoSpec infer_io(const NmpProgram& program) {
  std::set<std::string> heads;
  std::set<std::string> bodies;
  for (const InterpretedRule& r : program.interpreted) {
    heads.insert(r.head.indicator());
    bodies.insert(r.body.indicator());
  }
  IoSpec io;
  for (const std::string& b : bodies) {
    if (!heads.count(b)) io.inputs.insert(b);
  }
  for (const std::string& h : heads) {
    if (!bodies.count(h)) io.outputs.insert(h);
  }
  return io;
}

const char* role_name(Role r) {
  switch (r) {
    case Role::kInput:
      return "input";
    case Role::kHidden:
      return "hidden";
    case Role::kOutput:
      return "output";
  }
  return "?";
}

std::optional<Role> parse_role(const std::string& name) {
  if (name == "input") return Role::kInput;
  if (name == "hidden") return Role::kHidden;
  if (name == "output") return Role::kOutput;
  return std::nullopt;
}

namespace {

template <typename T>
const T& find_by_id(const std::vector<T>& items, int id, const char* what) {
  auto it = std::lower_bound(items.begin(), items.end(), id,
                             [](const T& x, int v) { return x.id < v; });
  if (it == items.end() || it->id != id) {
    throw Error(std::string("no ") + what + " with id " + std::to_string(id));
  }
  return *it;
}

template <typename T>
int id_bound(const std::vector<T>& items) {
  return items.empty() ? 0 : items.back().id + 1;
}

}  // namespace

const Neuron& NetworkGraph::neuron(int id) const {
  return find_by_id(neurons, id, "neuron");
}
const WeightGroup& NetworkGraph::weight_group(int id) const {
  return find_by_id(weight_groups, id, "weight group");
}
const BiasGroup& NetworkGraph::bias_group(int id) const {
  return find_by_id(bias_groups, id, "bias group");
}

const Neuron* NetworkGraph::find_neuron(const std::string& atom_text) const {
  for (const Neuron& n : neurons) {
    if (n.atom.str() == atom_text) return &n;
  }
  return nullptr;
}

int NetworkGraph::neuron_id_bound() const { return id_bound(neurons); }
int NetworkGraph::weight_group_id_bound() const {
  return id_bound(weight_groups);
}
int NetworkGraph::bias_group_id_bound() const { return id_bound(bias_groups); }

std::size_t NetworkGraph::count(Role role) const {
  return std::count_if(neurons.begin(), neurons.end(),
                       [&](const Neuron& n) { return n.role == role; });
}

std::vector<GroundInstance> ground_rule(const InterpretedRule& rule,
                                        const Program& program,
                                        const SolveLimits& limits) {
  std::vector<Substitution> answers;
  try {
    answers = solve(program, rule.query, limits);
  } catch (const Error& e) {
    throw CompileError("rule " + std::to_string(rule.rule_id) +
                       ": query failed: " + e.what());
  }
  std::vector<GroundInstance> out;
  out.reserve(answers.size());
  for (const Substitution& s : answers) {
    GroundInstance g{s.resolve(rule.head), s.resolve(rule.body), {}};
    for (const Term* lit : {&g.head, &g.body}) {
      if (!lit->is_ground()) {
        std::vector<std::string> vars;
        lit->collect_vars(vars);
        throw CompileError("rule " + std::to_string(rule.rule_id) +
                           ": variable " + vars.front() +
                           " is unbound after grounding " + lit->str());
      }
    }
    for (const std::string& u : rule.untethered) {
      Term v = s.resolve(Term::Var(u));
      if (!v.is_ground()) {
        throw CompileError("rule " + std::to_string(rule.rule_id) +
                           ": untethered variable " + u +
                           " is unbound after grounding");
      }
      g.key.push_back(std::move(v));
    }
    out.push_back(std::move(g));
  }
  auto less = [](const GroundInstance& a, const GroundInstance& b) {
    if (lexicographic_less(a.key, b.key)) return true;
    if (lexicographic_less(b.key, a.key)) return false;
    if (auto c = compare_terms(a.head, b.head); c != 0) return c < 0;
    return compare_terms(a.body, b.body) < 0;
  };
  std::sort(out.begin(), out.end(), less);
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

namespace {

std::vector<std::vector<int>> successors(const NetworkGraph& g,
                                         std::vector<int>& indeg) {
  int bound = g.neuron_id_bound();
  std::vector<std::vector<int>> succ(bound);
  indeg.assign(bound, 0);
  for (const Edge& e : g.edges) {
    succ[e.from].push_back(e.to);
    ++indeg[e.to];
  }
  return succ;
}

// One cycle as atom text, or empty when acyclic.
std::string find_cycle(const NetworkGraph& g) {
  std::vector<int> indeg;
  auto succ = successors(g, indeg);
  int bound = g.neuron_id_bound();
  std::vector<int> color(bound, 0);
  std::vector<int> parent(bound, -1);
  for (const Neuron& start : g.neurons) {
    if (color[start.id] != 0) continue;
    std::vector<std::pair<int, std::size_t>> stack{{start.id, 0}};
    color[start.id] = 1;
    while (!stack.empty()) {
      auto& [node, idx] = stack.back();
      if (idx < succ[node].size()) {
        int next = succ[node][idx++];
        if (color[next] == 1) {
          std::vector<int> cycle{next};
          for (int cur = node; cur != next; cur = parent[cur]) {
            cycle.push_back(cur);
          }
          cycle.push_back(next);
          std::reverse(cycle.begin(), cycle.end());
          std::string out;
          for (std::size_t i = 0; i < cycle.size(); ++i) {
            if (i > 0) out += " -> ";
            out += g.neuron(cycle[i]).atom.str();
          }
          return out;
        }
        if (color[next] == 0) {
          color[next] = 1;
          parent[next] = node;
          stack.emplace_back(next, 0);
        }
      } else {
        color[node] = 2;
        stack.pop_back();
      }
    }
  }
  return {};
}

using BiasKey = std::tuple<std::string, std::vector<int>, std::vector<Term>>;

bool bias_key_less(const BiasKey& a, const BiasKey& b) {
  if (std::get<0>(a) != std::get<0>(b)) return std::get<0>(a) < std::get<0>(b);
  if (std::get<1>(a) != std::get<1>(b)) return std::get<1>(a) < std::get<1>(b);
  return lexicographic_less(std::get<2>(a), std::get<2>(b));
}

}  // namespace

std::vector<int> topological_sort(const NetworkGraph& graph) {
  std::vector<int> indeg;
  auto succ = successors(graph, indeg);
  std::priority_queue<int, std::vector<int>, std::greater<>> ready;
  for (const Neuron& n : graph.neurons) {
    if (indeg[n.id] == 0) ready.push(n.id);
  }
  std::vector<int> order;
  order.reserve(graph.neurons.size());
  while (!ready.empty()) {
    int n = ready.top();
    ready.pop();
    order.push_back(n);
    for (int m : succ[n]) {
      if (--indeg[m] == 0) ready.push(m);
    }
  }
  if (order.size() != graph.neurons.size()) {
    throw CompileError("network is cyclic: " + find_cycle(graph));
  }
  return order;
}

NetworkGraph build_network(const NmpProgram& program, const IoSpec& io,
                           const BuildOptions& options) {
  if (io.outputs.empty()) {
    throw CompileError("no output predicates declared");
  }
  for (const std::string& p : io.inputs) {
    if (io.outputs.count(p)) {
      throw CompileError("predicate " + p + " declared as both input and output");
    }
  }

  const Program det(program.deterministic);
  const auto& rules = program.interpreted;
  std::vector<std::vector<GroundInstance>> grounded(rules.size());
  if (options.parallel && rules.size() > 1) {
    std::vector<std::future<std::vector<GroundInstance>>> jobs;
    for (const InterpretedRule& r : rules) {
      jobs.push_back(std::async(std::launch::async, [&det, &r, &options] {
        return ground_rule(r, det, options.limits);
      }));
    }
    // Collect in rule order so the first failing rule is reported.
    for (std::size_t i = 0; i < jobs.size(); ++i) jobs[i].wait();
    for (std::size_t i = 0; i < jobs.size(); ++i) grounded[i] = jobs[i].get();
  } else {
    for (std::size_t i = 0; i < rules.size(); ++i) {
      grounded[i] = ground_rule(rules[i], det, options.limits);
    }
  }

  // Neurons: every ground head/body atom, numbered in standard term order.
  std::map<Term, int, TermLess> neuron_ids;
  std::set<Term, TermLess> heads;
  for (const auto& insts : grounded) {
    for (const GroundInstance& g : insts) {
      neuron_ids.emplace(g.head, 0);
      neuron_ids.emplace(g.body, 0);
      heads.insert(g.head);
    }
  }
  NetworkGraph graph;
  graph.io = io;
  {
    int next = 0;
    for (auto& [atom, id] : neuron_ids) {
      id = next++;
      Neuron n;
      n.id = id;
      n.atom = atom;
      if (!heads.count(atom)) {
        n.role = Role::kInput;
      } else if (io.outputs.count(atom.indicator())) {
        n.role = Role::kOutput;
      } else {
        n.role = Role::kHidden;
      }
      graph.neurons.push_back(std::move(n));
    }
  }

  for (const std::string& out : io.outputs) {
    bool found = false;
    for (const Neuron& n : graph.neurons) {
      if (n.atom.indicator() != out) continue;
      found = true;
      if (n.role == Role::kInput) {
        throw CompileError("output neuron " + n.atom.str() +
                           " is never produced by a rule head");
      }
    }
    if (!found) {
      throw CompileError("output predicate " + out + " grounds to no neuron");
    }
  }
  if (!io.inputs.empty()) {
    std::string offending;
    for (const Neuron& n : graph.neurons) {
      if (n.role == Role::kInput && !io.inputs.count(n.atom.indicator())) {
        offending += (offending.empty() ? "" : ", ") + n.atom.str();
      }
    }
    if (!offending.empty()) {
      throw CompileError(
          "neurons never produced by a rule are not declared inputs: " +
          offending);
    }
  }

  // Weight groups in (rule, key) order.
  std::map<std::pair<int, std::vector<Term>>, int,
           bool (*)(const std::pair<int, std::vector<Term>>&,
                    const std::pair<int, std::vector<Term>>&)>
      group_ids([](const std::pair<int, std::vector<Term>>& a,
                   const std::pair<int, std::vector<Term>>& b) {
        if (a.first != b.first) return a.first < b.first;
        return lexicographic_less(a.second, b.second);
      });
  for (std::size_t r = 0; r < grounded.size(); ++r) {
    for (const GroundInstance& g : grounded[r]) {
      group_ids.emplace(std::make_pair(static_cast<int>(r), g.key), 0);
    }
  }
  {
    int next = 0;
    for (auto& [k, id] : group_ids) {
      id = next++;
      graph.weight_groups.push_back(WeightGroup{id, k.first, k.second});
    }
  }

  // Edges, deduplicated on (from, to, group).
  std::set<std::tuple<int, int, int>> edge_set;
  for (std::size_t r = 0; r < grounded.size(); ++r) {
    for (const GroundInstance& g : grounded[r]) {
      int wg = group_ids.at({static_cast<int>(r), g.key});
      edge_set.emplace(wg, neuron_ids.at(g.body), neuron_ids.at(g.head));
    }
  }
  for (const auto& [wg, from, to] : edge_set) {
    graph.edges.push_back(
        Edge{static_cast<int>(graph.edges.size()), from, to, wg});
  }

  // Activations and bias-key positions from every rule producing a neuron.
  std::vector<std::set<Activation>> acts(graph.neurons.size());
  std::vector<std::set<int>> positions(graph.neurons.size());
  for (std::size_t r = 0; r < grounded.size(); ++r) {
    const InterpretedRule& rule = rules[r];
    std::vector<int> untethered_pos;
    for (std::size_t p = 0; p < rule.head.arity(); ++p) {
      const Term& a = rule.head.args()[p];
      if (a.is_var() &&
          std::find(rule.untethered.begin(), rule.untethered.end(), a.name()) !=
              rule.untethered.end()) {
        untethered_pos.push_back(static_cast<int>(p));
      }
    }
    for (const GroundInstance& g : grounded[r]) {
      int id = neuron_ids.at(g.head);
      acts[id].insert(rule.activation);
      positions[id].insert(untethered_pos.begin(), untethered_pos.end());
    }
  }
  std::vector<std::pair<BiasKey, int>> bias_members;
  for (Neuron& n : graph.neurons) {
    if (n.role == Role::kInput) continue;
    if (acts[n.id].size() > 1) {
      std::string names;
      for (Activation a : acts[n.id]) {
        names += (names.empty() ? "" : ", ") + std::string(activation_name(a));
      }
      throw CompileError("activation conflict on " + n.atom.str() + ": " +
                         names);
    }
    n.activation = *acts[n.id].begin();
    std::vector<int> pos(positions[n.id].begin(), positions[n.id].end());
    std::vector<Term> values;
    for (int p : pos) values.push_back(n.atom.args()[p]);
    bias_members.emplace_back(BiasKey{n.atom.indicator(), pos, values}, n.id);
  }
  std::stable_sort(bias_members.begin(), bias_members.end(),
                   [](const auto& a, const auto& b) {
                     return bias_key_less(a.first, b.first);
                   });
  for (std::size_t i = 0; i < bias_members.size(); ++i) {
    const auto& [key, member] = bias_members[i];
    if (i == 0 || bias_key_less(bias_members[i - 1].first, key)) {
      BiasGroup bg;
      bg.id = static_cast<int>(graph.bias_groups.size());
      bg.predicate = std::get<0>(key);
      bg.positions = std::get<1>(key);
      bg.values = std::get<2>(key);
      graph.bias_groups.push_back(std::move(bg));
    }
    graph.bias_groups.back().members.push_back(member);
    graph.neurons[member].bias_group = graph.bias_groups.back().id;
  }
  for (BiasGroup& bg : graph.bias_groups) {
    std::sort(bg.members.begin(), bg.members.end());
  }

  if (std::string cycle = find_cycle(graph); !cycle.empty()) {
    throw CompileError("network is cyclic: " + cycle);
  }
  graph.topological_order = topological_sort(graph);
  if (options.prune) graph = prune_unreachable(graph);
  return graph;
}

NetworkGraph prune_unreachable(const NetworkGraph& graph) {
  int bound = graph.neuron_id_bound();
  std::vector<std::vector<int>> preds(bound);
  for (const Edge& e : graph.edges) preds[e.to].push_back(e.from);
  std::vector<char> keep(bound, 0);
  std::vector<int> work;
  for (const Neuron& n : graph.neurons) {
    if (graph.io.outputs.count(n.atom.indicator()) && n.role != Role::kInput) {
      keep[n.id] = 1;
      work.push_back(n.id);
    }
  }
  while (!work.empty()) {
    int n = work.back();
    work.pop_back();
    for (int p : preds[n]) {
      if (!keep[p]) {
        keep[p] = 1;
        work.push_back(p);
      }
    }
  }
  NetworkGraph out;
  out.io = graph.io;
  for (const Neuron& n : graph.neurons) {
    if (keep[n.id]) out.neurons.push_back(n);
  }
  if (out.neurons.empty()) throw CompileError("no output reachable");
  std::set<int> used_groups;
  for (const Edge& e : graph.edges) {
    if (keep[e.from] && keep[e.to]) {
      out.edges.push_back(e);
      used_groups.insert(e.weight_group);
    }
  }
  for (const WeightGroup& wg : graph.weight_groups) {
    if (used_groups.count(wg.id)) out.weight_groups.push_back(wg);
  }
  for (const BiasGroup& bg : graph.bias_groups) {
    BiasGroup kept = bg;
    kept.members.clear();
    for (int m : bg.members) {
      if (keep[m]) kept.members.push_back(m);
    }
    if (!kept.members.empty()) out.bias_groups.push_back(std::move(kept));
  }
  for (int n : graph.topological_order) {
    if (keep[n]) out.topological_order.push_back(n);
  }
  if (out.topological_order.size() != out.neurons.size()) {
    out.topological_order = topological_sort(out);
  }
  return out;
}

void validate_graph(const NetworkGraph& g) {
  auto check_ids = [](const auto& items, const char* what) {
    for (std::size_t i = 0; i < items.size(); ++i) {
      if (items[i].id < 0 || (i > 0 && items[i].id <= items[i - 1].id)) {
        throw SchemaError(std::string(what) +
                          " ids must be unique, non-negative and ascending");
      }
    }
  };
  check_ids(g.neurons, "neuron");
  check_ids(g.edges, "edge");
  check_ids(g.weight_groups, "weight group");
  check_ids(g.bias_groups, "bias group");

  auto has = [](const auto& items, int id) {
    auto it = std::lower_bound(
        items.begin(), items.end(), id,
        [](const auto& x, int v) { return x.id < v; });
    return it != items.end() && it->id == id;
  };
  std::set<std::string> atoms;
  for (const Neuron& n : g.neurons) {
    if (!n.atom.is_callable() || !n.atom.is_ground()) {
      throw SchemaError("neuron " + std::to_string(n.id) +
                        " atom is not a ground literal");
    }
    if (!atoms.insert(n.atom.str()).second) {
      throw SchemaError("duplicate neuron atom " + n.atom.str());
    }
    bool input = n.role == Role::kInput;
    if (input != !n.activation.has_value() ||
        input != !n.bias_group.has_value()) {
      throw SchemaError("neuron " + n.atom.str() +
                        ": inputs carry no activation or bias, others must");
    }
    if (n.bias_group && !has(g.bias_groups, *n.bias_group)) {
      throw SchemaError("neuron " + n.atom.str() + " references missing bias group");
    }
  }
  std::set<std::tuple<int, int, int>> seen;
  std::vector<char> has_incoming(g.neuron_id_bound(), 0);
  for (const Edge& e : g.edges) {
    if (!has(g.neurons, e.from) || !has(g.neurons, e.to)) {
      throw SchemaError("edge " + std::to_string(e.id) +
                        " references a missing neuron");
    }
    if (!has(g.weight_groups, e.weight_group)) {
      throw SchemaError("edge " + std::to_string(e.id) +
                        " references a missing weight group");
    }
    if (!seen.emplace(e.from, e.to, e.weight_group).second) {
      throw SchemaError("duplicate edge " + std::to_string(e.id));
    }
    has_incoming[e.to] = 1;
  }
  for (const Neuron& n : g.neurons) {
    if (n.role == Role::kInput && has_incoming[n.id]) {
      throw SchemaError("input neuron " + n.atom.str() + " has incoming edges");
    }
  }
  std::set<std::pair<int, std::string>> wg_keys;
  for (const WeightGroup& wg : g.weight_groups) {
    std::string key;
    for (const Term& t : wg.key) key += t.str() + "\x1f";
    if (!wg_keys.emplace(wg.rule_id, key).second) {
      throw SchemaError("duplicate weight group key in rule " +
                        std::to_string(wg.rule_id));
    }
  }
  for (const BiasGroup& bg : g.bias_groups) {
    if (bg.positions.size() != bg.values.size()) {
      throw SchemaError("bias group " + std::to_string(bg.id) +
                        " positions/values length mismatch");
    }
    for (int m : bg.members) {
      if (!has(g.neurons, m) || g.neuron(m).bias_group != bg.id) {
        throw SchemaError("bias group " + std::to_string(bg.id) +
                          " membership is inconsistent");
      }
    }
  }
  for (const Neuron& n : g.neurons) {
    if (n.bias_group) {
      const auto& members = g.bias_group(*n.bias_group).members;
      if (std::find(members.begin(), members.end(), n.id) == members.end()) {
        throw SchemaError("bias group membership is inconsistent for " +
                          n.atom.str());
      }
    }
  }
  if (g.io.outputs.empty()) throw SchemaError("io_spec.outputs is empty");

  std::string cycle;
  try {
    cycle = find_cycle(g);
  } catch (const Error&) {
    throw SchemaError("graph references are inconsistent");
  }
  if (!cycle.empty()) {
    throw SchemaError("invariant violation: network is cyclic: " + cycle);
  }
  if (g.topological_order.size() != g.neurons.size()) {
    throw SchemaError("topological_order must list every neuron once");
  }
  std::vector<int> position(g.neuron_id_bound(), -1);
  for (std::size_t i = 0; i < g.topological_order.size(); ++i) {
    int id = g.topological_order[i];
    if (id < 0 || id >= g.neuron_id_bound() || !has(g.neurons, id) ||
        position[id] != -1) {
      throw SchemaError("topological_order must list every neuron once");
    }
    position[id] = static_cast<int>(i);
  }
  for (const Edge& e : g.edges) {
    if (position[e.from] >= position[e.to]) {
      throw SchemaError("topological_order violates edge " +
                        std::to_string(e.id));
    }
  }
}

}  // namespace nmp
