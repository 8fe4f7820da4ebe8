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

#include "nmp/network_ir.hpp"

#include <algorithm>
#include <cmath>

#include "json.hpp"
#include "nmp/error.hpp"
#include "nmp/reader.hpp"

namespace nmp {

using json = nlohmann::json;

namespace {

json terms_json(const std::vector<Term>& terms) {
  json arr = json::array();
  for (const Term& t : terms) arr.push_back(t.str());
  return arr;
}

json set_json(const std::set<std::string>& s) {
  json arr = json::array();
  for (const std::string& x : s) arr.push_back(x);
  return arr;
}

}  // namespace

std::string export_json(const NetworkGraph& graph) {
  json doc;
  doc["format_version"] = kGraphFormatVersion;

  json neurons = json::array();
  for (const Neuron& n : graph.neurons) {
    json rec;
    rec["id"] = n.id;
    rec["atom"] = n.atom.str();
    rec["role"] = role_name(n.role);
    rec["activation"] =
        n.activation ? json(activation_name(*n.activation)) : json(nullptr);
    rec["bias_group"] = n.bias_group ? json(*n.bias_group) : json(nullptr);
    neurons.push_back(std::move(rec));
  }
  doc["neurons"] = std::move(neurons);

  json edges = json::array();
  for (const Edge& e : graph.edges) {
    edges.push_back(
        {{"id", e.id}, {"from", e.from}, {"to", e.to},
         {"weight_group", e.weight_group}});
  }
  doc["edges"] = std::move(edges);

  json wgs = json::array();
  for (const WeightGroup& wg : graph.weight_groups) {
    wgs.push_back(
        {{"id", wg.id}, {"rule_id", wg.rule_id}, {"key", terms_json(wg.key)}});
  }
  doc["weight_groups"] = std::move(wgs);

  json bgs = json::array();
  for (const BiasGroup& bg : graph.bias_groups) {
    bgs.push_back({{"id", bg.id},
                   {"predicate", bg.predicate},
                   {"positions", bg.positions},
                   {"values", terms_json(bg.values)},
                   {"members", bg.members}});
  }
  doc["bias_groups"] = std::move(bgs);

  doc["io_spec"] = {{"inputs", set_json(graph.io.inputs)},
                    {"outputs", set_json(graph.io.outputs)}};
  doc["topological_order"] = graph.topological_order;
  return doc.dump(2) + "\n";
}

namespace {

const json& field(const json& obj, const char* key, const char* where) {
  if (!obj.is_object() || !obj.contains(key)) {
    throw SchemaError(std::string(where) + ": missing field '" + key + "'");
  }
  return obj.at(key);
}

int int_field(const json& obj, const char* key, const char* where) {
  const json& v = field(obj, key, where);
  if (!v.is_number_integer()) {
    throw SchemaError(std::string(where) + ": field '" + key +
                      "' must be an integer");
  }
  return v.get<int>();
}

std::string string_field(const json& obj, const char* key, const char* where) {
  const json& v = field(obj, key, where);
  if (!v.is_string()) {
    throw SchemaError(std::string(where) + ": field '" + key +
                      "' must be a string");
  }
  return v.get<std::string>();
}

const json& array_field(const json& obj, const char* key, const char* where) {
  const json& v = field(obj, key, where);
  if (!v.is_array()) {
    throw SchemaError(std::string(where) + ": field '" + key +
                      "' must be an array");
  }
  return v;
}

Term parse_atom_text(const std::string& text, const char* where) {
  try {
    return read_term(text);
  } catch (const SyntaxError& e) {
    throw SchemaError(std::string(where) + ": bad term '" + text +
                      "': " + e.what());
  }
}

std::vector<Term> terms_field(const json& obj, const char* key,
                              const char* where) {
  std::vector<Term> out;
  for (const json& v : array_field(obj, key, where)) {
    if (!v.is_string()) {
      throw SchemaError(std::string(where) + ": terms must be strings");
    }
    out.push_back(parse_atom_text(v.get<std::string>(), where));
  }
  return out;
}

std::vector<int> ints_field(const json& obj, const char* key,
                            const char* where) {
  std::vector<int> out;
  for (const json& v : array_field(obj, key, where)) {
    if (!v.is_number_integer()) {
      throw SchemaError(std::string(where) + ": '" + key +
                        "' must hold integers");
    }
    out.push_back(v.get<int>());
  }
  return out;
}

std::set<std::string> strings_field(const json& obj, const char* key,
                                    const char* where) {
  std::set<std::string> out;
  for (const json& v : array_field(obj, key, where)) {
    if (!v.is_string()) {
      throw SchemaError(std::string(where) + ": '" + key +
                        "' must hold strings");
    }
    out.insert(v.get<std::string>());
  }
  return out;
}

}  // namespace

NetworkGraph import_json(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw SchemaError(std::string("graph document is not valid JSON: ") +
                      e.what());
  }
  if (!doc.is_object()) throw SchemaError("graph document must be an object");
  int version = int_field(doc, "format_version", "document");
  if (version != kGraphFormatVersion) {
    throw SchemaError("unsupported graph format_version " +
                      std::to_string(version) + " (supported: " +
                      std::to_string(kGraphFormatVersion) + ")");
  }

  NetworkGraph g;
  for (const json& rec : array_field(doc, "neurons", "document")) {
    Neuron n;
    n.id = int_field(rec, "id", "neuron");
    n.atom = parse_atom_text(string_field(rec, "atom", "neuron"), "neuron");
    auto role = parse_role(string_field(rec, "role", "neuron"));
    if (!role) throw SchemaError("neuron: unknown role");
    n.role = *role;
    const json& act = field(rec, "activation", "neuron");
    if (!act.is_null()) {
      if (!act.is_string()) throw SchemaError("neuron: bad activation");
      auto a = parse_activation(act.get<std::string>());
      if (!a) {
        throw SchemaError("neuron: unknown activation " +
                          act.get<std::string>());
      }
      n.activation = *a;
    }
    const json& bias = field(rec, "bias_group", "neuron");
    if (!bias.is_null()) {
      if (!bias.is_number_integer()) throw SchemaError("neuron: bad bias_group");
      n.bias_group = bias.get<int>();
    }
    g.neurons.push_back(std::move(n));
  }
  for (const json& rec : array_field(doc, "edges", "document")) {
    g.edges.push_back(Edge{int_field(rec, "id", "edge"),
                           int_field(rec, "from", "edge"),
                           int_field(rec, "to", "edge"),
                           int_field(rec, "weight_group", "edge")});
  }
  for (const json& rec : array_field(doc, "weight_groups", "document")) {
    g.weight_groups.push_back(
        WeightGroup{int_field(rec, "id", "weight group"),
                    int_field(rec, "rule_id", "weight group"),
                    terms_field(rec, "key", "weight group")});
  }
  for (const json& rec : array_field(doc, "bias_groups", "document")) {
    BiasGroup bg;
    bg.id = int_field(rec, "id", "bias group");
    bg.predicate = string_field(rec, "predicate", "bias group");
    bg.positions = ints_field(rec, "positions", "bias group");
    bg.values = terms_field(rec, "values", "bias group");
    bg.members = ints_field(rec, "members", "bias group");
    g.bias_groups.push_back(std::move(bg));
  }
  const json& io = field(doc, "io_spec", "document");
  g.io.inputs = strings_field(io, "inputs", "io_spec");
  g.io.outputs = strings_field(io, "outputs", "io_spec");
  g.topological_order = ints_field(doc, "topological_order", "document");

  validate_graph(g);
  return g;
}

std::vector<int> strata_of(const NetworkGraph& graph) {
  std::vector<int> stratum(graph.neuron_id_bound(), -1);
  std::vector<std::vector<int>> preds(graph.neuron_id_bound());
  for (const Edge& e : graph.edges) preds[e.to].push_back(e.from);
  for (int n : graph.topological_order) {
    int s = 0;
    for (int p : preds[n]) s = std::max(s, stratum[p] + 1);
    stratum[n] = s;
  }
  return stratum;
}

namespace {

std::string dot_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  return out;
}

}  // namespace

std::string export_dot(const NetworkGraph& graph) {
  std::vector<int> stratum = strata_of(graph);
  int depth = 0;
  for (const Neuron& n : graph.neurons) depth = std::max(depth, stratum[n.id]);

  std::string out = "digraph nmp {\n  rankdir=BT;\n  node [shape=ellipse];\n";
  for (int s = 0; s <= depth && !graph.neurons.empty(); ++s) {
    out += "  { rank=same;";
    for (const Neuron& n : graph.neurons) {
      if (stratum[n.id] != s) continue;
      out += " n" + std::to_string(n.id) + " [label=\"" +
             dot_escape(n.atom.str()) + "\"";
      if (n.role == Role::kInput) out += ", shape=box";
      if (n.role == Role::kOutput) out += ", peripheries=2";
      out += "];";
    }
    out += " }\n";
  }
  for (const Edge& e : graph.edges) {
    out += "  n" + std::to_string(e.from) + " -> n" + std::to_string(e.to) +
           " [label=\"w" + std::to_string(e.weight_group) + "\"];\n";
  }
  out += "}\n";
  return out;
}

Parameters zero_parameters(const NetworkGraph& graph) {
  Parameters p;
  for (const WeightGroup& wg : graph.weight_groups) p.weights[wg.id] = 0.0;
  for (const BiasGroup& bg : graph.bias_groups) p.biases[bg.id] = 0.0;
  return p;
}

std::string export_parameters(const Parameters& params) {
  json doc;
  doc["format_version"] = kParamsFormatVersion;
  json w = json::object();
  for (const auto& [id, v] : params.weights) {
    if (!std::isfinite(v)) throw DataError("non-finite weight " + std::to_string(id));
    w[std::to_string(id)] = v;
  }
  json b = json::object();
  for (const auto& [id, v] : params.biases) {
    if (!std::isfinite(v)) throw DataError("non-finite bias " + std::to_string(id));
    b[std::to_string(id)] = v;
  }
  doc["weights"] = std::move(w);
  doc["biases"] = std::move(b);
  return doc.dump(2) + "\n";
}

Parameters import_parameters(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw SchemaError(std::string("parameter document is not valid JSON: ") +
                      e.what());
  }
  int version = int_field(doc, "format_version", "parameters");
  if (version != kParamsFormatVersion) {
    throw SchemaError("unsupported parameter format_version " +
                      std::to_string(version));
  }
  Parameters p;
  auto read_map = [](const json& obj, const char* key,
                     std::map<int, double>& out) {
    const json& m = field(obj, key, "parameters");
    if (!m.is_object()) {
      throw SchemaError(std::string("parameters: '") + key +
                        "' must be an object");
    }
    for (const auto& [k, v] : m.items()) {
      std::size_t used = 0;
      int id = -1;
      try {
        id = std::stoi(k, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used != k.size() || id < 0) {
        throw SchemaError("parameters: bad group id '" + k + "'");
      }
      if (!v.is_number()) {
        throw SchemaError("parameters: value for group " + k +
                          " must be a number");
      }
      out[id] = v.get<double>();
    }
  };
  read_map(doc, "weights", p.weights);
  read_map(doc, "biases", p.biases);
  return p;
}

void check_parameters(const NetworkGraph& graph, const Parameters& params) {
  for (const WeightGroup& wg : graph.weight_groups) {
    if (!params.weights.count(wg.id)) {
      throw DataError("missing parameter for weight group " +
                      std::to_string(wg.id));
    }
  }
  for (const BiasGroup& bg : graph.bias_groups) {
    if (!params.biases.count(bg.id)) {
      throw DataError("missing parameter for bias group " +
                      std::to_string(bg.id));
    }
  }
}

}  // namespace nmp
