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

#ifndef NMP_NETWORK_IR_HPP_
#define NMP_NETWORK_IR_HPP_

#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "nmp/grounder.hpp"

namespace nmp {

inline constexpr int kGraphFormatVersion = 1;
inline constexpr int kParamsFormatVersion = 1;

// Canonical graph document: sorted keys, arrays in id order, atoms in
// Prolog syntax, no floating-point content.
std::string export_json(const NetworkGraph& graph);

// Parses and re-validates a graph document. Throws SchemaError.
NetworkGraph import_json(std::string_view text);

// Graphviz rendering, one rank per stratum (longest path from an input).
std::string export_dot(const NetworkGraph& graph);

// Stratum of every neuron id: 0 for sources, else 1 + max over parents.
// Indexed by neuron id; -1 for ids not present.
std::vector<int> strata_of(const NetworkGraph& graph);

// Trainable values keyed by group id. Weights and biases have separate id
// spaces, matching the graph's weight_groups and bias_groups.
struct Parameters {
  std::map<int, double> weights;
  std::map<int, double> biases;

  friend bool operator==(const Parameters&, const Parameters&) = default;
};

// Zero for every group in the graph.
Parameters zero_parameters(const NetworkGraph& graph);

std::string export_parameters(const Parameters& params);
Parameters import_parameters(std::string_view text);

// Throws DataError naming the first group of `graph` that params lacks.
void check_parameters(const NetworkGraph& graph, const Parameters& params);

}  // namespace nmp

#endif  // NMP_NETWORK_IR_HPP_
