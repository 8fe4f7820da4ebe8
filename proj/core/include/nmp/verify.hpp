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

#ifndef NMP_VERIFY_HPP_
#define NMP_VERIFY_HPP_

#include <cstdint>
#include <map>
#include <random>
#include <string>

#include "nmp/grounder.hpp"
#include "nmp/network_ir.hpp"

namespace nmp {

// Random acyclic networks for property checks. Neuron ids follow a
// topological order; inputs come first and sinks are outputs.
struct RandomGraphOptions {
  int min_neurons = 2;
  int max_neurons = 12;
  bool sigmoid_only = true;
  int max_weight_groups = 4;
  double edge_probability = 0.4;
};

NetworkGraph random_graph(std::mt19937_64& rng,
                          const RandomGraphOptions& options);
Parameters random_parameters(const NetworkGraph& graph, std::mt19937_64& rng,
                             double scale);

// Per-edge reference semantics, independent of the execution plan.
std::map<int, double> edgewise_forward(const NetworkGraph& graph,
                                       const Parameters& params,
                                       const std::map<int, double>& inputs);

// Cross-entropy loss in extended precision, summed over outputs.
long double edgewise_loss(const NetworkGraph& graph, const Parameters& params,
                          const std::map<int, double>& inputs,
                          const std::map<int, double>& targets);

// Reverse pass over individual edges; each group's gradient is the sum of
// its edges' gradients.
Parameters edgewise_gradient(const NetworkGraph& graph,
                             const Parameters& params,
                             const std::map<int, double>& inputs,
                             const std::map<int, double>& targets);

struct TrialReport {
  int trials = 0;
  int passed = 0;
  int tolerance_exponent = 0;  // tolerance is 10^-exponent
  double worst = 0.0;          // largest observed error

  bool ok() const { return trials > 0 && passed == trials; }
  // e.g. "100/100 within 1e-9"
  std::string str() const;
};

// Exact Markov-network conditional of a random neuron, parents clamped at
// random and other neighbours clamped to 0, against the sigmoid of its
// weighted input. Graphs of at most 12 neurons.
TrialReport sigmoid_equivalence(std::uint64_t seed, int trials);

// Compiled plan against the edgewise interpreter, graphs of at most 50
// neurons with mixed activations.
TrialReport plan_equivalence(std::uint64_t seed, int trials);

// Analytic gradients against central differences (h = 1e-6) for every
// group whose gradient exceeds 1e-8 in magnitude, graphs of at most 30
// neurons.
TrialReport gradient_check(std::uint64_t seed, int trials);

// Plan gradients against the edgewise autodiff oracle.
TrialReport tying_check(std::uint64_t seed, int trials);

}  // namespace nmp

#endif  // NMP_VERIFY_HPP_
