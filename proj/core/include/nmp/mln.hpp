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

#ifndef NMP_MLN_HPP_
#define NMP_MLN_HPP_

#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "nmp/grounder.hpp"
#include "nmp/network_ir.hpp"

namespace nmp {

// Fires iff both endpoints are 1.
struct PairFeature {
  int i = 0;
  int j = 0;
  double weight = 0.0;
  int group = -1;     // weight group the value came from
  int divisor = 1;    // weight = group value / divisor
};

// Fires iff node i is 1.
struct BiasFeature {
  int i = 0;
  double weight = 0.0;
  int group = -1;
};

// Binary pairwise model P(v) proportional to exp(sum of active features).
struct PairwiseMarkovNetwork {
  std::vector<std::string> labels;  // one per node
  std::vector<int> neuron;          // originating neuron id per node
  std::vector<PairFeature> pairs;
  std::vector<BiasFeature> biases;

  std::size_t size() const { return labels.size(); }
  // Unnormalized log-probability of a bit-packed assignment.
  double log_score(std::uint64_t assignment) const;
};

inline constexpr std::size_t kMaxEnumerationNodes = 25;

// One node per neuron (in id order), one pair feature per edge and one
// bias feature per non-input neuron. Throws CompileError when a non-input
// neuron is not sigmoid.
PairwiseMarkovNetwork to_pairwise_mn(const NetworkGraph& graph,
                                     const Parameters& params);

// node index -> clamped 0/1 value
using Evidence = std::map<int, int>;

// Exact P(node = 1 | evidence). Throws ResourceLimitError above the
// enumeration bound and Error when evidence covers the node.
double brute_force_conditional(const PairwiseMarkovNetwork& mn, int node,
                               const Evidence& evidence);

// Normalized probability of every assignment (bit i = node i).
std::vector<double> joint_probabilities(const PairwiseMarkovNetwork& mn);

// Conditional expectation of every feature given evidence.
struct FeatureExpectations {
  std::vector<double> pairs;
  std::vector<double> biases;
  double log_partition = 0.0;
};
FeatureExpectations feature_expectations(const PairwiseMarkovNetwork& mn,
                                         const Evidence& evidence);

// Tree produced by the copy constructions. Each node remembers the neuron
// it copies and the (edge id, copy number) steps leading to it from a root.
struct UnrolledNode {
  int neuron = 0;
  std::vector<std::pair<int, int>> path;

  std::string label(const NetworkGraph& graph) const;
};

struct UnrolledEdge {
  int from = 0;  // parent copy (closer to the inputs)
  int to = 0;    // child copy (closer to the root)
  int edge = 0;  // original edge id
  int weight_group = 0;
  int divisor = 1;
};

struct UnrolledNetwork {
  std::vector<UnrolledNode> nodes;
  std::vector<UnrolledEdge> edges;
  std::vector<int> roots;  // one per output neuron
  int replication = 1;
};

inline constexpr std::size_t kDefaultUnrollCap = 1u << 20;

// Private ancestry copy under every output neuron. Throws
// ResourceLimitError above max_nodes.
UnrolledNetwork unroll_step1(const NetworkGraph& graph,
                             std::size_t max_nodes = kDefaultUnrollCap);

// Every parent subtree replicated L times, incoming weights divided by L.
UnrolledNetwork unroll_step2(const UnrolledNetwork& tree, int L,
                             std::size_t max_nodes = kDefaultUnrollCap);

// Graph-shaped view of an unrolled network as a Markov network.
PairwiseMarkovNetwork to_pairwise_mn(const UnrolledNetwork& tree,
                                     const NetworkGraph& graph,
                                     const Parameters& params);

struct DiscrepancyRow {
  int L = 1;
  bool bias = false;  // weight group when false
  int group = 0;
  double backprop = 0.0;
  double markov = 0.0;
  double abs_diff = 0.0;
};

// For each L: Step 1 + Step 2 network conditioned on the example's inputs
// and output targets (all binary), exact gradient of -log P(targets |
// inputs) with respect to each original group, against the backprop
// cross-entropy gradient. Inputs and targets are indexed by neuron id.
std::vector<DiscrepancyRow> gradient_discrepancy(
    const NetworkGraph& graph, const Parameters& params,
    const std::map<int, double>& inputs, const std::map<int, double>& targets,
    const std::vector<int>& Ls);

std::string discrepancy_csv(const std::vector<DiscrepancyRow>& rows);

}  // namespace nmp

#endif  // NMP_MLN_HPP_
