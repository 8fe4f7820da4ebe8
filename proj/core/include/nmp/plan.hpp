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

#ifndef NMP_PLAN_HPP_
#define NMP_PLAN_HPP_

#include <map>
#include <span>
#include <string>
#include <vector>

#include "nmp/grounder.hpp"
#include "nmp/network_ir.hpp"

namespace nmp {

// A position in a stratum's value vector. Pass-through slots carry a copy
// of a neuron computed in an earlier stratum, so every op reads only the
// stratum directly below its targets.
struct Slot {
  int neuron = 0;
  bool passthrough = false;
  bool input = false;  // clamped from data
};

struct LayerOp {
  enum class Kind { kDenseMatmul, kSparseGatherSum };

  struct Entry {
    int source_slot = 0;
    int target_slot = 0;
    int weight_group = 0;
    int edge = 0;
  };

  Kind kind = Kind::kSparseGatherSum;
  int source_stratum = 0;
  int target_stratum = 0;
  // Owning rule for dense blocks; -1 for the sparse remainder.
  int rule_id = -1;

  // kDenseMatmul: row-major [target][source] cells tied to weight groups.
  std::vector<int> source_slots;
  std::vector<int> target_slots;
  std::vector<int> cell_groups;
  std::vector<int> cell_edges;

  // kSparseGatherSum.
  std::vector<Entry> entries;

  std::size_t size() const {
    return kind == Kind::kDenseMatmul ? cell_groups.size() : entries.size();
  }
};

struct StratumPlan {
  std::vector<Slot> slots;
  // (slot in previous stratum, slot here) copies.
  std::vector<std::pair<int, int>> passthrough;
  std::vector<LayerOp> ops;
  // Per slot; meaningful for non-pass-through, non-input slots.
  std::vector<Activation> activation;
  std::vector<int> bias_group;  // -1 when none
};

struct CellRef {
  int stratum = 0;
  int op = 0;
  int cell = 0;

  friend bool operator==(const CellRef&, const CellRef&) = default;
};

struct ExecutionPlan {
  std::vector<StratumPlan> strata;
  // neuron id -> (stratum, slot) of its computed value; {-1,-1} if absent.
  std::vector<std::pair<int, int>> neuron_index;
  std::map<int, std::vector<CellRef>> weight_layout;
  std::map<int, std::vector<std::pair<int, int>>> bias_layout;

  std::vector<int> inputs;   // neuron ids, ascending
  std::vector<int> outputs;  // neuron ids, ascending
  std::vector<int> neurons;  // every neuron id, ascending
  std::vector<int> weight_groups;  // group ids present in the graph
  std::vector<int> bias_groups;
  std::map<int, std::string> labels;
  std::map<int, Activation> output_activation;
  int weight_bound = 0;
  int bias_bound = 0;

  std::size_t op_count(LayerOp::Kind kind) const;
};

// Stratifies by longest path from a source and packs edges into dense
// blocks (complete per-rule bipartite blocks) or one sparse gather per
// stratum. Throws CompileError on a cyclic graph.
ExecutionPlan plan(const NetworkGraph& graph);

// Human-readable stratum/op listing.
std::string describe_plan(const ExecutionPlan& plan);

// Parameters as dense arrays indexed by group id.
struct DenseParams {
  std::vector<double> weights;
  std::vector<double> biases;
};
DenseParams dense_params(const ExecutionPlan& plan, const Parameters& params);

double activate(Activation a, double z);
// Derivative with respect to z, written in terms of z and a = activate(z).
double activate_grad(Activation a, double z, double out);

struct ForwardTrace {
  std::vector<std::vector<double>> z;  // pre-activation per stratum/slot
  std::vector<std::vector<double>> a;  // value per stratum/slot
};

// inputs[neuron id] holds the clamped value of every input neuron.
void run_forward(const ExecutionPlan& plan, const DenseParams& params,
                 std::span<const double> inputs, ForwardTrace& trace);

// Value of a neuron after run_forward.
double value_of(const ExecutionPlan& plan, const ForwardTrace& trace,
                int neuron);

struct Gradients {
  std::vector<double> weights;
  std::vector<double> biases;
};

// Reverse sweep. dz_seed[neuron id] is added to dLoss/dz of that neuron;
// gradients are accumulated (not reset) into grads.
void run_backward(const ExecutionPlan& plan, const DenseParams& params,
                  const ForwardTrace& trace, std::span<const double> dz_seed,
                  Gradients& grads);

// Map-based convenience: activation of every neuron. Throws DataError on a
// missing input or parameter.
std::map<int, double> forward_plan(const ExecutionPlan& plan,
                                   const Parameters& params,
                                   const std::map<int, double>& inputs);

// Weight value in every dense cell / sparse entry of one op, in cell order.
std::vector<double> materialize(const LayerOp& op, const DenseParams& params);

}  // namespace nmp

#endif  // NMP_PLAN_HPP_
