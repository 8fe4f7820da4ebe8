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

#ifndef NMP_TRAINER_HPP_
#define NMP_TRAINER_HPP_

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "nmp/grounder.hpp"
#include "nmp/network_ir.hpp"
#include "nmp/plan.hpp"

namespace nmp {

// Rows of real values over ground-atom columns. Every input and output
// neuron of the graph owns exactly one column.
struct Dataset {
  std::vector<Term> columns;
  std::vector<int> column_neuron;
  std::vector<Role> column_role;
  std::vector<std::vector<double>> rows;
};

// RFC-4180 text. The header names neurons in canonical term syntax.
// Throws DataError on a header mismatch (naming missing and extra atoms),
// a ragged row, a non-numeric cell or a target outside [0,1].
Dataset parse_csv(std::string_view text, const NetworkGraph& graph);
Dataset load_csv(const std::string& path, const NetworkGraph& graph);

// Dense per-neuron view of one row; targets are NaN off the outputs.
struct Example {
  std::vector<double> inputs;
  std::vector<double> targets;
};
std::vector<Example> examples_of(const ExecutionPlan& plan,
                                 const Dataset& data);

// Cross-entropy summed over output neurons. Gradients are added into
// grads (sized by the plan). Throws CompileError on a non-sigmoid output.
double loss_and_grad(const ExecutionPlan& plan, const DenseParams& params,
                     const Example& example, Gradients& grads);

struct LossAndGrad {
  double loss = 0.0;
  Parameters grad;
};
LossAndGrad loss_and_grad(const ExecutionPlan& plan, const Parameters& params,
                          const Example& example);

// Mean per-example loss.
double mean_loss(const ExecutionPlan& plan, const Parameters& params,
                 const std::vector<Example>& examples);

struct TrainConfig {
  double learning_rate = 0.1;
  int epochs = 1000;
  int batch_size = 1;
  std::uint64_t seed = 0;
  double init_scale = 0.5;
};

// Throws DataError unless every field is positive (learning_rate may be 0).
void check_config(const TrainConfig& config);

// Uniform in [-scale, scale], weights first then biases, each in id order.
Parameters init_parameters(const ExecutionPlan& plan, std::uint64_t seed,
                           double scale);

struct TrainResult {
  Parameters initial;
  Parameters params;
  std::vector<double> loss_trace;  // mean loss after each epoch
  std::size_t updates = 0;
};

// Plain mini-batch SGD on the mean batch gradient. Throws DataError naming
// the epoch when the loss or a parameter stops being finite.
TrainResult train(const ExecutionPlan& plan, const Dataset& data,
                  const TrainConfig& config);

// "epoch,loss" CSV, epochs numbered from 1.
std::string format_loss_trace(const std::vector<double>& trace);

}  // namespace nmp

#endif  // NMP_TRAINER_HPP_
