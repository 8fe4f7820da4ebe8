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

#include "nmp/trainer.hpp"

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <map>
#include <random>
#include <set>
#include <sstream>

#include "nmp/error.hpp"
#include "nmp/reader.hpp"

namespace nmp {
namespace {

constexpr double kLogFloor = 1e-12;

std::vector<std::vector<std::string>> split_csv(std::string_view text) {
  std::vector<std::vector<std::string>> records;
  std::vector<std::string> record;
  std::string field;
  bool quoted = false;
  bool field_started = false;
  std::size_t line = 1;
  auto end_record = [&] {
    record.push_back(std::move(field));
    field.clear();
    bool blank = record.size() == 1 && record[0].empty() && !field_started;
    if (!blank) records.push_back(std::move(record));
    record.clear();
    field_started = false;
  };
  for (std::size_t i = 0; i < text.size(); ++i) {
    char c = text[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        if (c == '\n') ++line;
        field += c;
      }
      continue;
    }
    switch (c) {
      case '"':
        if (!field.empty()) {
          throw DataError("line " + std::to_string(line) +
                          ": stray quote inside unquoted field");
        }
        quoted = true;
        field_started = true;
        break;
      case ',':
        record.push_back(std::move(field));
        field.clear();
        field_started = true;
        break;
      case '\r':
        if (i + 1 < text.size() && text[i + 1] == '\n') break;
        field += c;
        break;
      case '\n':
        end_record();
        ++line;
        break;
      default:
        field += c;
    }
  }
  if (quoted) throw DataError("unterminated quoted field");
  if (!field.empty() || !record.empty() || field_started) end_record();
  return records;
}

std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return "";
  auto e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

// Canonical text of a header cell, or the raw cell when it does not parse.
std::string canonical_header(const std::string& cell) {
  std::string t = trim(cell);
  try {
    return read_term(t).str();
  } catch (const Error&) {
    return t;
  }
}

bool parse_number(const std::string& cell, double& out) {
  std::string t = trim(cell);
  if (t.empty()) return false;
  errno = 0;
  char* end = nullptr;
  out = std::strtod(t.c_str(), &end);
  return end == t.c_str() + t.size() && errno == 0 && std::isfinite(out);
}

std::string join(const std::vector<std::string>& items) {
  std::string out;
  for (const auto& s : items) {
    if (!out.empty()) out += ", ";
    out += s;
  }
  return out;
}

double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

void require_sigmoid_outputs(const ExecutionPlan& plan) {
  for (const auto& [id, act] : plan.output_activation) {
    if (act != Activation::kSigmoid) {
      throw CompileError("cross-entropy loss needs a sigmoid output; " +
                         plan.labels.at(id) + " is " + activation_name(act));
    }
  }
}

}  // namespace

Dataset parse_csv(std::string_view text, const NetworkGraph& graph) {
  auto records = split_csv(text);
  if (records.empty()) throw DataError("dataset has no header row");
  std::map<std::string, const Neuron*> wanted;
  for (const Neuron& n : graph.neurons) {
    if (n.role != Role::kHidden) wanted[n.atom.str()] = &n;
  }
  Dataset data;
  std::set<std::string> seen;
  std::vector<std::string> extra;
  for (const std::string& cell : records[0]) {
    std::string name = canonical_header(cell);
    auto it = wanted.find(name);
    if (it == wanted.end()) {
      extra.push_back(name);
      continue;
    }
    if (!seen.insert(name).second) {
      throw DataError("duplicate column " + name);
    }
    data.columns.push_back(it->second->atom);
    data.column_neuron.push_back(it->second->id);
    data.column_role.push_back(it->second->role);
  }
  std::vector<std::string> missing;
  for (const auto& [name, n] : wanted) {
    if (!seen.count(name)) missing.push_back(name);
  }
  if (!missing.empty() || !extra.empty()) {
    std::string msg = "dataset header does not match the network";
    if (!missing.empty()) msg += "; missing columns: " + join(missing);
    if (!extra.empty()) msg += "; unknown columns: " + join(extra);
    throw DataError(msg);
  }
  for (std::size_t r = 1; r < records.size(); ++r) {
    const auto& rec = records[r];
    if (rec.size() != records[0].size()) {
      throw DataError("row " + std::to_string(r) + ": expected " +
                      std::to_string(records[0].size()) + " fields, got " +
                      std::to_string(rec.size()));
    }
    std::vector<double> row(data.columns.size());
    for (std::size_t c = 0; c < rec.size(); ++c) {
      double v = 0.0;
      if (!parse_number(rec[c], v)) {
        throw DataError("row " + std::to_string(r) + ", column " +
                        std::to_string(c + 1) + " (" + data.columns[c].str() +
                        "): not a number: '" + rec[c] + "'");
      }
      if (data.column_role[c] == Role::kOutput && (v < 0.0 || v > 1.0)) {
        throw DataError("row " + std::to_string(r) + ", column " +
                        std::to_string(c + 1) + " (" + data.columns[c].str() +
                        "): target outside [0,1]: " + trim(rec[c]));
      }
      row[c] = v;
    }
    data.rows.push_back(std::move(row));
  }
  return data;
}

Dataset load_csv(const std::string& path, const NetworkGraph& graph) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open dataset " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_csv(buf.str(), graph);
}

std::vector<Example> examples_of(const ExecutionPlan& plan,
                                 const Dataset& data) {
  std::vector<Example> out;
  out.reserve(data.rows.size());
  std::size_t bound = plan.neuron_index.size();
  for (const auto& row : data.rows) {
    Example ex;
    ex.inputs.assign(bound, 0.0);
    ex.targets.assign(bound, std::numeric_limits<double>::quiet_NaN());
    for (std::size_t c = 0; c < row.size(); ++c) {
      auto id = static_cast<std::size_t>(data.column_neuron[c]);
      if (id >= bound) throw DataError("dataset column outside the network");
      if (data.column_role[c] == Role::kInput) {
        ex.inputs[id] = row[c];
      } else {
        ex.targets[id] = row[c];
      }
    }
    out.push_back(std::move(ex));
  }
  return out;
}

double loss_and_grad(const ExecutionPlan& plan, const DenseParams& params,
                     const Example& example, Gradients& grads) {
  require_sigmoid_outputs(plan);
  ForwardTrace trace;
  run_forward(plan, params, example.inputs, trace);
  std::vector<double> seed(plan.neuron_index.size(), 0.0);
  double loss = 0.0;
  for (int id : plan.outputs) {
    double a = value_of(plan, trace, id);
    double t = example.targets.at(id);
    if (std::isnan(t)) {
      throw DataError("example has no target for " + plan.labels.at(id));
    }
    loss -= t * std::log(std::max(a, kLogFloor)) +
            (1.0 - t) * std::log(std::max(1.0 - a, kLogFloor));
    seed[id] = a - t;
  }
  grads.weights.resize(plan.weight_bound, 0.0);
  grads.biases.resize(plan.bias_bound, 0.0);
  run_backward(plan, params, trace, seed, grads);
  return loss;
}

LossAndGrad loss_and_grad(const ExecutionPlan& plan, const Parameters& params,
                          const Example& example) {
  DenseParams d = dense_params(plan, params);
  Gradients g;
  LossAndGrad out;
  out.loss = loss_and_grad(plan, d, example, g);
  for (int id : plan.weight_groups) out.grad.weights[id] = g.weights[id];
  for (int id : plan.bias_groups) out.grad.biases[id] = g.biases[id];
  return out;
}

double mean_loss(const ExecutionPlan& plan, const Parameters& params,
                 const std::vector<Example>& examples) {
  if (examples.empty()) return 0.0;
  DenseParams d = dense_params(plan, params);
  double total = 0.0;
  Gradients scratch;
  for (const Example& ex : examples) {
    scratch.weights.assign(plan.weight_bound, 0.0);
    scratch.biases.assign(plan.bias_bound, 0.0);
    total += loss_and_grad(plan, d, ex, scratch);
  }
  return total / static_cast<double>(examples.size());
}

void check_config(const TrainConfig& config) {
  if (!(config.learning_rate >= 0.0) || !std::isfinite(config.learning_rate)) {
    throw DataError("learning rate must be a finite non-negative number");
  }
  if (config.epochs <= 0) throw DataError("epochs must be positive");
  if (config.batch_size <= 0) throw DataError("batch size must be positive");
  if (!(config.init_scale > 0.0) || !std::isfinite(config.init_scale)) {
    throw DataError("init scale must be positive");
  }
}

Parameters init_parameters(const ExecutionPlan& plan, std::uint64_t seed,
                           double scale) {
  std::mt19937_64 rng(seed);
  Parameters p;
  for (int id : plan.weight_groups) {
    p.weights[id] = -scale + 2.0 * scale * uniform01(rng);
  }
  for (int id : plan.bias_groups) {
    p.biases[id] = -scale + 2.0 * scale * uniform01(rng);
  }
  return p;
}

TrainResult train(const ExecutionPlan& plan, const Dataset& data,
                  const TrainConfig& config) {
  check_config(config);
  require_sigmoid_outputs(plan);
  if (data.rows.empty()) throw DataError("dataset is empty");
  std::vector<Example> examples = examples_of(plan, data);

  TrainResult result;
  result.initial = init_parameters(plan, config.seed, config.init_scale);
  // Shuffling draws from a stream independent of initialization.
  std::mt19937_64 rng(config.seed ^ 0x9e3779b97f4a7c15ULL);
  DenseParams d = dense_params(plan, result.initial);
  std::vector<std::size_t> order(examples.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  Gradients g;
  std::size_t batch = static_cast<std::size_t>(config.batch_size);

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    for (std::size_t i = order.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(rng() % i);
      std::swap(order[i - 1], order[j]);
    }
    for (std::size_t start = 0; start < order.size(); start += batch) {
      std::size_t stop = std::min(order.size(), start + batch);
      g.weights.assign(plan.weight_bound, 0.0);
      g.biases.assign(plan.bias_bound, 0.0);
      for (std::size_t k = start; k < stop; ++k) {
        loss_and_grad(plan, d, examples[order[k]], g);
      }
      double scale = config.learning_rate / static_cast<double>(stop - start);
      for (int id : plan.weight_groups) d.weights[id] -= scale * g.weights[id];
      for (int id : plan.bias_groups) d.biases[id] -= scale * g.biases[id];
      ++result.updates;
    }
    double total = 0.0;
    for (const Example& ex : examples) {
      Gradients scratch;
      total += loss_and_grad(plan, d, ex, scratch);
    }
    double mean = total / static_cast<double>(examples.size());
    bool finite = std::isfinite(mean);
    for (int id : plan.weight_groups) finite = finite && std::isfinite(d.weights[id]);
    for (int id : plan.bias_groups) finite = finite && std::isfinite(d.biases[id]);
    if (!finite) {
      throw DataError("training diverged at epoch " + std::to_string(epoch));
    }
    result.loss_trace.push_back(mean);
  }
  for (int id : plan.weight_groups) result.params.weights[id] = d.weights[id];
  for (int id : plan.bias_groups) result.params.biases[id] = d.biases[id];
  return result;
}

std::string format_loss_trace(const std::vector<double>& trace) {
  std::string out = "epoch,loss\n";
  char buf[64];
  for (std::size_t i = 0; i < trace.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%zu,%.17g\n", i + 1, trace[i]);
    out += buf;
  }
  return out;
}

}  // namespace nmp
