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

#include "nmp/plan.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "nmp/error.hpp"

namespace nmp {

std::size_t ExecutionPlan::op_count(LayerOp::Kind kind) const {
  std::size_t n = 0;
  for (const StratumPlan& s : strata) {
    for (const LayerOp& op : s.ops) n += op.kind == kind;
  }
  return n;
}

namespace {

struct PendingEntry {
  int source_slot;
  int target_slot;
  int weight_group;
  int edge;
  int rule_id;
};

// Turns one rule's entries into a dense op when they form a complete
// bipartite block without repeated cells.
bool try_dense(const std::vector<PendingEntry>& entries, int rule_id,
               int target_stratum, LayerOp& op) {
  std::set<int> sources;
  std::set<int> targets;
  std::set<std::pair<int, int>> cells;
  for (const PendingEntry& e : entries) {
    sources.insert(e.source_slot);
    targets.insert(e.target_slot);
    if (!cells.emplace(e.target_slot, e.source_slot).second) return false;
  }
  if (cells.size() != sources.size() * targets.size()) return false;
  op = LayerOp{};
  op.kind = LayerOp::Kind::kDenseMatmul;
  op.source_stratum = target_stratum - 1;
  op.target_stratum = target_stratum;
  op.rule_id = rule_id;
  op.source_slots.assign(sources.begin(), sources.end());
  op.target_slots.assign(targets.begin(), targets.end());
  op.cell_groups.assign(sources.size() * targets.size(), -1);
  op.cell_edges.assign(sources.size() * targets.size(), -1);
  for (const PendingEntry& e : entries) {
    auto ti = std::lower_bound(op.target_slots.begin(), op.target_slots.end(),
                               e.target_slot) -
              op.target_slots.begin();
    auto si = std::lower_bound(op.source_slots.begin(), op.source_slots.end(),
                               e.source_slot) -
              op.source_slots.begin();
    std::size_t cell = ti * op.source_slots.size() + si;
    op.cell_groups[cell] = e.weight_group;
    op.cell_edges[cell] = e.edge;
  }
  return true;
}

}  // namespace

ExecutionPlan plan(const NetworkGraph& graph) {
  std::vector<int> order = topological_sort(graph);
  int bound = graph.neuron_id_bound();
  std::vector<int> stratum(bound, -1);
  std::vector<std::vector<const Edge*>> incoming(bound);
  for (const Edge& e : graph.edges) incoming[e.to].push_back(&e);
  int depth = 0;
  for (int n : order) {
    int s = 0;
    for (const Edge* e : incoming[n]) s = std::max(s, stratum[e->from] + 1);
    stratum[n] = s;
    depth = std::max(depth, s);
  }
  // Highest stratum each neuron must be visible in (one below its
  // furthest consumer).
  std::vector<int> visible_until(bound, -1);
  for (const Edge& e : graph.edges) {
    visible_until[e.from] = std::max(visible_until[e.from], stratum[e.to] - 1);
  }

  ExecutionPlan p;
  p.strata.resize(graph.neurons.empty() ? 0 : depth + 1);
  p.neuron_index.assign(bound, {-1, -1});
  p.weight_bound = graph.weight_group_id_bound();
  p.bias_bound = graph.bias_group_id_bound();
  for (const WeightGroup& g : graph.weight_groups) p.weight_groups.push_back(g.id);
  for (const BiasGroup& g : graph.bias_groups) p.bias_groups.push_back(g.id);
  // slot_of[s][neuron] for neurons present in stratum s.
  std::vector<std::map<int, int>> slot_of(p.strata.size());

  for (const Neuron& n : graph.neurons) {
    p.neurons.push_back(n.id);
    p.labels[n.id] = n.atom.str();
    if (n.role == Role::kInput) p.inputs.push_back(n.id);
    if (n.role == Role::kOutput) {
      p.outputs.push_back(n.id);
      p.output_activation[n.id] = n.activation.value_or(Activation::kLinear);
    }
    StratumPlan& sp = p.strata[stratum[n.id]];
    int slot = static_cast<int>(sp.slots.size());
    sp.slots.push_back(Slot{n.id, false, n.role == Role::kInput});
    sp.activation.push_back(n.activation.value_or(Activation::kLinear));
    sp.bias_group.push_back(n.bias_group.value_or(-1));
    slot_of[stratum[n.id]][n.id] = slot;
    p.neuron_index[n.id] = {stratum[n.id], slot};
    if (n.bias_group) p.bias_layout[*n.bias_group].emplace_back(stratum[n.id], slot);
  }
  for (const Neuron& n : graph.neurons) {
    for (int s = stratum[n.id] + 1; s <= visible_until[n.id]; ++s) {
      StratumPlan& sp = p.strata[s];
      int slot = static_cast<int>(sp.slots.size());
      sp.slots.push_back(Slot{n.id, true, false});
      sp.activation.push_back(Activation::kLinear);
      sp.bias_group.push_back(-1);
      slot_of[s][n.id] = slot;
      sp.passthrough.emplace_back(slot_of[s - 1].at(n.id), slot);
    }
  }

  for (std::size_t t = 1; t < p.strata.size(); ++t) {
    std::map<int, std::vector<PendingEntry>> by_rule;
    for (const Edge& e : graph.edges) {
      if (stratum[e.to] != static_cast<int>(t)) continue;
      int rule = graph.weight_group(e.weight_group).rule_id;
      by_rule[rule].push_back(PendingEntry{slot_of[t - 1].at(e.from),
                                           slot_of[t].at(e.to),
                                           e.weight_group, e.id, rule});
    }
    std::vector<PendingEntry> sparse;
    StratumPlan& sp = p.strata[t];
    for (auto& [rule, entries] : by_rule) {
      LayerOp op;
      if (try_dense(entries, rule, static_cast<int>(t), op)) {
        sp.ops.push_back(std::move(op));
        continue;
      }
      // Greedy fallback: targets sharing an identical source set.
      std::map<int, std::vector<PendingEntry>> per_target;
      for (const PendingEntry& e : entries) per_target[e.target_slot].push_back(e);
      std::map<std::vector<int>, std::vector<int>> by_sources;
      for (auto& [target, es] : per_target) {
        std::vector<int> srcs;
        for (const PendingEntry& e : es) srcs.push_back(e.source_slot);
        std::sort(srcs.begin(), srcs.end());
        if (std::adjacent_find(srcs.begin(), srcs.end()) != srcs.end()) {
          srcs.clear();  // repeated cell: cannot be dense
        }
        by_sources[srcs].push_back(target);
      }
      for (auto& [srcs, targets] : by_sources) {
        std::vector<PendingEntry> block;
        for (int target : targets) {
          const auto& es = per_target[target];
          block.insert(block.end(), es.begin(), es.end());
        }
        LayerOp dense;
        if (srcs.size() >= 2 && targets.size() >= 2 &&
            try_dense(block, rule, static_cast<int>(t), dense)) {
          sp.ops.push_back(std::move(dense));
        } else {
          sparse.insert(sparse.end(), block.begin(), block.end());
        }
      }
    }
    if (!sparse.empty()) {
      std::sort(sparse.begin(), sparse.end(),
                [](const PendingEntry& a, const PendingEntry& b) {
                  return std::tie(a.target_slot, a.source_slot, a.edge) <
                         std::tie(b.target_slot, b.source_slot, b.edge);
                });
      LayerOp op;
      op.kind = LayerOp::Kind::kSparseGatherSum;
      op.source_stratum = static_cast<int>(t) - 1;
      op.target_stratum = static_cast<int>(t);
      for (const PendingEntry& e : sparse) {
        op.entries.push_back(LayerOp::Entry{e.source_slot, e.target_slot,
                                            e.weight_group, e.edge});
      }
      sp.ops.push_back(std::move(op));
    }
    for (int o = 0; o < static_cast<int>(sp.ops.size()); ++o) {
      const LayerOp& op = sp.ops[o];
      for (int c = 0; c < static_cast<int>(op.size()); ++c) {
        int g = op.kind == LayerOp::Kind::kDenseMatmul ? op.cell_groups[c]
                                                       : op.entries[c].weight_group;
        p.weight_layout[g].push_back(CellRef{static_cast<int>(t), o, c});
      }
    }
  }
  return p;
}

std::string describe_plan(const ExecutionPlan& p) {
  std::ostringstream out;
  out << "plan: " << p.strata.size() << " strata, "
      << p.op_count(LayerOp::Kind::kDenseMatmul) << " dense_matmul, "
      << p.op_count(LayerOp::Kind::kSparseGatherSum) << " sparse_gather_sum\n";
  for (std::size_t s = 0; s < p.strata.size(); ++s) {
    const StratumPlan& sp = p.strata[s];
    std::size_t real = 0;
    for (const Slot& slot : sp.slots) real += !slot.passthrough;
    out << "stratum " << s << ": " << real << " neurons, "
        << sp.passthrough.size() << " pass-through\n";
    out << "  slots:";
    for (const Slot& slot : sp.slots) {
      out << ' ' << p.labels.at(slot.neuron) << (slot.passthrough ? "^" : "");
    }
    out << '\n';
    for (const LayerOp& op : sp.ops) {
      if (op.kind == LayerOp::Kind::kDenseMatmul) {
        out << "  dense_matmul " << op.target_slots.size() << "x"
            << op.source_slots.size() << " rule " << op.rule_id
            << " groups [";
        for (std::size_t c = 0; c < op.cell_groups.size(); ++c) {
          if (c > 0) out << (c % op.source_slots.size() == 0 ? "; " : " ");
          out << op.cell_groups[c];
        }
        out << "]\n";
      } else {
        std::set<int> groups;
        for (const auto& e : op.entries) groups.insert(e.weight_group);
        out << "  sparse_gather_sum " << op.entries.size() << " entries, "
            << groups.size() << " groups\n";
      }
    }
  }
  return out.str();
}

DenseParams dense_params(const ExecutionPlan& plan, const Parameters& params) {
  DenseParams d;
  d.weights.assign(plan.weight_bound, 0.0);
  d.biases.assign(plan.bias_bound, 0.0);
  for (int g : plan.weight_groups) {
    auto it = params.weights.find(g);
    if (it == params.weights.end()) {
      throw DataError("missing parameter for weight group " + std::to_string(g));
    }
    d.weights[g] = it->second;
  }
  for (int g : plan.bias_groups) {
    auto it = params.biases.find(g);
    if (it == params.biases.end()) {
      throw DataError("missing parameter for bias group " + std::to_string(g));
    }
    d.biases[g] = it->second;
  }
  return d;
}

double activate(Activation a, double z) {
  switch (a) {
    case Activation::kSigmoid:
      return z >= 0 ? 1.0 / (1.0 + std::exp(-z))
                    : std::exp(z) / (1.0 + std::exp(z));
    case Activation::kRelu:
      return z > 0 ? z : 0.0;
    case Activation::kLinear:
      return z;
  }
  return z;
}

double activate_grad(Activation a, double z, double out) {
  switch (a) {
    case Activation::kSigmoid:
      return out * (1.0 - out);
    case Activation::kRelu:
      return z > 0 ? 1.0 : 0.0;
    case Activation::kLinear:
      return 1.0;
  }
  return 1.0;
}

void run_forward(const ExecutionPlan& plan, const DenseParams& params,
                 std::span<const double> inputs, ForwardTrace& trace) {
  trace.z.resize(plan.strata.size());
  trace.a.resize(plan.strata.size());
  for (std::size_t s = 0; s < plan.strata.size(); ++s) {
    const StratumPlan& sp = plan.strata[s];
    auto& z = trace.z[s];
    auto& a = trace.a[s];
    z.assign(sp.slots.size(), 0.0);
    a.assign(sp.slots.size(), 0.0);
    if (s > 0) {
      const auto& prev = trace.a[s - 1];
      for (const LayerOp& op : sp.ops) {
        if (op.kind == LayerOp::Kind::kDenseMatmul) {
          std::size_t cols = op.source_slots.size();
          for (std::size_t r = 0; r < op.target_slots.size(); ++r) {
            double acc = 0.0;
            for (std::size_t c = 0; c < cols; ++c) {
              acc += params.weights[op.cell_groups[r * cols + c]] *
                     prev[op.source_slots[c]];
            }
            z[op.target_slots[r]] += acc;
          }
        } else {
          for (const LayerOp::Entry& e : op.entries) {
            z[e.target_slot] += params.weights[e.weight_group] * prev[e.source_slot];
          }
        }
      }
      for (const auto& [from, to] : sp.passthrough) {
        z[to] = prev[from];
        a[to] = prev[from];
      }
    }
    for (std::size_t i = 0; i < sp.slots.size(); ++i) {
      const Slot& slot = sp.slots[i];
      if (slot.passthrough) continue;
      if (slot.input) {
        z[i] = inputs[slot.neuron];
        a[i] = z[i];
        continue;
      }
      if (sp.bias_group[i] >= 0) z[i] += params.biases[sp.bias_group[i]];
      a[i] = activate(sp.activation[i], z[i]);
    }
  }
}

double value_of(const ExecutionPlan& plan, const ForwardTrace& trace,
                int neuron) {
  auto [s, slot] = plan.neuron_index.at(neuron);
  return trace.a[s][slot];
}

void run_backward(const ExecutionPlan& plan, const DenseParams& params,
                  const ForwardTrace& trace, std::span<const double> dz_seed,
                  Gradients& grads) {
  grads.weights.resize(plan.weight_bound, 0.0);
  grads.biases.resize(plan.bias_bound, 0.0);
  if (plan.strata.empty()) return;
  // dA[s][slot]: dLoss/d(value) accumulated from consumers above.
  std::vector<std::vector<double>> da(plan.strata.size());
  for (std::size_t s = 0; s < plan.strata.size(); ++s) {
    da[s].assign(plan.strata[s].slots.size(), 0.0);
  }
  std::vector<double> dz;
  for (std::size_t s = plan.strata.size(); s-- > 0;) {
    const StratumPlan& sp = plan.strata[s];
    dz.assign(sp.slots.size(), 0.0);
    for (std::size_t i = 0; i < sp.slots.size(); ++i) {
      const Slot& slot = sp.slots[i];
      if (slot.passthrough) {
        dz[i] = da[s][i];
        continue;
      }
      if (slot.input) continue;
      dz[i] = da[s][i] * activate_grad(sp.activation[i], trace.z[s][i],
                                       trace.a[s][i]) +
              dz_seed[slot.neuron];
      if (sp.bias_group[i] >= 0) grads.biases[sp.bias_group[i]] += dz[i];
    }
    if (s == 0) break;
    const auto& prev = trace.a[s - 1];
    auto& dprev = da[s - 1];
    for (const LayerOp& op : sp.ops) {
      if (op.kind == LayerOp::Kind::kDenseMatmul) {
        std::size_t cols = op.source_slots.size();
        for (std::size_t r = 0; r < op.target_slots.size(); ++r) {
          double d = dz[op.target_slots[r]];
          for (std::size_t c = 0; c < cols; ++c) {
            int g = op.cell_groups[r * cols + c];
            grads.weights[g] += d * prev[op.source_slots[c]];
            dprev[op.source_slots[c]] += params.weights[g] * d;
          }
        }
      } else {
        for (const LayerOp::Entry& e : op.entries) {
          double d = dz[e.target_slot];
          grads.weights[e.weight_group] += d * prev[e.source_slot];
          dprev[e.source_slot] += params.weights[e.weight_group] * d;
        }
      }
    }
    for (const auto& [from, to] : sp.passthrough) dprev[from] += dz[to];
  }
}

std::map<int, double> forward_plan(const ExecutionPlan& plan,
                                   const Parameters& params,
                                   const std::map<int, double>& inputs) {
  DenseParams d = dense_params(plan, params);
  std::vector<double> in(plan.neuron_index.size(), 0.0);
  for (int id : plan.inputs) {
    auto it = inputs.find(id);
    if (it == inputs.end()) {
      throw DataError("missing input assignment for " + plan.labels.at(id));
    }
    in[id] = it->second;
  }
  ForwardTrace trace;
  run_forward(plan, d, in, trace);
  std::map<int, double> out;
  for (int id : plan.neurons) out[id] = value_of(plan, trace, id);
  return out;
}

std::vector<double> materialize(const LayerOp& op, const DenseParams& params) {
  std::vector<double> out;
  out.reserve(op.size());
  if (op.kind == LayerOp::Kind::kDenseMatmul) {
    for (int g : op.cell_groups) out.push_back(params.weights[g]);
  } else {
    for (const auto& e : op.entries) out.push_back(params.weights[e.weight_group]);
  }
  return out;
}

}  // namespace nmp
