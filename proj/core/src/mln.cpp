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

#include "nmp/mln.hpp"

#include <cmath>
#include <cstdio>
#include <limits>

#include "nmp/error.hpp"
#include "nmp/plan.hpp"
#include "nmp/trainer.hpp"

namespace nmp {
namespace {

// Neumaier summation.
struct Compensated {
  double sum = 0.0;
  double c = 0.0;

  void add(double x) {
    double t = sum + x;
    if (std::fabs(sum) >= std::fabs(x)) {
      c += (sum - t) + x;
    } else {
      c += (x - t) + sum;
    }
    sum = t;
  }
  void scale(double f) {
    sum *= f;
    c *= f;
  }
  double value() const { return sum + c; }
};

bool bit(std::uint64_t v, int i) { return ((v >> i) & 1u) != 0; }

void check_bound(const PairwiseMarkovNetwork& mn) {
  if (mn.size() > kMaxEnumerationNodes) {
    throw ResourceLimitError("exact enumeration is limited to " +
                             std::to_string(kMaxEnumerationNodes) +
                             " nodes; network has " +
                             std::to_string(mn.size()));
  }
}

// Visits every completion of the evidence with weight exp(score - shift).
// `rescale(f)` is called whenever the running shift grows, so that
// accumulated sums stay in the same scale as later weights.
template <typename Visit, typename Rescale>
double enumerate(const PairwiseMarkovNetwork& mn, const Evidence& evidence,
                 Visit visit, Rescale rescale) {
  check_bound(mn);
  int n = static_cast<int>(mn.size());
  std::uint64_t base = 0;
  std::vector<int> free_nodes;
  for (int i = 0; i < n; ++i) {
    auto it = evidence.find(i);
    if (it == evidence.end()) {
      free_nodes.push_back(i);
    } else if (it->second == 1) {
      base |= std::uint64_t{1} << i;
    } else if (it->second != 0) {
      throw Error("evidence values must be 0 or 1");
    }
  }
  for (const auto& [node, value] : evidence) {
    if (node < 0 || node >= n) throw Error("evidence names a missing node");
  }
  double shift = -std::numeric_limits<double>::infinity();
  std::uint64_t states = std::uint64_t{1} << free_nodes.size();
  for (std::uint64_t k = 0; k < states; ++k) {
    std::uint64_t v = base;
    for (std::size_t b = 0; b < free_nodes.size(); ++b) {
      if (bit(k, static_cast<int>(b))) v |= std::uint64_t{1} << free_nodes[b];
    }
    double s = mn.log_score(v);
    if (s > shift) {
      rescale(std::isinf(shift) ? 0.0 : std::exp(shift - s));
      shift = s;
    }
    visit(v, std::exp(s - shift));
  }
  return shift;
}

void collect_tree(const NetworkGraph& graph,
                  const std::vector<std::vector<const Edge*>>& incoming,
                  int neuron, std::vector<std::pair<int, int>> path,
                  UnrolledNetwork& out, std::size_t max_nodes, int& index) {
  if (out.nodes.size() >= max_nodes) {
    throw ResourceLimitError("unrolled network exceeds " +
                             std::to_string(max_nodes) + " nodes");
  }
  index = static_cast<int>(out.nodes.size());
  out.nodes.push_back(UnrolledNode{neuron, path});
  int self = index;
  for (const Edge* e : incoming[neuron]) {
    auto child_path = path;
    child_path.emplace_back(e->id, 0);
    int parent = 0;
    collect_tree(graph, incoming, e->from, std::move(child_path), out,
                 max_nodes, parent);
    out.edges.push_back(UnrolledEdge{parent, self, e->id, e->weight_group, 1});
  }
}

void replicate(const UnrolledNetwork& tree,
               const std::vector<std::vector<int>>& incoming, int node,
               std::vector<std::pair<int, int>> path, int L,
               UnrolledNetwork& out, std::size_t max_nodes, int& index) {
  if (out.nodes.size() >= max_nodes) {
    throw ResourceLimitError("unrolled network exceeds " +
                             std::to_string(max_nodes) + " nodes");
  }
  index = static_cast<int>(out.nodes.size());
  out.nodes.push_back(UnrolledNode{tree.nodes[node].neuron, path});
  int self = index;
  for (int ei : incoming[node]) {
    const UnrolledEdge& e = tree.edges[ei];
    for (int copy = 0; copy < L; ++copy) {
      auto child_path = path;
      child_path.emplace_back(e.edge, copy);
      int parent = 0;
      replicate(tree, incoming, e.from, std::move(child_path), L, out,
                max_nodes, parent);
      out.edges.push_back(
          UnrolledEdge{parent, self, e.edge, e.weight_group, e.divisor * L});
    }
  }
}

}  // namespace

double PairwiseMarkovNetwork::log_score(std::uint64_t v) const {
  double s = 0.0;
  for (const PairFeature& f : pairs) {
    if (bit(v, f.i) && bit(v, f.j)) s += f.weight;
  }
  for (const BiasFeature& f : biases) {
    if (bit(v, f.i)) s += f.weight;
  }
  return s;
}

PairwiseMarkovNetwork to_pairwise_mn(const NetworkGraph& graph,
                                     const Parameters& params) {
  check_parameters(graph, params);
  PairwiseMarkovNetwork mn;
  std::vector<int> index(graph.neuron_id_bound(), -1);
  for (const Neuron& n : graph.neurons) {
    if (n.role != Role::kInput && n.activation != Activation::kSigmoid) {
      throw CompileError("Markov network semantics needs sigmoid neurons; " +
                         n.atom.str() + " is " +
                         activation_name(*n.activation));
    }
    index[n.id] = static_cast<int>(mn.size());
    mn.labels.push_back(n.atom.str());
    mn.neuron.push_back(n.id);
  }
  for (const Edge& e : graph.edges) {
    mn.pairs.push_back(PairFeature{index[e.from], index[e.to],
                                   params.weights.at(e.weight_group),
                                   e.weight_group, 1});
  }
  for (const Neuron& n : graph.neurons) {
    if (n.bias_group) {
      mn.biases.push_back(BiasFeature{index[n.id],
                                      params.biases.at(*n.bias_group),
                                      *n.bias_group});
    }
  }
  return mn;
}

double brute_force_conditional(const PairwiseMarkovNetwork& mn, int node,
                               const Evidence& evidence) {
  if (node < 0 || node >= static_cast<int>(mn.size())) {
    throw Error("query names a missing node");
  }
  if (evidence.count(node)) {
    throw Error("evidence assigns the queried node " + mn.labels[node]);
  }
  Compensated z;
  Compensated z1;
  enumerate(
      mn, evidence,
      [&](std::uint64_t v, double w) {
        z.add(w);
        if (bit(v, node)) z1.add(w);
      },
      [&](double f) {
        z.scale(f);
        z1.scale(f);
      });
  return z1.value() / z.value();
}

std::vector<double> joint_probabilities(const PairwiseMarkovNetwork& mn) {
  check_bound(mn);
  std::uint64_t states = std::uint64_t{1} << mn.size();
  std::vector<double> scores(states);
  double top = -std::numeric_limits<double>::infinity();
  for (std::uint64_t v = 0; v < states; ++v) {
    scores[v] = mn.log_score(v);
    top = std::max(top, scores[v]);
  }
  Compensated z;
  for (double& s : scores) {
    s = std::exp(s - top);
    z.add(s);
  }
  double total = z.value();
  for (double& s : scores) s /= total;
  return scores;
}

FeatureExpectations feature_expectations(const PairwiseMarkovNetwork& mn,
                                         const Evidence& evidence) {
  Compensated z;
  std::vector<Compensated> pairs(mn.pairs.size());
  std::vector<Compensated> biases(mn.biases.size());
  double shift = enumerate(
      mn, evidence,
      [&](std::uint64_t v, double w) {
        z.add(w);
        for (std::size_t k = 0; k < mn.pairs.size(); ++k) {
          if (bit(v, mn.pairs[k].i) && bit(v, mn.pairs[k].j)) pairs[k].add(w);
        }
        for (std::size_t k = 0; k < mn.biases.size(); ++k) {
          if (bit(v, mn.biases[k].i)) biases[k].add(w);
        }
      },
      [&](double f) {
        z.scale(f);
        for (auto& p : pairs) p.scale(f);
        for (auto& b : biases) b.scale(f);
      });
  FeatureExpectations out;
  double total = z.value();
  for (const auto& p : pairs) out.pairs.push_back(p.value() / total);
  for (const auto& b : biases) out.biases.push_back(b.value() / total);
  out.log_partition = shift + std::log(total);
  return out;
}

std::string UnrolledNode::label(const NetworkGraph& graph) const {
  std::string out = graph.neuron(neuron).atom.str();
  for (const auto& [edge, copy] : path) {
    out += "/e" + std::to_string(edge) + "." + std::to_string(copy);
  }
  return out;
}

UnrolledNetwork unroll_step1(const NetworkGraph& graph, std::size_t max_nodes) {
  topological_sort(graph);
  std::vector<std::vector<const Edge*>> incoming(graph.neuron_id_bound());
  for (const Edge& e : graph.edges) incoming[e.to].push_back(&e);
  UnrolledNetwork out;
  for (const Neuron& n : graph.neurons) {
    if (n.role != Role::kOutput) continue;
    int root = 0;
    collect_tree(graph, incoming, n.id, {}, out, max_nodes, root);
    out.roots.push_back(root);
  }
  return out;
}

UnrolledNetwork unroll_step2(const UnrolledNetwork& tree, int L,
                             std::size_t max_nodes) {
  if (L < 1) throw Error("replication factor must be at least 1");
  std::vector<std::vector<int>> incoming(tree.nodes.size());
  for (std::size_t i = 0; i < tree.edges.size(); ++i) {
    incoming[tree.edges[i].to].push_back(static_cast<int>(i));
  }
  UnrolledNetwork out;
  out.replication = tree.replication * L;
  for (int r : tree.roots) {
    int root = 0;
    replicate(tree, incoming, r, tree.nodes[r].path, L, out, max_nodes, root);
    out.roots.push_back(root);
  }
  return out;
}

PairwiseMarkovNetwork to_pairwise_mn(const UnrolledNetwork& tree,
                                     const NetworkGraph& graph,
                                     const Parameters& params) {
  check_parameters(graph, params);
  PairwiseMarkovNetwork mn;
  for (const UnrolledNode& node : tree.nodes) {
    const Neuron& n = graph.neuron(node.neuron);
    if (n.role != Role::kInput && n.activation != Activation::kSigmoid) {
      throw CompileError("Markov network semantics needs sigmoid neurons; " +
                         n.atom.str() + " is " +
                         activation_name(*n.activation));
    }
    mn.labels.push_back(node.label(graph));
    mn.neuron.push_back(node.neuron);
  }
  for (const UnrolledEdge& e : tree.edges) {
    mn.pairs.push_back(PairFeature{
        e.from, e.to, params.weights.at(e.weight_group) / e.divisor,
        e.weight_group, e.divisor});
  }
  for (std::size_t i = 0; i < tree.nodes.size(); ++i) {
    const Neuron& n = graph.neuron(tree.nodes[i].neuron);
    if (n.bias_group) {
      mn.biases.push_back(BiasFeature{static_cast<int>(i),
                                      params.biases.at(*n.bias_group),
                                      *n.bias_group});
    }
  }
  return mn;
}

std::vector<DiscrepancyRow> gradient_discrepancy(
    const NetworkGraph& graph, const Parameters& params,
    const std::map<int, double>& inputs, const std::map<int, double>& targets,
    const std::vector<int>& Ls) {
  auto binary = [](double v) { return v == 0.0 || v == 1.0; };
  ExecutionPlan p = plan(graph);
  Example ex;
  ex.inputs.assign(p.neuron_index.size(), 0.0);
  ex.targets.assign(p.neuron_index.size(),
                    std::numeric_limits<double>::quiet_NaN());
  for (int id : p.inputs) {
    auto it = inputs.find(id);
    if (it == inputs.end()) {
      throw DataError("missing input assignment for " + p.labels.at(id));
    }
    if (!binary(it->second)) {
      throw DataError("Markov network evidence must be binary; " +
                      p.labels.at(id) + " is not 0 or 1");
    }
    ex.inputs[id] = it->second;
  }
  for (int id : p.outputs) {
    auto it = targets.find(id);
    if (it == targets.end()) {
      throw DataError("missing target for " + p.labels.at(id));
    }
    if (!binary(it->second)) {
      throw DataError("Markov network evidence must be binary; target of " +
                      p.labels.at(id) + " is not 0 or 1");
    }
    ex.targets[id] = it->second;
  }
  LossAndGrad bp = loss_and_grad(p, params, ex);

  UnrolledNetwork tree = unroll_step1(graph);
  std::vector<DiscrepancyRow> rows;
  for (int L : Ls) {
    UnrolledNetwork t2 = unroll_step2(tree, L);
    PairwiseMarkovNetwork mn = to_pairwise_mn(t2, graph, params);
    Evidence free_output;
    for (std::size_t i = 0; i < t2.nodes.size(); ++i) {
      const Neuron& n = graph.neuron(t2.nodes[i].neuron);
      if (n.role == Role::kInput) {
        free_output[static_cast<int>(i)] = static_cast<int>(ex.inputs[n.id]);
      }
    }
    Evidence clamped = free_output;
    for (int r : t2.roots) {
      clamped[r] = static_cast<int>(ex.targets[t2.nodes[r].neuron]);
    }
    FeatureExpectations e_x = feature_expectations(mn, free_output);
    FeatureExpectations e_xo = feature_expectations(mn, clamped);
    std::map<int, double> gw;
    std::map<int, double> gb;
    for (std::size_t k = 0; k < mn.pairs.size(); ++k) {
      const PairFeature& f = mn.pairs[k];
      gw[f.group] += (e_x.pairs[k] - e_xo.pairs[k]) / f.divisor;
    }
    for (std::size_t k = 0; k < mn.biases.size(); ++k) {
      gb[mn.biases[k].group] += e_x.biases[k] - e_xo.biases[k];
    }
    for (const auto& [g, v] : bp.grad.weights) {
      double m = gw.count(g) ? gw[g] : 0.0;
      rows.push_back(DiscrepancyRow{L, false, g, v, m, std::fabs(m - v)});
    }
    for (const auto& [g, v] : bp.grad.biases) {
      double m = gb.count(g) ? gb[g] : 0.0;
      rows.push_back(DiscrepancyRow{L, true, g, v, m, std::fabs(m - v)});
    }
  }
  return rows;
}

std::string discrepancy_csv(const std::vector<DiscrepancyRow>& rows) {
  std::string out = "L,kind,group,backprop,markov,abs_diff\n";
  char buf[192];
  for (const DiscrepancyRow& r : rows) {
    std::snprintf(buf, sizeof buf, "%d,%s,%d,%.17g,%.17g,%.17g\n", r.L,
                  r.bias ? "bias" : "weight", r.group, r.backprop, r.markov,
                  r.abs_diff);
    out += buf;
  }
  return out;
}

}  // namespace nmp
