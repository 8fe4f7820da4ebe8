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

#include "nmp/verify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "nmp/error.hpp"
#include "nmp/mln.hpp"
#include "nmp/plan.hpp"
#include "nmp/trainer.hpp"

namespace nmp {
namespace {

double uniform(std::mt19937_64& rng, double lo, double hi) {
  return lo + (hi - lo) * (static_cast<double>(rng() >> 11) * 0x1.0p-53);
}

int pick(std::mt19937_64& rng, int n) {
  return static_cast<int>(rng() % static_cast<std::uint64_t>(n));
}

template <typename T>
T activate_t(Activation a, T z) {
  switch (a) {
    case Activation::kSigmoid:
      return z >= 0 ? T(1) / (T(1) + std::exp(-z))
                    : std::exp(z) / (T(1) + std::exp(z));
    case Activation::kRelu:
      return z > 0 ? z : T(0);
    case Activation::kLinear:
      return z;
  }
  return z;
}

template <typename T>
struct EdgewiseTrace {
  std::vector<T> z;
  std::vector<T> a;
  std::vector<std::vector<const Edge*>> incoming;
};

template <typename T>
EdgewiseTrace<T> edgewise_run(const NetworkGraph& graph,
                              const Parameters& params,
                              const std::map<int, double>& inputs) {
  EdgewiseTrace<T> t;
  int bound = graph.neuron_id_bound();
  t.z.assign(bound, T(0));
  t.a.assign(bound, T(0));
  t.incoming.resize(bound);
  for (const Edge& e : graph.edges) t.incoming[e.to].push_back(&e);
  for (int id : graph.topological_order) {
    const Neuron& n = graph.neuron(id);
    if (n.role == Role::kInput) {
      auto it = inputs.find(id);
      if (it == inputs.end()) {
        throw DataError("missing input assignment for " + n.atom.str());
      }
      t.z[id] = t.a[id] = static_cast<T>(it->second);
      continue;
    }
    T z = 0;
    for (const Edge* e : t.incoming[id]) {
      z += static_cast<T>(params.weights.at(e->weight_group)) * t.a[e->from];
    }
    z += static_cast<T>(params.biases.at(*n.bias_group));
    t.z[id] = z;
    t.a[id] = activate_t<T>(*n.activation, z);
  }
  return t;
}

std::map<int, double> random_inputs(const NetworkGraph& graph,
                                    std::mt19937_64& rng, double lo,
                                    double hi) {
  std::map<int, double> in;
  for (const Neuron& n : graph.neurons) {
    if (n.role == Role::kInput) in[n.id] = uniform(rng, lo, hi);
  }
  return in;
}

std::map<int, double> random_targets(const NetworkGraph& graph,
                                     std::mt19937_64& rng) {
  std::map<int, double> out;
  for (const Neuron& n : graph.neurons) {
    if (n.role == Role::kOutput) out[n.id] = uniform(rng, 0.0, 1.0);
  }
  return out;
}

Example to_example(const ExecutionPlan& p, const std::map<int, double>& in,
                   const std::map<int, double>& targets) {
  Example ex;
  ex.inputs.assign(p.neuron_index.size(), 0.0);
  ex.targets.assign(p.neuron_index.size(),
                    std::numeric_limits<double>::quiet_NaN());
  for (const auto& [id, v] : in) ex.inputs[id] = v;
  for (const auto& [id, v] : targets) ex.targets[id] = v;
  return ex;
}

}  // namespace

NetworkGraph random_graph(std::mt19937_64& rng,
                          const RandomGraphOptions& options) {
  int n = options.min_neurons +
          pick(rng, options.max_neurons - options.min_neurons + 1);
  int inputs = 1 + pick(rng, n - 1);
  int groups = 1 + pick(rng, options.max_weight_groups);

  NetworkGraph g;
  std::vector<char> has_out(n, 0);
  std::vector<std::tuple<int, int, int>> raw;  // (from, to, group)
  for (int j = inputs; j < n; ++j) {
    for (int i = 0; i < j; ++i) {
      if (uniform(rng, 0.0, 1.0) >= options.edge_probability) continue;
      int wg = pick(rng, groups);
      raw.emplace_back(i, j, wg);
      has_out[i] = 1;
      if (groups > 1 && uniform(rng, 0.0, 1.0) < 0.1) {
        int other = (wg + 1 + pick(rng, groups - 1)) % groups;
        raw.emplace_back(i, j, other);
      }
    }
  }
  std::vector<int> group_id(groups, -1);
  for (auto& [from, to, wg] : raw) {
    if (group_id[wg] < 0) group_id[wg] = 0;
  }
  int next = 0;
  for (int k = 0; k < groups; ++k) {
    if (group_id[k] >= 0) {
      group_id[k] = next;
      g.weight_groups.push_back(WeightGroup{next, next % 3, {Term::Int(k)}});
      ++next;
    }
  }
  for (std::size_t k = 0; k < raw.size(); ++k) {
    auto [from, to, wg] = raw[k];
    g.edges.push_back(Edge{static_cast<int>(k), from, to, group_id[wg]});
  }

  int non_inputs = n - inputs;
  int bias_slots = 1 + pick(rng, non_inputs);
  std::vector<int> bias_choice(n, -1);
  std::vector<int> bias_id(bias_slots, -1);
  for (int i = inputs; i < n; ++i) bias_choice[i] = pick(rng, bias_slots);
  int next_bias = 0;
  for (int i = inputs; i < n; ++i) {
    if (bias_id[bias_choice[i]] < 0) bias_id[bias_choice[i]] = next_bias++;
  }
  g.bias_groups.resize(next_bias);
  for (int b = 0; b < next_bias; ++b) g.bias_groups[b].id = b;

  const Activation kActs[] = {Activation::kSigmoid, Activation::kRelu,
                              Activation::kLinear};
  for (int i = 0; i < n; ++i) {
    Neuron neuron;
    neuron.id = i;
    if (i < inputs) {
      neuron.role = Role::kInput;
      neuron.atom = Term::Compound("x", {Term::Int(i)});
    } else {
      bool sink = !has_out[i];
      neuron.role = sink ? Role::kOutput : Role::kHidden;
      neuron.atom = Term::Compound(sink ? "y" : "h", {Term::Int(i)});
      neuron.activation = (options.sigmoid_only || sink)
                              ? Activation::kSigmoid
                              : kActs[pick(rng, 3)];
      int b = bias_id[bias_choice[i]];
      neuron.bias_group = b;
      BiasGroup& bg = g.bias_groups[b];
      if (bg.members.empty()) bg.predicate = neuron.atom.indicator();
      bg.members.push_back(i);
    }
    g.neurons.push_back(std::move(neuron));
    g.topological_order.push_back(i);
  }
  g.io.inputs = {"x/1"};
  g.io.outputs = {"y/1"};
  validate_graph(g);
  return g;
}

Parameters random_parameters(const NetworkGraph& graph, std::mt19937_64& rng,
                             double scale) {
  Parameters p;
  for (const WeightGroup& wg : graph.weight_groups) {
    p.weights[wg.id] = uniform(rng, -scale, scale);
  }
  for (const BiasGroup& bg : graph.bias_groups) {
    p.biases[bg.id] = uniform(rng, -scale, scale);
  }
  return p;
}

std::map<int, double> edgewise_forward(const NetworkGraph& graph,
                                       const Parameters& params,
                                       const std::map<int, double>& inputs) {
  check_parameters(graph, params);
  auto t = edgewise_run<double>(graph, params, inputs);
  std::map<int, double> out;
  for (const Neuron& n : graph.neurons) out[n.id] = t.a[n.id];
  return out;
}

long double edgewise_loss(const NetworkGraph& graph, const Parameters& params,
                          const std::map<int, double>& inputs,
                          const std::map<int, double>& targets) {
  auto t = edgewise_run<long double>(graph, params, inputs);
  long double loss = 0;
  const long double floor = 1e-12L;
  for (const Neuron& n : graph.neurons) {
    if (n.role != Role::kOutput) continue;
    long double a = t.a[n.id];
    long double y = targets.at(n.id);
    loss -= y * std::log(std::max(a, floor)) +
            (1 - y) * std::log(std::max(1 - a, floor));
  }
  return loss;
}

Parameters edgewise_gradient(const NetworkGraph& graph,
                             const Parameters& params,
                             const std::map<int, double>& inputs,
                             const std::map<int, double>& targets) {
  auto t = edgewise_run<double>(graph, params, inputs);
  int bound = graph.neuron_id_bound();
  std::vector<double> da(bound, 0.0);
  std::vector<double> dz(bound, 0.0);
  Parameters grad = zero_parameters(graph);
  for (auto it = graph.topological_order.rbegin();
       it != graph.topological_order.rend(); ++it) {
    const Neuron& n = graph.neuron(*it);
    if (n.role == Role::kInput) continue;
    double a = t.a[n.id];
    double d = 0.0;
    switch (*n.activation) {
      case Activation::kSigmoid:
        d = a * (1.0 - a);
        break;
      case Activation::kRelu:
        d = t.z[n.id] > 0 ? 1.0 : 0.0;
        break;
      case Activation::kLinear:
        d = 1.0;
        break;
    }
    dz[n.id] = da[n.id] * d;
    if (n.role == Role::kOutput) dz[n.id] += a - targets.at(n.id);
    grad.biases[*n.bias_group] += dz[n.id];
    for (const Edge* e : t.incoming[n.id]) {
      grad.weights[e->weight_group] += dz[n.id] * t.a[e->from];
      da[e->from] += params.weights.at(e->weight_group) * dz[n.id];
    }
  }
  return grad;
}

std::string TrialReport::str() const {
  return std::to_string(passed) + "/" + std::to_string(trials) +
         " within 1e-" + std::to_string(tolerance_exponent);
}

TrialReport sigmoid_equivalence(std::uint64_t seed, int trials) {
  std::mt19937_64 rng(seed);
  TrialReport r;
  r.tolerance_exponent = 9;
  RandomGraphOptions opt;
  opt.max_neurons = 12;
  for (int trial = 0; trial < trials; ++trial) {
    NetworkGraph g = random_graph(rng, opt);
    Parameters p = random_parameters(g, rng, 2.0);
    PairwiseMarkovNetwork mn = to_pairwise_mn(g, p);
    std::vector<int> candidates;
    for (const Neuron& n : g.neurons) {
      if (n.role != Role::kInput) candidates.push_back(n.id);
    }
    int target = candidates[pick(rng, static_cast<int>(candidates.size()))];
    Evidence ev;
    double z = p.biases.at(*g.neuron(target).bias_group);
    for (const Edge& e : g.edges) {
      if (e.to == target && !ev.count(e.from)) ev[e.from] = pick(rng, 2);
    }
    for (const Edge& e : g.edges) {
      if (e.to == target) z += p.weights.at(e.weight_group) * ev.at(e.from);
      if (e.from == target) ev[e.to] = 0;
    }
    double expected = activate(Activation::kSigmoid, z);
    double got = brute_force_conditional(mn, target, ev);
    double err = std::fabs(got - expected);
    r.worst = std::max(r.worst, err);
    ++r.trials;
    if (err <= 1e-9) ++r.passed;
  }
  return r;
}

TrialReport plan_equivalence(std::uint64_t seed, int trials) {
  std::mt19937_64 rng(seed);
  TrialReport r;
  r.tolerance_exponent = 12;
  RandomGraphOptions opt;
  opt.max_neurons = 50;
  opt.sigmoid_only = false;
  opt.max_weight_groups = 6;
  for (int trial = 0; trial < trials; ++trial) {
    opt.edge_probability = 0.05 + 0.35 * uniform(rng, 0.0, 1.0);
    NetworkGraph g = random_graph(rng, opt);
    Parameters p = random_parameters(g, rng, 1.0);
    auto in = random_inputs(g, rng, -1.0, 1.0);
    auto expected = edgewise_forward(g, p, in);
    auto got = forward_plan(plan(g), p, in);
    bool ok = true;
    for (const auto& [id, v] : expected) {
      double err = std::fabs(got.at(id) - v) / std::max(1.0, std::fabs(v));
      r.worst = std::max(r.worst, err);
      ok = ok && err <= 1e-12;
    }
    ++r.trials;
    r.passed += ok;
  }
  return r;
}

TrialReport gradient_check(std::uint64_t seed, int trials) {
  std::mt19937_64 rng(seed);
  TrialReport r;
  r.tolerance_exponent = 5;
  RandomGraphOptions opt;
  opt.max_neurons = 30;
  opt.sigmoid_only = false;
  opt.edge_probability = 0.25;
  const double h = 1e-6;
  for (int trial = 0; trial < trials; ++trial) {
    NetworkGraph g = random_graph(rng, opt);
    Parameters p = random_parameters(g, rng, 1.0);
    auto in = random_inputs(g, rng, 0.0, 1.0);
    auto targets = random_targets(g, rng);
    ExecutionPlan ep = plan(g);
    LossAndGrad lg = loss_and_grad(ep, p, to_example(ep, in, targets));
    bool ok = true;
    auto check = [&](std::map<int, double>& values, int id, double analytic) {
      if (std::fabs(analytic) <= 1e-8) return;
      double base = values[id];
      double up = base + h;
      double down = base - h;
      values[id] = up;
      long double lu = edgewise_loss(g, p, in, targets);
      values[id] = down;
      long double ld = edgewise_loss(g, p, in, targets);
      values[id] = base;
      double fd = static_cast<double>((lu - ld) / (static_cast<long double>(up) -
                                                   static_cast<long double>(down)));
      double err = std::fabs(analytic - fd) /
                   std::max(std::fabs(analytic), std::fabs(fd));
      r.worst = std::max(r.worst, err);
      ok = ok && err < 1e-5;
    };
    for (const auto& [id, v] : lg.grad.weights) check(p.weights, id, v);
    for (const auto& [id, v] : lg.grad.biases) check(p.biases, id, v);
    ++r.trials;
    r.passed += ok;
  }
  return r;
}

TrialReport tying_check(std::uint64_t seed, int trials) {
  std::mt19937_64 rng(seed);
  TrialReport r;
  r.tolerance_exponent = 12;
  RandomGraphOptions opt;
  opt.max_neurons = 30;
  opt.sigmoid_only = false;
  opt.edge_probability = 0.25;
  for (int trial = 0; trial < trials; ++trial) {
    NetworkGraph g = random_graph(rng, opt);
    Parameters p = random_parameters(g, rng, 1.0);
    auto in = random_inputs(g, rng, 0.0, 1.0);
    auto targets = random_targets(g, rng);
    ExecutionPlan ep = plan(g);
    LossAndGrad lg = loss_and_grad(ep, p, to_example(ep, in, targets));
    Parameters oracle = edgewise_gradient(g, p, in, targets);
    bool ok = true;
    auto cmp = [&](const std::map<int, double>& a,
                   const std::map<int, double>& b) {
      for (const auto& [id, v] : b) {
        double err = std::fabs(a.at(id) - v) / std::max(1.0, std::fabs(v));
        r.worst = std::max(r.worst, err);
        ok = ok && err <= 1e-12;
      }
    };
    cmp(lg.grad.weights, oracle.weights);
    cmp(lg.grad.biases, oracle.biases);
    ++r.trials;
    r.passed += ok;
  }
  return r;
}

}  // namespace nmp
