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

// End-to-end acceptance suite. Prints one PASS/FAIL line per criterion
// and exits nonzero when any criterion fails.

#include <sys/wait.h>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>

#include "nmp/error.hpp"
#include "nmp/grounder.hpp"
#include "nmp/mln.hpp"
#include "nmp/network_ir.hpp"
#include "nmp/plan.hpp"
#include "nmp/trainer.hpp"
#include "nmp/verify.hpp"
#include "test_util.hpp"

namespace {

using namespace nmp;
using Clock = std::chrono::steady_clock;

struct Outcome {
  bool ok = true;
  std::string detail;

  void require(bool cond, const std::string& what) {
    if (!cond) {
      ok = false;
      detail += (detail.empty() ? "" : "; ") + what;
    }
  }
};

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

// Runs fn, charging its wall time against limit. A limit of 0 means none.
bool criterion(int number, const std::string& name, double limit,
               const std::function<Outcome()>& fn) {
  auto start = Clock::now();
  Outcome out;
  try {
    out = fn();
  } catch (const std::exception& e) {
    out.ok = false;
    out.detail = std::string("exception: ") + e.what();
  }
  double t = seconds_since(start);
  bool in_time = limit <= 0 || t < limit;
  bool pass = out.ok && in_time;
  std::printf("criterion %d %s: %s (%s%s%.3fs", number, name.c_str(),
              pass ? "PASS" : "FAIL", out.detail.c_str(),
              out.detail.empty() ? "" : ", ", t);
  if (limit > 0) std::printf(" < %gs%s", limit, in_time ? "" : " exceeded");
  std::printf(")\n");
  std::fflush(stdout);
  return pass;
}

// Sub-check with its own time budget inside a criterion.
template <typename F>
NetworkGraph timed_build(Outcome& out, const std::string& label, double limit,
                         F&& build) {
  auto start = Clock::now();
  NetworkGraph g = build();
  double t = seconds_since(start);
  out.require(t < limit, label + " took " + std::to_string(t) + "s");
  return g;
}

std::size_t fan_in(const NetworkGraph& g, int id) {
  std::size_t n = 0;
  for (const Edge& e : g.edges) n += e.to == id;
  return n;
}

Outcome golden_graphs() {
  Outcome out;
  std::ostringstream summary;

  NetworkGraph dnn = timed_build(out, "DNN", 1.0, [] { return testing::dnn_graph(); });
  out.require(dnn.weight_groups.size() == 10, "DNN weight groups");
  out.require(dnn.neurons.size() == 7, "DNN neurons");
  out.require(dnn.edges.size() == 10, "DNN edges");
  out.require(dnn.bias_groups.size() == 5, "DNN bias groups");
  // 2 inputs, two fully connected hidden layers of 2, one output; every
  // edge its own weight.
  std::map<std::string, std::set<std::string>> parents;
  for (const Edge& e : dnn.edges) {
    parents[dnn.neuron(e.to).atom.str()].insert(dnn.neuron(e.from).atom.str());
  }
  std::map<std::string, std::set<std::string>> layered{
      {"hidden1(1)", {"input(1)", "input(2)"}},
      {"hidden1(2)", {"input(1)", "input(2)"}},
      {"hidden2(1)", {"hidden1(1)", "hidden1(2)"}},
      {"hidden2(2)", {"hidden1(1)", "hidden1(2)"}},
      {"output(1)", {"hidden2(1)", "hidden2(2)"}}};
  out.require(parents == layered, "DNN topology differs from the layered layout");
  std::set<int> dnn_groups;
  for (const Edge& e : dnn.edges) dnn_groups.insert(e.weight_group);
  out.require(dnn_groups.size() == 10, "DNN edges share weights");
  summary << "DNN 7/10/10w/5b";

  NetworkGraph rnn = timed_build(out, "RNN", 1.0, [] { return testing::rnn_graph(); });
  out.require(rnn.weight_groups.size() == 4, "RNN weight groups");
  out.require(rnn.edges.size() == 39, "RNN edges");
  std::size_t hidden = 0;
  std::set<int> recurrent_groups;
  std::size_t recurrent = 0;
  for (const Neuron& n : rnn.neurons) {
    if (n.atom.name() != "hidden") continue;
    ++hidden;
    std::size_t from_inputs = 0;
    for (const Edge& e : rnn.edges) {
      if (e.to != n.id) continue;
      if (rnn.neuron(e.from).role == Role::kInput) {
        ++from_inputs;
      } else {
        ++recurrent;
        recurrent_groups.insert(e.weight_group);
      }
    }
    out.require(from_inputs == 3, n.atom.str() + " input fan-in");
  }
  out.require(hidden == 10, "RNN hidden count");
  out.require(recurrent == 9 && recurrent_groups.size() == 1,
              "RNN recurrent edges");
  summary << ", RNN 4w/39e";

  NetworkGraph cnn = timed_build(out, "CNN", 2.0, [] { return testing::cnn_graph(); });
  out.require(cnn.weight_groups.size() == 9, "CNN weight groups");
  out.require(cnn.edges.size() == 784, "CNN edges");
  out.require(cnn.bias_groups.size() == 1, "CNN bias groups");
  std::size_t cnn_hidden = 0;
  for (const Neuron& n : cnn.neurons) cnn_hidden += n.atom.name() == "hidden";
  out.require(cnn_hidden == 100, "CNN hidden count");
  // Clipped 3x3 neighbourhood on a 10x10 grid.
  std::size_t expected = 0;
  for (int a = 1; a <= 10; ++a) {
    for (int b = 1; b <= 10; ++b) {
      int rows = 3 - (a == 1) - (a == 10);
      int cols = 3 - (b == 1) - (b == 10);
      expected += static_cast<std::size_t>(rows * cols);
    }
  }
  out.require(expected == cnn.edges.size(), "CNN neighbourhood count");
  summary << ", CNN 9w/784e";

  NetworkGraph gnn = timed_build(out, "GNN", 1.0, [] { return testing::gnn_graph(); });
  out.require(gnn.weight_groups.size() == 1, "GNN weight groups");
  out.require(gnn.edges.size() == 12, "GNN edges");
  for (const Neuron& n : gnn.neurons) {
    if (n.role != Role::kInput) out.require(fan_in(gnn, n.id) == 3, "GNN fan-in");
  }
  summary << ", GNN 1w/12e";

  auto start = Clock::now();
  NmpProgram smoking = assemble_program(
      "", testing::read_file(testing::program_path("smoking.nmp")));
  Program det(smoking.deterministic);
  auto rule1 = ground_rule(smoking.interpreted[0], det);
  out.require(rule1.size() == 1 && rule1[0].head.str() == "smokes(bob)" &&
                  rule1[0].body.str() == "smoking_friend(bob,anna)",
              "smoking rule 1 grounding");
  IoSpec io;
  io.outputs = infer_io(smoking).outputs;
  NetworkGraph sg = build_network(smoking, io);
  std::size_t rule2_edges = 0;
  std::set<int> rule2_groups;
  for (const Edge& e : sg.edges) {
    if (sg.weight_group(e.weight_group).rule_id == 1) {
      ++rule2_edges;
      rule2_groups.insert(e.weight_group);
    }
  }
  out.require(rule2_edges == 2 && rule2_groups.size() == 1, "smoking rule 2");
  out.require(seconds_since(start) < 1.0, "smoking took too long");
  summary << ", smoking (bob,anna) + 2e/1w";

  if (out.ok) out.detail = summary.str();
  return out;
}

Outcome report(const TrialReport& r) {
  Outcome out;
  out.ok = r.ok();
  std::ostringstream s;
  s << r.str() << ", worst " << r.worst;
  out.detail = s.str();
  return out;
}

Outcome unroll_construction(const std::string& work_dir) {
  Outcome out;
  NetworkGraph chain = testing::chain_graph();
  UnrolledNetwork tree = unroll_step1(chain);
  out.require(tree.nodes.size() == 3, "chain Step 1 size");
  std::mt19937_64 rng(7);
  Parameters params = random_parameters(chain, rng, 1.0);
  for (int L = 1; L <= 3; ++L) {
    UnrolledNetwork t = unroll_step2(tree, L);
    std::size_t want = 1 + L + L * L;
    out.require(t.nodes.size() == want,
                "L=" + std::to_string(L) + " gives " +
                    std::to_string(t.nodes.size()) + " nodes");
    PairwiseMarkovNetwork mn = to_pairwise_mn(t, chain, params);
    for (const PairFeature& f : mn.pairs) {
      out.require(f.weight * L == params.weights.at(f.group), "weight law");
    }
  }
  UnrolledNetwork one = unroll_step2(tree, 1);
  bool same = one.nodes.size() == tree.nodes.size() &&
              one.edges.size() == tree.edges.size();
  for (std::size_t i = 0; same && i < one.edges.size(); ++i) {
    same = one.nodes[one.edges[i].from].neuron ==
               tree.nodes[tree.edges[i].from].neuron &&
           one.nodes[one.edges[i].to].neuron ==
               tree.nodes[tree.edges[i].to].neuron &&
           one.edges[i].weight_group == tree.edges[i].weight_group &&
           one.edges[i].divisor == 1;
  }
  out.require(same, "L=1 is not the identity");

  std::map<int, double> inputs;
  std::map<int, double> targets;
  for (const Neuron& n : chain.neurons) {
    if (n.role == Role::kInput) inputs[n.id] = 1.0;
    if (n.role == Role::kOutput) targets[n.id] = 1.0;
  }
  auto rows = gradient_discrepancy(chain, params, inputs, targets, {1, 2, 4});
  std::string csv = discrepancy_csv(rows);
  std::string csv_path = work_dir + "/unroll_chain.csv";
  std::ofstream(csv_path, std::ios::binary) << csv;
  out.require(rows.size() == 12, "discrepancy rows");
  std::map<int, double> worst;
  for (const auto& r : rows) worst[r.L] = std::max(worst[r.L], r.abs_diff);
  if (out.ok) {
    std::ostringstream s;
    s << "node counts 3/7/13, max discrepancy";
    for (const auto& [L, v] : worst) s << " L=" << L << ":" << v;
    s << ", csv " << csv_path;
    out.detail = s.str();
  }
  return out;
}

Outcome xor_training() {
  Outcome out;
  NetworkGraph g = testing::dnn_graph();
  ExecutionPlan p = plan(g);
  Dataset data =
      parse_csv(testing::read_file(testing::program_path("xor.csv")), g);
  std::ostringstream s;
  bool any = false;
  for (std::uint64_t seed = 1; seed <= 5 && !any; ++seed) {
    TrainConfig c;
    c.learning_rate = 0.5;
    c.epochs = 20000;
    c.seed = seed;
    TrainResult r = train(p, data, c);
    double final_loss = r.loss_trace.back();
    s << (seed > 1 ? ", " : "") << "seed " << seed << " loss " << final_loss;
    any = final_loss < 0.05;
  }
  out.ok = any;
  out.detail = s.str();
  return out;
}

int run(const std::string& args) {
  std::string cmd = std::string(NMPC_PATH) + " " + args;
  int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

Outcome determinism(const std::string& work_dir) {
  Outcome out;
  std::string dir = work_dir + "/determinism";
  std::filesystem::create_directories(dir);
  std::string compile = "compile --nmp " + testing::program_path("dnn.nmp") +
                        " --outputs output/1 2>/dev/null -o ";
  out.require(run(compile + dir + "/g1.json") == 0, "compile 1 failed");
  out.require(run(compile + dir + "/g2.json") == 0, "compile 2 failed");
  out.require(testing::read_file(dir + "/g1.json") ==
                  testing::read_file(dir + "/g2.json"),
              "compile outputs differ");
  std::string train = "train " + dir + "/g1.json --data " +
                      testing::program_path("xor.csv") +
                      " --lr 0.5 --epochs 500 --seed 3 2>/dev/null";
  for (int k = 1; k <= 2; ++k) {
    std::string n = std::to_string(k);
    out.require(run(train + " --params " + dir + "/p" + n + ".json --trace " +
                    dir + "/t" + n + ".csv") == 0,
                "train " + n + " failed");
  }
  out.require(testing::read_file(dir + "/p1.json") ==
                  testing::read_file(dir + "/p2.json"),
              "parameter documents differ");
  out.require(testing::read_file(dir + "/t1.csv") ==
                  testing::read_file(dir + "/t2.csv"),
              "loss traces differ");
  if (out.ok) out.detail = "compile and train byte-identical";
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  std::string work_dir = argc > 1 ? argv[1] : ".";
  int failed = 0;
  failed += !criterion(1, "golden graphs", 0, golden_graphs);
  failed += !criterion(2, "sigmoid/Markov equivalence", 60, [] {
    return report(sigmoid_equivalence(7, 100));
  });
  failed += !criterion(3, "plan/edgewise equivalence", 30, [] {
    return report(plan_equivalence(7, 200));
  });
  failed += !criterion(4, "gradient correctness", 30, [] {
    return report(gradient_check(7, 50));
  });
  failed += !criterion(5, "unroll construction", 5,
                       [&] { return unroll_construction(work_dir); });
  failed += !criterion(6, "XOR training", 60, xor_training);
  failed += !criterion(7, "determinism", 0,
                       [&] { return determinism(work_dir); });
  std::printf("%s: %d of 7 criteria failed\n", failed ? "FAIL" : "PASS", failed);
  return failed ? 1 : 0;
}
