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

#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <set>
#include <sstream>

#include "nmp/error.hpp"
#include "nmp/mln.hpp"
#include "nmp/plan.hpp"
#include "nmp/verify.hpp"
#include "test_util.hpp"

namespace nmp {
namespace {

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

// i -> a1 -> ... -> a_depth-1 -> o, one rule per link.
NetworkGraph chain_of_depth(int depth) {
  std::string text;
  std::string prev = "i(1)";
  for (int k = 1; k < depth; ++k) {
    std::string next = "a" + std::to_string(k) + "(1)";
    text += next + " :- " + prev + ".\n";
    prev = next;
  }
  text += "o(1) :- " + prev + ".\n";
  return testing::build_text("", text, "o/1");
}

NetworkGraph diamond_graph() {
  return testing::build_text(
      "", "h1(1) :- i(1).\nh2(1) :- i(1).\no(1) :- h1(1).\no(1) :- h2(1).\n",
      "o/1");
}

// Independent recount: a node plus a private copy of each parent's tree.
std::size_t tree_size(const NetworkGraph& g, int id) {
  std::size_t n = 1;
  for (const Edge& e : g.edges) {
    if (e.to == id) n += tree_size(g, e.from);
  }
  return n;
}

TEST(MarkovNetwork, DnnCounts) {
  NetworkGraph g = testing::dnn_graph();
  PairwiseMarkovNetwork mn = to_pairwise_mn(g, zero_parameters(g));
  EXPECT_EQ(mn.size(), 7u);
  EXPECT_EQ(mn.pairs.size(), 10u);
  EXPECT_EQ(mn.biases.size(), 5u);
}

TEST(MarkovNetwork, GnnSharesOneWeight) {
  NetworkGraph g = testing::gnn_graph();
  std::mt19937_64 rng(2);
  Parameters p = random_parameters(g, rng, 1.0);
  PairwiseMarkovNetwork mn = to_pairwise_mn(g, p);
  ASSERT_EQ(mn.pairs.size(), 12u);
  for (const PairFeature& f : mn.pairs) {
    EXPECT_EQ(f.weight, mn.pairs[0].weight);
  }
}

TEST(MarkovNetwork, SingleNodeNoEdges) {
  NetworkGraph g;
  g.neurons.push_back(Neuron{0, Term::Compound("o", {Term::Int(1)}),
                             Role::kOutput, Activation::kSigmoid, 0});
  g.bias_groups.push_back(BiasGroup{0, "o/1", {}, {}, {0}});
  g.io.outputs = {"o/1"};
  g.topological_order = {0};
  Parameters p;
  p.biases[0] = 0.7;
  PairwiseMarkovNetwork mn = to_pairwise_mn(g, p);
  EXPECT_EQ(mn.size(), 1u);
  EXPECT_EQ(mn.pairs.size(), 0u);
  EXPECT_NEAR(brute_force_conditional(mn, 0, {}), sigmoid(0.7), 1e-15);
}

TEST(MarkovNetwork, RejectsNonSigmoid) {
  NetworkGraph g = testing::build_text(
      "", "o(1) :- i(1), +[activation: relu].\n", "o/1");
  EXPECT_THROW(to_pairwise_mn(g, zero_parameters(g)), CompileError);
}

TEST(Conditional, ZeroWeightsAreUniform) {
  NetworkGraph g = testing::dnn_graph();
  PairwiseMarkovNetwork mn = to_pairwise_mn(g, zero_parameters(g));
  for (int node = 0; node < 7; ++node) {
    EXPECT_NEAR(brute_force_conditional(mn, node, {}), 0.5, 1e-15);
    Evidence ev;
    if (node != 3) ev[3] = 1;
    EXPECT_NEAR(brute_force_conditional(mn, node, ev), 0.5, 1e-15);
  }
}

TEST(Conditional, TwoNodes) {
  PairwiseMarkovNetwork mn;
  mn.labels = {"A", "B"};
  mn.neuron = {0, 1};
  mn.pairs.push_back(PairFeature{0, 1, 1.0, 0, 1});
  EXPECT_NEAR(brute_force_conditional(mn, 0, {{1, 1}}), 0.73106, 1e-5);
  EXPECT_NEAR(brute_force_conditional(mn, 0, {{1, 1}}), sigmoid(1.0), 1e-15);
  EXPECT_NEAR(brute_force_conditional(mn, 0, {{1, 0}}), 0.5, 1e-15);
  // 4 states: e^0 * 3 + e^1.
  EXPECT_NEAR(brute_force_conditional(mn, 0, {}),
              (1 + std::exp(1.0)) / (3 + std::exp(1.0)), 1e-15);
}

TEST(Conditional, Errors) {
  PairwiseMarkovNetwork mn;
  mn.labels = {"A", "B"};
  mn.neuron = {0, 1};
  EXPECT_THROW(brute_force_conditional(mn, 0, {{0, 1}}), Error);
  EXPECT_THROW(brute_force_conditional(mn, 0, {{1, 2}}), Error);
  PairwiseMarkovNetwork big;
  for (int i = 0; i < 26; ++i) {
    big.labels.push_back("n" + std::to_string(i));
    big.neuron.push_back(i);
  }
  EXPECT_THROW(brute_force_conditional(big, 0, {}), ResourceLimitError);
}

TEST(Conditional, SigmoidOfParentsOnDnn) {
  NetworkGraph g = testing::dnn_graph();
  std::mt19937_64 rng(6);
  Parameters p = random_parameters(g, rng, 2.0);
  PairwiseMarkovNetwork mn = to_pairwise_mn(g, p);
  int target = g.find_neuron("hidden2(1)")->id;
  int out = g.find_neuron("output(1)")->id;
  for (int v0 = 0; v0 < 2; ++v0) {
    for (int v1 = 0; v1 < 2; ++v1) {
      std::map<int, int> parents{{g.find_neuron("hidden1(1)")->id, v0},
                                 {g.find_neuron("hidden1(2)")->id, v1}};
      double z = p.biases.at(*g.neuron(target).bias_group);
      for (const Edge& e : g.edges) {
        if (e.to == target) z += p.weights.at(e.weight_group) * parents.at(e.from);
      }
      Evidence ev(parents.begin(), parents.end());
      ev[out] = 0;
      EXPECT_NEAR(brute_force_conditional(mn, target, ev), sigmoid(z), 1e-12);
    }
  }
}

TEST(Conditional, RandomSigmoidEquivalence) {
  TrialReport r = sigmoid_equivalence(7, 100);
  EXPECT_EQ(r.str(), "100/100 within 1e-9");
}

TEST(Joint, SumsToOne) {
  std::mt19937_64 rng(15);
  for (const NetworkGraph& g :
       {testing::dnn_graph(), testing::gnn_graph(), diamond_graph()}) {
    PairwiseMarkovNetwork mn = to_pairwise_mn(g, random_parameters(g, rng, 3.0));
    std::vector<double> joint = joint_probabilities(mn);
    EXPECT_EQ(joint.size(), std::size_t{1} << mn.size());
    long double total = 0;
    for (double v : joint) total += v;
    EXPECT_NEAR(static_cast<double>(total), 1.0, 1e-12);
    // Marginal from the joint agrees with enumeration.
    double m0 = 0;
    for (std::size_t v = 0; v < joint.size(); ++v) m0 += (v & 1) ? joint[v] : 0;
    EXPECT_NEAR(brute_force_conditional(mn, 0, {}), m0, 1e-12);
  }
}

TEST(Expectations, MatchJointEnumeration) {
  NetworkGraph g = diamond_graph();
  std::mt19937_64 rng(16);
  PairwiseMarkovNetwork mn = to_pairwise_mn(g, random_parameters(g, rng, 1.0));
  FeatureExpectations fe = feature_expectations(mn, {});
  std::vector<double> joint = joint_probabilities(mn);
  for (std::size_t k = 0; k < mn.pairs.size(); ++k) {
    double want = 0;
    for (std::size_t v = 0; v < joint.size(); ++v) {
      if ((v >> mn.pairs[k].i & 1) && (v >> mn.pairs[k].j & 1)) want += joint[v];
    }
    EXPECT_NEAR(fe.pairs[k], want, 1e-12);
  }
  double z = 0;
  for (std::uint64_t v = 0; v < joint.size(); ++v) z += std::exp(mn.log_score(v));
  EXPECT_NEAR(fe.log_partition, std::log(z), 1e-12);
}

TEST(Step1, ChainIsUnchanged) {
  NetworkGraph g = testing::chain_graph();
  UnrolledNetwork t = unroll_step1(g);
  EXPECT_EQ(t.nodes.size(), 3u);
  EXPECT_EQ(t.edges.size(), 2u);
  ASSERT_EQ(t.roots.size(), 1u);
  EXPECT_EQ(t.nodes[t.roots[0]].label(g), "output(1)");
}

TEST(Step1, DiamondGetsPrivateInputCopies) {
  NetworkGraph g = diamond_graph();
  UnrolledNetwork t = unroll_step1(g);
  EXPECT_EQ(t.nodes.size(), 5u);
  EXPECT_EQ(t.edges.size(), 4u);
  int input = g.find_neuron("i(1)")->id;
  std::set<std::string> labels;
  int copies = 0;
  for (const UnrolledNode& n : t.nodes) {
    labels.insert(n.label(g));
    copies += n.neuron == input;
  }
  EXPECT_EQ(copies, 2);
  EXPECT_EQ(labels.size(), 5u);
}

TEST(Step1, MatchesRecursiveCount) {
  for (const NetworkGraph& g : {testing::dnn_graph(), testing::gnn_graph(),
                                diamond_graph(), chain_of_depth(3)}) {
    std::size_t want = 0;
    for (const Neuron& n : g.neurons) {
      if (n.role == Role::kOutput) want += tree_size(g, n.id);
    }
    UnrolledNetwork t = unroll_step1(g);
    EXPECT_EQ(t.nodes.size(), want);
    EXPECT_EQ(t.edges.size(), want - t.roots.size());
  }
  EXPECT_EQ(unroll_step1(testing::dnn_graph()).nodes.size(), 15u);
}

TEST(Step1, TreeShape) {
  UnrolledNetwork t = unroll_step2(unroll_step1(testing::dnn_graph()), 2);
  std::vector<int> out_degree(t.nodes.size(), 0);
  for (const UnrolledEdge& e : t.edges) ++out_degree[e.from];
  std::set<int> roots(t.roots.begin(), t.roots.end());
  for (std::size_t i = 0; i < t.nodes.size(); ++i) {
    EXPECT_EQ(out_degree[i], roots.count(static_cast<int>(i)) ? 0 : 1);
  }
}

TEST(Step1, NodeCap) {
  EXPECT_THROW(unroll_step1(testing::dnn_graph(), 10), ResourceLimitError);
  EXPECT_THROW(unroll_step2(unroll_step1(testing::chain_graph()), 3, 12),
               ResourceLimitError);
}

TEST(Step2, ChainWithTwoCopies) {
  NetworkGraph g = testing::chain_graph();
  std::mt19937_64 rng(21);
  Parameters p = random_parameters(g, rng, 1.0);
  UnrolledNetwork t = unroll_step2(unroll_step1(g), 2);
  EXPECT_EQ(t.nodes.size(), 7u);
  EXPECT_EQ(t.edges.size(), 6u);
  std::map<int, int> per_neuron;
  for (const UnrolledNode& n : t.nodes) ++per_neuron[n.neuron];
  EXPECT_EQ(per_neuron[g.find_neuron("output(1)")->id], 1);
  EXPECT_EQ(per_neuron[g.find_neuron("hidden(1)")->id], 2);
  EXPECT_EQ(per_neuron[g.find_neuron("input(1)")->id], 4);
  PairwiseMarkovNetwork mn = to_pairwise_mn(t, g, p);
  for (const PairFeature& f : mn.pairs) {
    EXPECT_EQ(f.weight, p.weights.at(f.group) / 2);
  }
  EXPECT_EQ(unroll_step2(unroll_step1(g), 3).nodes.size(), 13u);
}

TEST(Step2, NodeCountsAreGeometric) {
  for (int depth = 1; depth <= 3; ++depth) {
    NetworkGraph g = chain_of_depth(depth);
    for (int L = 1; L <= 3; ++L) {
      std::size_t want = 0;
      std::size_t power = 1;
      for (int k = 0; k <= depth; ++k, power *= L) want += power;
      UnrolledNetwork t = unroll_step2(unroll_step1(g), L);
      EXPECT_EQ(t.nodes.size(), want) << "depth " << depth << " L " << L;
      EXPECT_EQ(t.replication, L);
    }
  }
}

TEST(Step2, WeightLawIsExact) {
  std::mt19937_64 rng(22);
  for (const NetworkGraph& g : {testing::chain_graph(), diamond_graph(),
                                testing::dnn_graph()}) {
    Parameters p = random_parameters(g, rng, 3.0);
    for (int L = 1; L <= 3; ++L) {
      UnrolledNetwork t = unroll_step2(unroll_step1(g), L);
      PairwiseMarkovNetwork mn = to_pairwise_mn(t, g, p);
      for (const PairFeature& f : mn.pairs) {
        EXPECT_EQ(f.divisor, L);
        EXPECT_EQ(f.weight * L, p.weights.at(f.group));
      }
    }
  }
}

TEST(Step2, OneCopyIsIdentity) {
  NetworkGraph g = testing::dnn_graph();
  UnrolledNetwork t1 = unroll_step1(g);
  UnrolledNetwork t2 = unroll_step2(t1, 1);
  ASSERT_EQ(t2.nodes.size(), t1.nodes.size());
  ASSERT_EQ(t2.edges.size(), t1.edges.size());
  std::multiset<std::pair<int, int>> a;
  std::multiset<std::pair<int, int>> b;
  for (const UnrolledEdge& e : t1.edges) {
    a.emplace(t1.nodes[e.from].neuron * 1000 + t1.nodes[e.to].neuron, e.weight_group);
    EXPECT_EQ(e.divisor, 1);
  }
  for (const UnrolledEdge& e : t2.edges) {
    b.emplace(t2.nodes[e.from].neuron * 1000 + t2.nodes[e.to].neuron, e.weight_group);
    EXPECT_EQ(e.divisor, 1);
  }
  EXPECT_EQ(a, b);
  EXPECT_THROW(unroll_step2(t1, 0), Error);
}

std::map<int, double> ones(const NetworkGraph& g, Role role) {
  std::map<int, double> out;
  for (const Neuron& n : g.neurons) {
    if (n.role == role) out[n.id] = 1.0;
  }
  return out;
}

TEST(Discrepancy, ZeroParametersAreFinite) {
  NetworkGraph g = testing::chain_graph();
  auto rows = gradient_discrepancy(g, zero_parameters(g), ones(g, Role::kInput),
                                   ones(g, Role::kOutput), {1, 2, 4});
  EXPECT_EQ(rows.size(), 3u * 4u);
  for (const DiscrepancyRow& r : rows) {
    EXPECT_TRUE(std::isfinite(r.backprop));
    EXPECT_TRUE(std::isfinite(r.markov));
    EXPECT_TRUE(std::isfinite(r.abs_diff));
  }
}

TEST(Discrepancy, OneCopyMatchesDirectNetwork) {
  NetworkGraph g = testing::chain_graph();
  std::mt19937_64 rng(23);
  Parameters p = random_parameters(g, rng, 1.0);
  auto rows = gradient_discrepancy(g, p, ones(g, Role::kInput),
                                   ones(g, Role::kOutput), {1});
  PairwiseMarkovNetwork mn = to_pairwise_mn(g, p);
  int in = g.find_neuron("input(1)")->id;
  int out = g.find_neuron("output(1)")->id;
  FeatureExpectations free = feature_expectations(mn, {{in, 1}});
  FeatureExpectations clamped = feature_expectations(mn, {{in, 1}, {out, 1}});
  for (const DiscrepancyRow& r : rows) {
    double direct = 0;
    if (r.bias) {
      for (std::size_t k = 0; k < mn.biases.size(); ++k) {
        if (mn.biases[k].group == r.group) direct += free.biases[k] - clamped.biases[k];
      }
    } else {
      for (std::size_t k = 0; k < mn.pairs.size(); ++k) {
        if (mn.pairs[k].group == r.group) direct += free.pairs[k] - clamped.pairs[k];
      }
    }
    EXPECT_NEAR(r.markov, direct, 1e-15);
    EXPECT_EQ(r.abs_diff, std::fabs(r.markov - r.backprop));
  }
}

TEST(Discrepancy, EvidenceMustBeBinary) {
  NetworkGraph g = testing::chain_graph();
  auto in = ones(g, Role::kInput);
  in.begin()->second = 0.5;
  EXPECT_THROW(gradient_discrepancy(g, zero_parameters(g), in,
                                    ones(g, Role::kOutput), {1}),
               DataError);
}

// Recorded by `nmpc verify unroll --L 1,2,4 --seed 7`.
TEST(Discrepancy, MatchesRecordedExperiment) {
  NetworkGraph g = testing::chain_graph();
  std::mt19937_64 rng(7);
  Parameters p = random_parameters(g, rng, 1.0);
  auto rows = gradient_discrepancy(g, p, ones(g, Role::kInput),
                                   ones(g, Role::kOutput), {1, 2, 4});
  std::istringstream in(testing::read_file(std::string(NMP_EXPERIMENTS_DIR) +
                                           "/unroll_chain.csv"));
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "L,kind,group,backprop,markov,abs_diff");
  std::size_t k = 0;
  std::map<int, double> worst;
  while (std::getline(in, line)) {
    ASSERT_LT(k, rows.size());
    std::istringstream cells(line);
    std::string L, kind, group, bp, mk, diff;
    std::getline(cells, L, ',');
    std::getline(cells, kind, ',');
    std::getline(cells, group, ',');
    std::getline(cells, bp, ',');
    std::getline(cells, mk, ',');
    std::getline(cells, diff, ',');
    const DiscrepancyRow& r = rows[k++];
    EXPECT_EQ(std::stoi(L), r.L);
    EXPECT_EQ(kind == "bias", r.bias);
    EXPECT_EQ(std::stoi(group), r.group);
    EXPECT_NEAR(std::stod(bp), r.backprop, 1e-12);
    EXPECT_NEAR(std::stod(mk), r.markov, 1e-12);
    EXPECT_NEAR(std::stod(diff), r.abs_diff, 1e-12);
    worst[r.L] = std::max(worst[r.L], r.abs_diff);
  }
  EXPECT_EQ(k, rows.size());
  EXPECT_NEAR(worst[1], 0.040171, 1e-6);
  EXPECT_NEAR(worst[2], 0.0214785, 1e-7);
  EXPECT_NEAR(worst[4], 0.0109581, 1e-7);
}

TEST(Discrepancy, CsvLayout) {
  std::string csv = discrepancy_csv({DiscrepancyRow{2, true, 0, 0.5, 0.25, 0.25}});
  EXPECT_EQ(csv, "L,kind,group,backprop,markov,abs_diff\n2,bias,0,0.5,0.25,0.25\n");
}

}  // namespace
}  // namespace nmp
