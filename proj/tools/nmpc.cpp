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

// nmpc: compile, export, train, verify and inspect NMP
// programs. Exit status 0 on success, 1 on a domain error, 2 on a usage
// error or unreadable input file.

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <map>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "nmp/error.hpp"
#include "nmp/grounder.hpp"
#include "nmp/mln.hpp"
#include "nmp/network_ir.hpp"
#include "nmp/nmp_program.hpp"
#include "nmp/plan.hpp"
#include "nmp/trainer.hpp"
#include "nmp/verify.hpp"

namespace {

constexpr int kUsage = 2;
constexpr int kDomain = 1;

// Unreadable input files are usage errors.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot read " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void emit(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw UsageError("cannot write " + path);
  out << text;
}

struct SourceFlags {
  std::string det;
  std::string nmp;
  std::string inputs;
  std::string outputs;
  std::size_t max_answers = nmp::SolveLimits{}.max_answers;
  std::size_t max_depth = nmp::SolveLimits{}.max_depth;
  bool no_prune = false;

  void attach(CLI::App* app, bool nmp_required) {
    app->add_option("--det", det, "deterministic Prolog section");
    auto* n = app->add_option("--nmp", nmp, "interpreted section (or combined file)");
    if (nmp_required) n->required();
    app->add_option("--inputs", inputs, "input predicates, e.g. input/1");
    app->add_option("--outputs", outputs, "output predicates, e.g. output/1");
    app->add_option("--max-answers", max_answers, "answer cap per query");
    app->add_option("--max-depth", max_depth, "derivation depth cap");
    app->add_flag("--no-prune", no_prune, "keep neurons that reach no output");
  }

  nmp::NetworkGraph build() const {
    std::string det_text = det.empty() ? "" : slurp(det);
    std::string nmp_text = slurp(nmp);
    nmp::NmpProgram program = nmp::assemble_program(det_text, nmp_text);
    nmp::IoSpec io;
    if (!inputs.empty()) io.inputs = nmp::parse_predicate_list(inputs);
    io.outputs = outputs.empty() ? nmp::infer_io(program).outputs
                                 : nmp::parse_predicate_list(outputs);
    nmp::BuildOptions options;
    options.limits.max_answers = max_answers;
    options.limits.max_depth = max_depth;
    options.prune = !no_prune;
    return nmp::build_network(program, io, options);
  }
};

std::string summary(const nmp::NetworkGraph& g) {
  std::ostringstream out;
  out << "neurons " << g.neurons.size() << " ("
      << g.count(nmp::Role::kInput) << " input, "
      << g.count(nmp::Role::kHidden) << " hidden, "
      << g.count(nmp::Role::kOutput) << " output), edges " << g.edges.size()
      << ", weight groups " << g.weight_groups.size() << ", bias groups "
      << g.bias_groups.size() << "\n";
  return out.str();
}

std::string inspect_text(const nmp::NetworkGraph& g, bool with_plan) {
  std::ostringstream out;
  out << summary(g);
  out << "neurons:\n";
  for (const nmp::Neuron& n : g.neurons) {
    out << "  " << n.id << " " << nmp::role_name(n.role) << " "
        << n.atom.str();
    if (n.activation) out << " " << nmp::activation_name(*n.activation);
    if (n.bias_group) out << " b" << *n.bias_group;
    out << "\n";
  }
  out << "weight groups:\n";
  for (const nmp::WeightGroup& wg : g.weight_groups) {
    out << "  w" << wg.id << " rule " << wg.rule_id << " key [";
    for (std::size_t i = 0; i < wg.key.size(); ++i) {
      out << (i ? ", " : "") << wg.key[i].str();
    }
    out << "]:";
    for (const nmp::Edge& e : g.edges) {
      if (e.weight_group != wg.id) continue;
      out << " " << g.neuron(e.from).atom.str() << "->"
          << g.neuron(e.to).atom.str();
    }
    out << "\n";
  }
  out << "bias groups:\n";
  for (const nmp::BiasGroup& bg : g.bias_groups) {
    out << "  b" << bg.id << " " << bg.predicate << " [";
    for (std::size_t i = 0; i < bg.values.size(); ++i) {
      out << (i ? ", " : "") << bg.positions[i] << "=" << bg.values[i].str();
    }
    out << "]:";
    for (int m : bg.members) out << " " << g.neuron(m).atom.str();
    out << "\n";
  }
  if (with_plan) out << nmp::describe_plan(nmp::plan(g));
  return out.str();
}

std::vector<int> parse_int_list(const std::string& text) {
  std::vector<int> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t used = 0;
    int v = 0;
    try {
      v = std::stoi(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != item.size() || v < 1) {
      throw UsageError("--L expects positive integers, got '" + item + "'");
    }
    out.push_back(v);
  }
  if (out.empty()) throw UsageError("--L is empty");
  return out;
}

constexpr const char* kChainProgram =
    "hidden(1) :- input(1), true.\n"
    "output(1) :- hidden(1), true.\n";

int run_unroll(const std::string& graph_path, const std::string& params_path,
               std::uint64_t seed, const std::string& Ls,
               const std::string& csv_path) {
  std::vector<int> levels = parse_int_list(Ls);
  nmp::NetworkGraph g;
  if (graph_path.empty()) {
    nmp::IoSpec io;
    io.outputs = {"output/1"};
    g = nmp::build_network(nmp::assemble_program("", kChainProgram), io);
  } else {
    g = nmp::import_json(slurp(graph_path));
  }
  nmp::Parameters params;
  if (params_path.empty()) {
    std::mt19937_64 rng(seed);
    params = nmp::random_parameters(g, rng, 1.0);
  } else {
    params = nmp::import_parameters(slurp(params_path));
  }
  std::map<int, double> inputs;
  std::map<int, double> targets;
  for (const nmp::Neuron& n : g.neurons) {
    if (n.role == nmp::Role::kInput) inputs[n.id] = 1.0;
    if (n.role == nmp::Role::kOutput) targets[n.id] = 1.0;
  }
  auto rows = nmp::gradient_discrepancy(g, params, inputs, targets, levels);
  nmp::UnrolledNetwork tree = nmp::unroll_step1(g);
  std::ostringstream out;
  out << "step 1 tree: " << tree.nodes.size() << " nodes, "
      << tree.edges.size() << " edges\n";
  for (int L : levels) {
    nmp::UnrolledNetwork t2 = nmp::unroll_step2(tree, L);
    double worst = 0.0;
    for (const auto& r : rows) {
      if (r.L == L) worst = std::max(worst, r.abs_diff);
    }
    out << "L=" << L << ": " << t2.nodes.size() << " nodes, "
        << t2.edges.size() << " edges, max |markov - backprop| = " << worst
        << "\n";
  }
  std::cout << out.str();
  std::string csv = nmp::discrepancy_csv(rows);
  if (csv_path.empty()) {
    std::cout << csv;
  } else {
    emit(csv_path, csv);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"NMP network compiler"};
  app.require_subcommand(1);

  // compile
  SourceFlags compile_src;
  std::string compile_emit = "json";
  std::string compile_out;
  auto* compile = app.add_subcommand("compile", "ground a program into a network graph");
  compile_src.attach(compile, true);
  compile->add_option("--emit", compile_emit, "json, dot or plan")
      ->check(CLI::IsMember({"json", "dot", "plan"}));
  compile->add_option("-o,--output", compile_out, "output path (default stdout)");

  // export
  std::string export_graph;
  std::string export_out;
  bool export_dot = false;
  bool export_json = false;
  auto* exp = app.add_subcommand("export", "render a graph document");
  exp->add_option("graph", export_graph, "graph JSON")->required();
  auto* dot_flag = exp->add_flag("--dot", export_dot, "Graphviz output");
  auto* json_flag = exp->add_flag("--json", export_json, "canonical JSON output");
  dot_flag->excludes(json_flag);
  exp->add_option("-o,--output", export_out, "output path (default stdout)");

  // train
  std::string train_graph;
  std::string train_data;
  std::string train_params;
  std::string train_trace;
  nmp::TrainConfig config;
  auto* train = app.add_subcommand("train", "fit parameters with SGD");
  train->add_option("graph", train_graph, "graph JSON")->required();
  train->add_option("--data", train_data, "CSV dataset")->required();
  train->add_option("--lr", config.learning_rate, "learning rate");
  train->add_option("--epochs", config.epochs, "epoch count");
  train->add_option("--batch", config.batch_size, "mini-batch size");
  train->add_option("--seed", config.seed, "initialization and shuffle seed");
  train->add_option("--init-scale", config.init_scale, "uniform init half-width");
  train->add_option("--params", train_params, "parameter output path (default stdout)");
  train->add_option("--trace", train_trace, "epoch,loss CSV output path");

  // verify
  std::string verify_mode;
  std::uint64_t verify_seed = 7;
  int verify_trials = 100;
  std::string verify_graph;
  std::string verify_params;
  std::string verify_L = "1,2,4";
  std::string verify_csv;
  auto* verify = app.add_subcommand("verify", "run a semantic check");
  verify->add_option("mode", verify_mode, "check to run")
      ->required()
      ->check(CLI::IsMember({"sigmoid-equivalence", "plan-equivalence",
                             "gradient-check", "tying-check", "unroll"}));
  verify->add_option("--seed", verify_seed, "random seed");
  verify->add_option("--trials", verify_trials, "trial count")
      ->check(CLI::PositiveNumber);
  verify->add_option("--graph", verify_graph, "graph JSON for unroll (default: chain)");
  verify->add_option("--params", verify_params, "parameter JSON for unroll");
  verify->add_option("--L", verify_L, "replication factors, e.g. 1,2,4");
  verify->add_option("--csv", verify_csv, "discrepancy CSV path (default stdout)");

  // inspect
  SourceFlags inspect_src;
  std::string inspect_graph;
  bool inspect_plan = false;
  auto* inspect = app.add_subcommand("inspect", "list neurons, tied weights and plan");
  inspect->add_option("graph", inspect_graph, "graph JSON (instead of --nmp)");
  inspect_src.attach(inspect, false);
  inspect->add_flag("--plan", inspect_plan, "append the execution plan");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  try {
    if (compile->parsed()) {
      nmp::NetworkGraph g = compile_src.build();
      std::cerr << summary(g);
      std::string text;
      if (compile_emit == "dot") {
        text = nmp::export_dot(g);
      } else if (compile_emit == "plan") {
        text = nmp::describe_plan(nmp::plan(g));
      } else {
        text = nmp::export_json(g);
      }
      emit(compile_out, text);
    } else if (exp->parsed()) {
      if (!export_dot && !export_json) {
        throw UsageError("export needs --dot or --json");
      }
      nmp::NetworkGraph g = nmp::import_json(slurp(export_graph));
      emit(export_out, export_dot ? nmp::export_dot(g) : nmp::export_json(g));
    } else if (train->parsed()) {
      std::string graph_text = slurp(train_graph);
      std::string data_text = slurp(train_data);
      nmp::NetworkGraph g = nmp::import_json(graph_text);
      nmp::ExecutionPlan p = nmp::plan(g);
      nmp::Dataset data = nmp::parse_csv(data_text, g);
      nmp::TrainResult r = nmp::train(p, data, config);
      emit(train_params, nmp::export_parameters(r.params));
      if (!train_trace.empty()) {
        emit(train_trace, nmp::format_loss_trace(r.loss_trace));
      }
      std::cerr << "epochs " << r.loss_trace.size() << ", updates "
                << r.updates << ", final loss " << r.loss_trace.back()
                << "\n";
    } else if (verify->parsed()) {
      if (verify_mode == "unroll") {
        return run_unroll(verify_graph, verify_params, verify_seed, verify_L,
                          verify_csv);
      }
      nmp::TrialReport r;
      if (verify_mode == "sigmoid-equivalence") {
        r = nmp::sigmoid_equivalence(verify_seed, verify_trials);
      } else if (verify_mode == "plan-equivalence") {
        r = nmp::plan_equivalence(verify_seed, verify_trials);
      } else if (verify_mode == "gradient-check") {
        r = nmp::gradient_check(verify_seed, verify_trials);
      } else {
        r = nmp::tying_check(verify_seed, verify_trials);
      }
      std::cout << r.str() << " (worst " << r.worst << ")\n";
      return r.ok() ? 0 : kDomain;
    } else if (inspect->parsed()) {
      nmp::NetworkGraph g;
      if (!inspect_graph.empty()) {
        g = nmp::import_json(slurp(inspect_graph));
      } else if (!inspect_src.nmp.empty()) {
        g = inspect_src.build();
      } else {
        throw UsageError("inspect needs a graph file or --nmp");
      }
      std::cout << inspect_text(g, inspect_plan);
    }
  } catch (const UsageError& e) {
    std::cerr << "nmpc: " << e.what() << "\n";
    return kUsage;
  } catch (const nmp::Error& e) {
    std::cerr << "nmpc: error: " << e.what() << "\n";
    return kDomain;
  }
  return 0;
}
