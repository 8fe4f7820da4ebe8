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

#ifndef NMP_TESTS_TEST_UTIL_HPP_
#define NMP_TESTS_TEST_UTIL_HPP_

#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

#include "nmp/grounder.hpp"
#include "nmp/nmp_program.hpp"

namespace nmp::testing {

inline std::string program_path(const std::string& name) {
  return std::string(NMP_PROGRAMS_DIR) + "/" + name;
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

// Builds a corpus program. det may be empty.
inline NetworkGraph build_corpus(const std::string& det, const std::string& nmp,
                                 const std::string& outputs,
                                 BuildOptions options = {}) {
  std::string det_text = det.empty() ? "" : read_file(program_path(det));
  NmpProgram program =
      assemble_program(det_text, read_file(program_path(nmp)));
  IoSpec io;
  io.outputs = outputs.empty() ? infer_io(program).outputs
                               : parse_predicate_list(outputs);
  return build_network(program, io, options);
}

inline NetworkGraph dnn_graph() { return build_corpus("", "dnn.nmp", "output/1"); }
inline NetworkGraph rnn_graph() {
  return build_corpus("rnn.pl", "rnn.nmp", "hidden/1");
}
inline NetworkGraph cnn_graph() {
  return build_corpus("cnn.pl", "cnn.nmp", "hidden/3");
}
inline NetworkGraph gnn_graph() {
  return build_corpus("gnn.pl", "gnn.nmp", "hidden/1");
}
inline NetworkGraph chain_graph() {
  return build_corpus("", "chain.nmp", "output/1");
}

// Graph from inline source, outputs inferred unless given.
inline NetworkGraph build_text(const std::string& det, const std::string& nmp,
                               const std::string& outputs = "",
                               const std::string& inputs = "") {
  NmpProgram program = assemble_program(det, nmp);
  IoSpec io;
  if (!inputs.empty()) io.inputs = parse_predicate_list(inputs);
  io.outputs = outputs.empty() ? infer_io(program).outputs
                               : parse_predicate_list(outputs);
  return build_network(program, io);
}

}  // namespace nmp::testing

#endif  // NMP_TESTS_TEST_UTIL_HPP_
