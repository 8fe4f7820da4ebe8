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

#ifndef NMP_READER_HPP_
#define NMP_READER_HPP_

#include <string>
#include <string_view>
#include <vector>

#include "nmp/term.hpp"

namespace nmp {

// One clause-level term read from source, with the position of its first
// token for diagnostics.
struct ReadTerm {
  Term term;
  int line = 1;
  int column = 1;
};

struct ReaderOptions {
  // Lists appear only inside NMP option blocks.
  bool allow_lists = false;
};

// Operator-precedence reader for the Prolog subset used by NMP programs.
// Splits text into '.'-terminated clause terms; '%' comments run to end of
// line. Throws SyntaxError with line/column.
std::vector<ReadTerm> read_terms(std::string_view text,
                                 ReaderOptions options = {});

// Reads exactly one term (no trailing '.'), e.g. an atom name from a
// document or CSV header.
Term read_term(std::string_view text);

}  // namespace nmp

#endif  // NMP_READER_HPP_
