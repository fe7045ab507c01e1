// grammar.hpp
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

#ifndef NNASR_GRAMMAR_HPP_
#define NNASR_GRAMMAR_HPP_

#include <set>
#include <string>
#include <vector>

namespace nnasr {

// Finite-state word grammar. An empty word is an epsilon arc. Arc weights
// are log-domain penalties applied per traversal at decode time; the file
// format carries no weights, so loaded grammars have zero-weight arcs.
struct GrammarArc {
  int from = 0;
  int to = 0;
  std::string word;    // empty = epsilon
  double weight = 0.0; // log penalty
};

struct Grammar {
  std::set<int> states;
  int start = -1;
  std::set<int> finals;
  std::vector<GrammarArc> arcs;

  // Requires declared endpoints and at least one final reachable from start.
  void validate() const;

  // Language membership via NFA simulation with epsilon closure.
  bool accepts(const std::vector<std::string>& words) const;

  // States reachable from `state` through epsilon arcs (includes `state`).
  std::set<int> epsilon_closure(int state) const;

  std::vector<std::string> word_list() const;  // distinct words, arc order
};

// Single looping state with one arc per word plus an epsilon to a final
// state; accepts every finite word sequence. loop_penalty (a log value,
// must be finite and <= 0 is typical) becomes the per-word arc weight.
Grammar build_word_loop(const std::vector<std::string>& words, double loop_penalty);

// Straight-line grammar accepting exactly the given sequence.
Grammar linear_grammar(const std::vector<std::string>& words);

// Lines: "state N", "start S", "final S", "arc FROM TO WORD|<eps>".
Grammar parse_grammar(const std::string& text, const std::string& origin = "grammar");
Grammar load_grammar(const std::string& path);
void save_grammar(const Grammar& g, const std::string& path);
std::string grammar_to_text(const Grammar& g);

}  // namespace nnasr

#endif  // NNASR_GRAMMAR_HPP_
