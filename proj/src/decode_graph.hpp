// decode_graph.hpp
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
//
// Flat Viterbi search space shared by forced alignment, the phone loop and
// grammar decoding. Construction order is deterministic and ties in the
// argmax break toward the smaller predecessor state index, so decoding is a
// pure function of its inputs.

#ifndef NNASR_DECODE_GRAPH_HPP_
#define NNASR_DECODE_GRAPH_HPP_

#include <functional>
#include <string>
#include <vector>

#include "nnasr/composite.hpp"
#include "nnasr/decode.hpp"
#include "nnasr/grammar.hpp"
#include "nnasr/lexicon.hpp"

namespace nnasr {

struct DecodeGraph {
  struct Node {
    GmmState state;
    int occ = 0;  // phone occurrence the state belongs to
  };
  // One occurrence = one output segment slot (a phone position of a word
  // instance, a slot of a forced-alignment sequence, or a loop phone).
  struct Occ {
    std::string phone;
    int word_slot = -1;
    int phone_pos = -1;
  };
  struct WordSlot {
    std::string word;
    int variant = 0;
    int grammar_to = -1;
  };
  struct Arc {
    int from = 0;
    int to = 0;
    double logp = 0.0;
    bool new_segment = false;
    int enter_word = -1;  // word slot entered by this arc
  };
  struct Entry {
    int node = 0;
    double logp = 0.0;
    int enter_word = -1;
  };
  struct Exit {
    int node = 0;
    double logp = 0.0;
  };

  int dim = 0;
  std::vector<Node> nodes;
  std::vector<Occ> occs;
  std::vector<WordSlot> words;
  std::vector<Arc> arcs;
  std::vector<Entry> entries;
  std::vector<Exit> exits;

  // Sorts arcs/entries/exits into the canonical tie-breaking order.
  void finish();
};

// One occurrence per composite unit.
DecodeGraph graph_from_composite(const CompositeHmm& comp);

// All phones in parallel with loop-back arcs; each loop crossing pays
// phone_penalty (log domain).
DecodeGraph build_phone_loop(const ModelSet& set, double phone_penalty);

// A word instance's search network plus the mapping from composite units to
// pronunciation positions (merged phone models span several units).
struct WordModel {
  CompositeHmm comp;
  std::vector<int> unit_pos;
  std::vector<std::string> pron;
};
using WordModelFn =
    std::function<WordModel(const std::string& word, int variant,
                            const std::vector<std::string>& pron)>;

// grammar o lexicon o phone models. Every traversal of a word arc pays the
// arc weight plus word_penalty; epsilon arcs connect for free.
DecodeGraph build_grammar_graph(const Grammar& grammar, const Lexicon& lexicon,
                                const WordModelFn& word_model, double word_penalty);

// Beamless exact Viterbi when options.beam <= 0. Throws NumericError when
// no complete path covers all frames.
DecodeResult viterbi_decode(const DecodeGraph& graph, const FeatureMatrix& features,
                            const DecodeOptions& options, const std::string& what);

}  // namespace nnasr

#endif  // NNASR_DECODE_GRAPH_HPP_
