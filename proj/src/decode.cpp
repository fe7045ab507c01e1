// decode.cpp
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

#include "nnasr/decode.hpp"

#include "decode_graph.hpp"
#include "nnasr/error.hpp"

namespace nnasr {

DecodeResult viterbi_align(const FeatureMatrix& features,
                           const std::vector<std::string>& phones,
                           const ModelSet& set, const DecodeOptions& options) {
  if (phones.empty()) throw UsageError("forced alignment: empty phone sequence");
  CompositeHmm comp = concatenate(set, phones);
  int min_frames = comp.min_frames();
  if (features.frames < min_frames)
    throw NumericError("forced alignment infeasible: " + std::to_string(features.frames) +
                       " frames < minimum path length " + std::to_string(min_frames));
  DecodeGraph graph = graph_from_composite(comp);
  return viterbi_decode(graph, features, options, "forced alignment");
}

DecodeResult phone_recognize(const FeatureMatrix& features, const ModelSet& set,
                             double phone_penalty, const DecodeOptions& options) {
  DecodeGraph graph = build_phone_loop(set, phone_penalty);
  return viterbi_decode(graph, features, options, "phone recognition");
}

DecodeResult decode_composite(const FeatureMatrix& features, const CompositeHmm& comp,
                              const DecodeOptions& options) {
  DecodeGraph graph = graph_from_composite(comp);
  return viterbi_decode(graph, features, options, "composite decoding");
}

DecodeResult grammar_decode(const FeatureMatrix& features, const Grammar& grammar,
                            const Lexicon& lexicon, const ModelSet& set,
                            double word_penalty, const DecodeOptions& options) {
  WordModelFn baseline = [&set](const std::string&, int,
                                const std::vector<std::string>& pron) {
    WordModel wm;
    wm.comp = concatenate(set, pron);
    wm.pron = pron;
    wm.unit_pos.resize(pron.size());
    for (size_t i = 0; i < pron.size(); ++i) wm.unit_pos[i] = static_cast<int>(i);
    return wm;
  };
  DecodeGraph graph = build_grammar_graph(grammar, lexicon, baseline, word_penalty);
  return viterbi_decode(graph, features, options, "grammar decoding");
}

}  // namespace nnasr
