// decode.hpp
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
// Log-domain Viterbi decoders. All three are pure functions: identical
// inputs give bit-identical outputs.

#ifndef NNASR_DECODE_HPP_
#define NNASR_DECODE_HPP_

#include <string>
#include <vector>

#include "nnasr/composite.hpp"
#include "nnasr/grammar.hpp"
#include "nnasr/lexicon.hpp"
#include "nnasr/model.hpp"
#include "nnasr/types.hpp"

namespace nnasr {

struct DecodeOptions {
  double beam = 0.0;  // log-domain beam width; <= 0 disables pruning
};

// Which word (by output position) and pronunciation position a decoded
// segment came from; -1 when the decoder has no word level.
struct SegmentMeta {
  int word_index = -1;
  int phone_pos = -1;
};

struct DecodeResult {
  std::vector<std::string> words;      // grammar decoding only
  std::vector<int> word_variants;     // pronunciation variant per word
  Transcription phones;
  std::vector<SegmentMeta> meta;      // parallel to phones.segments
  double log_score = 0.0;
};

// Best state path through the concatenation of the given phones, mapped to
// per-phone segments covering [0, T) exactly.
DecodeResult viterbi_align(const FeatureMatrix& features,
                           const std::vector<std::string>& phones,
                           const ModelSet& set, const DecodeOptions& options = {});

// Unconstrained phone loop; each phone-to-phone transition pays
// phone_penalty on top of the model exit/entry mass.
DecodeResult phone_recognize(const FeatureMatrix& features, const ModelSet& set,
                             double phone_penalty, const DecodeOptions& options = {});

// Best word sequence accepted by the grammar, with its phone segmentation.
// Each word arc traversal pays the arc weight plus word_penalty.
DecodeResult grammar_decode(const FeatureMatrix& features, const Grammar& grammar,
                            const Lexicon& lexicon, const ModelSet& set,
                            double word_penalty, const DecodeOptions& options = {});

// Viterbi over an explicit composite network (one segment per unit).
DecodeResult decode_composite(const FeatureMatrix& features, const CompositeHmm& comp,
                              const DecodeOptions& options = {});

}  // namespace nnasr

#endif  // NNASR_DECODE_HPP_
