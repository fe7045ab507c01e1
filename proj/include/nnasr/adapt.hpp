// adapt.hpp
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
// Merged phone models: the canonical model plus one alternative branch per
// confusion rule, each branch the concatenation of mother-tongue phone
// models. Branches join a shared non-emitting entry and exit with no
// cross-branch transitions, so every constituent keeps its temporal
// structure. Entry weights: native ln(beta), branch i ln((1-beta)*p_i).

#ifndef NNASR_ADAPT_HPP_
#define NNASR_ADAPT_HPP_

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "nnasr/composite.hpp"
#include "nnasr/confusion.hpp"
#include "nnasr/decode.hpp"
#include "nnasr/g2p.hpp"
#include "nnasr/grammar.hpp"
#include "nnasr/lexicon.hpp"
#include "nnasr/model.hpp"

namespace nnasr {

struct MergedPhoneHmm {
  PhoneSymbol phone;            // L2
  std::string grapheme;         // empty = unconstrained
  double beta = 1.0;
  std::vector<ConfusionRule> branches;  // rules realized as alternative paths
  CompositeHmm graph;           // decodable merged network

  // beta + (1-beta) * sum of branch probabilities; 1 when rules are
  // renormalized, beta alone when there are no branches.
  double entry_mass() const;
};

// Lookup key: (L2 phone id, grapheme cluster or empty).
using MergedKey = std::pair<std::string, std::string>;

struct AdaptedModelSet {
  int dim = 0;
  ModelSet l2;                                // native models
  std::map<std::string, PhoneHmm> l1_models;  // referenced branch models
  std::map<MergedKey, MergedPhoneHmm> merged;
  // (word, variant, phone position) -> merged key, filled when grapheme
  // constraints are active.
  std::map<std::tuple<std::string, int, int>, MergedKey> bindings;
  double beta = 1.0;

  // Merged model for a phone occurrence: the bound grapheme-keyed model if
  // any, else the phone's unconstrained entry.
  const MergedPhoneHmm& model_for(const std::string& word, int variant, int phone_pos,
                                  const std::string& phone_id) const;
};

// Branches with zero entry weight (beta = 1) are omitted so the merged
// network is structurally the native model shifted by ln(beta) = 0.
MergedPhoneHmm build_merged(const PhoneHmm& native,
                            const std::vector<ConfusionRule>& rules,
                            const ModelSet& l1, double beta);

// One merged model per (phone, grapheme) key present in the rules plus an
// unconstrained fallback per L2 phone. When any rule carries a grapheme,
// g2p and lexicon are required: every lexicon pronunciation is aligned and
// each phone occurrence is bound to the model matching its cluster.
AdaptedModelSet compile_adapted_set(const ModelSet& l2, const ModelSet& l1,
                                    const std::vector<ConfusionRule>& rules,
                                    double beta, const G2PModel* g2p = nullptr,
                                    const Lexicon* lexicon = nullptr);

// Grammar decoding with merged models in place of the canonical ones.
// Segments report the L2 phone occurrences regardless of branch taken.
DecodeResult grammar_decode_adapted(const FeatureMatrix& features, const Grammar& grammar,
                                    const Lexicon& lexicon, const AdaptedModelSet& set,
                                    double word_penalty, const DecodeOptions& options = {});

// Model-set format extended with "l1_phones", "merged" and optional
// "bindings" sections; merged networks are rebuilt on load.
AdaptedModelSet load_adapted_set(const std::string& path);
void save_adapted_set(const AdaptedModelSet& set, const std::string& path);

// True when the JSON at path carries a merged section.
bool is_adapted_set_file(const std::string& path);

}  // namespace nnasr

#endif  // NNASR_ADAPT_HPP_
