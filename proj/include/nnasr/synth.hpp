// synth.hpp
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
// Synthetic non-native corpus generator. Word sequences are sampled from a
// grammar, expanded through the lexicon, and each occurrence of a planted
// rule's source phone is independently replaced by a mother-tongue phone
// sequence with the planted probability. The manifest records the full
// ground truth, including which replacements fired.

#ifndef NNASR_SYNTH_HPP_
#define NNASR_SYNTH_HPP_

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "nnasr/grammar.hpp"
#include "nnasr/lexicon.hpp"
#include "nnasr/model.hpp"
#include "nnasr/types.hpp"

namespace nnasr {

struct PlantedTarget {
  std::vector<std::string> phones;  // L1 ids
  double probability = 0.0;
};

// Replacement spec for one L2 source phone; probabilities sum to <= 1, the
// residual mass keeps the canonical pronunciation. An optional cluster
// restricts the rule to occurrences whose spelling cluster matches.
struct PlantedRuleSpec {
  std::string source;
  std::string cluster;
  std::vector<PlantedTarget> targets;
};

struct SynthOptions {
  int n_utts = 100;
  uint64_t seed = 1;
  int n_speakers = 1;
  double speaker_shift = 0.0;   // per-speaker global mean offset magnitude
  double adapt_fraction = 0.2;  // leading fraction of each speaker's data
  int max_rule_len = 4;
  int max_sentence_words = 200;
};

struct FiredReplacement {
  int word_pos = 0;   // position in the sentence
  int phone_pos = 0;  // position within the word's pronunciation
  std::string source;
  std::vector<std::string> targets;
  std::string cluster;
};

struct UtteranceRecord {
  std::string id;
  int speaker = 0;
  std::string role;  // "adapt" or "test"
  std::string feature_path;  // relative to the corpus directory
  std::vector<std::string> words;
  std::vector<int> variants;          // pronunciation variant per word
  Transcription segments;             // realized phones with true boundaries
  std::vector<bool> segment_is_l1;    // parallel to segments
  std::vector<FiredReplacement> replacements;
};

struct CorpusManifest {
  int dim = 0;
  uint64_t seed = 0;
  int n_speakers = 1;
  std::vector<UtteranceRecord> utterances;

  std::vector<int> speakers() const;
};

// (word, variant) -> per-phone spelling clusters; ground truth for
// cluster-conditioned planting.
using ClusterMap = std::map<std::pair<std::string, int>, std::vector<std::string>>;

// Writes feat/*.feat plus manifest.json under out_dir and returns the
// manifest. Bit-identical for a fixed seed: every utterance derives its own
// generator as mix_seed(seed, index).
CorpusManifest synth_corpus(const ModelSet& l2, const ModelSet& l1,
                            const Lexicon& lexicon, const Grammar& grammar,
                            const std::vector<PlantedRuleSpec>& rules,
                            const SynthOptions& options, const ClusterMap* clusters,
                            const std::string& out_dir);

CorpusManifest load_manifest(const std::string& path);
void save_manifest(const CorpusManifest& manifest, const std::string& path);

// Feature file path of an utterance resolved against the manifest location.
std::string resolve_feature_path(const std::string& manifest_path,
                                 const UtteranceRecord& utt);

// Planted-rule text: "SRC[/CLUSTER] -> tgt1 tgt2 ...<TAB>prob" per line.
std::vector<PlantedRuleSpec> parse_planted_rules(const std::string& text,
                                                 const std::string& origin = "planted rules");
std::vector<PlantedRuleSpec> load_planted_rules(const std::string& path);

}  // namespace nnasr

#endif  // NNASR_SYNTH_HPP_
