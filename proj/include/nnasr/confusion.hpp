// confusion.hpp
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
// Phonetic confusion extraction: aligns the forced L2 segmentation of an
// utterance with the free L1 phone transcription by temporal overlap, then
// turns the accumulated associations into probabilistic confusion rules.

#ifndef NNASR_CONFUSION_HPP_
#define NNASR_CONFUSION_HPP_

#include <string>
#include <vector>

#include "nnasr/types.hpp"

namespace nnasr {

// One L2 segment paired with the L1 phone sequence recognized in the same
// time interval (possibly empty). `grapheme` is the spelling cluster bound
// to the segment's lexicon occurrence; empty when untracked.
struct AssociationPair {
  std::string source;                // L2 phone id
  std::vector<std::string> targets;  // L1 phone ids, time order
  std::string utterance_id;
  Segment source_segment;
  std::string grapheme;
};

// (L2 phone [+ grapheme cluster]) -> L1 phone sequence.
struct ConfusionRule {
  std::string source;
  std::string grapheme;              // empty = unconstrained
  std::vector<std::string> targets;  // length >= 1
  double probability = 0.0;
  long count = 0;
};

struct AssociateStats {
  int dropped_l1_segments = 0;  // zero overlap with every L2 segment
};

// Assigns each L1 segment to the single L2 segment with maximal frame
// overlap (ties to the earlier L2 segment); every L2 segment yields one
// pair. Overlap is counted on half-open frame intervals.
std::vector<AssociationPair> associate(const Transcription& l2_align,
                                       const Transcription& l1_recog,
                                       const std::string& utterance_id = "",
                                       AssociateStats* stats = nullptr);

struct ExtractParams {
  long min_count = 10;
  int top_k = 3;
  double min_rel_freq = 0.1;
  int max_target_len = 4;
  // Keep empty associations (L2 phone with no L1 segments) in the relative
  // frequency denominator. They never become rules.
  bool keep_deletions = false;
  // Probabilities renormalized over retained rules (default) or left as
  // frequencies relative to all counted associations.
  bool renormalize = true;
};

struct ExtractStats {
  long dropped_overlong = 0;  // target sequences beyond max_target_len
  long dropped_empty = 0;     // empty associations outside keep_deletions
};

// Per (source [, grapheme]) key: counts distinct target sequences, keeps the
// frequent ones, estimates probabilities. Output sorted by source, then
// grapheme, then descending count (count ties: shorter sequence first, then
// lexicographic).
std::vector<ConfusionRule> extract_rules(const std::vector<AssociationPair>& pairs,
                                         const ExtractParams& params = {},
                                         ExtractStats* stats = nullptr);

// Same machinery keyed by (source, grapheme cluster). `clusters` is parallel
// to `pairs`; empty clusters fall back to the unconstrained key.
std::vector<ConfusionRule> graphemic_rules(const std::vector<AssociationPair>& pairs,
                                           const std::vector<std::string>& clusters,
                                           const ExtractParams& params = {},
                                           ExtractStats* stats = nullptr);

// Rules file: "SRC[/GRAPHEME] -> tgt1 tgt2 ...<TAB>prob<TAB>count".
std::string rules_to_text(const std::vector<ConfusionRule>& rules);
std::vector<ConfusionRule> parse_rules(const std::string& text,
                                       const std::string& origin = "rules");
std::vector<ConfusionRule> load_rules(const std::string& path);
void save_rules(const std::vector<ConfusionRule>& rules, const std::string& path);

}  // namespace nnasr

#endif  // NNASR_CONFUSION_HPP_
