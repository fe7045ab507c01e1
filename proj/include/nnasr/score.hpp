// score.hpp
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

#ifndef NNASR_SCORE_HPP_
#define NNASR_SCORE_HPP_

#include <string>
#include <vector>

namespace nnasr {

enum class EditOp { kMatch, kSub, kDel, kIns };

struct EditCounts {
  int subs = 0;
  int dels = 0;
  int ins = 0;

  int total() const { return subs + dels + ins; }
};

// Minimal-cost word alignment with unit costs. Ties prefer substitution
// over deletion over insertion so tracebacks are deterministic.
EditCounts edit_align(const std::vector<std::string>& ref,
                      const std::vector<std::string>& hyp,
                      std::vector<EditOp>* alignment = nullptr);

struct UtteranceScore {
  std::string id;
  int subs = 0;
  int dels = 0;
  int ins = 0;
  int ref_len = 0;
  bool correct = false;
};

struct ScoreReport {
  std::vector<UtteranceScore> utterances;

  // 100 * (S+D+I) / total reference words; may exceed 100.
  double wer() const;
  // 100 * imperfect sentences / sentences.
  double ser() const;
};

struct ScoredPair {
  std::string id;
  std::vector<std::string> ref;
  std::vector<std::string> hyp;
};

// Utterance ids must match one-to-one between references and hypotheses;
// missing/extra ids are listed in the error.
ScoreReport corpus_score(const std::vector<std::pair<std::string, std::vector<std::string>>>& refs,
                         const std::vector<std::pair<std::string, std::vector<std::string>>>& hyps);
ScoreReport corpus_score(const std::vector<ScoredPair>& pairs);

// 100 * (baseline - adapted) / baseline.
double relative_reduction(double baseline, double adapted);

// Report rows: "system<TAB>WER<TAB>SER" under that header.
std::string report_tsv(const std::vector<std::pair<std::string, const ScoreReport*>>& systems);
std::string report_detail_tsv(const ScoreReport& report);

}  // namespace nnasr

#endif  // NNASR_SCORE_HPP_
