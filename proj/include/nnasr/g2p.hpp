// g2p.hpp
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
// Discrete-HMM grapheme-phoneme aligner. The emitting states of a word's
// chain are its pronunciation phones; the observations are the characters
// of its normalized spelling. Per phone, processing is a sequence of
// actions drawn from a tied three-way distribution:
//   stay    -> emit one character and remain in the phone,
//   advance -> emit one character and finish the phone,
//   skip    -> finish the phone without emitting.
// So a phone covers zero characters with probability skip, and k >= 1
// characters with probability stay^(k-1)*advance + stay^k*skip.

#ifndef NNASR_G2P_HPP_
#define NNASR_G2P_HPP_

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

namespace nnasr {

struct G2PModel {
  std::vector<std::string> phones;             // index order
  std::map<std::string, int> phone_index;
  std::string alphabet;                        // sorted normalized characters
  std::vector<std::vector<double>> emission;   // [phone][alphabet pos], sums to 1
  std::vector<double> stay;                    // per phone
  std::vector<double> skip;                    // per phone; advance = 1-stay-skip

  int char_index(char c) const;  // -1 when absent
  void validate() const;
};

// Per-phone character substrings; they partition the normalized spelling in
// order (empty substrings mark skipped phones).
struct GraphemeAlignment {
  std::vector<std::string> clusters;
};

// Lowercase, strip accents (Latin-1 and common precomposed forms), drop
// everything outside [a-z].
std::string normalize_spelling(const std::string& word);

struct DictEntry {
  std::string spelling;
  std::vector<std::string> phones;
};

class Lexicon;

// One entry per (word, pronunciation variant).
std::vector<DictEntry> dictionary_from_lexicon(const Lexicon& lexicon);

// EM with globally tied emission/stay/skip parameters over per-word chains.
// Emissions start uniform plus 1e-3 seeded noise; stay=0.3, skip=0.05.
// Returns per-iteration total log-likelihood (nondecreasing). Words whose
// spelling normalizes to nothing, or that admit no alignment, are skipped
// with a warning.
std::pair<G2PModel, std::vector<double>> train_g2p(
    const std::vector<DictEntry>& dictionary, int n_iters, uint64_t seed = 0,
    std::vector<std::string>* warnings = nullptr);

// Viterbi alignment of one (spelling, pronunciation) pair. Ties prefer
// advance over stay over skip. Unknown characters or phones are lookup
// errors; an impossible alignment (e.g. no skip mass and more phones than
// characters) is a numeric error.
GraphemeAlignment align_g2p(const G2PModel& model, const std::string& spelling,
                            const std::vector<std::string>& phones);

G2PModel load_g2p(const std::string& path);
void save_g2p(const G2PModel& model, const std::string& path);

}  // namespace nnasr

#endif  // NNASR_G2P_HPP_
