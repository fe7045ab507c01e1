// lexicon.hpp
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

#ifndef NNASR_LEXICON_HPP_
#define NNASR_LEXICON_HPP_

#include <map>
#include <string>
#include <vector>

namespace nnasr {

class ModelSet;

// word -> pronunciation variants, each a non-empty L2 phone-id sequence.
struct Lexicon {
  std::map<std::string, std::vector<std::vector<std::string>>> entries;
  std::vector<std::string> word_order;  // first-seen order

  bool has(const std::string& word) const { return entries.count(word) != 0; }
  const std::vector<std::vector<std::string>>& variants(const std::string& word) const;

  // Every phone id must resolve against the given inventory.
  void check_against(const ModelSet& l2) const;
};

// Lines "WORD<TAB>ph1 ph2 ...". '#' starts a comment. Duplicate
// (word, pronunciation) pairs collapse; distinct pronunciations accumulate
// as variants.
Lexicon parse_lexicon(const std::string& text, const std::string& origin = "lexicon");
Lexicon load_lexicon(const std::string& path);
void save_lexicon(const Lexicon& lex, const std::string& path);
std::string lexicon_to_text(const Lexicon& lex);

}  // namespace nnasr

#endif  // NNASR_LEXICON_HPP_
