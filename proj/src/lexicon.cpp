// lexicon.cpp
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

#include "nnasr/lexicon.hpp"

#include <algorithm>
#include <cctype>

#include "ioutil.hpp"
#include "nnasr/error.hpp"
#include "nnasr/model.hpp"

namespace nnasr {

const std::vector<std::vector<std::string>>& Lexicon::variants(const std::string& word) const {
  auto it = entries.find(word);
  if (it == entries.end()) throw FormatError("word '" + word + "' missing from lexicon");
  return it->second;
}

void Lexicon::check_against(const ModelSet& l2) const {
  for (const auto& [word, vars] : entries)
    for (const auto& pron : vars)
      for (const std::string& ph : pron)
        if (!l2.has(ph))
          throw FormatError("lexicon word '" + word + "': unknown phone '" + ph + "'");
}

Lexicon parse_lexicon(const std::string& text, const std::string& origin) {
  Lexicon lex;
  std::vector<std::string> lines = split_lines(text);
  for (size_t i = 0; i < lines.size(); ++i) {
    std::string line = lines[i];
    size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    // Trim trailing whitespace only; leading whitespace is malformed.
    while (!line.empty() && std::isspace(static_cast<unsigned char>(line.back()))) line.pop_back();
    if (line.empty()) continue;
    const std::string where = origin + ":" + std::to_string(i + 1);
    size_t tab = line.find('\t');
    if (tab == std::string::npos) throw FormatError(where + ": expected WORD<TAB>phones");
    std::string word = line.substr(0, tab);
    if (word.empty()) throw FormatError(where + ": empty word");
    for (char c : word)
      if (std::isspace(static_cast<unsigned char>(c)) || !std::isprint(static_cast<unsigned char>(c)))
        throw FormatError(where + ": bad character in word '" + word + "'");
    std::vector<std::string> phones = split_ws(line.substr(tab + 1));
    if (phones.empty()) throw FormatError(where + ": empty pronunciation for '" + word + "'");
    auto [it, inserted] = lex.entries.try_emplace(word);
    if (inserted) lex.word_order.push_back(word);
    auto& vars = it->second;
    if (std::find(vars.begin(), vars.end(), phones) == vars.end())
      vars.push_back(std::move(phones));
  }
  return lex;
}

Lexicon load_lexicon(const std::string& path) {
  return parse_lexicon(read_text_file(path), path);
}

std::string lexicon_to_text(const Lexicon& lex) {
  std::string out;
  for (const std::string& word : lex.word_order)
    for (const auto& pron : lex.entries.at(word))
      out += word + "\t" + join(pron, " ") + "\n";
  return out;
}

void save_lexicon(const Lexicon& lex, const std::string& path) {
  write_text_file_atomic(path, lexicon_to_text(lex));
}

}  // namespace nnasr
