// grammar.cpp
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

#include "nnasr/grammar.hpp"

#include <cmath>
#include <deque>

#include "ioutil.hpp"
#include "nnasr/error.hpp"

namespace nnasr {

void Grammar::validate() const {
  if (states.empty()) throw FormatError("grammar: no states");
  if (!states.count(start)) throw FormatError("grammar: start state not declared");
  if (finals.empty()) throw FormatError("grammar: no final states");
  for (int f : finals)
    if (!states.count(f)) throw FormatError("grammar: final state " + std::to_string(f) + " not declared");
  for (size_t i = 0; i < arcs.size(); ++i) {
    if (!states.count(arcs[i].from) || !states.count(arcs[i].to))
      throw FormatError("grammar: arc " + std::to_string(i) + " references undeclared state");
    if (!std::isfinite(arcs[i].weight))
      throw FormatError("grammar: arc " + std::to_string(i) + " has non-finite weight");
  }
  // Some final must be reachable from start.
  std::set<int> seen{start};
  std::deque<int> queue{start};
  while (!queue.empty()) {
    int s = queue.front();
    queue.pop_front();
    if (finals.count(s)) return;
    for (const GrammarArc& a : arcs)
      if (a.from == s && seen.insert(a.to).second) queue.push_back(a.to);
  }
  throw FormatError("grammar: no final state reachable from start");
}

std::set<int> Grammar::epsilon_closure(int state) const {
  std::set<int> seen{state};
  std::deque<int> queue{state};
  while (!queue.empty()) {
    int s = queue.front();
    queue.pop_front();
    for (const GrammarArc& a : arcs)
      if (a.from == s && a.word.empty() && seen.insert(a.to).second) queue.push_back(a.to);
  }
  return seen;
}

bool Grammar::accepts(const std::vector<std::string>& words) const {
  std::set<int> current = epsilon_closure(start);
  for (const std::string& w : words) {
    std::set<int> next;
    for (int s : current)
      for (const GrammarArc& a : arcs)
        if (a.from == s && a.word == w)
          for (int t : epsilon_closure(a.to)) next.insert(t);
    current = std::move(next);
    if (current.empty()) return false;
  }
  for (int s : current)
    if (finals.count(s)) return true;
  return false;
}

std::vector<std::string> Grammar::word_list() const {
  std::vector<std::string> out;
  std::set<std::string> seen;
  for (const GrammarArc& a : arcs)
    if (!a.word.empty() && seen.insert(a.word).second) out.push_back(a.word);
  return out;
}

Grammar build_word_loop(const std::vector<std::string>& words, double loop_penalty) {
  if (words.empty()) throw UsageError("word loop: empty word list");
  if (!std::isfinite(loop_penalty)) throw UsageError("word loop: loop penalty must be finite");
  Grammar g;
  g.states = {0, 1};
  g.start = 0;
  g.finals = {1};
  std::set<std::string> seen;
  for (const std::string& w : words) {
    if (w.empty()) throw UsageError("word loop: empty word");
    if (seen.insert(w).second) g.arcs.push_back({0, 0, w, loop_penalty});
  }
  g.arcs.push_back({0, 1, "", 0.0});
  return g;
}

Grammar linear_grammar(const std::vector<std::string>& words) {
  if (words.empty()) throw UsageError("linear grammar: empty word sequence");
  Grammar g;
  g.start = 0;
  for (size_t i = 0; i <= words.size(); ++i) g.states.insert(static_cast<int>(i));
  for (size_t i = 0; i < words.size(); ++i)
    g.arcs.push_back({static_cast<int>(i), static_cast<int>(i) + 1, words[i], 0.0});
  g.finals = {static_cast<int>(words.size())};
  return g;
}

Grammar parse_grammar(const std::string& text, const std::string& origin) {
  Grammar g;
  std::vector<std::string> lines = split_lines(text);
  for (size_t i = 0; i < lines.size(); ++i) {
    const std::string& line = lines[i];
    if (line.empty() || line[0] == '#') continue;
    const std::string where = origin + ":" + std::to_string(i + 1);
    std::vector<std::string> toks = split_ws(line);
    if (toks[0] == "state" && toks.size() == 2) {
      g.states.insert(static_cast<int>(parse_long(toks[1], where)));
    } else if (toks[0] == "start" && toks.size() == 2) {
      g.start = static_cast<int>(parse_long(toks[1], where));
    } else if (toks[0] == "final" && toks.size() == 2) {
      g.finals.insert(static_cast<int>(parse_long(toks[1], where)));
    } else if (toks[0] == "arc" && toks.size() == 4) {
      GrammarArc a;
      a.from = static_cast<int>(parse_long(toks[1], where));
      a.to = static_cast<int>(parse_long(toks[2], where));
      a.word = toks[3] == "<eps>" ? "" : toks[3];
      g.arcs.push_back(std::move(a));
    } else {
      throw FormatError(where + ": unrecognized grammar line '" + line + "'");
    }
  }
  try {
    g.validate();
  } catch (const FormatError& e) {
    throw FormatError(origin + ": " + e.what());
  }
  return g;
}

Grammar load_grammar(const std::string& path) {
  return parse_grammar(read_text_file(path), path);
}

std::string grammar_to_text(const Grammar& g) {
  std::string out;
  for (int s : g.states) out += "state " + std::to_string(s) + "\n";
  out += "start " + std::to_string(g.start) + "\n";
  for (int f : g.finals) out += "final " + std::to_string(f) + "\n";
  for (const GrammarArc& a : g.arcs)
    out += "arc " + std::to_string(a.from) + " " + std::to_string(a.to) + " " +
           (a.word.empty() ? "<eps>" : a.word) + "\n";
  return out;
}

void save_grammar(const Grammar& g, const std::string& path) {
  g.validate();
  write_text_file_atomic(path, grammar_to_text(g));
}

}  // namespace nnasr
