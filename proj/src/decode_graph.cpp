// decode_graph.cpp
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

#include "decode_graph.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "nnasr/error.hpp"

namespace nnasr {

namespace {
constexpr double kNegInf = -std::numeric_limits<double>::infinity();
}

void DecodeGraph::finish() {
  std::stable_sort(arcs.begin(), arcs.end(), [](const Arc& a, const Arc& b) {
    if (a.to != b.to) return a.to < b.to;
    if (a.from != b.from) return a.from < b.from;
    return a.new_segment < b.new_segment;
  });
  std::stable_sort(entries.begin(), entries.end(),
                   [](const Entry& a, const Entry& b) { return a.node < b.node; });
  std::stable_sort(exits.begin(), exits.end(),
                   [](const Exit& a, const Exit& b) { return a.node < b.node; });
}

// Appends a composite's states and internal arcs; occurrence of state s is
// occ_base + occ_of_unit(unit). Returns the node index base.
static int add_composite(DecodeGraph* g, const CompositeHmm& comp,
                         const std::vector<int>& occ_of_unit) {
  int base = static_cast<int>(g->nodes.size());
  for (int s = 0; s < comp.num_states(); ++s)
    g->nodes.push_back({comp.states[s], occ_of_unit[comp.state_unit[s]]});
  for (const auto& a : comp.arcs) {
    bool boundary = comp.state_unit[a.from] != comp.state_unit[a.to];
    g->arcs.push_back({base + a.from, base + a.to, a.logp, boundary, -1});
  }
  return base;
}

DecodeGraph graph_from_composite(const CompositeHmm& comp) {
  DecodeGraph g;
  g.dim = comp.dim;
  std::vector<int> occ_of_unit(comp.num_units());
  for (int u = 0; u < comp.num_units(); ++u) {
    occ_of_unit[u] = u;
    g.occs.push_back({comp.unit_phone[u], -1, u});
  }
  int base = add_composite(&g, comp, occ_of_unit);
  for (int s = 0; s < comp.num_states(); ++s) {
    if (comp.entry[s] != kNegInf) g.entries.push_back({base + s, comp.entry[s], -1});
    if (comp.exit[s] != kNegInf) g.exits.push_back({base + s, comp.exit[s]});
  }
  g.finish();
  return g;
}

DecodeGraph build_phone_loop(const ModelSet& set, double phone_penalty) {
  if (set.inventory.empty()) throw UsageError("phone loop: empty model set");
  if (!std::isfinite(phone_penalty)) throw UsageError("phone loop: penalty must be finite");
  DecodeGraph g;
  g.dim = set.dim;
  struct Piece {
    int base;
    const CompositeHmm* comp;
  };
  std::vector<CompositeHmm> comps;
  comps.reserve(set.inventory.size());
  for (const PhoneSymbol& p : set.inventory)
    comps.push_back(composite_from_phone(set.model(p.id)));
  std::vector<int> bases;
  for (size_t i = 0; i < comps.size(); ++i) {
    int occ = static_cast<int>(g.occs.size());
    g.occs.push_back({set.inventory[i].id, -1, static_cast<int>(i)});
    bases.push_back(add_composite(&g, comps[i], {occ}));
    for (int s = 0; s < comps[i].num_states(); ++s) {
      if (comps[i].entry[s] != kNegInf) g.entries.push_back({bases[i] + s, comps[i].entry[s], -1});
      if (comps[i].exit[s] != kNegInf) g.exits.push_back({bases[i] + s, comps[i].exit[s]});
    }
  }
  // Loop-back arcs between every exit/entry pair, including self pairs.
  for (size_t i = 0; i < comps.size(); ++i)
    for (int s = 0; s < comps[i].num_states(); ++s) {
      if (comps[i].exit[s] == kNegInf) continue;
      for (size_t j = 0; j < comps.size(); ++j)
        for (int s2 = 0; s2 < comps[j].num_states(); ++s2) {
          if (comps[j].entry[s2] == kNegInf) continue;
          g.arcs.push_back({bases[i] + s, bases[j] + s2,
                            comps[i].exit[s] + phone_penalty + comps[j].entry[s2], true, -1});
        }
    }
  g.finish();
  return g;
}

DecodeGraph build_grammar_graph(const Grammar& grammar, const Lexicon& lexicon,
                                const WordModelFn& word_model, double word_penalty) {
  grammar.validate();
  if (!std::isfinite(word_penalty)) throw UsageError("grammar decode: word penalty must be finite");
  std::string missing;
  for (const std::string& w : grammar.word_list())
    if (!lexicon.has(w)) missing += (missing.empty() ? "" : ", ") + w;
  if (!missing.empty())
    throw FormatError("grammar words missing from lexicon: " + missing);

  DecodeGraph g;
  struct Instance {
    CompositeHmm comp;
    int base = 0;       // node base
    int from = 0;       // grammar arc endpoints
    int to = 0;
    double weight = 0;  // grammar arc weight
    int slot = 0;
  };
  std::vector<Instance> instances;
  for (const GrammarArc& arc : grammar.arcs) {
    if (arc.word.empty()) continue;
    const auto& variants = lexicon.variants(arc.word);
    for (size_t v = 0; v < variants.size(); ++v) {
      WordModel wm = word_model(arc.word, static_cast<int>(v), variants[v]);
      Instance inst;
      inst.from = arc.from;
      inst.to = arc.to;
      inst.weight = arc.weight;
      inst.slot = static_cast<int>(g.words.size());
      g.words.push_back({arc.word, static_cast<int>(v), arc.to});
      if (g.dim == 0) g.dim = wm.comp.dim;
      std::vector<int> occ_of_unit(wm.comp.num_units());
      int occ_base = static_cast<int>(g.occs.size());
      for (size_t pos = 0; pos < wm.pron.size(); ++pos)
        g.occs.push_back({wm.pron[pos], inst.slot, static_cast<int>(pos)});
      for (int u = 0; u < wm.comp.num_units(); ++u)
        occ_of_unit[u] = occ_base + wm.unit_pos[u];
      inst.base = add_composite(&g, wm.comp, occ_of_unit);
      inst.comp = std::move(wm.comp);
      instances.push_back(std::move(inst));
    }
  }
  if (instances.empty()) throw UsageError("grammar has no word arcs");

  // Entries: instances whose source state is epsilon-reachable from start.
  std::map<int, std::set<int>> closures;
  auto closure_of = [&](int s) -> const std::set<int>& {
    auto it = closures.find(s);
    if (it == closures.end()) it = closures.emplace(s, grammar.epsilon_closure(s)).first;
    return it->second;
  };
  const std::set<int>& start_cl = closure_of(grammar.start);
  for (const Instance& inst : instances) {
    if (!start_cl.count(inst.from)) continue;
    for (int s = 0; s < inst.comp.num_states(); ++s)
      if (inst.comp.entry[s] != kNegInf)
        g.entries.push_back({inst.base + s,
                             inst.weight + word_penalty + inst.comp.entry[s], inst.slot});
  }
  // Word-to-word arcs and exits.
  for (const Instance& a : instances) {
    const std::set<int>& cl = closure_of(a.to);
    bool is_final = false;
    for (int s : cl)
      if (grammar.finals.count(s)) is_final = true;
    for (int s = 0; s < a.comp.num_states(); ++s) {
      if (a.comp.exit[s] == kNegInf) continue;
      if (is_final) g.exits.push_back({a.base + s, a.comp.exit[s]});
      for (const Instance& b : instances) {
        if (!cl.count(b.from)) continue;
        for (int s2 = 0; s2 < b.comp.num_states(); ++s2) {
          if (b.comp.entry[s2] == kNegInf) continue;
          g.arcs.push_back({a.base + s, b.base + s2,
                            a.comp.exit[s] + b.weight + word_penalty + b.comp.entry[s2],
                            true, b.slot});
        }
      }
    }
  }
  g.finish();
  return g;
}

DecodeResult viterbi_decode(const DecodeGraph& graph, const FeatureMatrix& features,
                            const DecodeOptions& options, const std::string& what) {
  features.validate();
  if (features.dim != graph.dim)
    throw FormatError(what + ": feature dimension " + std::to_string(features.dim) +
                      " != model dimension " + std::to_string(graph.dim));
  const int T = features.frames;
  const int N = static_cast<int>(graph.nodes.size());
  const size_t A = graph.arcs.size();

  std::vector<double> emis(N);
  std::vector<double> prev(N, kNegInf), cur(N, kNegInf);
  // Backpointers: t=0 rows store -(entry index)-1, later rows arc indices.
  std::vector<int> bp(static_cast<size_t>(T) * N, std::numeric_limits<int>::min());

  auto fill_emissions = [&](int t) {
    const double* frame = features.frame(t);
    for (int n = 0; n < N; ++n)
      emis[n] = log_emission(graph.nodes[n].state, frame, features.dim);
  };

  fill_emissions(0);
  for (size_t e = 0; e < graph.entries.size(); ++e) {
    const auto& en = graph.entries[e];
    double cand = en.logp + emis[en.node];
    if (cand > prev[en.node]) {
      prev[en.node] = cand;
      bp[en.node] = -static_cast<int>(e) - 1;
    }
  }

  for (int t = 1; t < T; ++t) {
    fill_emissions(t);
    std::fill(cur.begin(), cur.end(), kNegInf);
    int* bp_row = bp.data() + static_cast<size_t>(t) * N;
    std::vector<double> best(N, kNegInf);
    std::vector<int> best_arc(N, std::numeric_limits<int>::min());
    for (size_t a = 0; a < A; ++a) {
      const auto& arc = graph.arcs[a];
      double cand = prev[arc.from] + arc.logp;
      if (cand > best[arc.to]) {
        best[arc.to] = cand;
        best_arc[arc.to] = static_cast<int>(a);
      }
    }
    for (int n = 0; n < N; ++n) {
      if (best[n] == kNegInf) continue;
      cur[n] = best[n] + emis[n];
      bp_row[n] = best_arc[n];
    }
    if (options.beam > 0.0) {
      double top = kNegInf;
      for (double v : cur) top = std::max(top, v);
      for (int n = 0; n < N; ++n)
        if (cur[n] < top - options.beam) cur[n] = kNegInf;
    }
    std::swap(prev, cur);
  }

  double best_score = kNegInf;
  int best_node = -1;
  for (const auto& ex : graph.exits) {
    double cand = prev[ex.node] + ex.logp;
    if (cand > best_score) {
      best_score = cand;
      best_node = ex.node;
    }
  }
  if (best_node < 0 || best_score == kNegInf)
    throw NumericError(what + ": no complete path covers " + std::to_string(T) + " frames");

  // Traceback.
  std::vector<int> node_at(T);
  std::vector<int> trace(T);  // backpointer used to reach frame t
  int n = best_node;
  for (int t = T - 1; t >= 0; --t) {
    node_at[t] = n;
    int p = bp[static_cast<size_t>(t) * N + n];
    trace[t] = p;
    if (t > 0) n = graph.arcs[p].from;
  }

  DecodeResult res;
  res.log_score = best_score;
  int cur_word = -1;
  auto note_word = [&](int slot) {
    if (slot < 0) return;
    res.words.push_back(graph.words[slot].word);
    res.word_variants.push_back(graph.words[slot].variant);
    cur_word = static_cast<int>(res.words.size()) - 1;
  };
  note_word(graph.entries[-trace[0] - 1].enter_word);
  int seg_start = 0;
  int seg_occ = graph.nodes[node_at[0]].occ;
  int seg_word = cur_word;
  auto close_segment = [&](int end) {
    const auto& occ = graph.occs[seg_occ];
    res.phones.segments.push_back({occ.phone, seg_start, end});
    res.meta.push_back({seg_word, occ.phone_pos});
  };
  for (int t = 1; t < T; ++t) {
    const auto& arc = graph.arcs[trace[t]];
    note_word(arc.enter_word);
    int occ = graph.nodes[node_at[t]].occ;
    if (arc.new_segment || occ != seg_occ) {
      close_segment(t);
      seg_start = t;
      seg_occ = occ;
      seg_word = cur_word;
    }
  }
  close_segment(T);
  res.phones.validate();
  return res;
}

}  // namespace nnasr
