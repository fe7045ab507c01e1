// adapt.cpp
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

#include "nnasr/adapt.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include <json.hpp>

#include "decode_graph.hpp"
#include "ioutil.hpp"
#include "nnasr/error.hpp"

namespace nnasr {

double MergedPhoneHmm::entry_mass() const {
  double p = 0.0;
  for (const ConfusionRule& r : branches) p += r.probability;
  return beta + (1.0 - beta) * p;
}

MergedPhoneHmm build_merged(const PhoneHmm& native,
                            const std::vector<ConfusionRule>& rules,
                            const ModelSet& l1, double beta) {
  if (!(beta > 0.0) || beta > 1.0)
    throw UsageError("build_merged: beta must be in (0,1], got " + std::to_string(beta));
  MergedPhoneHmm out;
  out.phone = native.phone;
  out.beta = beta;

  std::vector<CompositeHmm> branches;
  std::vector<double> weights;
  branches.push_back(composite_from_phone(native));
  weights.push_back(std::log(beta));
  double rule_mass = 0.0;
  for (const ConfusionRule& r : rules) {
    if (r.targets.empty()) throw UsageError("build_merged: rule with empty target");
    if (!(r.probability > 0.0) || r.probability > 1.0 + 1e-9)
      throw UsageError("build_merged: rule probability out of (0,1]");
    rule_mass += r.probability;
    double w = (1.0 - beta) * r.probability;
    if (w <= 0.0) continue;  // beta = 1: alternatives carry no mass
    branches.push_back(concatenate(l1, r.targets));
    weights.push_back(std::log(w));
    out.branches.push_back(r);
    if (!out.grapheme.empty() && out.grapheme != r.grapheme)
      throw UsageError("build_merged: rules with mixed grapheme keys");
    out.grapheme = r.grapheme;
  }
  if (rule_mass > 1.0 + 1e-9)
    throw UsageError("build_merged: rule probabilities for '" + native.phone.id +
                     "' sum to " + std::to_string(rule_mass));
  out.graph = merge_branches(std::move(branches), weights);
  return out;
}

const MergedPhoneHmm& AdaptedModelSet::model_for(const std::string& word, int variant,
                                                 int phone_pos,
                                                 const std::string& phone_id) const {
  auto bind = bindings.find({word, variant, phone_pos});
  if (bind != bindings.end()) {
    auto it = merged.find(bind->second);
    if (it != merged.end()) return it->second;
  }
  auto it = merged.find(MergedKey{phone_id, ""});
  if (it == merged.end())
    throw FormatError("adapted set: no model for phone '" + phone_id + "'");
  return it->second;
}

AdaptedModelSet compile_adapted_set(const ModelSet& l2, const ModelSet& l1,
                                    const std::vector<ConfusionRule>& rules,
                                    double beta, const G2PModel* g2p,
                                    const Lexicon* lexicon) {
  if (!(beta > 0.0) || beta > 1.0) throw UsageError("compile_adapted_set: beta must be in (0,1]");
  bool any_grapheme = false;
  for (const ConfusionRule& r : rules) {
    if (!l2.has(r.source))
      throw FormatError("rule source '" + r.source + "' not in the L2 inventory");
    for (const std::string& t : r.targets)
      if (!l1.has(t))
        throw FormatError("rule target phone '" + t + "' not in the L1 inventory");
    if (!r.grapheme.empty()) any_grapheme = true;
  }
  if (any_grapheme && (!g2p || !lexicon))
    throw UsageError("grapheme-keyed rules require a g2p model and a lexicon");

  AdaptedModelSet out;
  out.dim = l2.dim;
  out.l2 = l2;
  out.beta = beta;

  std::set<std::string> used_l1;
  for (const ConfusionRule& r : rules)
    for (const std::string& t : r.targets) used_l1.insert(t);
  for (const std::string& id : used_l1) out.l1_models.emplace(id, l1.model(id));

  std::map<MergedKey, std::vector<ConfusionRule>> grouped;
  for (const ConfusionRule& r : rules) grouped[{r.source, r.grapheme}].push_back(r);

  for (const auto& [key, group] : grouped) {
    MergedPhoneHmm m = build_merged(l2.model(key.first), group, l1, beta);
    m.grapheme = key.second;
    out.merged.emplace(key, std::move(m));
  }
  // Unconstrained fallback for every L2 phone (native-only when rule-free).
  for (const PhoneSymbol& p : l2.inventory) {
    MergedKey key{p.id, ""};
    if (out.merged.count(key)) continue;
    out.merged.emplace(key, build_merged(l2.model(p.id), {}, l1, beta));
  }

  if (any_grapheme) {
    for (const auto& [word, variants] : lexicon->entries) {
      for (size_t v = 0; v < variants.size(); ++v) {
        GraphemeAlignment ga = align_g2p(*g2p, word, variants[v]);
        for (size_t pos = 0; pos < variants[v].size(); ++pos) {
          MergedKey key{variants[v][pos], ga.clusters[pos]};
          if (ga.clusters[pos].empty()) continue;  // falls back to unconstrained
          if (out.merged.count(key))
            out.bindings[{word, static_cast<int>(v), static_cast<int>(pos)}] = key;
        }
      }
    }
  }
  return out;
}

DecodeResult grammar_decode_adapted(const FeatureMatrix& features, const Grammar& grammar,
                                    const Lexicon& lexicon, const AdaptedModelSet& set,
                                    double word_penalty, const DecodeOptions& options) {
  WordModelFn adapted = [&set](const std::string& word, int variant,
                               const std::vector<std::string>& pron) {
    std::vector<CompositeHmm> pieces;
    WordModel wm;
    wm.pron = pron;
    for (size_t pos = 0; pos < pron.size(); ++pos) {
      const MergedPhoneHmm& m =
          set.model_for(word, variant, static_cast<int>(pos), pron[pos]);
      for (int u = 0; u < m.graph.num_units(); ++u)
        wm.unit_pos.push_back(static_cast<int>(pos));
      pieces.push_back(m.graph);
    }
    wm.comp = concatenate_composites(std::move(pieces));
    return wm;
  };
  DecodeGraph graph = build_grammar_graph(grammar, lexicon, adapted, word_penalty);
  return viterbi_decode(graph, features, options, "grammar decoding");
}

// --- serialization ----------------------------------------------------------

static std::string phones_json(const std::vector<const PhoneHmm*>& models) {
  ModelSet tmp;
  tmp.dim = models.empty() ? 1 : models[0]->dim();
  for (const PhoneHmm* m : models) {
    tmp.inventory.push_back(m->phone);
    tmp.models.emplace(m->phone.id, *m);
  }
  // Reuse the model-set writer and strip the enclosing object.
  std::string text = model_set_to_json(tmp);
  size_t open = text.find("\"phones\": ");
  size_t close = text.rfind("]");
  return text.substr(open + 10, close - open - 10 + 1);
}

void save_adapted_set(const AdaptedModelSet& set, const std::string& path) {
  std::vector<const PhoneHmm*> l2_models, l1_models;
  for (const PhoneSymbol& p : set.l2.inventory) l2_models.push_back(&set.l2.models.at(p.id));
  for (const auto& [id, m] : set.l1_models) l1_models.push_back(&m);

  std::string out = "{\n  \"dim\": " + std::to_string(set.dim) + ",\n";
  out += "  \"beta\": " + format_g17(set.beta) + ",\n";
  out += "  \"phones\": " + phones_json(l2_models) + ",\n";
  out += "  \"l1_phones\": " + (l1_models.empty() ? std::string("[]") : phones_json(l1_models)) + ",\n";
  out += "  \"merged\": [";
  bool first = true;
  for (const auto& [key, m] : set.merged) {
    if (m.branches.empty()) continue;  // fallback wrappers are rebuilt on load
    out += first ? "\n" : ",\n";
    first = false;
    out += "    {\"phone\": " + nlohmann::json(key.first).dump() +
           ", \"grapheme\": " + nlohmann::json(key.second).dump() + ", \"branches\": [";
    for (size_t b = 0; b < m.branches.size(); ++b) {
      const ConfusionRule& r = m.branches[b];
      if (b) out += ", ";
      out += "{\"targets\": " + nlohmann::json(r.targets).dump() +
             ", \"probability\": " + format_g17(r.probability) +
             ", \"count\": " + std::to_string(r.count) +
             ", \"weight\": " + format_g17((1.0 - set.beta) * r.probability) + "}";
    }
    out += "]}";
  }
  out += first ? "],\n" : "\n  ],\n";
  out += "  \"bindings\": [";
  first = true;
  for (const auto& [bind, key] : set.bindings) {
    out += first ? "\n" : ",\n";
    first = false;
    out += "    {\"word\": " + nlohmann::json(std::get<0>(bind)).dump() +
           ", \"variant\": " + std::to_string(std::get<1>(bind)) +
           ", \"pos\": " + std::to_string(std::get<2>(bind)) +
           ", \"phone\": " + nlohmann::json(key.first).dump() +
           ", \"grapheme\": " + nlohmann::json(key.second).dump() + "}";
  }
  out += first ? "]\n}\n" : "\n  ]\n}\n";
  write_text_file_atomic(path, out);
}

AdaptedModelSet load_adapted_set(const std::string& path) {
  std::string text = read_text_file(path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(path + ": " + e.what());
  }
  if (!j.contains("merged"))
    throw FormatError(path + ": not an adapted model set (no merged section)");

  // The L2/L1 sections are plain model sets.
  nlohmann::json l2j{{"dim", j.at("dim")}, {"phones", j.at("phones")}};
  ModelSet l2 = model_set_from_json(l2j.dump(), path + " (phones)");
  ModelSet l1;
  l1.dim = l2.dim;
  if (j.contains("l1_phones") && !j.at("l1_phones").empty()) {
    nlohmann::json l1j{{"dim", j.at("dim")}, {"phones", j.at("l1_phones")}};
    l1 = model_set_from_json(l1j.dump(), path + " (l1_phones)");
  }

  double beta = j.value("beta", 1.0);
  std::vector<ConfusionRule> rules;
  for (const auto& jm : j.at("merged")) {
    for (const auto& jb : jm.at("branches")) {
      ConfusionRule r;
      r.source = jm.at("phone").get<std::string>();
      r.grapheme = jm.value("grapheme", "");
      r.targets = jb.at("targets").get<std::vector<std::string>>();
      r.probability = jb.at("probability").get<double>();
      r.count = jb.value("count", 1L);
      rules.push_back(std::move(r));
    }
  }
  AdaptedModelSet out = compile_adapted_set(l2, l1, rules, beta);
  if (j.contains("bindings")) {
    for (const auto& jb : j.at("bindings")) {
      out.bindings[{jb.at("word").get<std::string>(), jb.at("variant").get<int>(),
                    jb.at("pos").get<int>()}] =
          MergedKey{jb.at("phone").get<std::string>(), jb.at("grapheme").get<std::string>()};
    }
  }
  return out;
}

bool is_adapted_set_file(const std::string& path) {
  try {
    nlohmann::json j = nlohmann::json::parse(read_text_file(path));
    return j.is_object() && j.contains("merged");
  } catch (const nlohmann::json::exception&) {
    return false;
  }
}

}  // namespace nnasr
