// synth.cpp
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

#include "nnasr/synth.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <filesystem>
#include <set>

#include <json.hpp>

#include "ioutil.hpp"
#include "nnasr/error.hpp"
#include "nnasr/rng.hpp"

namespace nnasr {

namespace {

// Every state reachable from start must reach a final state, otherwise the
// word sampler could strand in a dead end.
void check_satisfiable(const Grammar& g) {
  try {
    g.validate();
  } catch (const FormatError& e) {
    throw UsageError(std::string("synth: unsatisfiable grammar: ") + e.what());
  }
  std::set<int> reach{g.start};
  std::deque<int> queue{g.start};
  while (!queue.empty()) {
    int s = queue.front();
    queue.pop_front();
    for (const GrammarArc& a : g.arcs)
      if (a.from == s && reach.insert(a.to).second) queue.push_back(a.to);
  }
  std::set<int> co(g.finals.begin(), g.finals.end());
  bool grew = true;
  while (grew) {
    grew = false;
    for (const GrammarArc& a : g.arcs)
      if (co.count(a.to) && !co.count(a.from) && reach.count(a.from)) {
        co.insert(a.from);
        grew = true;
      }
  }
  for (int s : reach)
    if (!co.count(s))
      throw UsageError("synth: unsatisfiable grammar: state " + std::to_string(s) +
                       " cannot reach a final state");
}

std::vector<std::string> sample_sentence(const Grammar& g, Rng& rng, int max_words) {
  for (int attempt = 0; attempt < 1000; ++attempt) {
    std::vector<std::string> words;
    int state = g.start;
    int steps = 0;
    bool ok = true;
    while (true) {
      if (++steps > 100 * (max_words + 1)) {
        ok = false;
        break;
      }
      std::vector<int> out_arcs;
      for (size_t a = 0; a < g.arcs.size(); ++a)
        if (g.arcs[a].from == state) out_arcs.push_back(static_cast<int>(a));
      if (g.finals.count(state)) {
        if (out_arcs.empty() || rng.uniform() < 0.5) break;
      } else if (out_arcs.empty()) {
        throw UsageError("synth: sampler stranded in state " + std::to_string(state));
      }
      const GrammarArc& arc = g.arcs[out_arcs[rng.uniform_int(static_cast<int>(out_arcs.size()))]];
      if (!arc.word.empty()) {
        words.push_back(arc.word);
        if (static_cast<int>(words.size()) > max_words) {
          ok = false;
          break;
        }
      }
      state = arc.to;
    }
    if (ok && !words.empty()) return words;
  }
  throw NumericError("synth: could not sample a non-empty sentence within bounds");
}

}  // namespace

std::vector<int> CorpusManifest::speakers() const {
  std::set<int> set;
  for (const UtteranceRecord& u : utterances) set.insert(u.speaker);
  return {set.begin(), set.end()};
}

CorpusManifest synth_corpus(const ModelSet& l2, const ModelSet& l1,
                            const Lexicon& lexicon, const Grammar& grammar,
                            const std::vector<PlantedRuleSpec>& rules,
                            const SynthOptions& options, const ClusterMap* clusters,
                            const std::string& out_dir) {
  if (options.n_utts < 1) throw UsageError("synth: n_utts must be >= 1");
  if (options.n_speakers < 1) throw UsageError("synth: n_speakers must be >= 1");
  if (l2.dim != l1.dim) throw FormatError("synth: L2/L1 dimension mismatch");
  check_satisfiable(grammar);
  lexicon.check_against(l2);
  for (const std::string& w : grammar.word_list())
    if (!lexicon.has(w)) throw FormatError("synth: grammar word '" + w + "' not in lexicon");
  bool need_clusters = false;
  for (const PlantedRuleSpec& r : rules) {
    if (!l2.has(r.source)) throw FormatError("synth: rule source '" + r.source + "' not in L2 set");
    double mass = 0.0;
    for (const PlantedTarget& t : r.targets) {
      if (t.phones.empty() || static_cast<int>(t.phones.size()) > options.max_rule_len)
        throw UsageError("synth: rule target length out of [1," +
                         std::to_string(options.max_rule_len) + "]");
      for (const std::string& p : t.phones)
        if (!l1.has(p)) throw FormatError("synth: rule target phone '" + p + "' not in L1 set");
      if (!(t.probability > 0.0)) throw UsageError("synth: rule probability must be positive");
      mass += t.probability;
    }
    if (mass > 1.0 + 1e-9)
      throw UsageError("synth: probabilities for source '" + r.source + "' sum to " +
                       std::to_string(mass));
    if (!r.cluster.empty()) need_clusters = true;
  }
  if (need_clusters && !clusters)
    throw UsageError("synth: cluster-conditioned rules require a cluster map");

  ensure_directory(out_dir);
  ensure_directory(out_dir + "/feat");

  // Per-speaker channel offset, a deterministic direction scaled by
  // speaker_shift (speaker 0 stays unshifted).
  std::vector<std::vector<double>> speaker_offset(options.n_speakers,
                                                  std::vector<double>(l2.dim, 0.0));
  for (int s = 1; s < options.n_speakers; ++s) {
    if (options.speaker_shift == 0.0) continue;
    Rng srng(mix_seed(options.seed ^ 0x5eedULL, static_cast<uint64_t>(s)));
    double norm = 0.0;
    for (int d = 0; d < l2.dim; ++d) {
      speaker_offset[s][d] = srng.normal();
      norm += speaker_offset[s][d] * speaker_offset[s][d];
    }
    norm = std::sqrt(std::max(norm, 1e-12));
    for (int d = 0; d < l2.dim; ++d)
      speaker_offset[s][d] *= options.speaker_shift / norm;
  }

  CorpusManifest manifest;
  manifest.dim = l2.dim;
  manifest.seed = options.seed;
  manifest.n_speakers = options.n_speakers;

  const double per_speaker = static_cast<double>(options.n_utts) / options.n_speakers;
  for (int u = 0; u < options.n_utts; ++u) {
    Rng rng(mix_seed(options.seed, static_cast<uint64_t>(u)));
    UtteranceRecord rec;
    char idbuf[16];
    std::snprintf(idbuf, sizeof(idbuf), "utt%04d", u);
    rec.id = idbuf;
    rec.speaker = u % options.n_speakers;
    rec.role = (u / options.n_speakers) < options.adapt_fraction * per_speaker ? "adapt" : "test";
    rec.feature_path = std::string("feat/") + idbuf + ".feat";
    rec.words = sample_sentence(grammar, rng, options.max_sentence_words);

    // Expand through the lexicon and apply per-occurrence replacements.
    struct RealizedPhone {
      std::string id;
      bool is_l1 = false;
    };
    std::vector<RealizedPhone> realized;
    for (size_t w = 0; w < rec.words.size(); ++w) {
      const auto& variants = lexicon.variants(rec.words[w]);
      int v = variants.size() > 1 ? rng.uniform_int(static_cast<int>(variants.size())) : 0;
      rec.variants.push_back(v);
      const std::vector<std::string>& pron = variants[v];
      const std::vector<std::string>* occ_clusters = nullptr;
      if (clusters) {
        auto it = clusters->find({rec.words[w], v});
        if (it != clusters->end()) occ_clusters = &it->second;
      }
      for (size_t pos = 0; pos < pron.size(); ++pos) {
        const PlantedRuleSpec* hit = nullptr;
        for (const PlantedRuleSpec& r : rules) {
          if (r.source != pron[pos]) continue;
          if (!r.cluster.empty()) {
            if (!occ_clusters || pos >= occ_clusters->size() ||
                (*occ_clusters)[pos] != r.cluster)
              continue;
          }
          hit = &r;
          break;
        }
        // One uniform draw per matched occurrence; the residual mass keeps
        // the canonical phone.
        if (hit) {
          double draw = rng.uniform();
          double cum = 0.0;
          const PlantedTarget* fired = nullptr;
          for (const PlantedTarget& t : hit->targets) {
            cum += t.probability;
            if (draw < cum) {
              fired = &t;
              break;
            }
          }
          if (fired) {
            FiredReplacement fr;
            fr.word_pos = static_cast<int>(w);
            fr.phone_pos = static_cast<int>(pos);
            fr.source = pron[pos];
            fr.targets = fired->phones;
            fr.cluster = occ_clusters && pos < occ_clusters->size() ? (*occ_clusters)[pos]
                                                                    : std::string();
            rec.replacements.push_back(std::move(fr));
            for (const std::string& p : fired->phones) realized.push_back({p, true});
            continue;
          }
        }
        realized.push_back({pron[pos], false});
      }
    }

    FeatureMatrix feats;
    feats.dim = l2.dim;
    int t = 0;
    for (const RealizedPhone& rp : realized) {
      const PhoneHmm& m = rp.is_l1 ? l1.model(rp.id) : l2.model(rp.id);
      int n = sample_phone(m, rng, &feats.data);
      rec.segments.segments.push_back({rp.id, t, t + n});
      rec.segment_is_l1.push_back(rp.is_l1);
      t += n;
    }
    feats.frames = t;
    const std::vector<double>& off = speaker_offset[rec.speaker];
    for (int f = 0; f < feats.frames; ++f) {
      double* row = feats.frame(f);
      for (int d = 0; d < feats.dim; ++d) row[d] += off[d];
    }
    feats.validate();
    rec.segments.validate();
    save_features(feats, out_dir + "/" + rec.feature_path);
    manifest.utterances.push_back(std::move(rec));
  }
  save_manifest(manifest, out_dir + "/manifest.json");
  return manifest;
}

void save_manifest(const CorpusManifest& manifest, const std::string& path) {
  nlohmann::json j;
  j["dim"] = manifest.dim;
  j["seed"] = manifest.seed;
  j["n_speakers"] = manifest.n_speakers;
  j["utterances"] = nlohmann::json::array();
  for (const UtteranceRecord& u : manifest.utterances) {
    nlohmann::json ju;
    ju["id"] = u.id;
    ju["speaker"] = u.speaker;
    ju["role"] = u.role;
    ju["features"] = u.feature_path;
    ju["words"] = u.words;
    ju["variants"] = u.variants;
    ju["segments"] = nlohmann::json::array();
    for (size_t s = 0; s < u.segments.segments.size(); ++s) {
      const Segment& seg = u.segments.segments[s];
      ju["segments"].push_back({{"phone", seg.phone},
                                {"start", seg.start},
                                {"end", seg.end},
                                {"l1", s < u.segment_is_l1.size() && u.segment_is_l1[s]}});
    }
    ju["replacements"] = nlohmann::json::array();
    for (const FiredReplacement& r : u.replacements)
      ju["replacements"].push_back({{"word_pos", r.word_pos},
                                    {"phone_pos", r.phone_pos},
                                    {"source", r.source},
                                    {"targets", r.targets},
                                    {"cluster", r.cluster}});
    j["utterances"].push_back(std::move(ju));
  }
  write_text_file_atomic(path, j.dump(1) + "\n");
}

CorpusManifest load_manifest(const std::string& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_text_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(path + ": " + e.what());
  }
  CorpusManifest m;
  try {
    m.dim = j.at("dim").get<int>();
    m.seed = j.at("seed").get<uint64_t>();
    m.n_speakers = j.value("n_speakers", 1);
    for (const auto& ju : j.at("utterances")) {
      UtteranceRecord u;
      u.id = ju.at("id").get<std::string>();
      u.speaker = ju.value("speaker", 0);
      u.role = ju.value("role", "test");
      u.feature_path = ju.at("features").get<std::string>();
      u.words = ju.at("words").get<std::vector<std::string>>();
      if (ju.contains("variants")) u.variants = ju.at("variants").get<std::vector<int>>();
      for (const auto& js : ju.at("segments")) {
        u.segments.segments.push_back({js.at("phone").get<std::string>(),
                                       js.at("start").get<int>(), js.at("end").get<int>()});
        u.segment_is_l1.push_back(js.value("l1", false));
      }
      if (ju.contains("replacements")) {
        for (const auto& jr : ju.at("replacements")) {
          FiredReplacement r;
          r.word_pos = jr.at("word_pos").get<int>();
          r.phone_pos = jr.at("phone_pos").get<int>();
          r.source = jr.at("source").get<std::string>();
          r.targets = jr.at("targets").get<std::vector<std::string>>();
          r.cluster = jr.value("cluster", "");
          u.replacements.push_back(std::move(r));
        }
      }
      u.segments.validate();
      m.utterances.push_back(std::move(u));
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(path + ": " + e.what());
  }
  return m;
}

std::string resolve_feature_path(const std::string& manifest_path,
                                 const UtteranceRecord& utt) {
  std::filesystem::path p(manifest_path);
  return (p.parent_path() / utt.feature_path).string();
}

std::vector<PlantedRuleSpec> parse_planted_rules(const std::string& text,
                                                 const std::string& origin) {
  std::map<std::pair<std::string, std::string>, PlantedRuleSpec> by_key;
  std::vector<std::pair<std::string, std::string>> order;
  std::vector<std::string> lines = split_lines(text);
  for (size_t i = 0; i < lines.size(); ++i) {
    const std::string& line = lines[i];
    if (line.empty() || line[0] == '#') continue;
    const std::string where = origin + ":" + std::to_string(i + 1);
    size_t tab = line.find('\t');
    if (tab == std::string::npos) throw FormatError(where + ": expected '... <TAB>prob'");
    std::vector<std::string> head = split_ws(line.substr(0, tab));
    if (head.size() < 3 || head[1] != "->")
      throw FormatError(where + ": expected 'SRC[/CLUSTER] -> targets'");
    std::string source = head[0];
    std::string cluster;
    size_t slash = source.find('/');
    if (slash != std::string::npos) {
      cluster = source.substr(slash + 1);
      source = source.substr(0, slash);
    }
    PlantedTarget target;
    target.phones.assign(head.begin() + 2, head.end());
    target.probability = parse_double(line.substr(tab + 1), where);
    auto key = std::make_pair(source, cluster);
    auto [it, inserted] = by_key.try_emplace(key);
    if (inserted) {
      it->second.source = source;
      it->second.cluster = cluster;
      order.push_back(key);
    }
    it->second.targets.push_back(std::move(target));
  }
  std::vector<PlantedRuleSpec> out;
  for (const auto& key : order) out.push_back(by_key.at(key));
  return out;
}

std::vector<PlantedRuleSpec> load_planted_rules(const std::string& path) {
  return parse_planted_rules(read_text_file(path), path);
}

}  // namespace nnasr
