// pipeline.cpp
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

#include "nnasr/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <thread>

#include <json.hpp>

#include "ioutil.hpp"
#include "nnasr/adapt.hpp"
#include "nnasr/confusion.hpp"
#include "nnasr/decode.hpp"
#include "nnasr/error.hpp"
#include "nnasr/g2p.hpp"
#include "nnasr/mllr.hpp"
#include "nnasr/score.hpp"
#include "nnasr/synth.hpp"

namespace nnasr {

namespace {

// Index-sharded parallel map with deterministic output slots. Worker
// exceptions are rethrown for the smallest failing index.
void parallel_for(int n, int jobs, const std::function<void(int)>& fn) {
  jobs = std::max(1, jobs);
  if (jobs == 1 || n <= 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::exception_ptr> errors(n);
  std::vector<std::thread> pool;
  for (int w = 0; w < jobs; ++w)
    pool.emplace_back([&] {
      for (int i = next.fetch_add(1); i < n; i = next.fetch_add(1)) {
        try {
          fn(i);
        } catch (...) {
          errors[i] = std::current_exception();
        }
      }
    });
  for (std::thread& t : pool) t.join();
  for (int i = 0; i < n; ++i)
    if (errors[i]) std::rethrow_exception(errors[i]);
}

std::string fold_dir(int speaker) { return "folds/speaker" + std::to_string(speaker); }

struct StageError : Error {
  StageError(const std::string& stage, const std::string& utt, const Error& cause)
      : Error(cause.kind(), "stage " + stage + (utt.empty() ? "" : ", utterance " + utt) +
                                ": " + cause.what()) {}
};

}  // namespace

void PipelineConfig::validate() const {
  if (l2_models.empty() || l1_models.empty() || lexicon.empty() || manifest.empty())
    throw UsageError("pipeline: l2_models, l1_models, lexicon and manifest are required");
  if (out_dir.empty()) throw UsageError("pipeline: out_dir is required");
  if (strict && grammar.empty())
    throw UsageError("pipeline: strict grammar requested but no grammar file given");
  if (!strict && !loop) throw UsageError("pipeline: no grammar mode selected");
  if (!(beta > 0.0) || beta > 1.0) throw UsageError("pipeline: beta must be in (0,1]");
  if (min_count < 1 || top_k < 1) throw UsageError("pipeline: bad rule extraction thresholds");
  if (min_rel_freq < 0.0 || min_rel_freq > 1.0)
    throw UsageError("pipeline: min_rel_freq must be in [0,1]");
}

const PipelineResult::Row& PipelineResult::row(const std::string& grammar,
                                               const std::string& system) const {
  for (const Row& r : rows)
    if (r.grammar == grammar && r.system == system) return r;
  throw UsageError("pipeline result: no row for " + grammar + ":" + system);
}

PipelineResult run_pipeline(const PipelineConfig& config) {
  config.validate();
  ensure_directory(config.out_dir);

  const ModelSet l2 = load_model_set(config.l2_models);
  const ModelSet l1 = load_model_set(config.l1_models);
  const Lexicon lexicon = load_lexicon(config.lexicon);
  lexicon.check_against(l2);
  const CorpusManifest manifest = load_manifest(config.manifest);
  const DecodeOptions dopts{config.beam};

  std::vector<std::pair<std::string, std::string>> artifacts;  // path, stage
  auto emit = [&](const std::string& rel, const std::string& content, const std::string& stage) {
    write_text_file_atomic(config.out_dir + "/" + rel, content);
    artifacts.emplace_back(rel, stage);
  };

  // Grammars under test.
  std::vector<std::pair<std::string, Grammar>> grammars;
  if (config.strict) grammars.emplace_back("strict", load_grammar(config.grammar));
  if (config.loop)
    grammars.emplace_back("loop", build_word_loop(lexicon.word_order, config.loop_penalty));

  // Feature corpus in manifest order.
  const int U = static_cast<int>(manifest.utterances.size());
  if (U == 0) throw UsageError("pipeline: empty corpus manifest");
  std::vector<FeatureMatrix> features(U);
  for (int u = 0; u < U; ++u)
    features[u] = load_features(resolve_feature_path(config.manifest, manifest.utterances[u]));

  // Grapheme machinery: a g2p model (loaded or trained on the lexicon) and
  // the per-(word, variant) cluster alignment.
  G2PModel g2p;
  ClusterMap cluster_map;
  if (config.graphemes) {
    if (!config.g2p_model.empty()) {
      g2p = load_g2p(config.g2p_model);
    } else {
      auto [model, ll] = train_g2p(dictionary_from_lexicon(lexicon), config.g2p_iters, config.seed);
      g2p = std::move(model);
      std::string lltsv = "iter\tloglik\n";
      for (size_t i = 0; i < ll.size(); ++i)
        lltsv += std::to_string(i + 1) + "\t" + format_g17(ll[i]) + "\n";
      emit("g2p_loglik.tsv", lltsv, "g2p-train");
      save_g2p(g2p, config.out_dir + "/g2p.json");
      artifacts.emplace_back("g2p.json", "g2p-train");
    }
    for (const std::string& word : lexicon.word_order) {
      const auto& variants = lexicon.entries.at(word);
      for (size_t v = 0; v < variants.size(); ++v)
        cluster_map[{word, static_cast<int>(v)}] =
            align_g2p(g2p, word, variants[v]).clusters;
    }
  }

  // Pre-supplied rules bypass extraction entirely.
  std::vector<ConfusionRule> fixed_rules;
  const bool extract_per_fold = config.rules_file.empty();
  if (!extract_per_fold) fixed_rules = load_rules(config.rules_file);

  // Per-utterance error detection: forced alignment against the reference
  // words (L2), free phone recognition (L1), temporal association. These
  // are fold-independent; folds differ only in which utterances pool.
  std::vector<std::vector<AssociationPair>> utt_pairs(U);
  std::vector<std::vector<std::string>> utt_clusters(U);
  if (extract_per_fold) parallel_for(U, config.jobs, [&](int u) {
    const UtteranceRecord& rec = manifest.utterances[u];
    DecodeResult align;
    try {
      align = grammar_decode(features[u], linear_grammar(rec.words), lexicon, l2, 0.0, dopts);
    } catch (const Error& e) {
      throw StageError("align", rec.id, e);
    }
    DecodeResult recog;
    try {
      recog = phone_recognize(features[u], l1, config.phone_penalty, dopts);
    } catch (const Error& e) {
      throw StageError("phonerec", rec.id, e);
    }
    try {
      utt_pairs[u] = associate(align.phones, recog.phones, rec.id);
    } catch (const Error& e) {
      throw StageError("associate", rec.id, e);
    }
    if (config.graphemes) {
      // Pair i describes L2 segment i; its cluster comes from the aligned
      // lexicon occurrence.
      utt_clusters[u].reserve(utt_pairs[u].size());
      for (size_t s = 0; s < align.phones.segments.size(); ++s) {
        const SegmentMeta& meta = align.meta[s];
        std::string cluster;
        if (meta.word_index >= 0 && meta.phone_pos >= 0) {
          const std::string& word = align.words[meta.word_index];
          int variant = align.word_variants[meta.word_index];
          auto it = cluster_map.find({word, variant});
          if (it != cluster_map.end() && meta.phone_pos < static_cast<int>(it->second.size()))
            cluster = it->second[meta.phone_pos];
        }
        utt_clusters[u].push_back(cluster);
      }
    }
  });

  const std::vector<int> speakers = manifest.speakers();
  if (speakers.size() < 2)
    throw UsageError("pipeline: leave-one-out needs at least two speakers");

  ExtractParams extract;
  extract.min_count = config.min_count;
  extract.top_k = config.top_k;
  extract.min_rel_freq = config.min_rel_freq;

  struct SystemHyps {
    // grammar name -> system name -> (utterance id, words)
    std::map<std::string, std::map<std::string, std::vector<std::pair<std::string, std::vector<std::string>>>>> hyps;
  } pooled;
  std::vector<std::pair<std::string, std::vector<std::string>>> refs;
  std::map<std::string, std::map<std::string, std::map<int, double>>> fold_wer;

  std::string audit = "fold\ttraining_utterances\n";

  for (int speaker : speakers) {
    std::vector<ConfusionRule> rules_basic, rules_graph;
    if (extract_per_fold) {
      // Pool association pairs from every other speaker.
      std::vector<AssociationPair> pairs;
      std::vector<std::string> clusters;
      std::vector<std::string> contributors;
      for (int u = 0; u < U; ++u) {
        const UtteranceRecord& rec = manifest.utterances[u];
        if (rec.speaker == speaker) continue;
        pairs.insert(pairs.end(), utt_pairs[u].begin(), utt_pairs[u].end());
        if (config.graphemes)
          clusters.insert(clusters.end(), utt_clusters[u].begin(), utt_clusters[u].end());
        contributors.push_back(rec.id);
      }
      if (pairs.empty())
        throw UsageError("pipeline: no training data for held-out speaker " +
                         std::to_string(speaker));
      audit += std::to_string(speaker) + "\t" + join(contributors, " ") + "\n";
      rules_basic = extract_rules(pairs, extract);
      if (config.graphemes) rules_graph = graphemic_rules(pairs, clusters, extract);
    } else {
      audit += std::to_string(speaker) + "\t(rules pre-supplied)\n";
      for (const ConfusionRule& r : fixed_rules) {
        if (r.grapheme.empty()) rules_basic.push_back(r);
        rules_graph.push_back(r);
      }
    }
    emit(fold_dir(speaker) + "/rules.txt", rules_to_text(rules_basic), "rules");
    if (config.graphemes)
      emit(fold_dir(speaker) + "/rules.graphemes.txt", rules_to_text(rules_graph), "rules");

    // Model inventory for this fold: systems -> adapted set or baseline.
    struct System {
      std::string name;
      bool adapted = false;
      AdaptedModelSet set;
      const ModelSet* baseline = nullptr;
    };
    std::vector<System> systems;
    auto add_baseline = [&](const std::string& name, const ModelSet& set) {
      systems.push_back({name, false, {}, &set});
    };
    auto add_adapted = [&](const std::string& name, AdaptedModelSet set) {
      systems.push_back({name, true, std::move(set), nullptr});
    };

    add_baseline("baseline", l2);
    try {
      add_adapted("confusion", compile_adapted_set(l2, l1, rules_basic, config.beta));
      if (config.graphemes)
        add_adapted("confusion+graphemes",
                    compile_adapted_set(l2, l1, rules_graph, config.beta, &g2p, &lexicon));
    } catch (const Error& e) {
      throw StageError("adapt", "", e);
    }

    ModelSet l2_mllr, l1_mllr;
    if (config.mllr) {
      std::vector<LabeledUtterance> adapt_data;
      for (int u = 0; u < U; ++u) {
        const UtteranceRecord& rec = manifest.utterances[u];
        if (rec.speaker != speaker || rec.role != "adapt") continue;
        LabeledUtterance lu;
        lu.features = features[u];
        // Supervision uses the canonical expansion of the reference words.
        Transcription canon;
        int t = 0;
        for (size_t w = 0; w < rec.words.size(); ++w) {
          int v = w < rec.variants.size() ? rec.variants[w] : 0;
          for (const std::string& ph : lexicon.variants(rec.words[w])[v]) {
            canon.segments.push_back({ph, t, t + 1});
            ++t;
          }
        }
        lu.labels = std::move(canon);
        adapt_data.push_back(std::move(lu));
      }
      if (adapt_data.empty())
        throw UsageError("pipeline: speaker " + std::to_string(speaker) +
                         " has no adaptation utterances (role=adapt)");
      MllrTransform transform;
      try {
        transform = estimate_mllr(l2, adapt_data);
      } catch (const Error& e) {
        throw StageError("mllr", "", e);
      }
      save_mllr(transform, config.out_dir + "/" + fold_dir(speaker) + "/mllr.json");
      artifacts.emplace_back(fold_dir(speaker) + "/mllr.json", "mllr");
      l2_mllr = apply_mllr(l2, transform);
      l1_mllr = apply_mllr(l1, transform);
      add_baseline("baseline+mllr", l2_mllr);
      try {
        add_adapted("confusion+mllr",
                    compile_adapted_set(l2_mllr, l1_mllr, rules_basic, config.beta));
        if (config.graphemes)
          add_adapted("confusion+graphemes+mllr",
                      compile_adapted_set(l2_mllr, l1_mllr, rules_graph, config.beta, &g2p,
                                          &lexicon));
      } catch (const Error& e) {
        throw StageError("adapt", "", e);
      }
    }

    // Decode this fold's test utterances under every grammar and system.
    std::vector<int> test_utts;
    for (int u = 0; u < U; ++u)
      if (manifest.utterances[u].speaker == speaker && manifest.utterances[u].role == "test")
        test_utts.push_back(u);
    if (test_utts.empty())
      throw UsageError("pipeline: speaker " + std::to_string(speaker) +
                       " has no test utterances");

    std::vector<std::pair<std::string, std::vector<std::string>>> fold_refs;
    for (int u : test_utts)
      fold_refs.emplace_back(manifest.utterances[u].id, manifest.utterances[u].words);
    refs.insert(refs.end(), fold_refs.begin(), fold_refs.end());

    for (const auto& [gname, grammar] : grammars) {
      for (const System& sys : systems) {
        std::vector<std::pair<std::string, std::vector<std::string>>> hyps(test_utts.size());
        parallel_for(static_cast<int>(test_utts.size()), config.jobs, [&](int i) {
          int u = test_utts[i];
          const UtteranceRecord& rec = manifest.utterances[u];
          try {
            DecodeResult r =
                sys.adapted
                    ? grammar_decode_adapted(features[u], grammar, lexicon, sys.set,
                                             config.word_penalty, dopts)
                    : grammar_decode(features[u], grammar, lexicon, *sys.baseline,
                                     config.word_penalty, dopts);
            hyps[i] = {rec.id, r.words};
          } catch (const Error& e) {
            throw StageError("decode[" + gname + ":" + sys.name + "]", rec.id, e);
          }
        });
        auto& pool = pooled.hyps[gname][sys.name];
        pool.insert(pool.end(), hyps.begin(), hyps.end());
        ScoreReport fold_report = corpus_score(fold_refs, hyps);
        fold_wer[gname][sys.name][speaker] = fold_report.wer();
      }
    }
  }

  emit("audit.tsv", audit, "rules");

  // Pooled scores, Table-1-shaped: grammar blocks x system rows.
  PipelineResult result;
  result.run_dir = config.out_dir;
  result.fold_wer = std::move(fold_wer);
  std::vector<ScoreReport> reports;
  reports.reserve(32);
  for (const auto& [gname, grammar] : grammars) {
    for (const auto& [sname, hyps] : pooled.hyps[gname]) {
      ScoreReport report = corpus_score(refs, hyps);
      PipelineResult::Row row{gname, sname, report.wer(), report.ser()};
      result.rows.push_back(row);
      reports.push_back(std::move(report));
      emit("details/" + gname + "_" + sname + ".tsv", report_detail_tsv(reports.back()),
           "score");
      std::string hyp_text;
      for (const auto& [id, words] : hyps) hyp_text += id + "\t" + join(words, " ") + "\n";
      emit("hyp/" + gname + "_" + sname + ".tsv", hyp_text, "decode");
    }
  }
  std::vector<std::pair<std::string, const ScoreReport*>> rows;
  size_t idx = 0;
  for (const auto& [gname, grammar] : grammars)
    for (const auto& [sname, hyps] : pooled.hyps[gname])
      rows.emplace_back(gname + ":" + sname, &reports[idx++]);
  emit("report.tsv", report_tsv(rows), "score");
  result.report_path = config.out_dir + "/report.tsv";

  // Run manifest: every artifact with its producing stage plus the
  // parameters in force. Paths are relative to the run directory.
  nlohmann::json jm;
  jm["parameters"] = {{"beta", config.beta},
                      {"min_count", config.min_count},
                      {"top_k", config.top_k},
                      {"min_rel_freq", config.min_rel_freq},
                      {"phone_penalty", config.phone_penalty},
                      {"word_penalty", config.word_penalty},
                      {"loop_penalty", config.loop_penalty},
                      {"beam", config.beam},
                      {"seed", config.seed},
                      {"g2p_iters", config.g2p_iters},
                      {"strict", config.strict},
                      {"loop", config.loop},
                      {"graphemes", config.graphemes},
                      {"mllr", config.mllr}};
  jm["artifacts"] = nlohmann::json::array();
  for (const auto& [path, stage] : artifacts)
    jm["artifacts"].push_back({{"path", path}, {"stage", stage}});
  write_text_file_atomic(config.out_dir + "/MANIFEST.json", jm.dump(1) + "\n");
  return result;
}

}  // namespace nnasr
