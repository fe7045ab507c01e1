// capi.cpp
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

#include "nnasr.h"

#include <cstring>
#include <memory>
#include <string>

#include "ioutil.hpp"
#include "nnasr/adapt.hpp"
#include "nnasr/confusion.hpp"
#include "nnasr/decode.hpp"
#include "nnasr/error.hpp"
#include "nnasr/g2p.hpp"
#include "nnasr/grammar.hpp"
#include "nnasr/lexicon.hpp"
#include "nnasr/mllr.hpp"
#include "nnasr/model.hpp"
#include "nnasr/pipeline.hpp"
#include "nnasr/score.hpp"
#include "nnasr/synth.hpp"
#include "nnasr/train.hpp"

using namespace nnasr;

namespace {

thread_local std::string g_last_error;

nnasr_status set_error(ErrorKind kind, const std::string& msg) {
  g_last_error = msg;
  return static_cast<nnasr_status>(static_cast<int>(kind));
}

template <typename Fn>
nnasr_status guarded(Fn&& fn) {
  try {
    fn();
    return NNASR_OK;
  } catch (const Error& e) {
    return set_error(e.kind(), e.what());
  } catch (const std::exception& e) {
    return set_error(ErrorKind::kFormat, e.what());
  }
}

nnasr_status require(bool ok, const char* msg) {
  return ok ? NNASR_OK : set_error(ErrorKind::kUsage, msg);
}

}  // namespace

struct nnasr_models {
  bool adapted = false;
  ModelSet plain;
  AdaptedModelSet merged;

  int dim() const { return adapted ? merged.dim : plain.dim; }
};
struct nnasr_features {
  FeatureMatrix m;
};
struct nnasr_lexicon {
  Lexicon lex;
};
struct nnasr_grammar {
  Grammar g;
};
struct nnasr_result {
  DecodeResult r;
};

extern "C" {

const char* nnasr_version(void) { return "0.1.0"; }

const char* nnasr_last_error(void) { return g_last_error.c_str(); }

nnasr_status nnasr_models_load(const char* path, nnasr_models** out) {
  if (nnasr_status s = require(path && out, "nnasr_models_load: null argument")) return s;
  return guarded([&] {
    auto m = std::make_unique<nnasr_models>();
    if (is_adapted_set_file(path)) {
      m->adapted = true;
      m->merged = load_adapted_set(path);
    } else {
      m->plain = load_model_set(path);
    }
    *out = m.release();
  });
}

void nnasr_models_free(nnasr_models* models) { delete models; }

int nnasr_models_dim(const nnasr_models* models) { return models ? models->dim() : 0; }

int nnasr_models_is_adapted(const nnasr_models* models) {
  return models && models->adapted ? 1 : 0;
}

nnasr_status nnasr_features_load(const char* path, nnasr_features** out) {
  if (nnasr_status s = require(path && out, "nnasr_features_load: null argument")) return s;
  return guarded([&] { *out = new nnasr_features{load_features(path)}; });
}

nnasr_status nnasr_features_save(const nnasr_features* feats, const char* path) {
  if (nnasr_status s = require(feats && path, "nnasr_features_save: null argument")) return s;
  return guarded([&] { save_features(feats->m, path); });
}

void nnasr_features_free(nnasr_features* feats) { delete feats; }

int nnasr_features_dim(const nnasr_features* feats) { return feats ? feats->m.dim : 0; }

int nnasr_features_frames(const nnasr_features* feats) { return feats ? feats->m.frames : 0; }

nnasr_status nnasr_lexicon_load(const char* path, nnasr_lexicon** out) {
  if (nnasr_status s = require(path && out, "nnasr_lexicon_load: null argument")) return s;
  return guarded([&] { *out = new nnasr_lexicon{load_lexicon(path)}; });
}

void nnasr_lexicon_free(nnasr_lexicon* lexicon) { delete lexicon; }

size_t nnasr_lexicon_num_words(const nnasr_lexicon* lexicon) {
  return lexicon ? lexicon->lex.word_order.size() : 0;
}

const char* nnasr_lexicon_word(const nnasr_lexicon* lexicon, size_t index) {
  if (!lexicon || index >= lexicon->lex.word_order.size()) return nullptr;
  return lexicon->lex.word_order[index].c_str();
}

nnasr_status nnasr_grammar_load(const char* path, nnasr_grammar** out) {
  if (nnasr_status s = require(path && out, "nnasr_grammar_load: null argument")) return s;
  return guarded([&] { *out = new nnasr_grammar{load_grammar(path)}; });
}

nnasr_status nnasr_grammar_word_loop(const char* const* words, size_t n_words,
                                     double loop_penalty, nnasr_grammar** out) {
  if (nnasr_status s = require(words && out, "nnasr_grammar_word_loop: null argument")) return s;
  return guarded([&] {
    std::vector<std::string> list(words, words + n_words);
    *out = new nnasr_grammar{build_word_loop(list, loop_penalty)};
  });
}

void nnasr_grammar_free(nnasr_grammar* grammar) { delete grammar; }

nnasr_status nnasr_align(const nnasr_models* models, const nnasr_features* feats,
                         const char* const* phones, size_t n_phones, double beam,
                         nnasr_result** out) {
  if (nnasr_status s = require(models && feats && phones && out, "nnasr_align: null argument"))
    return s;
  return guarded([&] {
    if (models->adapted) throw UsageError("forced alignment needs a plain model set");
    std::vector<std::string> seq(phones, phones + n_phones);
    *out = new nnasr_result{viterbi_align(feats->m, seq, models->plain, DecodeOptions{beam})};
  });
}

nnasr_status nnasr_phone_recognize(const nnasr_models* models, const nnasr_features* feats,
                                   double phone_penalty, double beam, nnasr_result** out) {
  if (nnasr_status s = require(models && feats && out, "nnasr_phone_recognize: null argument"))
    return s;
  return guarded([&] {
    if (models->adapted) throw UsageError("phone recognition needs a plain model set");
    *out = new nnasr_result{
        phone_recognize(feats->m, models->plain, phone_penalty, DecodeOptions{beam})};
  });
}

nnasr_status nnasr_decode(const nnasr_models* models, const nnasr_features* feats,
                          const nnasr_grammar* grammar, const nnasr_lexicon* lexicon,
                          double word_penalty, double beam, nnasr_result** out) {
  if (nnasr_status s =
          require(models && feats && grammar && lexicon && out, "nnasr_decode: null argument"))
    return s;
  return guarded([&] {
    DecodeOptions opts{beam};
    *out = new nnasr_result{
        models->adapted
            ? grammar_decode_adapted(feats->m, grammar->g, lexicon->lex, models->merged,
                                     word_penalty, opts)
            : grammar_decode(feats->m, grammar->g, lexicon->lex, models->plain, word_penalty,
                             opts)};
  });
}

void nnasr_result_free(nnasr_result* result) { delete result; }

double nnasr_result_score(const nnasr_result* result) {
  return result ? result->r.log_score : 0.0;
}

size_t nnasr_result_num_words(const nnasr_result* result) {
  return result ? result->r.words.size() : 0;
}

const char* nnasr_result_word(const nnasr_result* result, size_t index) {
  if (!result || index >= result->r.words.size()) return nullptr;
  return result->r.words[index].c_str();
}

size_t nnasr_result_num_segments(const nnasr_result* result) {
  return result ? result->r.phones.segments.size() : 0;
}

nnasr_status nnasr_result_segment(const nnasr_result* result, size_t index, int* start,
                                  int* end, const char** phone) {
  if (nnasr_status s = require(result && index < result->r.phones.segments.size(),
                               "nnasr_result_segment: bad index"))
    return s;
  const Segment& seg = result->r.phones.segments[index];
  if (start) *start = seg.start;
  if (end) *end = seg.end;
  if (phone) *phone = seg.phone.c_str();
  return NNASR_OK;
}

nnasr_status nnasr_result_save_labels(const nnasr_result* result, const char* path) {
  if (nnasr_status s = require(result && path, "nnasr_result_save_labels: null argument"))
    return s;
  return guarded([&] { save_labels(result->r.phones, path, &result->r.log_score); });
}

nnasr_status nnasr_synth_run(const char* l2_models, const char* l1_models, const char* lexicon,
                             const char* grammar, const char* planted_rules,
                             const char* g2p_model, int n_utts, unsigned long long seed,
                             int n_speakers, double speaker_shift, double adapt_fraction,
                             const char* out_dir) {
  if (nnasr_status s = require(l2_models && l1_models && lexicon && grammar && out_dir,
                               "nnasr_synth_run: null argument"))
    return s;
  return guarded([&] {
    ModelSet l2 = load_model_set(l2_models);
    ModelSet l1 = load_model_set(l1_models);
    Lexicon lex = load_lexicon(lexicon);
    Grammar g = load_grammar(grammar);
    std::vector<PlantedRuleSpec> rules;
    if (planted_rules) rules = load_planted_rules(planted_rules);
    SynthOptions options;
    options.n_utts = n_utts;
    options.seed = seed;
    options.n_speakers = n_speakers;
    options.speaker_shift = speaker_shift;
    options.adapt_fraction = adapt_fraction;
    ClusterMap clusters;
    bool need_clusters = false;
    for (const PlantedRuleSpec& r : rules)
      if (!r.cluster.empty()) need_clusters = true;
    if (need_clusters) {
      if (!g2p_model)
        throw UsageError("cluster-conditioned planted rules require a g2p model");
      G2PModel g2p = load_g2p(g2p_model);
      for (const std::string& word : lex.word_order) {
        const auto& variants = lex.entries.at(word);
        for (size_t v = 0; v < variants.size(); ++v)
          clusters[{word, static_cast<int>(v)}] = align_g2p(g2p, word, variants[v]).clusters;
      }
    }
    synth_corpus(l2, l1, lex, g, rules, options, need_clusters ? &clusters : nullptr, out_dir);
  });
}

nnasr_status nnasr_train_am(const char* inventory, const char* corpus_manifest, int n_states,
                            int n_components, int n_iters, const char* out_models,
                            const char* loglik_tsv) {
  if (nnasr_status s = require(inventory && corpus_manifest && out_models,
                               "nnasr_train_am: null argument"))
    return s;
  return guarded([&] {
    std::vector<PhoneSymbol> phones;
    for (const std::string& line : split_lines(read_text_file(inventory))) {
      if (line.empty() || line[0] == '#') continue;
      std::vector<std::string> toks = split_ws(line);
      PhoneSymbol p;
      p.id = toks[0];
      p.lang = toks.size() > 1 ? parse_lang(toks[1]) : Lang::kL2;
      phones.push_back(std::move(p));
    }
    CorpusManifest manifest = load_manifest(corpus_manifest);
    std::vector<LabeledUtterance> corpus;
    for (const UtteranceRecord& rec : manifest.utterances) {
      LabeledUtterance lu;
      lu.features = load_features(resolve_feature_path(corpus_manifest, rec));
      lu.labels = rec.segments;
      corpus.push_back(std::move(lu));
    }
    InitOptions init;
    init.n_states = n_states;
    init.n_components = n_components;
    ModelSet set = init_flat(phones, corpus, init);
    TrainOptions topts;
    topts.n_iters = n_iters;
    std::vector<double> ll = baum_welch(set, corpus, topts);
    save_model_set(set, out_models);
    if (loglik_tsv) {
      std::string out = "iter\tloglik\n";
      for (size_t i = 0; i < ll.size(); ++i)
        out += std::to_string(i + 1) + "\t" + format_g17(ll[i]) + "\n";
      write_text_file_atomic(loglik_tsv, out);
    }
  });
}

nnasr_status nnasr_extract_rules(const char* l2_models, const char* l1_models,
                                 const char* lexicon, const char* corpus_manifest,
                                 long min_count, int top_k, double min_rel_freq,
                                 double phone_penalty, int graphemes, const char* g2p_model,
                                 int exclude_speaker, int keep_deletions,
                                 const char* out_rules) {
  if (nnasr_status s = require(l2_models && l1_models && lexicon && corpus_manifest && out_rules,
                               "nnasr_extract_rules: null argument"))
    return s;
  return guarded([&] {
    ModelSet l2 = load_model_set(l2_models);
    ModelSet l1 = load_model_set(l1_models);
    Lexicon lex = load_lexicon(lexicon);
    CorpusManifest manifest = load_manifest(corpus_manifest);

    G2PModel g2p;
    ClusterMap cluster_map;
    if (graphemes) {
      if (g2p_model) {
        g2p = load_g2p(g2p_model);
      } else {
        g2p = train_g2p(dictionary_from_lexicon(lex), 10).first;
      }
      for (const std::string& word : lex.word_order) {
        const auto& variants = lex.entries.at(word);
        for (size_t v = 0; v < variants.size(); ++v)
          cluster_map[{word, static_cast<int>(v)}] = align_g2p(g2p, word, variants[v]).clusters;
      }
    }

    std::vector<AssociationPair> pairs;
    std::vector<std::string> clusters;
    for (const UtteranceRecord& rec : manifest.utterances) {
      if (exclude_speaker >= 0 && rec.speaker == exclude_speaker) continue;
      FeatureMatrix feats = load_features(resolve_feature_path(corpus_manifest, rec));
      DecodeResult align = grammar_decode(feats, linear_grammar(rec.words), lex, l2, 0.0);
      DecodeResult recog = phone_recognize(feats, l1, phone_penalty);
      std::vector<AssociationPair> utt = associate(align.phones, recog.phones, rec.id);
      if (graphemes) {
        for (size_t i = 0; i < utt.size(); ++i) {
          const SegmentMeta& meta = align.meta[i];
          std::string cluster;
          if (meta.word_index >= 0) {
            auto it = cluster_map.find({align.words[meta.word_index],
                                        align.word_variants[meta.word_index]});
            if (it != cluster_map.end() && meta.phone_pos < static_cast<int>(it->second.size()))
              cluster = it->second[meta.phone_pos];
          }
          clusters.push_back(cluster);
        }
      }
      pairs.insert(pairs.end(), utt.begin(), utt.end());
    }
    ExtractParams params;
    params.min_count = min_count;
    params.top_k = top_k;
    params.min_rel_freq = min_rel_freq;
    params.keep_deletions = keep_deletions != 0;
    std::vector<ConfusionRule> rules = graphemes ? graphemic_rules(pairs, clusters, params)
                                                 : extract_rules(pairs, params);
    save_rules(rules, out_rules);
  });
}

nnasr_status nnasr_g2p_train(const char* lexicon, int n_iters, unsigned long long seed,
                             const char* out_model, const char* loglik_tsv) {
  if (nnasr_status s = require(lexicon && out_model, "nnasr_g2p_train: null argument")) return s;
  return guarded([&] {
    Lexicon lex = load_lexicon(lexicon);
    auto [model, ll] = train_g2p(dictionary_from_lexicon(lex), n_iters, seed);
    save_g2p(model, out_model);
    if (loglik_tsv) {
      std::string out = "iter\tloglik\n";
      for (size_t i = 0; i < ll.size(); ++i)
        out += std::to_string(i + 1) + "\t" + format_g17(ll[i]) + "\n";
      write_text_file_atomic(loglik_tsv, out);
    }
  });
}

nnasr_status nnasr_g2p_align_file(const char* g2p_model, const char* lexicon,
                                  const char* out_path) {
  if (nnasr_status s = require(g2p_model && lexicon && out_path,
                               "nnasr_g2p_align_file: null argument"))
    return s;
  return guarded([&] {
    G2PModel g2p = load_g2p(g2p_model);
    Lexicon lex = load_lexicon(lexicon);
    std::string out;
    for (const std::string& word : lex.word_order) {
      for (const auto& pron : lex.entries.at(word)) {
        GraphemeAlignment ga = align_g2p(g2p, word, pron);
        out += word + "\t";
        for (size_t i = 0; i < pron.size(); ++i) {
          if (i) out += " ";
          out += pron[i] + ":" + ga.clusters[i];
        }
        out += "\n";
      }
    }
    write_text_file_atomic(out_path, out);
  });
}

nnasr_status nnasr_adapt_compile(const char* l2_models, const char* l1_models,
                                 const char* rules, double beta, const char* g2p_model,
                                 const char* lexicon, const char* out_path) {
  if (nnasr_status s = require(l2_models && l1_models && rules && out_path,
                               "nnasr_adapt_compile: null argument"))
    return s;
  return guarded([&] {
    ModelSet l2 = load_model_set(l2_models);
    ModelSet l1 = load_model_set(l1_models);
    std::vector<ConfusionRule> rule_list = load_rules(rules);
    G2PModel g2p;
    Lexicon lex;
    bool have_g2p = false;
    if (g2p_model && lexicon) {
      g2p = load_g2p(g2p_model);
      lex = load_lexicon(lexicon);
      have_g2p = true;
    }
    AdaptedModelSet set = compile_adapted_set(l2, l1, rule_list, beta,
                                              have_g2p ? &g2p : nullptr,
                                              have_g2p ? &lex : nullptr);
    save_adapted_set(set, out_path);
  });
}

nnasr_status nnasr_mllr_estimate(const char* models, const char* corpus_manifest, int speaker,
                                 const char* role, const char* out_transform) {
  if (nnasr_status s = require(models && corpus_manifest && out_transform,
                               "nnasr_mllr_estimate: null argument"))
    return s;
  return guarded([&] {
    ModelSet set = load_model_set(models);
    CorpusManifest manifest = load_manifest(corpus_manifest);
    std::vector<LabeledUtterance> corpus;
    for (const UtteranceRecord& rec : manifest.utterances) {
      if (speaker >= 0 && rec.speaker != speaker) continue;
      if (role && rec.role != role) continue;
      LabeledUtterance lu;
      lu.features = load_features(resolve_feature_path(corpus_manifest, rec));
      lu.labels = rec.segments;
      corpus.push_back(std::move(lu));
    }
    MllrTransform t = estimate_mllr(set, corpus);
    save_mllr(t, out_transform);
  });
}

nnasr_status nnasr_mllr_apply(const char* models, const char* transform,
                              const char* out_models) {
  if (nnasr_status s = require(models && transform && out_models,
                               "nnasr_mllr_apply: null argument"))
    return s;
  return guarded([&] {
    ModelSet set = load_model_set(models);
    MllrTransform t = load_mllr(transform);
    save_model_set(apply_mllr(set, t), out_models);
  });
}

nnasr_status nnasr_score_run(const char* corpus_manifest, const char* hyp_tsv,
                             const char* system_name, const char* out_report,
                             const char* out_detail) {
  if (nnasr_status s = require(corpus_manifest && hyp_tsv && system_name && out_report,
                               "nnasr_score_run: null argument"))
    return s;
  return guarded([&] {
    CorpusManifest manifest = load_manifest(corpus_manifest);
    std::vector<std::pair<std::string, std::vector<std::string>>> refs, hyps;
    for (const UtteranceRecord& rec : manifest.utterances)
      refs.emplace_back(rec.id, rec.words);
    for (const std::string& line : split_lines(read_text_file(hyp_tsv))) {
      if (line.empty() || line[0] == '#') continue;
      size_t tab = line.find('\t');
      if (tab == std::string::npos)
        throw FormatError(std::string(hyp_tsv) + ": expected 'utt_id<TAB>words'");
      hyps.emplace_back(line.substr(0, tab), split_ws(line.substr(tab + 1)));
    }
    ScoreReport report = corpus_score(refs, hyps);
    write_text_file_atomic(out_report, report_tsv({{system_name, &report}}));
    if (out_detail) write_text_file_atomic(out_detail, report_detail_tsv(report));
  });
}

void nnasr_pipeline_params_init(nnasr_pipeline_params* params) {
  if (!params) return;
  std::memset(params, 0, sizeof(*params));
  params->beta = 0.5;
  params->min_count = 10;
  params->top_k = 3;
  params->min_rel_freq = 0.1;
  params->seed = 1;
  params->g2p_iters = 10;
  params->strict = 1;
  params->loop = 1;
  params->graphemes = 1;
  params->mllr = 1;
  params->jobs = 1;
}

nnasr_status nnasr_pipeline_run(const nnasr_pipeline_params* params) {
  if (nnasr_status s = require(params != nullptr, "nnasr_pipeline_run: null params")) return s;
  return guarded([&] {
    PipelineConfig config;
    auto str = [](const char* s) { return s ? std::string(s) : std::string(); };
    config.l2_models = str(params->l2_models);
    config.l1_models = str(params->l1_models);
    config.lexicon = str(params->lexicon);
    config.grammar = str(params->grammar);
    config.manifest = str(params->manifest);
    config.g2p_model = str(params->g2p_model);
    config.rules_file = str(params->rules);
    config.out_dir = str(params->out_dir);
    config.beta = params->beta;
    config.min_count = params->min_count;
    config.top_k = params->top_k;
    config.min_rel_freq = params->min_rel_freq;
    config.phone_penalty = params->phone_penalty;
    config.word_penalty = params->word_penalty;
    config.loop_penalty = params->loop_penalty;
    config.beam = params->beam;
    config.seed = params->seed;
    config.g2p_iters = params->g2p_iters;
    config.strict = params->strict != 0;
    config.loop = params->loop != 0;
    config.graphemes = params->graphemes != 0;
    config.mllr = params->mllr != 0;
    config.jobs = params->jobs;
    run_pipeline(config);
  });
}

}  // extern "C"
