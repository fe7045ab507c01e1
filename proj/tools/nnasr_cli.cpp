// nnasr_cli.cpp
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
// Command-line front end over the nnasr C API. Exit codes: 0 success,
// 1 usage, 2 data/format, 3 numeric/estimation failure.

#include <cstdio>
#include <fstream>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "nnasr.h"

namespace {

int finish(nnasr_status status) {
  if (status != NNASR_OK) std::fprintf(stderr, "nnasr: %s\n", nnasr_last_error());
  return static_cast<int>(status);
}


struct ModelsDeleter {
  void operator()(nnasr_models* p) const { nnasr_models_free(p); }
};
struct FeaturesDeleter {
  void operator()(nnasr_features* p) const { nnasr_features_free(p); }
};
struct LexiconDeleter {
  void operator()(nnasr_lexicon* p) const { nnasr_lexicon_free(p); }
};
struct GrammarDeleter {
  void operator()(nnasr_grammar* p) const { nnasr_grammar_free(p); }
};
struct ResultDeleter {
  void operator()(nnasr_result* p) const { nnasr_result_free(p); }
};

using ModelsPtr = std::unique_ptr<nnasr_models, ModelsDeleter>;
using FeaturesPtr = std::unique_ptr<nnasr_features, FeaturesDeleter>;
using LexiconPtr = std::unique_ptr<nnasr_lexicon, LexiconDeleter>;
using GrammarPtr = std::unique_ptr<nnasr_grammar, GrammarDeleter>;
using ResultPtr = std::unique_ptr<nnasr_result, ResultDeleter>;

int print_result(const nnasr_result* result, const std::string& out_labels) {
  size_t n_words = nnasr_result_num_words(result);
  for (size_t i = 0; i < n_words; ++i)
    std::printf("%s%s", i ? " " : "", nnasr_result_word(result, i));
  if (n_words) std::printf("\n");
  if (!out_labels.empty()) {
    if (nnasr_status s = nnasr_result_save_labels(result, out_labels.c_str())) return finish(s);
  } else if (n_words == 0) {
    // No label sink and no word level: print the phone sequence.
    size_t n = nnasr_result_num_segments(result);
    for (size_t i = 0; i < n; ++i) {
      const char* phone = nullptr;
      nnasr_result_segment(result, i, nullptr, nullptr, &phone);
      std::printf("%s%s", i ? " " : "", phone);
    }
    if (n) std::printf("\n");
  }
  std::fprintf(stderr, "score %.17g\n", nnasr_result_score(result));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"nnasr: GMM-HMM decoding and non-native adaptation toolkit"};
  app.require_subcommand(1);

  // --- synth ---------------------------------------------------------------
  auto* synth = app.add_subcommand("synth", "Generate a synthetic labeled corpus");
  std::string sy_l2, sy_l1, sy_lex, sy_gram, sy_rules, sy_g2p, sy_out;
  int sy_utts = 100, sy_speakers = 1;
  unsigned long long sy_seed = 1;
  double sy_shift = 0.0, sy_adapt = 0.2;
  synth->add_option("--l2-models", sy_l2)->required();
  synth->add_option("--l1-models", sy_l1)->required();
  synth->add_option("--lexicon", sy_lex)->required();
  synth->add_option("--grammar", sy_gram)->required();
  synth->add_option("--rules", sy_rules, "Planted replacement rules");
  synth->add_option("--g2p-model", sy_g2p, "For cluster-conditioned rules");
  synth->add_option("--n-utts", sy_utts);
  synth->add_option("--seed", sy_seed);
  synth->add_option("--speakers", sy_speakers);
  synth->add_option("--speaker-shift", sy_shift);
  synth->add_option("--adapt-fraction", sy_adapt);
  synth->add_option("--out", sy_out, "Output corpus directory")->required();

  // --- train-am --------------------------------------------------------------
  auto* train = app.add_subcommand("train-am", "Train acoustic models from a corpus");
  std::string tr_inv, tr_corpus, tr_out, tr_log;
  int tr_states = 3, tr_comps = 1, tr_iters = 4;
  train->add_option("--inventory", tr_inv)->required();
  train->add_option("--corpus", tr_corpus, "Corpus manifest")->required();
  train->add_option("--states", tr_states);
  train->add_option("--components", tr_comps);
  train->add_option("--iters", tr_iters);
  train->add_option("--out", tr_out)->required();
  train->add_option("--loglik", tr_log, "Per-iteration log-likelihood TSV");

  // --- align -----------------------------------------------------------------
  auto* align = app.add_subcommand("align", "Forced alignment of a phone sequence");
  std::string al_models, al_feats, al_out;
  std::vector<std::string> al_phones;
  double al_beam = 0.0;
  align->add_option("--models", al_models)->required();
  align->add_option("--features", al_feats)->required();
  align->add_option("--phones", al_phones, "Phone sequence")->required()->expected(-1);
  align->add_option("--beam", al_beam);
  align->add_option("--out", al_out, "Label file");

  // --- phonerec ---------------------------------------------------------------
  auto* phonerec = app.add_subcommand("phonerec", "Unconstrained phone recognition");
  std::string pr_models, pr_feats, pr_out;
  double pr_penalty = 0.0, pr_beam = 0.0;
  phonerec->add_option("--models", pr_models)->required();
  phonerec->add_option("--features", pr_feats)->required();
  phonerec->add_option("--phone-penalty", pr_penalty);
  phonerec->add_option("--beam", pr_beam);
  phonerec->add_option("--out", pr_out, "Label file");

  // --- decode -----------------------------------------------------------------
  auto* decode = app.add_subcommand("decode", "Grammar-constrained word decoding");
  std::string de_models, de_feats, de_gram, de_lex, de_out;
  bool de_loop = false;
  double de_wp = 0.0, de_lp = 0.0, de_beam = 0.0;
  decode->add_option("--models", de_models, "Plain or adapted model set")->required();
  decode->add_option("--features", de_feats)->required();
  decode->add_option("--grammar", de_gram, "Grammar file (omit with --loop)");
  decode->add_flag("--loop", de_loop, "Word loop over the whole lexicon");
  decode->add_option("--lexicon", de_lex)->required();
  decode->add_option("--word-penalty", de_wp);
  decode->add_option("--loop-penalty", de_lp);
  decode->add_option("--beam", de_beam);
  decode->add_option("--out", de_out, "Label file");

  // --- rules -------------------------------------------------------------------
  auto* rules = app.add_subcommand("rules", "Extract confusion rules from a corpus");
  std::string ru_l2, ru_l1, ru_lex, ru_corpus, ru_g2p, ru_out;
  long ru_min_count = 10;
  int ru_top_k = 3, ru_exclude = -1;
  double ru_rel = 0.1, ru_pp = 0.0;
  bool ru_graphemes = false, ru_keep_del = false;
  rules->add_option("--l2-models", ru_l2)->required();
  rules->add_option("--l1-models", ru_l1)->required();
  rules->add_option("--lexicon", ru_lex)->required();
  rules->add_option("--corpus", ru_corpus, "Corpus manifest")->required();
  rules->add_option("--min-count", ru_min_count);
  rules->add_option("--top-k", ru_top_k);
  rules->add_option("--min-rel-freq", ru_rel);
  rules->add_option("--phone-penalty", ru_pp);
  rules->add_flag("--graphemes", ru_graphemes, "Key rules by spelling cluster");
  rules->add_flag("--keep-deletions", ru_keep_del,
                  "Count empty associations in the frequency denominator");
  rules->add_option("--g2p-model", ru_g2p);
  rules->add_option("--exclude-speaker", ru_exclude, "Leave this speaker out");
  rules->add_option("--out", ru_out)->required();

  // --- g2p-train ------------------------------------------------------------------
  auto* g2p_train = app.add_subcommand("g2p-train", "Train the grapheme-phoneme aligner");
  std::string gt_lex, gt_out, gt_log;
  int gt_iters = 10;
  unsigned long long gt_seed = 0;
  g2p_train->add_option("--lexicon", gt_lex)->required();
  g2p_train->add_option("--iters", gt_iters);
  g2p_train->add_option("--seed", gt_seed);
  g2p_train->add_option("--out", gt_out)->required();
  g2p_train->add_option("--loglik", gt_log);

  // --- g2p-align ---------------------------------------------------------------------
  auto* g2p_align = app.add_subcommand("g2p-align", "Align lexicon spellings to phones");
  std::string ga_model, ga_lex, ga_out;
  g2p_align->add_option("--model", ga_model)->required();
  g2p_align->add_option("--lexicon", ga_lex)->required();
  g2p_align->add_option("--out", ga_out)->required();

  // --- adapt ----------------------------------------------------------------------
  auto* adapt = app.add_subcommand("adapt", "Compile merged models from confusion rules");
  std::string ad_l2, ad_l1, ad_rules, ad_g2p, ad_lex, ad_out;
  double ad_beta = 0.5;
  adapt->add_option("--l2-models", ad_l2)->required();
  adapt->add_option("--l1-models", ad_l1)->required();
  adapt->add_option("--rules", ad_rules)->required();
  adapt->add_option("--beta", ad_beta, "Native-path weight in (0,1]");
  adapt->add_option("--g2p-model", ad_g2p, "Needed for grapheme-keyed rules");
  adapt->add_option("--lexicon", ad_lex, "Needed for grapheme-keyed rules");
  adapt->add_option("--out", ad_out)->required();

  // --- mllr -------------------------------------------------------------------------
  auto* mllr = app.add_subcommand("mllr", "MLLR mean adaptation");
  mllr->require_subcommand(1);
  auto* mllr_est = mllr->add_subcommand("estimate", "Estimate a transform");
  std::string me_models, me_corpus, me_role, me_out;
  int me_speaker = -1;
  mllr_est->add_option("--models", me_models)->required();
  mllr_est->add_option("--corpus", me_corpus, "Corpus manifest")->required();
  mllr_est->add_option("--speaker", me_speaker, "Restrict to one speaker");
  mllr_est->add_option("--role", me_role, "Restrict to one role (adapt|test)");
  mllr_est->add_option("--out", me_out)->required();
  auto* mllr_apply = mllr->add_subcommand("apply", "Apply a transform to a model set");
  std::string ma_models, ma_transform, ma_out;
  mllr_apply->add_option("--models", ma_models)->required();
  mllr_apply->add_option("--transform", ma_transform)->required();
  mllr_apply->add_option("--out", ma_out)->required();

  // --- score -----------------------------------------------------------------------
  auto* score = app.add_subcommand("score", "WER/SER against a corpus manifest");
  std::string sc_corpus, sc_hyp, sc_name = "system", sc_out, sc_detail;
  score->add_option("--corpus", sc_corpus, "Corpus manifest")->required();
  score->add_option("--hyp", sc_hyp, "Hypotheses TSV (utt_id<TAB>words)")->required();
  score->add_option("--system", sc_name);
  score->add_option("--out", sc_out, "Report TSV")->required();
  score->add_option("--detail", sc_detail, "Per-utterance detail TSV");

  // --- pipeline -----------------------------------------------------------------------
  auto* pipeline = app.add_subcommand("pipeline", "Leave-one-out adaptation experiment");
  nnasr_pipeline_params pp;
  nnasr_pipeline_params_init(&pp);
  std::string pl_config, pl_l2, pl_l1, pl_lex, pl_gram, pl_manifest, pl_g2p, pl_rules, pl_out;
  unsigned long long pl_seed = pp.seed;
  bool pl_no_strict = false, pl_no_loop = false, pl_no_graphemes = false, pl_no_mllr = false;
  pipeline->add_option("--config", pl_config, "key=value config file; flags override");
  pipeline->add_option("--l2-models", pl_l2);
  pipeline->add_option("--l1-models", pl_l1);
  pipeline->add_option("--lexicon", pl_lex);
  pipeline->add_option("--grammar", pl_gram, "Strict grammar file");
  pipeline->add_option("--corpus", pl_manifest, "Corpus manifest");
  pipeline->add_option("--g2p-model", pl_g2p);
  pipeline->add_option("--rules", pl_rules, "Pre-supplied rules (skips extraction)");
  pipeline->add_option("--out", pl_out, "Run directory");
  pipeline->add_option("--beta", pp.beta);
  pipeline->add_option("--min-count", pp.min_count);
  pipeline->add_option("--top-k", pp.top_k);
  pipeline->add_option("--min-rel-freq", pp.min_rel_freq);
  pipeline->add_option("--phone-penalty", pp.phone_penalty);
  pipeline->add_option("--word-penalty", pp.word_penalty);
  pipeline->add_option("--loop-penalty", pp.loop_penalty);
  pipeline->add_option("--beam", pp.beam);
  pipeline->add_option("--seed", pl_seed);
  pipeline->add_option("--g2p-iters", pp.g2p_iters);
  pipeline->add_flag("--no-strict", pl_no_strict, "Skip the strict grammar");
  pipeline->add_flag("--no-loop", pl_no_loop, "Skip the word-loop grammar");
  pipeline->add_flag("--no-graphemes", pl_no_graphemes);
  pipeline->add_flag("--no-mllr", pl_no_mllr);
  pipeline->add_option("--jobs", pp.jobs, "Worker threads");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  if (*synth) {
    return finish(nnasr_synth_run(sy_l2.c_str(), sy_l1.c_str(), sy_lex.c_str(), sy_gram.c_str(),
                                sy_rules.empty() ? nullptr : sy_rules.c_str(),
                                sy_g2p.empty() ? nullptr : sy_g2p.c_str(), sy_utts, sy_seed,
                                sy_speakers, sy_shift, sy_adapt, sy_out.c_str()));
  }
  if (*train) {
    return finish(nnasr_train_am(tr_inv.c_str(), tr_corpus.c_str(), tr_states, tr_comps,
                               tr_iters, tr_out.c_str(),
                               tr_log.empty() ? nullptr : tr_log.c_str()));
  }
  if (*align) {
    ModelsPtr models;
    FeaturesPtr feats;
    nnasr_models* mras = nullptr;
    nnasr_features* fraw = nullptr;
    if (nnasr_status s = nnasr_models_load(al_models.c_str(), &mras)) return finish(s);
    models.reset(mras);
    if (nnasr_status s = nnasr_features_load(al_feats.c_str(), &fraw)) return finish(s);
    feats.reset(fraw);
    std::vector<const char*> phones;
    for (const std::string& p : al_phones) phones.push_back(p.c_str());
    nnasr_result* rraw = nullptr;
    if (nnasr_status s = nnasr_align(models.get(), feats.get(), phones.data(), phones.size(),
                                     al_beam, &rraw))
      return finish(s);
    ResultPtr result(rraw);
    return print_result(result.get(), al_out);
  }
  if (*phonerec) {
    ModelsPtr models;
    FeaturesPtr feats;
    nnasr_models* mras = nullptr;
    nnasr_features* fraw = nullptr;
    if (nnasr_status s = nnasr_models_load(pr_models.c_str(), &mras)) return finish(s);
    models.reset(mras);
    if (nnasr_status s = nnasr_features_load(pr_feats.c_str(), &fraw)) return finish(s);
    feats.reset(fraw);
    nnasr_result* rraw = nullptr;
    if (nnasr_status s =
            nnasr_phone_recognize(models.get(), feats.get(), pr_penalty, pr_beam, &rraw))
      return finish(s);
    ResultPtr result(rraw);
    return print_result(result.get(), pr_out);
  }
  if (*decode) {
    if (de_loop == !de_gram.empty()) {
      std::fprintf(stderr, "nnasr: decode needs exactly one of --grammar or --loop\n");
      return 1;
    }
    ModelsPtr models;
    FeaturesPtr feats;
    LexiconPtr lexicon;
    GrammarPtr grammar;
    nnasr_models* mras = nullptr;
    nnasr_features* fraw = nullptr;
    nnasr_lexicon* lraw = nullptr;
    nnasr_grammar* graw = nullptr;
    if (nnasr_status s = nnasr_models_load(de_models.c_str(), &mras)) return finish(s);
    models.reset(mras);
    if (nnasr_status s = nnasr_features_load(de_feats.c_str(), &fraw)) return finish(s);
    feats.reset(fraw);
    if (nnasr_status s = nnasr_lexicon_load(de_lex.c_str(), &lraw)) return finish(s);
    lexicon.reset(lraw);
    if (de_loop) {
      std::vector<const char*> cwords;
      size_t n_words = nnasr_lexicon_num_words(lexicon.get());
      for (size_t i = 0; i < n_words; ++i)
        cwords.push_back(nnasr_lexicon_word(lexicon.get(), i));
      if (nnasr_status s =
              nnasr_grammar_word_loop(cwords.data(), cwords.size(), de_lp, &graw))
        return finish(s);
    } else {
      if (nnasr_status s = nnasr_grammar_load(de_gram.c_str(), &graw)) return finish(s);
    }
    grammar.reset(graw);
    nnasr_result* rraw = nullptr;
    if (nnasr_status s = nnasr_decode(models.get(), feats.get(), grammar.get(), lexicon.get(),
                                      de_wp, de_beam, &rraw))
      return finish(s);
    ResultPtr result(rraw);
    return print_result(result.get(), de_out);
  }
  if (*rules) {
    return finish(nnasr_extract_rules(ru_l2.c_str(), ru_l1.c_str(), ru_lex.c_str(),
                                    ru_corpus.c_str(), ru_min_count, ru_top_k, ru_rel, ru_pp,
                                    ru_graphemes ? 1 : 0,
                                    ru_g2p.empty() ? nullptr : ru_g2p.c_str(), ru_exclude,
                                    ru_keep_del ? 1 : 0, ru_out.c_str()));
  }
  if (*g2p_train) {
    return finish(nnasr_g2p_train(gt_lex.c_str(), gt_iters, gt_seed, gt_out.c_str(),
                                gt_log.empty() ? nullptr : gt_log.c_str()));
  }
  if (*g2p_align) {
    return finish(nnasr_g2p_align_file(ga_model.c_str(), ga_lex.c_str(), ga_out.c_str()));
  }
  if (*adapt) {
    return finish(nnasr_adapt_compile(ad_l2.c_str(), ad_l1.c_str(), ad_rules.c_str(), ad_beta,
                                    ad_g2p.empty() ? nullptr : ad_g2p.c_str(),
                                    ad_lex.empty() ? nullptr : ad_lex.c_str(), ad_out.c_str()));
  }
  if (*mllr_est) {
    return finish(nnasr_mllr_estimate(me_models.c_str(), me_corpus.c_str(), me_speaker,
                                    me_role.empty() ? nullptr : me_role.c_str(),
                                    me_out.c_str()));
  }
  if (*mllr_apply) {
    return finish(nnasr_mllr_apply(ma_models.c_str(), ma_transform.c_str(), ma_out.c_str()));
  }
  if (*score) {
    return finish(nnasr_score_run(sc_corpus.c_str(), sc_hyp.c_str(), sc_name.c_str(),
                                sc_out.c_str(), sc_detail.empty() ? nullptr : sc_detail.c_str()));
  }
  if (*pipeline) {
    // key=value config file; command-line flags take precedence.
    if (!pl_config.empty()) {
      std::ifstream in(pl_config);
      if (!in) {
        std::fprintf(stderr, "nnasr: cannot open config '%s'\n", pl_config.c_str());
        return 2;
      }
      auto given = [&](const char* name) { return pipeline->count(name) > 0; };
      std::string line;
      int lineno = 0;
      while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        size_t eq = line.find('=');
        if (eq == std::string::npos) {
          std::fprintf(stderr, "nnasr: %s:%d: expected key=value\n", pl_config.c_str(), lineno);
          return 1;
        }
        std::string key = line.substr(0, eq);
        std::string value = line.substr(eq + 1);
        try {
          if (key == "l2-models") { if (!given("--l2-models")) pl_l2 = value; }
          else if (key == "l1-models") { if (!given("--l1-models")) pl_l1 = value; }
          else if (key == "lexicon") { if (!given("--lexicon")) pl_lex = value; }
          else if (key == "grammar") { if (!given("--grammar")) pl_gram = value; }
          else if (key == "corpus") { if (!given("--corpus")) pl_manifest = value; }
          else if (key == "g2p-model") { if (!given("--g2p-model")) pl_g2p = value; }
          else if (key == "rules") { if (!given("--rules")) pl_rules = value; }
          else if (key == "out") { if (!given("--out")) pl_out = value; }
          else if (key == "beta") { if (!given("--beta")) pp.beta = std::stod(value); }
          else if (key == "min-count") { if (!given("--min-count")) pp.min_count = std::stol(value); }
          else if (key == "top-k") { if (!given("--top-k")) pp.top_k = std::stoi(value); }
          else if (key == "min-rel-freq") { if (!given("--min-rel-freq")) pp.min_rel_freq = std::stod(value); }
          else if (key == "phone-penalty") { if (!given("--phone-penalty")) pp.phone_penalty = std::stod(value); }
          else if (key == "word-penalty") { if (!given("--word-penalty")) pp.word_penalty = std::stod(value); }
          else if (key == "loop-penalty") { if (!given("--loop-penalty")) pp.loop_penalty = std::stod(value); }
          else if (key == "beam") { if (!given("--beam")) pp.beam = std::stod(value); }
          else if (key == "seed") { if (!given("--seed")) pl_seed = std::stoull(value); }
          else if (key == "g2p-iters") { if (!given("--g2p-iters")) pp.g2p_iters = std::stoi(value); }
          else if (key == "strict") { if (!given("--no-strict")) pl_no_strict = value == "0"; }
          else if (key == "loop") { if (!given("--no-loop")) pl_no_loop = value == "0"; }
          else if (key == "graphemes") { if (!given("--no-graphemes")) pl_no_graphemes = value == "0"; }
          else if (key == "mllr") { if (!given("--no-mllr")) pl_no_mllr = value == "0"; }
          else if (key == "jobs") { if (!given("--jobs")) pp.jobs = std::stoi(value); }
          else {
            std::fprintf(stderr, "nnasr: %s:%d: unknown key '%s'\n", pl_config.c_str(),
                         lineno, key.c_str());
            return 1;
          }
        } catch (const std::exception&) {
          std::fprintf(stderr, "nnasr: %s:%d: bad value for '%s'\n", pl_config.c_str(),
                       lineno, key.c_str());
          return 1;
        }
      }
    }
    for (const auto& [value, name] : std::initializer_list<std::pair<const std::string*, const char*>>{
             {&pl_l2, "--l2-models"},
             {&pl_l1, "--l1-models"},
             {&pl_lex, "--lexicon"},
             {&pl_manifest, "--corpus"},
             {&pl_out, "--out"}}) {
      if (value->empty()) {
        std::fprintf(stderr, "nnasr: pipeline: %s is required (flag or config)\n", name);
        return 1;
      }
    }
    pp.l2_models = pl_l2.c_str();
    pp.l1_models = pl_l1.c_str();
    pp.lexicon = pl_lex.c_str();
    pp.grammar = pl_gram.empty() ? nullptr : pl_gram.c_str();
    pp.manifest = pl_manifest.c_str();
    pp.g2p_model = pl_g2p.empty() ? nullptr : pl_g2p.c_str();
    pp.rules = pl_rules.empty() ? nullptr : pl_rules.c_str();
    pp.out_dir = pl_out.c_str();
    pp.seed = pl_seed;
    pp.strict = pl_no_strict || pl_gram.empty() ? 0 : 1;
    pp.loop = pl_no_loop ? 0 : 1;
    pp.graphemes = pl_no_graphemes ? 0 : 1;
    pp.mllr = pl_no_mllr ? 0 : 1;
    return finish(nnasr_pipeline_run(&pp));
  }
  return 1;
}
