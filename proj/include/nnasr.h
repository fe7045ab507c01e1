/* nnasr.h
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 *
 * C interface of the nnasr toolkit: GMM-HMM decoding and non-native
 * adaptation via phonetic confusion rules, graphemic constraints, and MLLR.
 * All functions return nnasr_status; on failure nnasr_last_error() holds a
 * thread-local message. Handles are opaque and freed with their *_free
 * function. NULL output parameters are invalid unless stated otherwise.
 */

#ifndef NNASR_H_
#define NNASR_H_

#include <stddef.h>

#ifdef __cplusplus
extern "C" {
#endif

#ifndef NNASR_API
#if defined(_WIN32)
#define NNASR_API __declspec(dllexport)
#else
#define NNASR_API __attribute__((visibility("default")))
#endif
#endif

/* Mirrors the CLI exit codes. */
typedef enum nnasr_status {
  NNASR_OK = 0,
  NNASR_EUSAGE = 1,   /* bad parameters or inconsistent options */
  NNASR_EFORMAT = 2,  /* malformed data, invariant violations, lookups */
  NNASR_ENUMERIC = 3  /* estimation failures, infeasible alignments */
} nnasr_status;

typedef struct nnasr_models nnasr_models;     /* plain or adapted model set */
typedef struct nnasr_features nnasr_features; /* FEAT1 feature matrix */
typedef struct nnasr_lexicon nnasr_lexicon;
typedef struct nnasr_grammar nnasr_grammar;
typedef struct nnasr_result nnasr_result;     /* decode result */

NNASR_API const char* nnasr_version(void);
NNASR_API const char* nnasr_last_error(void);

/* --- model sets ---------------------------------------------------------- */

/* Loads a model-set JSON file; adapted sets (with a merged section) load
 * through the same entry point and decode transparently. */
NNASR_API nnasr_status nnasr_models_load(const char* path, nnasr_models** out);
NNASR_API void nnasr_models_free(nnasr_models* models);
NNASR_API int nnasr_models_dim(const nnasr_models* models);
NNASR_API int nnasr_models_is_adapted(const nnasr_models* models);

/* --- features, lexicon, grammar ------------------------------------------ */

NNASR_API nnasr_status nnasr_features_load(const char* path, nnasr_features** out);
NNASR_API nnasr_status nnasr_features_save(const nnasr_features* feats, const char* path);
NNASR_API void nnasr_features_free(nnasr_features* feats);
NNASR_API int nnasr_features_dim(const nnasr_features* feats);
NNASR_API int nnasr_features_frames(const nnasr_features* feats);

NNASR_API nnasr_status nnasr_lexicon_load(const char* path, nnasr_lexicon** out);
NNASR_API void nnasr_lexicon_free(nnasr_lexicon* lexicon);
NNASR_API size_t nnasr_lexicon_num_words(const nnasr_lexicon* lexicon);
/* Words in first-seen order; NULL for an out-of-range index. */
NNASR_API const char* nnasr_lexicon_word(const nnasr_lexicon* lexicon, size_t index);

NNASR_API nnasr_status nnasr_grammar_load(const char* path, nnasr_grammar** out);
/* Word-loop grammar over the given words; loop_penalty is a log-domain
 * per-word penalty and must be finite. */
NNASR_API nnasr_status nnasr_grammar_word_loop(const char* const* words, size_t n_words,
                                               double loop_penalty, nnasr_grammar** out);
NNASR_API void nnasr_grammar_free(nnasr_grammar* grammar);

/* --- decoding ------------------------------------------------------------ */

/* Forced alignment of a known phone sequence (plain model sets only). */
NNASR_API nnasr_status nnasr_align(const nnasr_models* models, const nnasr_features* feats,
                                   const char* const* phones, size_t n_phones,
                                   double beam, nnasr_result** out);

/* Unconstrained phone loop (plain model sets only). */
NNASR_API nnasr_status nnasr_phone_recognize(const nnasr_models* models,
                                             const nnasr_features* feats,
                                             double phone_penalty, double beam,
                                             nnasr_result** out);

/* Grammar-constrained word decoding; dispatches on plain vs adapted sets. */
NNASR_API nnasr_status nnasr_decode(const nnasr_models* models, const nnasr_features* feats,
                                    const nnasr_grammar* grammar, const nnasr_lexicon* lexicon,
                                    double word_penalty, double beam, nnasr_result** out);

NNASR_API void nnasr_result_free(nnasr_result* result);
NNASR_API double nnasr_result_score(const nnasr_result* result);
NNASR_API size_t nnasr_result_num_words(const nnasr_result* result);
NNASR_API const char* nnasr_result_word(const nnasr_result* result, size_t index);
NNASR_API size_t nnasr_result_num_segments(const nnasr_result* result);
NNASR_API nnasr_status nnasr_result_segment(const nnasr_result* result, size_t index,
                                            int* start, int* end, const char** phone);
/* Label file: "start end phone" lines plus a "score <log>" trailer. */
NNASR_API nnasr_status nnasr_result_save_labels(const nnasr_result* result, const char* path);

/* --- corpus synthesis ---------------------------------------------------- */

/* Generates a synthetic corpus (features + manifest with ground truth).
 * planted_rules/g2p_model may be NULL; cluster-conditioned planted rules
 * require the g2p model for spelling alignment. */
NNASR_API nnasr_status nnasr_synth_run(const char* l2_models, const char* l1_models,
                                       const char* lexicon, const char* grammar,
                                       const char* planted_rules, const char* g2p_model,
                                       int n_utts, unsigned long long seed, int n_speakers,
                                       double speaker_shift, double adapt_fraction,
                                       const char* out_dir);

/* --- training ------------------------------------------------------------ */

/* Inventory file: one phone id per line, optional second token L2|L1.
 * Flat start plus n_iters of embedded reestimation; per-iteration corpus
 * log-likelihood is appended as TSV to loglik_tsv when non-NULL. */
NNASR_API nnasr_status nnasr_train_am(const char* inventory, const char* corpus_manifest,
                                      int n_states, int n_components, int n_iters,
                                      const char* out_models, const char* loglik_tsv);

/* --- confusion rules ------------------------------------------------------ */

/* Runs forced alignment (L2) and phone recognition (L1) over the corpus,
 * associates the transcriptions by temporal overlap and extracts rules.
 * graphemes != 0 keys rules by spelling cluster (g2p_model may be NULL to
 * train one from the lexicon). exclude_speaker < 0 uses every utterance.
 * keep_deletions != 0 keeps empty associations in the frequency
 * denominator (they never become rules). */
NNASR_API nnasr_status nnasr_extract_rules(const char* l2_models, const char* l1_models,
                                           const char* lexicon, const char* corpus_manifest,
                                           long min_count, int top_k, double min_rel_freq,
                                           double phone_penalty, int graphemes,
                                           const char* g2p_model, int exclude_speaker,
                                           int keep_deletions, const char* out_rules);

/* --- grapheme-phoneme alignment ------------------------------------------ */

NNASR_API nnasr_status nnasr_g2p_train(const char* lexicon, int n_iters,
                                       unsigned long long seed, const char* out_model,
                                       const char* loglik_tsv);
/* Alignment dump: "WORD<TAB>phone:cluster phone:cluster ..." per entry. */
NNASR_API nnasr_status nnasr_g2p_align_file(const char* g2p_model, const char* lexicon,
                                            const char* out_path);

/* --- adaptation ----------------------------------------------------------- */

/* Builds the merged-model set for the given rules; grapheme-keyed rules
 * need g2p_model and lexicon for occurrence binding. */
NNASR_API nnasr_status nnasr_adapt_compile(const char* l2_models, const char* l1_models,
                                           const char* rules, double beta,
                                           const char* g2p_model, const char* lexicon,
                                           const char* out_path);

/* --- MLLR ----------------------------------------------------------------- */

/* Supervised single-class mean transform estimated over the manifest's
 * labeled utterances (optionally one speaker / one role). */
NNASR_API nnasr_status nnasr_mllr_estimate(const char* models, const char* corpus_manifest,
                                           int speaker, const char* role,
                                           const char* out_transform);
NNASR_API nnasr_status nnasr_mllr_apply(const char* models, const char* transform,
                                        const char* out_models);

/* --- scoring -------------------------------------------------------------- */

/* hyp_tsv: "utt_id<TAB>word word ..." lines. Writes a system/WER/SER report
 * row; out_detail (optional) receives per-utterance counts. */
NNASR_API nnasr_status nnasr_score_run(const char* corpus_manifest, const char* hyp_tsv,
                                       const char* system_name, const char* out_report,
                                       const char* out_detail);

/* --- pipeline -------------------------------------------------------------- */

typedef struct nnasr_pipeline_params {
  const char* l2_models;
  const char* l1_models;
  const char* lexicon;
  const char* grammar;   /* strict grammar; may be NULL when strict == 0 */
  const char* manifest;
  const char* g2p_model; /* NULL: train from the lexicon */
  const char* rules;     /* NULL: extract per fold; else skip extraction */
  const char* out_dir;
  double beta;
  long min_count;
  int top_k;
  double min_rel_freq;
  double phone_penalty;
  double word_penalty;
  double loop_penalty;
  double beam;
  unsigned long long seed;
  int g2p_iters;
  int strict;
  int loop;
  int graphemes;
  int mllr;
  int jobs;
} nnasr_pipeline_params;

/* Defaults matching the documented CLI defaults. */
NNASR_API void nnasr_pipeline_params_init(nnasr_pipeline_params* params);

/* Full leave-one-out experiment; writes report.tsv and a MANIFEST.json
 * enumerating every artifact under out_dir. */
NNASR_API nnasr_status nnasr_pipeline_run(const nnasr_pipeline_params* params);

#ifdef __cplusplus
}
#endif

#endif /* NNASR_H_ */
