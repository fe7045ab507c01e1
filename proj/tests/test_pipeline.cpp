// test_pipeline.cpp
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

#include <set>

#include <doctest.h>

#include "ioutil.hpp"
#include "nnasr/error.hpp"
#include "nnasr/pipeline.hpp"
#include "nnasr/synth.hpp"
#include "testdata.hpp"

using namespace nnasr;

namespace {

// Small planted-confusion corpus plus the file layout run_pipeline needs.
struct PipelineWorld {
  std::string dir;
  PipelineConfig config;
};

PipelineWorld make_world(int n_utts, int n_speakers, uint64_t seed, bool with_rules) {
  testdata::ConfusionScenario sc = testdata::confusion_scenario();
  PipelineWorld world;
  world.dir = testdata::scratch_dir("pipeline");
  save_model_set(sc.l2, world.dir + "/l2.json");
  save_model_set(sc.l1, world.dir + "/l1.json");
  save_lexicon(sc.lexicon, world.dir + "/lexicon.txt");
  save_grammar(sc.strict, world.dir + "/grammar.txt");
  SynthOptions opts;
  opts.n_utts = n_utts;
  opts.n_speakers = n_speakers;
  opts.seed = seed;
  opts.adapt_fraction = 0.25;
  synth_corpus(sc.l2, sc.l1, sc.lexicon, sc.strict, with_rules ? sc.rules : std::vector<PlantedRuleSpec>{},
               opts, nullptr, world.dir + "/corpus");

  world.config.l2_models = world.dir + "/l2.json";
  world.config.l1_models = world.dir + "/l1.json";
  world.config.lexicon = world.dir + "/lexicon.txt";
  world.config.grammar = world.dir + "/grammar.txt";
  world.config.manifest = world.dir + "/corpus/manifest.json";
  world.config.out_dir = world.dir + "/run";
  world.config.min_count = 3;  // small corpus
  world.config.graphemes = false;
  world.config.mllr = false;
  world.config.loop = false;
  return world;
}

}  // namespace

TEST_CASE("cross-validation hygiene: folds never train on their own speaker") {
  PipelineWorld world = make_world(48, 4, 2024, true);
  PipelineResult result = run_pipeline(world.config);

  // The audit log lists the contributing utterances per fold.
  std::string audit = read_text_file(world.config.out_dir + "/audit.tsv");
  CorpusManifest manifest = load_manifest(world.config.manifest);
  std::map<std::string, int> speaker_of;
  for (const auto& u : manifest.utterances) speaker_of[u.id] = u.speaker;
  std::vector<std::string> lines = split_lines(audit);
  REQUIRE(lines.size() == 5);  // header + 4 folds
  for (size_t i = 1; i < lines.size(); ++i) {
    std::vector<std::string> toks = split_ws(lines[i]);
    int fold_speaker = std::stoi(toks[0]);
    int listed = 0;
    for (size_t j = 1; j < toks.size(); ++j) {
      CHECK(speaker_of.at(toks[j]) != fold_speaker);
      ++listed;
    }
    CHECK(listed > 0);
  }

  // Rows exist for both systems under the strict grammar.
  CHECK_NOTHROW(result.row("strict", "baseline"));
  CHECK_NOTHROW(result.row("strict", "confusion"));
  CHECK(result.fold_wer.at("strict").at("baseline").size() == 4);
}

TEST_CASE("pre-supplied rules with beta = 1 reproduce the baseline exactly") {
  PipelineWorld world = make_world(24, 2, 77, false);
  // Any syntactically valid rules will do; beta = 1 must neutralize them.
  write_text_file_atomic(world.dir + "/rules.txt",
                         "X -> a1 e1\t0.4\t4\nX -> a1 I1\t0.6\t6\n");
  world.config.rules_file = world.dir + "/rules.txt";
  world.config.beta = 1.0;
  PipelineResult result = run_pipeline(world.config);
  CHECK(read_text_file(world.config.out_dir + "/hyp/strict_baseline.tsv") ==
        read_text_file(world.config.out_dir + "/hyp/strict_confusion.tsv"));
  CHECK(result.row("strict", "baseline").wer == result.row("strict", "confusion").wer);
}

TEST_CASE("identical config and seed give bit-identical reports") {
  PipelineWorld world = make_world(24, 2, 31, true);
  PipelineConfig second = world.config;
  second.out_dir = world.dir + "/run2";
  PipelineResult r1 = run_pipeline(world.config);
  PipelineResult r2 = run_pipeline(second);
  CHECK(read_text_file(r1.report_path) == read_text_file(r2.report_path));
  CHECK(read_text_file(world.config.out_dir + "/MANIFEST.json") ==
        read_text_file(second.out_dir + "/MANIFEST.json"));
}

TEST_CASE("config validation rejects broken setups") {
  PipelineConfig config;
  CHECK_THROWS_AS(run_pipeline(config), UsageError);
  config.l2_models = "x";
  config.l1_models = "x";
  config.lexicon = "x";
  config.manifest = "x";
  config.out_dir = "y";
  config.strict = true;  // but no grammar path
  CHECK_THROWS_AS(config.validate(), UsageError);
  config.strict = false;
  config.loop = false;
  CHECK_THROWS_AS(config.validate(), UsageError);
}

TEST_CASE("single-speaker corpora cannot be cross-validated") {
  PipelineWorld world = make_world(8, 1, 5, false);
  CHECK_THROWS_AS(run_pipeline(world.config), UsageError);
}
