// test_synth.cpp
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

#include <filesystem>

#include <doctest.h>

#include "ioutil.hpp"
#include "nnasr/decode.hpp"
#include "nnasr/error.hpp"
#include "nnasr/synth.hpp"
#include "testdata.hpp"

using namespace nnasr;

TEST_CASE("a rule-free corpus is pure L2 speech with recoverable boundaries") {
  testdata::ConfusionScenario sc = testdata::confusion_scenario();
  SynthOptions opts;
  opts.n_utts = 12;
  opts.seed = 5;
  std::string dir = testdata::scratch_dir("synth_plain");
  CorpusManifest manifest =
      synth_corpus(sc.l2, sc.l1, sc.lexicon, sc.strict, {}, opts, nullptr, dir);
  REQUIRE(manifest.utterances.size() == 12);
  for (const UtteranceRecord& rec : manifest.utterances) {
    CHECK(rec.replacements.empty());
    for (bool l1 : rec.segment_is_l1) CHECK_FALSE(l1);
    FeatureMatrix f = load_features(dir + "/" + rec.feature_path);
    DecodeResult r = viterbi_align(f, rec.segments.phone_sequence(), sc.l2);
    // Means sit >= 6 sigma apart, so boundaries recover exactly.
    REQUIRE(r.phones.segments.size() == rec.segments.segments.size());
    for (size_t i = 0; i < r.phones.segments.size(); ++i)
      CHECK(r.phones.segments[i] == rec.segments.segments[i]);
  }
}

TEST_CASE("probability-one rules fire on every occurrence") {
  testdata::ConfusionScenario sc = testdata::confusion_scenario();
  PlantedRuleSpec rule;
  rule.source = "X";
  rule.targets = {{{"a1", "e1"}, 1.0}};
  SynthOptions opts;
  opts.n_utts = 30;
  opts.seed = 7;
  std::string dir = testdata::scratch_dir("synth_always");
  CorpusManifest manifest =
      synth_corpus(sc.l2, sc.l1, sc.lexicon, sc.strict, {rule}, opts, nullptr, dir);
  int occurrences = 0, fired = 0;
  for (const UtteranceRecord& rec : manifest.utterances) {
    for (size_t w = 0; w < rec.words.size(); ++w) {
      const auto& pron = sc.lexicon.variants(rec.words[w])[rec.variants[w]];
      for (const std::string& ph : pron)
        if (ph == "X") ++occurrences;
    }
    fired += static_cast<int>(rec.replacements.size());
    for (const FiredReplacement& r : rec.replacements) {
      CHECK(r.source == "X");
      CHECK(r.targets == std::vector<std::string>{"a1", "e1"});
    }
  }
  CHECK(occurrences > 0);
  CHECK(fired == occurrences);
}

TEST_CASE("empirical fire rate concentrates around the planted probability") {
  testdata::ConfusionScenario sc = testdata::confusion_scenario();
  PlantedRuleSpec rule;
  rule.source = "X";
  rule.targets = {{{"a1", "I1"}, 0.6}};
  SynthOptions opts;
  opts.n_utts = 1600;  // roughly one X occurrence per third utterance
  opts.seed = 11;
  std::string dir = testdata::scratch_dir("synth_rate");
  CorpusManifest manifest =
      synth_corpus(sc.l2, sc.l1, sc.lexicon, sc.strict, {rule}, opts, nullptr, dir);
  int occurrences = 0, fired = 0;
  for (const UtteranceRecord& rec : manifest.utterances) {
    for (size_t w = 0; w < rec.words.size(); ++w)
      for (const std::string& ph : sc.lexicon.variants(rec.words[w])[rec.variants[w]])
        if (ph == "X") ++occurrences;
    fired += static_cast<int>(rec.replacements.size());
  }
  REQUIRE(occurrences >= 500);
  double rate = static_cast<double>(fired) / occurrences;
  CHECK(std::abs(rate - 0.6) <= 0.06);
}

TEST_CASE("the same seed reproduces the corpus bit for bit") {
  testdata::ConfusionScenario sc = testdata::confusion_scenario();
  SynthOptions opts;
  opts.n_utts = 8;
  opts.seed = 99;
  opts.n_speakers = 2;
  std::string d1 = testdata::scratch_dir("synth_det1");
  std::string d2 = testdata::scratch_dir("synth_det2");
  synth_corpus(sc.l2, sc.l1, sc.lexicon, sc.strict, sc.rules, opts, nullptr, d1);
  synth_corpus(sc.l2, sc.l1, sc.lexicon, sc.strict, sc.rules, opts, nullptr, d2);
  CHECK(read_text_file(d1 + "/manifest.json") == read_text_file(d2 + "/manifest.json"));
  for (const auto& entry : std::filesystem::directory_iterator(d1 + "/feat")) {
    std::string name = entry.path().filename().string();
    CHECK(read_text_file(d1 + "/feat/" + name) == read_text_file(d2 + "/feat/" + name));
  }
}

TEST_CASE("true segments tile the feature matrix") {
  testdata::ConfusionScenario sc = testdata::confusion_scenario();
  SynthOptions opts;
  opts.n_utts = 10;
  opts.seed = 3;
  std::string dir = testdata::scratch_dir("synth_tile");
  CorpusManifest manifest =
      synth_corpus(sc.l2, sc.l1, sc.lexicon, sc.strict, sc.rules, opts, nullptr, dir);
  for (const UtteranceRecord& rec : manifest.utterances) {
    FeatureMatrix f = load_features(dir + "/" + rec.feature_path);
    CHECK(rec.segments.segments.front().start == 0);
    CHECK(rec.segments.segments.back().end == f.frames);
    for (size_t i = 1; i < rec.segments.segments.size(); ++i)
      CHECK(rec.segments.segments[i].start == rec.segments.segments[i - 1].end);
  }
}

TEST_CASE("manifest io round trip") {
  testdata::ConfusionScenario sc = testdata::confusion_scenario();
  SynthOptions opts;
  opts.n_utts = 6;
  opts.seed = 21;
  opts.n_speakers = 3;
  std::string dir = testdata::scratch_dir("synth_manifest");
  CorpusManifest manifest =
      synth_corpus(sc.l2, sc.l1, sc.lexicon, sc.strict, sc.rules, opts, nullptr, dir);
  CorpusManifest back = load_manifest(dir + "/manifest.json");
  REQUIRE(back.utterances.size() == manifest.utterances.size());
  CHECK(back.speakers() == std::vector<int>{0, 1, 2});
  for (size_t u = 0; u < back.utterances.size(); ++u) {
    CHECK(back.utterances[u].id == manifest.utterances[u].id);
    CHECK(back.utterances[u].words == manifest.utterances[u].words);
    CHECK(back.utterances[u].segments == manifest.utterances[u].segments);
    CHECK(back.utterances[u].replacements.size() ==
          manifest.utterances[u].replacements.size());
    CHECK(back.utterances[u].role == manifest.utterances[u].role);
  }
}

TEST_CASE("planted rule files parse with clusters and grouped targets") {
  auto rules = parse_planted_rules(
      "X -> a1 e1\t0.4\n"
      "X -> a1 I1\t0.6\n"
      "q/a -> a1\t0.65\n",
      "t");
  REQUIRE(rules.size() == 2);
  CHECK(rules[0].source == "X");
  CHECK(rules[0].targets.size() == 2);
  CHECK(rules[1].cluster == "a");
  CHECK(rules[1].targets[0].probability == 0.65);
}

TEST_CASE("unsatisfiable grammars and bad rule specs are usage errors") {
  testdata::ConfusionScenario sc = testdata::confusion_scenario();
  SynthOptions opts;
  opts.n_utts = 2;
  std::string dir = testdata::scratch_dir("synth_bad");

  SUBCASE("grammar with a reachable dead end") {
    Grammar g = sc.strict;
    g.states.insert(9);
    g.arcs.push_back({1, 9, "PXT", 0.0});  // state 9 cannot reach a final
    CHECK_THROWS_AS(synth_corpus(sc.l2, sc.l1, sc.lexicon, g, {}, opts, nullptr, dir),
                    UsageError);
  }
  SUBCASE("rule probabilities above one") {
    PlantedRuleSpec rule;
    rule.source = "X";
    rule.targets = {{{"a1"}, 0.7}, {{"e1"}, 0.7}};
    CHECK_THROWS_AS(
        synth_corpus(sc.l2, sc.l1, sc.lexicon, sc.strict, {rule}, opts, nullptr, dir),
        UsageError);
  }
  SUBCASE("cluster-conditioned rules need a cluster map") {
    PlantedRuleSpec rule;
    rule.source = "X";
    rule.cluster = "a";
    rule.targets = {{{"a1"}, 0.5}};
    CHECK_THROWS_AS(
        synth_corpus(sc.l2, sc.l1, sc.lexicon, sc.strict, {rule}, opts, nullptr, dir),
        UsageError);
  }
}

TEST_CASE("cluster-conditioned planting fires only on matching occurrences") {
  testdata::GraphemeScenario sc = testdata::grapheme_scenario();
  SynthOptions opts;
  opts.n_utts = 200;
  opts.seed = 17;
  std::string dir = testdata::scratch_dir("synth_cluster");
  CorpusManifest manifest =
      synth_corpus(sc.l2, sc.l1, sc.lexicon, sc.loop, sc.rules, opts, &sc.clusters, dir);
  for (const UtteranceRecord& rec : manifest.utterances) {
    for (const FiredReplacement& r : rec.replacements) {
      CHECK(r.source == "q");
      const std::string& word = rec.words[r.word_pos];
      if (word == "PAT") {
        CHECK(r.cluster == "a");
        CHECK(r.targets == std::vector<std::string>{"a1"});
      } else {
        CHECK(r.cluster == "o");
        CHECK(r.targets == std::vector<std::string>{"O1"});
      }
    }
  }
}
