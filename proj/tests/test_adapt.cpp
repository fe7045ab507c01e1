// test_adapt.cpp
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

#include <cmath>

#include <doctest.h>

#include "nnasr/adapt.hpp"
#include "nnasr/error.hpp"
#include "testdata.hpp"

using namespace nnasr;

namespace {

ConfusionRule rule_of(const std::string& src, std::vector<std::string> targets, double p,
                      const std::string& grapheme = "") {
  ConfusionRule r;
  r.source = src;
  r.grapheme = grapheme;
  r.targets = std::move(targets);
  r.probability = p;
  r.count = 1;
  return r;
}

}  // namespace

TEST_CASE("a rule-free merged model shifts scores by ln(beta)") {
  Rng rng(7);
  ModelSet l2 = testdata::make_set({testdata::make_phone("X", Lang::kL2, {0.0}, 1.0, 2)});
  ModelSet l1 = testdata::make_set({testdata::make_phone("a1", Lang::kL1, {5.0}, 1.0, 2)});
  MergedPhoneHmm merged = build_merged(l2.model("X"), {}, l1, 0.5);
  for (int trial = 0; trial < 5; ++trial) {
    FeatureMatrix f = testdata::random_features(rng, 4, 1);
    double native = decode_composite(f, composite_from_phone(l2.model("X"))).log_score;
    double shifted = decode_composite(f, merged.graph).log_score;
    CHECK(shifted == doctest::Approx(native + std::log(0.5)).epsilon(1e-12));
  }

  SUBCASE("beta = 1 is the exact identity") {
    MergedPhoneHmm id = build_merged(l2.model("X"), {}, l1, 1.0);
    FeatureMatrix f = testdata::random_features(rng, 4, 1);
    double native = decode_composite(f, composite_from_phone(l2.model("X"))).log_score;
    CHECK(decode_composite(f, id.graph).log_score == native);
  }
}

TEST_CASE("the diphthong example yields branch weights ln .5 / ln .2 / ln .3") {
  ModelSet l2 = testdata::make_set({testdata::make_phone("aI", Lang::kL2, {0.0}, 1.0, 2)});
  ModelSet l1 = testdata::make_set({
      testdata::make_phone("a", Lang::kL1, {4.0}, 1.0, 2),
      testdata::make_phone("e", Lang::kL1, {-4.0}, 1.0, 2),
      testdata::make_phone("I", Lang::kL1, {8.0}, 1.0, 2),
  });
  std::vector<ConfusionRule> rules{
      rule_of("aI", {"a", "e"}, 0.4),
      rule_of("aI", {"a", "I"}, 0.6),
  };
  MergedPhoneHmm merged = build_merged(l2.model("aI"), rules, l1, 0.5);
  CHECK(merged.entry_mass() == doctest::Approx(1.0).epsilon(1e-9));

  // Branch decomposition: the merged Viterbi equals the best weighted branch.
  Rng rng(11);
  for (int trial = 0; trial < 10; ++trial) {
    FeatureMatrix f = testdata::random_features(rng, 6, 1, 3.0);
    double native = decode_composite(f, composite_from_phone(l2.model("aI"))).log_score;
    double path_ae = decode_composite(f, concatenate(l1, {"a", "e"})).log_score;
    double path_aI = decode_composite(f, concatenate(l1, {"a", "I"})).log_score;
    double want = std::max({native + std::log(0.5), path_ae + std::log(0.2),
                            path_aI + std::log(0.3)});
    double got = decode_composite(f, merged.graph).log_score;
    CHECK(got == doctest::Approx(want).epsilon(1e-9));
  }
}

TEST_CASE("build_merged validates its inputs") {
  ModelSet l2 = testdata::make_set({testdata::make_phone("X", Lang::kL2, {0.0}, 1.0)});
  ModelSet l1 = testdata::make_set({testdata::make_phone("a1", Lang::kL1, {1.0}, 1.0)});
  CHECK_THROWS_AS(build_merged(l2.model("X"), {}, l1, 0.0), UsageError);
  CHECK_THROWS_AS(build_merged(l2.model("X"), {}, l1, 1.5), UsageError);
  CHECK_THROWS_AS(build_merged(l2.model("X"), {rule_of("X", {"zz"}, 0.5)}, l1, 0.5),
                  FormatError);
  CHECK_THROWS_AS(
      build_merged(l2.model("X"),
                   {rule_of("X", {"a1"}, 0.7), rule_of("X", {"a1", "a1"}, 0.7)}, l1, 0.5),
      UsageError);  // mass 1.4
}

TEST_CASE("beta = 1 compilation decodes identically to the baseline") {
  testdata::ConfusionScenario sc = testdata::confusion_scenario();
  std::vector<ConfusionRule> rules{
      rule_of("X", {"a1", "e1"}, 0.4),
      rule_of("X", {"a1", "I1"}, 0.6),
  };
  AdaptedModelSet adapted = compile_adapted_set(sc.l2, sc.l1, rules, 1.0);
  for (uint64_t seed = 0; seed < 10; ++seed) {
    auto [f, truth] = sample_utterance(sc.l2, {"o", "p", "X", "t"}, seed);
    DecodeResult base = grammar_decode(f, sc.strict, sc.lexicon, sc.l2, 0.0);
    DecodeResult alt = grammar_decode_adapted(f, sc.strict, sc.lexicon, adapted, 0.0);
    CHECK(base.words == alt.words);
    CHECK(std::abs(base.log_score - alt.log_score) <= 1e-12);
    CHECK(base.phones == alt.phones);
  }
}

TEST_CASE("every phone has an unconstrained fallback entry") {
  testdata::ConfusionScenario sc = testdata::confusion_scenario();
  AdaptedModelSet adapted = compile_adapted_set(sc.l2, sc.l1, {}, 0.5);
  for (const PhoneSymbol& p : sc.l2.inventory)
    CHECK_NOTHROW(adapted.model_for("ANY", 0, 0, p.id));
}

TEST_CASE("unconstrained rules apply to every occurrence regardless of spelling") {
  testdata::GraphemeScenario sc = testdata::grapheme_scenario();
  std::vector<ConfusionRule> rules{rule_of("q", {"a1"}, 1.0)};
  AdaptedModelSet adapted = compile_adapted_set(sc.l2, sc.l1, rules, 0.5);
  CHECK(adapted.bindings.empty());
  const MergedPhoneHmm& pat = adapted.model_for("PAT", 0, 1, "q");
  const MergedPhoneHmm& pot = adapted.model_for("POT", 0, 1, "q");
  CHECK(&pat == &pot);
  CHECK(pat.branches.size() == 1);
}

TEST_CASE("grapheme-keyed rules bind occurrences through the aligner") {
  testdata::GraphemeScenario sc = testdata::grapheme_scenario();
  auto [g2p, ll] = train_g2p(dictionary_from_lexicon(sc.lexicon), 10);
  std::vector<ConfusionRule> rules{
      rule_of("q", {"a1"}, 1.0, "a"),
      rule_of("q", {"O1"}, 1.0, "o"),
  };
  AdaptedModelSet adapted = compile_adapted_set(sc.l2, sc.l1, rules, 0.5, &g2p, &sc.lexicon);
  const MergedPhoneHmm& in_pat = adapted.model_for("PAT", 0, 1, "q");
  const MergedPhoneHmm& in_pot = adapted.model_for("POT", 0, 1, "q");
  CHECK(in_pat.grapheme == "a");
  REQUIRE(in_pat.branches.size() == 1);
  CHECK(in_pat.branches[0].targets == std::vector<std::string>{"a1"});
  CHECK(in_pot.grapheme == "o");
  CHECK(in_pot.branches[0].targets == std::vector<std::string>{"O1"});
  // Other positions fall back to the unconstrained native wrapper.
  CHECK(adapted.model_for("PAT", 0, 0, "p").branches.empty());

  SUBCASE("grapheme rules without the aligner are a usage error") {
    CHECK_THROWS_AS(compile_adapted_set(sc.l2, sc.l1, rules, 0.5), UsageError);
  }
}

TEST_CASE("adapted sets survive a save/load round trip with identical decodes") {
  testdata::ConfusionScenario sc = testdata::confusion_scenario();
  std::vector<ConfusionRule> rules{
      rule_of("X", {"a1", "e1"}, 0.4),
      rule_of("X", {"a1", "I1"}, 0.6),
  };
  AdaptedModelSet adapted = compile_adapted_set(sc.l2, sc.l1, rules, 0.5);
  std::string dir = testdata::scratch_dir("adapted");
  save_adapted_set(adapted, dir + "/a.json");
  CHECK(is_adapted_set_file(dir + "/a.json"));
  AdaptedModelSet back = load_adapted_set(dir + "/a.json");
  for (uint64_t seed = 0; seed < 5; ++seed) {
    auto [f, truth] = sample_utterance(sc.l2, {"o", "p", "X", "t"}, seed);
    DecodeResult a = grammar_decode_adapted(f, sc.strict, sc.lexicon, adapted, 0.0);
    DecodeResult b = grammar_decode_adapted(f, sc.strict, sc.lexicon, back, 0.0);
    CHECK(a.words == b.words);
    CHECK(a.log_score == b.log_score);
  }
}

TEST_CASE("adapted decoding recovers replaced pronunciations") {
  // Audio realized as p [a1 e1] t: the adapted PXT model should beat both
  // competitor words, while the baseline misrecognizes.
  testdata::ConfusionScenario sc = testdata::confusion_scenario();
  std::vector<ConfusionRule> rules{
      rule_of("X", {"a1", "e1"}, 0.4),
      rule_of("X", {"a1", "I1"}, 0.6),
  };
  AdaptedModelSet adapted = compile_adapted_set(sc.l2, sc.l1, rules, 0.5);
  int base_wrong = 0, adapted_right = 0;
  const int n = 20;
  for (uint64_t seed = 0; seed < n; ++seed) {
    // Realized audio: canonical o (GO), then p [a1 e1] t (PXT with the
    // replacement fired).
    Rng rng(mix_seed(991, seed));
    FeatureMatrix f;
    f.dim = 2;
    std::vector<std::pair<const ModelSet*, std::string>> chain{
        {&sc.l2, "o"}, {&sc.l2, "p"}, {&sc.l1, "a1"}, {&sc.l1, "e1"}, {&sc.l2, "t"}};
    int t = 0;
    for (auto& [set, id] : chain) t += sample_phone(set->model(id), rng, &f.data);
    f.frames = t;
    DecodeResult base = grammar_decode(f, sc.strict, sc.lexicon, sc.l2, 0.0);
    DecodeResult alt = grammar_decode_adapted(f, sc.strict, sc.lexicon, adapted, 0.0);
    if (base.words != std::vector<std::string>{"GO", "PXT"}) ++base_wrong;
    if (alt.words == std::vector<std::string>{"GO", "PXT"}) ++adapted_right;
  }
  CHECK(base_wrong == n);      // canonical X never matches [a1 e1] audio
  CHECK(adapted_right == n);
}
