// test_model.cpp
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

#include "ioutil.hpp"
#include "nnasr/error.hpp"
#include "nnasr/model.hpp"
#include "oracles.hpp"
#include "testdata.hpp"

using namespace nnasr;

namespace {
GmmState one_gaussian(std::vector<double> mean, std::vector<double> var, double w = 1.0) {
  GmmState s;
  s.components.push_back({w, std::move(mean), std::move(var)});
  return s;
}
}  // namespace

TEST_CASE("log_emission matches the closed form at the mean") {
  GmmState s = one_gaussian({0.0}, {1.0});
  CHECK(log_emission(s, {0.0}) == doctest::Approx(-0.5 * std::log(2.0 * M_PI)).epsilon(1e-12));

  GmmState s2 = one_gaussian({0.0, 0.0}, {1.0, 1.0});
  CHECK(log_emission(s2, {0.0, 0.0}) ==
        doctest::Approx(-std::log(2.0 * M_PI)).epsilon(1e-12));
}

TEST_CASE("log_emission two-component mixture against extended-precision evaluation") {
  GmmState s;
  s.components.push_back({0.5, {0.0}, {1.0}});
  s.components.push_back({0.5, {10.0}, {1.0}});
  double got = log_emission(s, {0.0});
  long double want = oracle::log_emission_precise(s, {0.0});
  CHECK(std::abs(got - static_cast<double>(want)) < 1e-12);

  // A few more frames, including ones where the far component dominates.
  for (double x : {-3.0, 2.5, 5.0, 9.0, 12.0}) {
    double g = log_emission(s, {x});
    long double w = oracle::log_emission_precise(s, {x});
    CHECK(std::abs(g - static_cast<double>(w)) < 1e-12);
  }
}

TEST_CASE("log_emission stays finite far from every component") {
  GmmState s = one_gaussian({0.0, 0.0}, {kVarFloor, kVarFloor});
  double v = log_emission(s, {1e3, -1e3});
  CHECK(std::isfinite(v));
}

TEST_CASE("log_emission rejects dimension mismatches") {
  GmmState s = one_gaussian({0.0, 0.0}, {1.0, 1.0});
  CHECK_THROWS_AS(log_emission(s, {0.0}), FormatError);
}

TEST_CASE("phone validation enforces the left-right contract") {
  PhoneHmm m = testdata::make_phone("a", Lang::kL2, {0.0}, 1.0, 2);
  SUBCASE("row sum violation") {
    m.trans[1][1] = 0.6;  // row now sums to 1.1
    CHECK_THROWS_WITH_AS(m.validate(), doctest::Contains("row sums"), FormatError);
  }
  SUBCASE("backward transition") {
    m.trans[2][1] = 0.1;
    CHECK_THROWS_AS(m.validate(), FormatError);
  }
  SUBCASE("variance below floor names the field") {
    m.states[1].components[0].var[0] = 1e-6;
    CHECK_THROWS_WITH_AS(m.validate(), doctest::Contains("states[1].components[0].var[0]"),
                         FormatError);
  }
  SUBCASE("entry-to-exit mass is rejected") {
    m.trans[0][1] = 0.9;
    m.trans[0][3] = 0.1;
    CHECK_THROWS_WITH_AS(m.validate(), doctest::Contains("entry-to-exit"), FormatError);
  }
  SUBCASE("non-finite parameters are rejected") {
    m.states[0].components[0].var[0] = std::numeric_limits<double>::infinity();
    CHECK_THROWS_AS(m.validate(), FormatError);
    m.states[0].components[0].var[0] = 1.0;
    m.states[0].components[0].mean[0] = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(m.validate(), FormatError);
  }
}

TEST_CASE("feature files with non-finite values are rejected") {
  std::string dir = testdata::scratch_dir("featnan");
  write_text_file_atomic(dir + "/bad.feat", "FEAT1 1 2\n0.5\nnan\n");
  CHECK_THROWS_WITH_AS(load_features(dir + "/bad.feat"), doctest::Contains("non-finite"),
                       FormatError);
  write_text_file_atomic(dir + "/bad2.feat", "FEAT1 1 1\ninf\n");
  CHECK_THROWS_AS(load_features(dir + "/bad2.feat"), FormatError);
}

TEST_CASE("model set io round-trips and re-validates") {
  ModelSet set = testdata::make_set({
      testdata::make_phone("a", Lang::kL2, {0.25, -1.5}, 1.25, 3),
      testdata::make_phone("b", Lang::kL2, {3.0, 2.0}, 0.75, 2),
  });
  std::string dir = testdata::scratch_dir("modelio");
  save_model_set(set, dir + "/set.json");
  ModelSet back = load_model_set(dir + "/set.json");
  CHECK(back.dim == set.dim);
  CHECK(back.inventory.size() == set.inventory.size());

  // 17-significant-digit serialization reproduces the exact doubles, so a
  // second save emits identical bytes.
  save_model_set(back, dir + "/set2.json");
  CHECK(read_text_file(dir + "/set.json") == read_text_file(dir + "/set2.json"));

  // Emission scores agree exactly.
  Rng rng(7);
  for (int i = 0; i < 10; ++i) {
    std::vector<double> frame{rng.normal(), rng.normal()};
    CHECK(log_emission(set.models.at("a").states[0], frame) ==
          log_emission(back.models.at("a").states[0], frame));
  }
}

TEST_CASE("model set loading rejects invariant violations with field paths") {
  ModelSet set = testdata::make_set({testdata::make_phone("a", Lang::kL2, {0.0}, 1.0, 2)});
  std::string text = model_set_to_json(set);

  SUBCASE("transition row summing to 0.9") {
    std::string bad = text;
    size_t pos = bad.find("[0,0.5,0.5,0]");
    REQUIRE(pos != std::string::npos);
    bad.replace(pos, 13, "[0,0.5,0.4,0]");
    CHECK_THROWS_WITH_AS(model_set_from_json(bad, "t"), doctest::Contains("row sums"),
                         FormatError);
  }
  SUBCASE("variance below the floor") {
    std::string bad = text;
    size_t pos = bad.find("\"var\": [1]");
    REQUIRE(pos != std::string::npos);
    bad.replace(pos, 10, "\"var\": [1e-9]");
    CHECK_THROWS_WITH_AS(model_set_from_json(bad, "t"), doctest::Contains("var[0]"),
                         FormatError);
  }
}

TEST_CASE("feature file round trip and validation") {
  std::string dir = testdata::scratch_dir("feat");
  Rng rng(3);
  FeatureMatrix f = testdata::random_features(rng, 5, 3);
  save_features(f, dir + "/a.feat");
  FeatureMatrix back = load_features(dir + "/a.feat");
  CHECK(back.dim == 3);
  CHECK(back.frames == 5);
  CHECK(back.data == f.data);

  write_text_file_atomic(dir + "/bad.feat", "FEAT1 2 2\n1 2\n3\n");
  CHECK_THROWS_AS(load_features(dir + "/bad.feat"), FormatError);
  write_text_file_atomic(dir + "/bad2.feat", "NOPE 2 2\n");
  CHECK_THROWS_AS(load_features(dir + "/bad2.feat"), FormatError);
}

TEST_CASE("label files round-trip and reject overlap") {
  std::string dir = testdata::scratch_dir("labels");
  Transcription t;
  t.segments = {{"a", 0, 4}, {"b", 4, 9}};
  double score = -123.456;
  save_labels(t, dir + "/x.lab", &score);
  double back_score = 0;
  Transcription back = load_labels(dir + "/x.lab", &back_score);
  CHECK(back == t);
  CHECK(back_score == score);

  write_text_file_atomic(dir + "/bad.lab", "0 5 a\n3 8 b\n");
  CHECK_THROWS_AS(load_labels(dir + "/bad.lab"), FormatError);
}

TEST_CASE("sample_utterance degenerate sampling pins frames to state means") {
  // Floor variance, no self-loops: one frame per state, at the mean.
  PhoneHmm a = testdata::make_phone_states("a", Lang::kL2, {{1.0}, {2.0}, {3.0}}, kVarFloor,
                                           /*self_loop=*/0.0);
  ModelSet set = testdata::make_set({a});
  auto [feats, trans] = sample_utterance(set, {"a"}, 42);
  REQUIRE(feats.frames == 3);
  for (int t = 0; t < 3; ++t)
    CHECK(std::abs(feats.frame(t)[0] - (t + 1.0)) < 6.0 * std::sqrt(kVarFloor));
  CHECK(trans.segments.size() == 1);
  CHECK(trans.segments[0].start == 0);
  CHECK(trans.segments[0].end == 3);
}

TEST_CASE("sample_utterance is deterministic in the seed") {
  ModelSet set = testdata::make_set({
      testdata::make_phone("a", Lang::kL2, {0.0, 1.0}, 1.0),
      testdata::make_phone("b", Lang::kL2, {5.0, -2.0}, 1.0),
  });
  auto [f1, t1] = sample_utterance(set, {"a", "b", "a"}, 99);
  auto [f2, t2] = sample_utterance(set, {"a", "b", "a"}, 99);
  CHECK(f1.data == f2.data);  // bit-identical
  CHECK(t1 == t2);
  auto [f3, t3] = sample_utterance(set, {"a", "b", "a"}, 100);
  CHECK(f1.data != f3.data);
}

TEST_CASE("sample_utterance segments tile [0, T)") {
  Rng seed_rng(5);
  ModelSet set = testdata::make_set({
      testdata::make_phone("a", Lang::kL2, {0.0}, 1.0),
      testdata::make_phone("b", Lang::kL2, {4.0}, 1.0),
  });
  for (uint64_t s = 0; s < 20; ++s) {
    auto [f, t] = sample_utterance(set, {"a", "b", "b", "a"}, s);
    REQUIRE(t.segments.size() == 4);
    CHECK(t.segments.front().start == 0);
    CHECK(t.segments.back().end == f.frames);
    for (size_t i = 1; i < t.segments.size(); ++i)
      CHECK(t.segments[i].start == t.segments[i - 1].end);
  }
}

TEST_CASE("empirical mean of a sampled state approaches its mean") {
  GmmState s = one_gaussian({2.0, -3.0}, {4.0, 1.0});
  Rng rng(17);
  const int n = 10000;
  double sum0 = 0, sum1 = 0;
  double frame[2];
  for (int i = 0; i < n; ++i) {
    sample_frame(s, rng, frame, 2);
    sum0 += frame[0];
    sum1 += frame[1];
  }
  CHECK(std::abs(sum0 / n - 2.0) < 5.0 * 2.0 / std::sqrt(static_cast<double>(n)));
  CHECK(std::abs(sum1 / n + 3.0) < 5.0 * 1.0 / std::sqrt(static_cast<double>(n)));
}

TEST_CASE("unknown phone id is a lookup failure") {
  ModelSet set = testdata::make_set({testdata::make_phone("a", Lang::kL2, {0.0}, 1.0)});
  CHECK_THROWS_WITH_AS(sample_utterance(set, {"zz"}, 1), doctest::Contains("unknown phone"),
                       FormatError);
}
