// test_composite.cpp
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

#include "nnasr/composite.hpp"
#include "nnasr/decode.hpp"
#include "nnasr/error.hpp"
#include "oracles.hpp"
#include "testdata.hpp"

using namespace nnasr;

TEST_CASE("concatenating a single model is the identity") {
  Rng rng(11);
  ModelSet set = testdata::random_set(rng, 1, 2, 3, Lang::kL2);
  FeatureMatrix f = testdata::random_features(rng, 5, 2);
  CompositeHmm one = concatenate(set, {"p0"});
  DecodeResult via_composite = decode_composite(f, one);
  DecodeResult via_align = viterbi_align(f, {"p0"}, set);
  CHECK(via_composite.log_score == via_align.log_score);
}

TEST_CASE("two-model concatenation equals the best split over frames") {
  Rng rng(23);
  for (int trial = 0; trial < 10; ++trial) {
    ModelSet set = testdata::make_set({
        testdata::random_phone(rng, "A", Lang::kL2, 1, 2),
        testdata::random_phone(rng, "B", Lang::kL2, 1, 2),
    });
    FeatureMatrix f = testdata::random_features(rng, 4, 1);
    double got = decode_composite(f, concatenate(set, {"A", "B"})).log_score;

    // Best over split points: frames [0,t) in A, [t,4) in B; constituent
    // scores include their own entry and exit terms.
    double best = -INFINITY;
    for (int t = 1; t < 4; ++t) {
      FeatureMatrix fa, fb;
      fa.dim = fb.dim = 1;
      fa.frames = t;
      fb.frames = 4 - t;
      fa.data.assign(f.data.begin(), f.data.begin() + t);
      fb.data.assign(f.data.begin() + t, f.data.end());
      oracle::BestPath pa = oracle::align_oracle(set, {"A"}, fa);
      oracle::BestPath pb = oracle::align_oracle(set, {"B"}, fb);
      if (pa.feasible && pb.feasible)
        best = std::max(best, pa.log_score + pb.log_score);
    }
    CHECK(got == doctest::Approx(best).epsilon(1e-12));
  }
}

TEST_CASE("concatenation is associative") {
  Rng rng(31);
  for (int trial = 0; trial < 10; ++trial) {
    PhoneHmm a = testdata::random_phone(rng, "A", Lang::kL2, 1, 3);
    PhoneHmm b = testdata::random_phone(rng, "B", Lang::kL2, 1, 3);
    PhoneHmm c = testdata::random_phone(rng, "C", Lang::kL2, 1, 3);
    std::vector<CompositeHmm> left;
    left.push_back(concatenate({&a, &b}));
    left.push_back(composite_from_phone(c));
    CompositeHmm lc = concatenate_composites(std::move(left));
    std::vector<CompositeHmm> right;
    right.push_back(composite_from_phone(a));
    right.push_back(concatenate({&b, &c}));
    CompositeHmm rc = concatenate_composites(std::move(right));

    FeatureMatrix f = testdata::random_features(rng, 6, 1);
    double ls = decode_composite(f, lc).log_score;
    double rs = decode_composite(f, rc).log_score;
    CHECK(ls == doctest::Approx(rs).epsilon(1e-12));
  }
}

TEST_CASE("concatenation preserves constituent path probabilities exactly") {
  // Brute force on small instances: composite best equals enumeration over
  // the raw transition matrices.
  Rng rng(41);
  for (int trial = 0; trial < 15; ++trial) {
    ModelSet set = testdata::make_set({
        testdata::random_phone(rng, "A", Lang::kL2, 2, 3),
        testdata::random_phone(rng, "B", Lang::kL2, 2, 3),
    });
    int T = 2 + rng.uniform_int(5);
    FeatureMatrix f = testdata::random_features(rng, T, 2);
    oracle::BestPath want = oracle::align_oracle(set, {"A", "B"}, f);
    if (!want.feasible) {
      CHECK_THROWS_AS(decode_composite(f, concatenate(set, {"A", "B"})), NumericError);
      continue;
    }
    DecodeResult got = decode_composite(f, concatenate(set, {"A", "B"}));
    CHECK(std::abs(got.log_score - want.log_score) < 1e-9);
  }
}

TEST_CASE("min_frames accounts for skip arcs") {
  PhoneHmm m = testdata::make_phone("a", Lang::kL2, {0.0}, 1.0, 3);
  CHECK(composite_from_phone(m).min_frames() == 3);
  // Allow state 1 to hop straight to state 3.
  m.trans[1][2] = 0.25;
  m.trans[1][3] = 0.25;
  m.validate();
  CHECK(composite_from_phone(m).min_frames() == 2);
}

TEST_CASE("empty concatenation is a usage error") {
  CHECK_THROWS_AS(concatenate(std::vector<const PhoneHmm*>{}), UsageError);
}

TEST_CASE("merged branches leave constituent structure untouched") {
  Rng rng(53);
  PhoneHmm native = testdata::random_phone(rng, "N", Lang::kL2, 1, 2);
  PhoneHmm alt = testdata::random_phone(rng, "Q", Lang::kL1, 1, 2);
  std::vector<CompositeHmm> branches;
  branches.push_back(composite_from_phone(native));
  branches.push_back(composite_from_phone(alt));
  CompositeHmm merged = merge_branches(std::move(branches), {std::log(0.5), std::log(0.5)});
  CHECK_FALSE(merged.trainable);

  // Score through the merged graph equals the better weighted branch.
  FeatureMatrix f = testdata::random_features(rng, 3, 1);
  double native_score = decode_composite(f, composite_from_phone(native)).log_score;
  double alt_score = decode_composite(f, composite_from_phone(alt)).log_score;
  double merged_score = decode_composite(f, merged).log_score;
  CHECK(merged_score ==
        doctest::Approx(std::max(native_score, alt_score) + std::log(0.5)).epsilon(1e-12));
}
