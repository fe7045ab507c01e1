// test_mllr.cpp
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

#include "nnasr/error.hpp"
#include "nnasr/mllr.hpp"
#include "testdata.hpp"

using namespace nnasr;

namespace {

// Two-phone set with two well-separated components per state, spanning the
// plane so a global affine transform is identifiable.
ModelSet spanning_set() {
  auto two_comp = [](const std::string& id, double x0, double y0, double x1, double y1) {
    PhoneHmm m;
    m.phone = {id, Lang::kL2};
    GmmState s;
    s.components.push_back({0.5, {x0, y0}, {1.0, 1.0}});
    s.components.push_back({0.5, {x1, y1}, {1.0, 1.0}});
    m.states.push_back(std::move(s));
    m.trans = uniform_left_right(1);
    m.validate();
    return m;
  };
  return testdata::make_set({
      two_comp("A", 0.0, 0.0, 10.0, 0.0),
      two_comp("B", 0.0, 10.0, 10.0, 10.0),
  });
}

std::vector<LabeledUtterance> corpus_from(const ModelSet& generator, int frames_per_utt,
                                          int n_utts, uint64_t seed) {
  std::vector<LabeledUtterance> corpus;
  std::vector<std::string> ids;
  for (const auto& p : generator.inventory) ids.push_back(p.id);
  for (int u = 0; u < n_utts; ++u) {
    Rng rng(mix_seed(seed, u));
    const std::string& id = ids[u % ids.size()];
    FeatureMatrix f;
    f.dim = generator.dim;
    for (int t = 0; t < frames_per_utt; ++t) {
      f.data.resize(f.data.size() + f.dim);
      sample_frame(generator.model(id).states[0], rng, f.data.data() + t * f.dim, f.dim);
    }
    f.frames = frames_per_utt;
    Transcription tr;
    tr.segments = {{id, 0, frames_per_utt}};
    corpus.push_back({std::move(f), tr});
  }
  return corpus;
}

}  // namespace

TEST_CASE("two states, two targets: the closed-form solution is recovered") {
  // Noiseless data y1, y2 against means mu1, mu2 at equal occupancy solves
  // a = (y1-y2)/(mu1-mu2), b = y1 - a*mu1 exactly.
  const double mu1 = 1.0, mu2 = 3.0, y1 = 2.5, y2 = -0.5;
  ModelSet set = testdata::make_set({
      testdata::make_phone("s1", Lang::kL2, {mu1}, 1.0, 1),
      testdata::make_phone("s2", Lang::kL2, {mu2}, 1.0, 1),
  });
  std::vector<LabeledUtterance> corpus;
  for (auto [id, y] : {std::pair{"s1", y1}, std::pair{"s2", y2}}) {
    FeatureMatrix f;
    f.dim = 1;
    f.frames = 10;
    f.data.assign(10, y);
    Transcription t;
    t.segments = {{id, 0, 10}};
    corpus.push_back({std::move(f), t});
  }
  MllrTransform tr = estimate_mllr(set, corpus);
  double a = (y1 - y2) / (mu1 - mu2);
  double b = y1 - a * mu1;
  CHECK(tr.A[0][0] == doctest::Approx(a).epsilon(1e-9));
  CHECK(tr.b[0] == doctest::Approx(b).epsilon(1e-9));
}

TEST_CASE("identity transform leaves scores untouched") {
  ModelSet set = spanning_set();
  ModelSet same = apply_mllr(set, MllrTransform::identity(2));
  Rng rng(5);
  for (int i = 0; i < 5; ++i) {
    std::vector<double> frame{rng.normal() * 3, rng.normal() * 3};
    CHECK(log_emission(set.model("A").states[0], frame) ==
          log_emission(same.model("A").states[0], frame));
  }
}

TEST_CASE("translation invariance of the Gaussian") {
  ModelSet set = spanning_set();
  MllrTransform shift = MllrTransform::identity(2);
  shift.b = {1.25, -0.75};
  ModelSet moved = apply_mllr(set, shift);
  Rng rng(6);
  for (int i = 0; i < 5; ++i) {
    std::vector<double> frame{rng.normal(), rng.normal()};
    std::vector<double> shifted{frame[0] + shift.b[0], frame[1] + shift.b[1]};
    CHECK(log_emission(moved.model("B").states[0], shifted) ==
          doctest::Approx(log_emission(set.model("B").states[0], frame)).epsilon(1e-12));
  }
}

TEST_CASE("transform composition is apply(A2 A1, A2 b1 + b2)") {
  Rng rng(9);
  ModelSet set = spanning_set();
  auto random_transform = [&rng] {
    MllrTransform t = MllrTransform::identity(2);
    for (int i = 0; i < 2; ++i) {
      t.b[i] = rng.normal();
      for (int j = 0; j < 2; ++j) t.A[i][j] += 0.3 * rng.normal();
    }
    return t;
  };
  for (int trial = 0; trial < 5; ++trial) {
    MllrTransform t1 = random_transform();
    MllrTransform t2 = random_transform();
    ModelSet stepwise = apply_mllr(apply_mllr(set, t1), t2);
    MllrTransform combined = MllrTransform::identity(2);
    for (int i = 0; i < 2; ++i) {
      combined.b[i] = t2.b[i];
      for (int j = 0; j < 2; ++j) {
        combined.A[i][j] = 0.0;
        for (int k = 0; k < 2; ++k) combined.A[i][j] += t2.A[i][k] * t1.A[k][j];
        combined.b[i] += t2.A[i][j] * t1.b[j];
      }
    }
    ModelSet direct = apply_mllr(set, combined);
    for (const auto& [id, m] : stepwise.models)
      for (size_t s = 0; s < m.states.size(); ++s)
        for (size_t k = 0; k < m.states[s].components.size(); ++k)
          for (int d = 0; d < 2; ++d)
            CHECK(m.states[s].components[k].mean[d] ==
                  doctest::Approx(
                      direct.models.at(id).states[s].components[k].mean[d])
                      .epsilon(1e-12));
  }
}

TEST_CASE("self-adaptation estimates a near-identity transform") {
  ModelSet set = spanning_set();
  std::vector<LabeledUtterance> corpus = corpus_from(set, 100, 50, 4242);  // 5000 frames
  MllrTransform t = estimate_mllr(set, corpus);
  for (int i = 0; i < 2; ++i) {
    CHECK(std::abs(t.b[i]) < 0.1);
    for (int j = 0; j < 2; ++j)
      CHECK(std::abs(t.A[i][j] - (i == j ? 1.0 : 0.0)) < 0.1);
  }
}

TEST_CASE("a planted global shift is recovered and likelihood improves") {
  ModelSet set = spanning_set();
  const std::vector<double> shift{1.0, -0.6};
  ModelSet moved = set;
  for (auto& [id, m] : moved.models)
    for (auto& s : m.states)
      for (auto& c : s.components)
        for (int d = 0; d < 2; ++d) c.mean[d] += shift[d];
  std::vector<LabeledUtterance> corpus = corpus_from(moved, 100, 50, 777);
  MllrTransform t = estimate_mllr(set, corpus);
  for (int i = 0; i < 2; ++i) {
    CHECK(std::abs(t.b[i] - shift[i]) < 0.1);
    for (int j = 0; j < 2; ++j)
      CHECK(std::abs(t.A[i][j] - (i == j ? 1.0 : 0.0)) < 0.1);
  }
  double before = corpus_loglik(set, corpus);
  double after = corpus_loglik(apply_mllr(set, t), corpus);
  CHECK(after >= before - 1e-6);
}

TEST_CASE("insufficient occupancy is reported") {
  // One active Gaussian cannot identify a 2-D transform.
  ModelSet set = testdata::make_set({testdata::make_phone("A", Lang::kL2, {0.0, 0.0}, 1.0, 1)});
  std::vector<LabeledUtterance> corpus = corpus_from(set, 20, 1, 1);
  CHECK_THROWS_WITH_AS(estimate_mllr(set, corpus), doctest::Contains("occupancy"),
                       NumericError);
}

TEST_CASE("apply_mllr rejects dimension mismatches") {
  ModelSet set = spanning_set();
  CHECK_THROWS_AS(apply_mllr(set, MllrTransform::identity(3)), UsageError);
}

TEST_CASE("transform file round trip") {
  MllrTransform t = MllrTransform::identity(2);
  t.A[0][1] = 0.25;
  t.b = {0.5, -1.5};
  std::string dir = testdata::scratch_dir("mllr");
  save_mllr(t, dir + "/t.json");
  MllrTransform back = load_mllr(dir + "/t.json");
  CHECK(back.A == t.A);
  CHECK(back.b == t.b);
}
