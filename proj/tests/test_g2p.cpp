// test_g2p.cpp
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

#include <algorithm>
#include <cmath>
#include <functional>

#include <doctest.h>

#include "ioutil.hpp"
#include "nnasr/error.hpp"
#include "nnasr/g2p.hpp"
#include "nnasr/rng.hpp"
#include "testdata.hpp"

using namespace nnasr;

namespace {

// Every phone always writes one fixed letter.
std::vector<DictEntry> bijective_dictionary() {
  // phones m,a,n,u,s <-> letters m,a,n,u,s over assorted words.
  return {
      {"man", {"m", "a", "n"}},
      {"sun", {"s", "u", "n"}},
      {"anna", {"a", "n", "n", "a"}},
      {"mass", {"m", "a", "s", "s"}},
      {"nus", {"n", "u", "s"}},
      {"sam", {"s", "a", "m"}},
      {"unman", {"u", "n", "m", "a", "n"}},
  };
}

}  // namespace

TEST_CASE("spelling normalization lowers, folds accents, strips the rest") {
  CHECK(normalize_spelling("Hello") == "hello");
  CHECK(normalize_spelling("caf\xc3\xa9") == "cafe");       // é
  CHECK(normalize_spelling("na\xc3\xafve") == "naive");     // ï
  CHECK(normalize_spelling("A-B_C 9!") == "abc");
  CHECK(normalize_spelling("\xc3\x86on") == "aeon");        // Æ
  CHECK(normalize_spelling("123") == "");
}

TEST_CASE("training on a bijective dictionary concentrates the emissions") {
  auto [model, ll] = train_g2p(bijective_dictionary(), 15);
  REQUIRE(ll.size() == 15);
  for (const std::string& phone : {"m", "a", "n", "u", "s"}) {
    int p = model.phone_index.at(phone);
    int best = 0;
    for (size_t c = 1; c < model.alphabet.size(); ++c)
      if (model.emission[p][c] > model.emission[p][best]) best = static_cast<int>(c);
    CHECK(model.alphabet[best] == phone[0]);
  }
}

TEST_CASE("a single two-letter word aligns one character per phone") {
  std::vector<DictEntry> dict{{"no", {"n", "o"}}};
  auto [model, ll] = train_g2p(dict, 5);
  GraphemeAlignment ga = align_g2p(model, "no", {"n", "o"});
  REQUIRE(ga.clusters.size() == 2);
  CHECK(ga.clusters[0] == "n");
  CHECK(ga.clusters[1] == "o");
}

TEST_CASE("training log-likelihood is nondecreasing on a random dictionary") {
  Rng rng(101);
  std::vector<DictEntry> dict;
  const std::string letters = "abcdef";
  const std::vector<std::string> phones{"P0", "P1", "P2", "P3", "P4"};
  for (int w = 0; w < 100; ++w) {
    DictEntry e;
    int len = 3 + rng.uniform_int(6);
    for (int i = 0; i < len; ++i) e.spelling += letters[rng.uniform_int(6)];
    int plen = 2 + rng.uniform_int(5);
    for (int i = 0; i < plen; ++i) e.phones.push_back(phones[rng.uniform_int(5)]);
    dict.push_back(std::move(e));
  }
  auto [model, ll] = train_g2p(dict, 10);
  REQUIRE(ll.size() == 10);
  for (size_t i = 1; i < ll.size(); ++i) CHECK(ll[i] >= ll[i - 1] - 1e-6);
}

TEST_CASE("alignments partition the normalized spelling") {
  auto dict = bijective_dictionary();
  auto [model, ll] = train_g2p(dict, 8);
  for (const DictEntry& e : dict) {
    GraphemeAlignment ga = align_g2p(model, e.spelling, e.phones);
    std::string joined;
    for (const std::string& c : ga.clusters) joined += c;
    CHECK(joined == normalize_spelling(e.spelling));
  }
}

TEST_CASE("five-phone word splits into the expected clusters") {
  // With m, n, s pinned by the bijective data and the vowels seen against
  // their own letters, the alignment gives one letter per phone.
  auto dict = bijective_dictionary();
  dict.push_back({"mi", {"m", "aI"}});
  dict.push_back({"si", {"s", "aI"}});
  dict.push_back({"mus", {"m", "@", "s"}});
  dict.push_back({"nu", {"n", "@"}});
  auto [model, ll] = train_g2p(dict, 15);
  GraphemeAlignment ga = align_g2p(model, "minus", {"m", "aI", "n", "@", "s"});
  REQUIRE(ga.clusters.size() == 5);
  CHECK(ga.clusters[0] == "m");
  CHECK(ga.clusters[1] == "i");
  CHECK(ga.clusters[2] == "n");
  CHECK(ga.clusters[3] == "u");
  CHECK(ga.clusters[4] == "s");
}

TEST_CASE("equal lengths with a diagonal-dominant model give the identity split") {
  // Enumerate all monotone partitions by brute force and check Viterbi
  // picked the maximum-probability one.
  std::vector<DictEntry> dict = bijective_dictionary();
  auto [model, ll] = train_g2p(dict, 10);
  const std::string spelling = "mans";
  const std::vector<std::string> phones{"m", "a", "n", "s"};
  GraphemeAlignment got = align_g2p(model, spelling, phones);

  // Probability of a specific partition under the model.
  auto partition_logp = [&](const std::vector<int>& lens) {
    double acc = 0.0;
    int pos = 0;
    for (size_t j = 0; j < phones.size(); ++j) {
      int p = model.phone_index.at(phones[j]);
      int k = lens[j];
      double stay = model.stay[p], skip = model.skip[p];
      double adv = 1.0 - stay - skip;
      if (k == 0) {
        acc += std::log(skip);
      } else {
        acc += std::log(std::pow(stay, k - 1) * adv + std::pow(stay, k) * skip);
        for (int i = 0; i < k; ++i)
          acc += std::log(model.emission[p][model.char_index(spelling[pos + i])]);
      }
      pos += k;
    }
    return acc;
  };
  double best = -1e300;
  std::vector<int> lens(4, 0);
  std::function<void(int, int)> enumerate = [&](int j, int left) {
    if (j == 3) {
      lens[3] = left;
      best = std::max(best, partition_logp(lens));
      return;
    }
    for (int k = 0; k <= left; ++k) {
      lens[j] = k;
      enumerate(j + 1, left - k);
    }
  };
  enumerate(0, 4);
  std::vector<int> got_lens;
  for (const std::string& c : got.clusters) got_lens.push_back(static_cast<int>(c.size()));
  CHECK(partition_logp(got_lens) == doctest::Approx(best).epsilon(1e-9));
  CHECK(got.clusters == std::vector<std::string>{"m", "a", "n", "s"});
}

TEST_CASE("no skip mass makes surplus phones infeasible") {
  std::vector<DictEntry> dict{{"ab", {"A", "B"}}};
  auto [model, ll] = train_g2p(dict, 3);
  for (double& s : model.skip) s = 0.0;
  CHECK_THROWS_AS(align_g2p(model, "a", {"A", "B"}), NumericError);
}

TEST_CASE("unknown characters and phones are lookup errors") {
  auto [model, ll] = train_g2p(bijective_dictionary(), 3);
  CHECK_THROWS_AS(align_g2p(model, "xyz", {"m"}), FormatError);
  CHECK_THROWS_AS(align_g2p(model, "man", {"zz"}), FormatError);
}

TEST_CASE("infeasible dictionary entries are skipped with warnings") {
  std::vector<DictEntry> dict{
      {"ok", {"o", "k"}},
      {"", {"p"}},           // empty spelling
      {"word", {}},          // empty pronunciation
  };
  std::vector<std::string> warnings;
  auto [model, ll] = train_g2p(dict, 3, 0, &warnings);
  CHECK(warnings.size() == 2);
}

TEST_CASE("g2p model files with non-finite parameters are rejected") {
  auto [model, ll] = train_g2p(bijective_dictionary(), 3);
  std::string dir = testdata::scratch_dir("g2pnan");
  save_g2p(model, dir + "/m.json");
  std::string text = read_text_file(dir + "/m.json");
  size_t pos = text.find("\"stay\": [");
  REQUIRE(pos != std::string::npos);
  text.insert(pos + 9, "null, ");
  write_text_file_atomic(dir + "/bad.json", text);
  CHECK_THROWS_AS(load_g2p(dir + "/bad.json"), FormatError);
}

TEST_CASE("g2p model file round trip") {
  auto [model, ll] = train_g2p(bijective_dictionary(), 5);
  std::string dir = testdata::scratch_dir("g2p");
  save_g2p(model, dir + "/m.json");
  G2PModel back = load_g2p(dir + "/m.json");
  CHECK(back.phones == model.phones);
  CHECK(back.alphabet == model.alphabet);
  CHECK(back.emission == model.emission);  // 17-digit exact
  CHECK(back.stay == model.stay);
  CHECK(back.skip == model.skip);
}
