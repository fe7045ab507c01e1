// g2p.cpp
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

#include "nnasr/g2p.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include <json.hpp>

#include "ioutil.hpp"
#include "nnasr/error.hpp"
#include "nnasr/lexicon.hpp"
#include "nnasr/rng.hpp"

namespace nnasr {

std::vector<DictEntry> dictionary_from_lexicon(const Lexicon& lexicon) {
  std::vector<DictEntry> out;
  for (const std::string& word : lexicon.word_order)
    for (const auto& pron : lexicon.entries.at(word))
      out.push_back({word, pron});
  return out;
}

namespace {
constexpr double kNegInf = -std::numeric_limits<double>::infinity();

inline double log_add(double a, double b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  if (a < b) std::swap(a, b);
  return a + std::log1p(std::exp(b - a));
}

double safe_log(double p) { return p > 0.0 ? std::log(p) : kNegInf; }

// n * logv with the 0 * -inf corner pinned to 0.
inline double nlog(int n, double logv) { return n <= 0 ? 0.0 : n * logv; }

// Accent folding for Latin-1 and common precomposed code points.
std::string fold_codepoint(uint32_t cp) {
  if (cp >= 'a' && cp <= 'z') return std::string(1, static_cast<char>(cp));
  if (cp >= 'A' && cp <= 'Z') return std::string(1, static_cast<char>(cp - 'A' + 'a'));
  switch (cp) {
    case 0xE0: case 0xE1: case 0xE2: case 0xE3: case 0xE4: case 0xE5:
    case 0xC0: case 0xC1: case 0xC2: case 0xC3: case 0xC4: case 0xC5: return "a";
    case 0xE7: case 0xC7: return "c";
    case 0xE8: case 0xE9: case 0xEA: case 0xEB:
    case 0xC8: case 0xC9: case 0xCA: case 0xCB: return "e";
    case 0xEC: case 0xED: case 0xEE: case 0xEF:
    case 0xCC: case 0xCD: case 0xCE: case 0xCF: return "i";
    case 0xF1: case 0xD1: return "n";
    case 0xF2: case 0xF3: case 0xF4: case 0xF5: case 0xF6:
    case 0xD2: case 0xD3: case 0xD4: case 0xD5: case 0xD6: return "o";
    case 0xF9: case 0xFA: case 0xFB: case 0xFC:
    case 0xD9: case 0xDA: case 0xDB: case 0xDC: return "u";
    case 0xFD: case 0xFF: case 0xDD: return "y";
    case 0xE6: case 0xC6: return "ae";
    case 0x153: case 0x152: return "oe";
    case 0xDF: return "ss";
    default: return "";
  }
}

// Per-word alignment lattice: f[j][l] = log prob that the first j phones
// consumed the first l characters.
struct WordDp {
  int M = 0;
  int L = 0;
  std::vector<double> f;  // (M+1) x (L+1)
  double& at(int j, int l) { return f[static_cast<size_t>(j) * (L + 1) + l]; }
};

}  // namespace

int G2PModel::char_index(char c) const {
  size_t pos = alphabet.find(c);
  return pos == std::string::npos ? -1 : static_cast<int>(pos);
}

void G2PModel::validate() const {
  if (phones.empty()) throw FormatError("g2p model: no phones");
  if (alphabet.empty()) throw FormatError("g2p model: empty alphabet");
  const size_t P = phones.size();
  if (emission.size() != P || stay.size() != P || skip.size() != P)
    throw FormatError("g2p model: table sizes disagree with phone count");
  for (size_t p = 0; p < P; ++p) {
    if (emission[p].size() != alphabet.size())
      throw FormatError("g2p model: emission row size mismatch for '" + phones[p] + "'");
    double esum = 0.0;
    for (double v : emission[p]) {
      if (!std::isfinite(v) || v < 0.0)
        throw FormatError("g2p model: bad emission for '" + phones[p] + "'");
      esum += v;
    }
    if (!(std::abs(esum - 1.0) <= 1e-6))
      throw FormatError("g2p model: emissions for '" + phones[p] + "' sum to " + std::to_string(esum));
    if (!(stay[p] >= 0.0 && stay[p] < 1.0))
      throw FormatError("g2p model: stay out of [0,1) for '" + phones[p] + "'");
    if (!(skip[p] >= 0.0 && skip[p] <= 1.0 && stay[p] + skip[p] <= 1.0 + 1e-6))
      throw FormatError("g2p model: stay+advance+skip not stochastic for '" + phones[p] + "'");
  }
}

std::string normalize_spelling(const std::string& word) {
  std::string out;
  size_t i = 0;
  while (i < word.size()) {
    uint32_t cp = static_cast<unsigned char>(word[i]);
    size_t len = 1;
    if ((cp & 0x80u) != 0) {
      if ((cp & 0xE0u) == 0xC0u) len = 2;
      else if ((cp & 0xF0u) == 0xE0u) len = 3;
      else if ((cp & 0xF8u) == 0xF0u) len = 4;
      uint32_t acc = cp & (0xFFu >> (len + 1));
      for (size_t k = 1; k < len && i + k < word.size(); ++k)
        acc = (acc << 6) | (static_cast<unsigned char>(word[i + k]) & 0x3Fu);
      cp = acc;
    }
    out += fold_codepoint(cp);
    i += len;
  }
  return out;
}

std::pair<G2PModel, std::vector<double>> train_g2p(
    const std::vector<DictEntry>& dictionary, int n_iters, uint64_t seed,
    std::vector<std::string>* warnings) {
  if (dictionary.empty()) throw UsageError("train_g2p: empty dictionary");
  if (n_iters < 1) throw UsageError("train_g2p: need at least one iteration");

  struct Item {
    std::string spelling;
    std::vector<int> phones;
  };
  std::set<std::string> phone_set;
  std::set<char> char_set;
  std::vector<std::pair<std::string, std::vector<std::string>>> raw;
  for (const DictEntry& e : dictionary) {
    std::string norm = normalize_spelling(e.spelling);
    if (norm.empty()) {
      if (warnings) warnings->push_back("'" + e.spelling + "': spelling empty after normalization, skipped");
      continue;
    }
    if (e.phones.empty()) {
      if (warnings) warnings->push_back("'" + e.spelling + "': empty pronunciation, skipped");
      continue;
    }
    for (char c : norm) char_set.insert(c);
    for (const std::string& p : e.phones) phone_set.insert(p);
    raw.emplace_back(norm, e.phones);
  }
  if (raw.empty()) throw UsageError("train_g2p: no usable dictionary entries");

  G2PModel model;
  model.phones.assign(phone_set.begin(), phone_set.end());
  for (size_t p = 0; p < model.phones.size(); ++p) model.phone_index[model.phones[p]] = static_cast<int>(p);
  model.alphabet.assign(char_set.begin(), char_set.end());
  const size_t P = model.phones.size();
  const size_t C = model.alphabet.size();

  Rng rng(mix_seed(seed, 0x672fULL));
  model.emission.assign(P, std::vector<double>(C, 0.0));
  for (size_t p = 0; p < P; ++p) {
    double sum = 0.0;
    for (size_t c = 0; c < C; ++c) {
      model.emission[p][c] = 1.0 + 1e-3 * (2.0 * rng.uniform() - 1.0);
      sum += model.emission[p][c];
    }
    for (size_t c = 0; c < C; ++c) model.emission[p][c] /= sum;
  }
  model.stay.assign(P, 0.3);
  model.skip.assign(P, 0.05);

  std::vector<Item> items;
  for (auto& [norm, phones] : raw) {
    Item it;
    it.spelling = norm;
    for (const std::string& p : phones) it.phones.push_back(model.phone_index.at(p));
    items.push_back(std::move(it));
  }

  std::vector<bool> usable(items.size(), true);
  std::vector<double> loglik_per_iter;

  for (int iter = 0; iter < n_iters; ++iter) {
    std::vector<double> log_stay(P), log_skip(P), log_adv(P);
    std::vector<std::vector<double>> log_em(P, std::vector<double>(C));
    for (size_t p = 0; p < P; ++p) {
      log_stay[p] = safe_log(model.stay[p]);
      log_skip[p] = safe_log(model.skip[p]);
      log_adv[p] = safe_log(1.0 - model.stay[p] - model.skip[p]);
      for (size_t c = 0; c < C; ++c) log_em[p][c] = safe_log(model.emission[p][c]);
    }

    std::vector<double> c_stay(P, 0.0), c_skip(P, 0.0), c_adv(P, 0.0);
    std::vector<std::vector<double>> c_em(P, std::vector<double>(C, 0.0));
    double total_ll = 0.0;
    bool any = false;

    for (size_t w = 0; w < items.size(); ++w) {
      if (!usable[w]) continue;
      const Item& item = items[w];
      const int M = static_cast<int>(item.phones.size());
      const int L = static_cast<int>(item.spelling.size());
      std::vector<int> chars(L);
      for (int l = 0; l < L; ++l) chars[l] = model.char_index(item.spelling[l]);

      // Span score of phone p over characters [l0, l0+k).
      auto span = [&](int p, int l0, int k, bool end_with_skip) {
        double w0;
        if (k == 0) {
          w0 = log_skip[p];
        } else if (end_with_skip) {
          w0 = nlog(k, log_stay[p]) + log_skip[p];
        } else {
          w0 = nlog(k - 1, log_stay[p]) + log_adv[p];
        }
        for (int i = 0; i < k; ++i) w0 += log_em[p][chars[l0 + i]];
        return w0;
      };

      WordDp fwd{M, L, std::vector<double>(static_cast<size_t>(M + 1) * (L + 1), kNegInf)};
      WordDp bwd = fwd;
      fwd.at(0, 0) = 0.0;
      for (int j = 1; j <= M; ++j) {
        int p = item.phones[j - 1];
        for (int l = 0; l <= L; ++l)
          for (int k = 0; k <= l; ++k) {
            double prev = fwd.at(j - 1, l - k);
            if (prev == kNegInf) continue;
            double acc = kNegInf;
            if (k == 0) {
              acc = span(p, l, 0, true);
            } else {
              acc = log_add(span(p, l - k, k, false), span(p, l - k, k, true));
            }
            fwd.at(j, l) = log_add(fwd.at(j, l), prev + acc);
          }
      }
      double word_ll = fwd.at(M, L);
      if (word_ll == kNegInf) {
        usable[w] = false;
        if (warnings)
          warnings->push_back("'" + item.spelling + "': no feasible alignment, skipped");
        continue;
      }
      any = true;
      total_ll += word_ll;

      bwd.at(M, L) = 0.0;
      for (int j = M - 1; j >= 0; --j) {
        int p = item.phones[j];
        for (int l = L; l >= 0; --l)
          for (int k = 0; k + l <= L; ++k) {
            double next = bwd.at(j + 1, l + k);
            if (next == kNegInf) continue;
            double acc = k == 0 ? span(p, l, 0, true)
                                : log_add(span(p, l, k, false), span(p, l, k, true));
            bwd.at(j, l) = log_add(bwd.at(j, l), acc + next);
          }
      }

      // Posterior edge counts.
      for (int j = 1; j <= M; ++j) {
        int p = item.phones[j - 1];
        for (int l = 0; l <= L; ++l) {
          double next = bwd.at(j, l);
          if (next == kNegInf) continue;
          for (int k = 0; k <= l; ++k) {
            double prev = fwd.at(j - 1, l - k);
            if (prev == kNegInf) continue;
            if (k == 0) {
              double post = std::exp(prev + span(p, l, 0, true) + next - word_ll);
              c_skip[p] += post;
              continue;
            }
            double post_adv = std::exp(prev + span(p, l - k, k, false) + next - word_ll);
            double post_skp = std::exp(prev + span(p, l - k, k, true) + next - word_ll);
            c_stay[p] += (k - 1) * post_adv + k * post_skp;
            c_adv[p] += post_adv;
            c_skip[p] += post_skp;
            for (int i = 0; i < k; ++i)
              c_em[p][chars[l - k + i]] += post_adv + post_skp;
          }
        }
      }
    }
    if (!any) throw UsageError("train_g2p: every dictionary entry was skipped");
    loglik_per_iter.push_back(total_ll);

    for (size_t p = 0; p < P; ++p) {
      double act = c_stay[p] + c_adv[p] + c_skip[p];
      if (act > 0.0) {
        model.stay[p] = c_stay[p] / act;
        model.skip[p] = c_skip[p] / act;
      }
      double esum = 0.0;
      for (size_t c = 0; c < C; ++c) esum += c_em[p][c];
      if (esum > 0.0)
        for (size_t c = 0; c < C; ++c) model.emission[p][c] = c_em[p][c] / esum;
    }
  }
  model.validate();
  return {std::move(model), std::move(loglik_per_iter)};
}

GraphemeAlignment align_g2p(const G2PModel& model, const std::string& spelling,
                            const std::vector<std::string>& phones) {
  model.validate();
  std::string norm = normalize_spelling(spelling);
  if (phones.empty()) throw UsageError("align_g2p: empty pronunciation");
  std::vector<int> pidx;
  for (const std::string& p : phones) {
    auto it = model.phone_index.find(p);
    if (it == model.phone_index.end())
      throw FormatError("align_g2p: unknown phone '" + p + "'");
    pidx.push_back(it->second);
  }
  const int M = static_cast<int>(pidx.size());
  const int L = static_cast<int>(norm.size());
  std::vector<int> chars(L);
  for (int l = 0; l < L; ++l) {
    chars[l] = model.char_index(norm[l]);
    if (chars[l] < 0)
      throw FormatError("align_g2p: character '" + std::string(1, norm[l]) +
                        "' of '" + spelling + "' not in model alphabet");
  }

  std::vector<double> log_stay(model.phones.size()), log_skip(model.phones.size()),
      log_adv(model.phones.size());
  for (size_t p = 0; p < model.phones.size(); ++p) {
    log_stay[p] = safe_log(model.stay[p]);
    log_skip[p] = safe_log(model.skip[p]);
    log_adv[p] = safe_log(1.0 - model.stay[p] - model.skip[p]);
  }

  WordDp dp{M, L, std::vector<double>(static_cast<size_t>(M + 1) * (L + 1), kNegInf)};
  std::vector<int> back(static_cast<size_t>(M + 1) * (L + 1), -1);  // chars consumed
  dp.at(0, 0) = 0.0;
  for (int j = 1; j <= M; ++j) {
    int p = pidx[j - 1];
    for (int l = 0; l <= L; ++l) {
      double best = kNegInf;
      int best_k = -1;
      // Candidates in tie preference order: advance endings with ascending
      // span length, then skip endings.
      for (int k = 1; k <= l; ++k) {
        double prev = dp.at(j - 1, l - k);
        if (prev == kNegInf) continue;
        double w = nlog(k - 1, log_stay[p]) + log_adv[p];
        for (int i = 0; i < k; ++i) w += safe_log(model.emission[p][chars[l - k + i]]);
        if (prev + w > best) {
          best = prev + w;
          best_k = k;
        }
      }
      for (int k = 0; k <= l; ++k) {
        double prev = dp.at(j - 1, l - k);
        if (prev == kNegInf) continue;
        double w = nlog(k, log_stay[p]) + log_skip[p];
        for (int i = 0; i < k; ++i) w += safe_log(model.emission[p][chars[l - k + i]]);
        if (prev + w > best) {
          best = prev + w;
          best_k = k;
        }
      }
      dp.at(j, l) = best;
      back[static_cast<size_t>(j) * (L + 1) + l] = best_k;
    }
  }
  if (dp.at(M, L) == kNegInf)
    throw NumericError("align_g2p: no feasible alignment of '" + spelling + "' (" +
                       std::to_string(M) + " phones over " + std::to_string(L) + " characters)");

  GraphemeAlignment out;
  out.clusters.assign(M, "");
  int l = L;
  for (int j = M; j >= 1; --j) {
    int k = back[static_cast<size_t>(j) * (L + 1) + l];
    out.clusters[j - 1] = norm.substr(l - k, k);
    l -= k;
  }
  return out;
}

G2PModel load_g2p(const std::string& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_text_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(path + ": " + e.what());
  }
  G2PModel m;
  try {
    m.phones = j.at("phones").get<std::vector<std::string>>();
    m.alphabet = j.at("alphabet").get<std::string>();
    m.emission = j.at("emission").get<std::vector<std::vector<double>>>();
    m.stay = j.at("stay").get<std::vector<double>>();
    m.skip = j.at("skip").get<std::vector<double>>();
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(path + ": " + e.what());
  }
  for (size_t p = 0; p < m.phones.size(); ++p) m.phone_index[m.phones[p]] = static_cast<int>(p);
  try {
    m.validate();
  } catch (const FormatError& e) {
    throw FormatError(path + ": " + e.what());
  }
  return m;
}

void save_g2p(const G2PModel& model, const std::string& path) {
  model.validate();
  std::string out = "{\n  \"phones\": " + nlohmann::json(model.phones).dump() +
                    ",\n  \"alphabet\": " + nlohmann::json(model.alphabet).dump() +
                    ",\n  \"emission\": [";
  for (size_t p = 0; p < model.emission.size(); ++p) {
    out += p ? ",\n    [" : "\n    [";
    for (size_t c = 0; c < model.emission[p].size(); ++c) {
      if (c) out += ",";
      out += format_g17(model.emission[p][c]);
    }
    out += "]";
  }
  out += "\n  ],\n  \"stay\": [";
  for (size_t p = 0; p < model.stay.size(); ++p)
    out += (p ? "," : "") + format_g17(model.stay[p]);
  out += "],\n  \"skip\": [";
  for (size_t p = 0; p < model.skip.size(); ++p)
    out += (p ? "," : "") + format_g17(model.skip[p]);
  out += "]\n}\n";
  write_text_file_atomic(path, out);
}

}  // namespace nnasr
