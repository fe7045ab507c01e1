// score.cpp
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

#include "nnasr/score.hpp"

#include <algorithm>
#include <cstdio>
#include <map>

#include "ioutil.hpp"
#include "nnasr/error.hpp"

namespace nnasr {

EditCounts edit_align(const std::vector<std::string>& ref,
                      const std::vector<std::string>& hyp,
                      std::vector<EditOp>* alignment) {
  const int R = static_cast<int>(ref.size());
  const int H = static_cast<int>(hyp.size());
  std::vector<int> cost(static_cast<size_t>(R + 1) * (H + 1));
  std::vector<signed char> from(static_cast<size_t>(R + 1) * (H + 1));
  auto at = [H](int r, int h) { return static_cast<size_t>(r) * (H + 1) + h; };
  enum { kDiag = 0, kUp = 1, kLeft = 2 };  // match/sub, deletion, insertion

  cost[at(0, 0)] = 0;
  for (int r = 1; r <= R; ++r) {
    cost[at(r, 0)] = r;
    from[at(r, 0)] = kUp;
  }
  for (int h = 1; h <= H; ++h) {
    cost[at(0, h)] = h;
    from[at(0, h)] = kLeft;
  }
  for (int r = 1; r <= R; ++r)
    for (int h = 1; h <= H; ++h) {
      int diag = cost[at(r - 1, h - 1)] + (ref[r - 1] == hyp[h - 1] ? 0 : 1);
      int up = cost[at(r - 1, h)] + 1;
      int left = cost[at(r, h - 1)] + 1;
      // Tie order: substitution/match, then deletion, then insertion.
      int best = diag;
      signed char dir = kDiag;
      if (up < best) {
        best = up;
        dir = kUp;
      }
      if (left < best) {
        best = left;
        dir = kLeft;
      }
      cost[at(r, h)] = best;
      from[at(r, h)] = dir;
    }

  EditCounts counts;
  std::vector<EditOp> ops;
  int r = R, h = H;
  while (r > 0 || h > 0) {
    switch (from[at(r, h)]) {
      case kDiag:
        ops.push_back(ref[r - 1] == hyp[h - 1] ? EditOp::kMatch : EditOp::kSub);
        if (ref[r - 1] != hyp[h - 1]) ++counts.subs;
        --r;
        --h;
        break;
      case kUp:
        ops.push_back(EditOp::kDel);
        ++counts.dels;
        --r;
        break;
      default:
        ops.push_back(EditOp::kIns);
        ++counts.ins;
        --h;
        break;
    }
  }
  if (alignment) {
    std::reverse(ops.begin(), ops.end());
    *alignment = std::move(ops);
  }
  return counts;
}

double ScoreReport::wer() const {
  long errors = 0, words = 0;
  for (const UtteranceScore& u : utterances) {
    errors += u.subs + u.dels + u.ins;
    words += u.ref_len;
  }
  return words == 0 ? 0.0 : 100.0 * static_cast<double>(errors) / static_cast<double>(words);
}

double ScoreReport::ser() const {
  if (utterances.empty()) return 0.0;
  long wrong = 0;
  for (const UtteranceScore& u : utterances)
    if (!u.correct) ++wrong;
  return 100.0 * static_cast<double>(wrong) / static_cast<double>(utterances.size());
}

ScoreReport corpus_score(const std::vector<ScoredPair>& pairs) {
  ScoreReport report;
  for (const ScoredPair& p : pairs) {
    EditCounts c = edit_align(p.ref, p.hyp);
    UtteranceScore u;
    u.id = p.id;
    u.subs = c.subs;
    u.dels = c.dels;
    u.ins = c.ins;
    u.ref_len = static_cast<int>(p.ref.size());
    u.correct = c.total() == 0;
    report.utterances.push_back(std::move(u));
  }
  return report;
}

ScoreReport corpus_score(
    const std::vector<std::pair<std::string, std::vector<std::string>>>& refs,
    const std::vector<std::pair<std::string, std::vector<std::string>>>& hyps) {
  std::map<std::string, const std::vector<std::string>*> hyp_by_id;
  for (const auto& [id, words] : hyps) {
    if (!hyp_by_id.emplace(id, &words).second)
      throw UsageError("corpus_score: duplicate hypothesis id '" + id + "'");
  }
  std::string missing, extra;
  std::vector<ScoredPair> pairs;
  for (const auto& [id, ref] : refs) {
    auto it = hyp_by_id.find(id);
    if (it == hyp_by_id.end()) {
      missing += (missing.empty() ? "" : ", ") + id;
      continue;
    }
    pairs.push_back({id, ref, *it->second});
    hyp_by_id.erase(it);
  }
  for (const auto& [id, words] : hyp_by_id) extra += (extra.empty() ? "" : ", ") + id;
  if (!missing.empty() || !extra.empty())
    throw UsageError("corpus_score: utterance ids mismatch" +
                     (missing.empty() ? "" : "; missing hypotheses: " + missing) +
                     (extra.empty() ? "" : "; unmatched hypotheses: " + extra));
  return corpus_score(pairs);
}

double relative_reduction(double baseline, double adapted) {
  if (baseline == 0.0) return 0.0;
  return 100.0 * (baseline - adapted) / baseline;
}

namespace {
std::string pct(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}
}  // namespace

std::string report_tsv(const std::vector<std::pair<std::string, const ScoreReport*>>& systems) {
  std::string out = "system\tWER\tSER\n";
  for (const auto& [name, report] : systems)
    out += name + "\t" + pct(report->wer()) + "\t" + pct(report->ser()) + "\n";
  return out;
}

std::string report_detail_tsv(const ScoreReport& report) {
  std::string out = "utterance\tsubs\tdels\tins\tref_len\tcorrect\n";
  for (const UtteranceScore& u : report.utterances)
    out += u.id + "\t" + std::to_string(u.subs) + "\t" + std::to_string(u.dels) + "\t" +
           std::to_string(u.ins) + "\t" + std::to_string(u.ref_len) + "\t" +
           (u.correct ? "1" : "0") + "\n";
  return out;
}

}  // namespace nnasr
