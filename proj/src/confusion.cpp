// confusion.cpp
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

#include "nnasr/confusion.hpp"

#include <algorithm>
#include <map>

#include "ioutil.hpp"
#include "nnasr/error.hpp"

namespace nnasr {

namespace {

int overlap(const Segment& a, const Segment& b) {
  return std::max(0, std::min(a.end, b.end) - std::max(a.start, b.start));
}

}  // namespace

std::vector<AssociationPair> associate(const Transcription& l2_align,
                                       const Transcription& l1_recog,
                                       const std::string& utterance_id,
                                       AssociateStats* stats) {
  l2_align.validate();
  l1_recog.validate();
  std::vector<AssociationPair> pairs;
  if (l2_align.segments.empty() || l1_recog.segments.empty()) {
    if (stats) stats->dropped_l1_segments += static_cast<int>(l1_recog.segments.size());
    return pairs;
  }
  pairs.reserve(l2_align.segments.size());
  for (const Segment& seg : l2_align.segments)
    pairs.push_back({seg.phone, {}, utterance_id, seg, ""});

  for (const Segment& l1 : l1_recog.segments) {
    int best = -1;
    int best_ov = 0;
    for (size_t i = 0; i < l2_align.segments.size(); ++i) {
      int ov = overlap(l1, l2_align.segments[i]);
      if (ov > best_ov) {  // ties keep the earlier L2 segment
        best_ov = ov;
        best = static_cast<int>(i);
      }
    }
    if (best < 0) {
      if (stats) ++stats->dropped_l1_segments;
      continue;
    }
    pairs[best].targets.push_back(l1.phone);  // L1 segments arrive in time order
  }
  return pairs;
}

namespace {

struct Key {
  std::string source;
  std::string grapheme;
  bool operator<(const Key& o) const {
    if (source != o.source) return source < o.source;
    return grapheme < o.grapheme;
  }
};

std::vector<ConfusionRule> extract_keyed(const std::vector<AssociationPair>& pairs,
                                         const std::vector<std::string>* clusters,
                                         const ExtractParams& params, ExtractStats* stats) {
  if (params.min_count < 1) throw UsageError("rule extraction: min_count must be >= 1");
  if (params.top_k < 1) throw UsageError("rule extraction: top_k must be >= 1");
  if (params.min_rel_freq < 0.0 || params.min_rel_freq > 1.0)
    throw UsageError("rule extraction: min_rel_freq must be in [0,1]");
  if (clusters && clusters->size() != pairs.size())
    throw UsageError("rule extraction: missing grapheme traceability info; "
                     "rerun alignment with occurrence tracking");

  // Count per key: target sequence -> occurrences. Deletions and overlong
  // targets stay in the denominator only when configured.
  std::map<Key, std::map<std::vector<std::string>, long>> counts;
  std::map<Key, long> denom;
  for (size_t i = 0; i < pairs.size(); ++i) {
    const AssociationPair& p = pairs[i];
    Key key{p.source, clusters ? (*clusters)[i] : std::string()};
    if (p.targets.empty()) {
      if (params.keep_deletions) ++denom[key];
      else if (stats) ++stats->dropped_empty;
      continue;
    }
    if (static_cast<int>(p.targets.size()) > params.max_target_len) {
      if (stats) ++stats->dropped_overlong;
      continue;
    }
    ++counts[key][p.targets];
    ++denom[key];
  }

  std::vector<ConfusionRule> rules;
  for (const auto& [key, by_target] : counts) {
    long total = denom[key];
    if (total <= 0) continue;
    struct Cand {
      std::vector<std::string> targets;
      long count;
    };
    std::vector<Cand> cands;
    for (const auto& [targets, count] : by_target) {
      if (count < params.min_count) continue;
      if (static_cast<double>(count) / total < params.min_rel_freq) continue;
      cands.push_back({targets, count});
    }
    std::sort(cands.begin(), cands.end(), [](const Cand& a, const Cand& b) {
      if (a.count != b.count) return a.count > b.count;
      if (a.targets.size() != b.targets.size()) return a.targets.size() < b.targets.size();
      return a.targets < b.targets;
    });
    if (static_cast<int>(cands.size()) > params.top_k) cands.resize(params.top_k);
    if (cands.empty()) continue;
    long retained = 0;
    for (const Cand& c : cands) retained += c.count;
    for (const Cand& c : cands) {
      ConfusionRule r;
      r.source = key.source;
      r.grapheme = key.grapheme;
      r.targets = c.targets;
      r.count = c.count;
      r.probability = static_cast<double>(c.count) /
                      (params.renormalize ? retained : total);
      rules.push_back(std::move(r));
    }
  }
  // Key order is already (source, grapheme); candidates were appended in
  // retention order, so the file ordering contract holds.
  return rules;
}

}  // namespace

std::vector<ConfusionRule> extract_rules(const std::vector<AssociationPair>& pairs,
                                         const ExtractParams& params, ExtractStats* stats) {
  return extract_keyed(pairs, nullptr, params, stats);
}

std::vector<ConfusionRule> graphemic_rules(const std::vector<AssociationPair>& pairs,
                                           const std::vector<std::string>& clusters,
                                           const ExtractParams& params, ExtractStats* stats) {
  return extract_keyed(pairs, &clusters, params, stats);
}

std::string rules_to_text(const std::vector<ConfusionRule>& rules) {
  std::string out;
  for (const ConfusionRule& r : rules) {
    out += r.source;
    if (!r.grapheme.empty()) out += "/" + r.grapheme;
    out += " -> " + join(r.targets, " ");
    out += "\t" + format_g17(r.probability) + "\t" + std::to_string(r.count) + "\n";
  }
  return out;
}

std::vector<ConfusionRule> parse_rules(const std::string& text, const std::string& origin) {
  std::vector<ConfusionRule> rules;
  std::vector<std::string> lines = split_lines(text);
  for (size_t i = 0; i < lines.size(); ++i) {
    const std::string& line = lines[i];
    if (line.empty() || line[0] == '#') continue;
    const std::string where = origin + ":" + std::to_string(i + 1);
    std::vector<std::string> cols;
    size_t pos = 0;
    while (true) {
      size_t tab = line.find('\t', pos);
      cols.push_back(line.substr(pos, tab == std::string::npos ? tab : tab - pos));
      if (tab == std::string::npos) break;
      pos = tab + 1;
    }
    if (cols.size() != 3) throw FormatError(where + ": expected 3 tab-separated fields");
    std::vector<std::string> head = split_ws(cols[0]);
    if (head.size() < 3 || head[1] != "->")
      throw FormatError(where + ": expected 'SRC[/GRAPHEME] -> targets'");
    ConfusionRule r;
    size_t slash = head[0].find('/');
    r.source = head[0].substr(0, slash);
    if (slash != std::string::npos) r.grapheme = head[0].substr(slash + 1);
    if (r.source.empty()) throw FormatError(where + ": empty source phone");
    r.targets.assign(head.begin() + 2, head.end());
    r.probability = parse_double(cols[1], where);
    if (!(r.probability > 0.0) || r.probability > 1.0)
      throw FormatError(where + ": probability must be in (0,1]");
    r.count = parse_long(cols[2], where);
    if (r.count < 1) throw FormatError(where + ": count must be >= 1");
    rules.push_back(std::move(r));
  }
  return rules;
}

std::vector<ConfusionRule> load_rules(const std::string& path) {
  return parse_rules(read_text_file(path), path);
}

void save_rules(const std::vector<ConfusionRule>& rules, const std::string& path) {
  write_text_file_atomic(path, rules_to_text(rules));
}

}  // namespace nnasr
