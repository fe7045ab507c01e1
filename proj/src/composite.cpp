// composite.cpp
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

#include "nnasr/composite.hpp"

#include <cmath>
#include <limits>

#include "nnasr/error.hpp"

namespace nnasr {

namespace {
constexpr double kNegInf = -std::numeric_limits<double>::infinity();
}

int CompositeHmm::min_frames() const {
  const int n = num_states();
  std::vector<int> best(n, std::numeric_limits<int>::max());
  for (int s = 0; s < n; ++s)
    if (entry[s] != kNegInf) best[s] = 1;
  // Arcs only point forward (state indices increase along every
  // construction), so one pass in index order suffices.
  for (const auto& a : arcs) {
    if (best[a.from] == std::numeric_limits<int>::max()) continue;
    best[a.to] = std::min(best[a.to], best[a.from] + 1);
  }
  int out = std::numeric_limits<int>::max();
  for (int s = 0; s < n; ++s)
    if (exit[s] != kNegInf && best[s] != std::numeric_limits<int>::max())
      out = std::min(out, best[s]);
  return out == std::numeric_limits<int>::max() ? -1 : out;
}

CompositeHmm composite_from_phone(const PhoneHmm& model) {
  const int n = model.num_states();
  CompositeHmm c;
  c.dim = model.dim();
  c.states = model.states;
  c.state_unit.assign(n, 0);
  c.state_local.resize(n);
  for (int s = 0; s < n; ++s) c.state_local[s] = s;
  c.unit_phone = {model.phone.id};
  c.entry.resize(n);
  c.exit.resize(n);
  c.entry_refs.resize(n);
  c.exit_refs.resize(n);
  for (int s = 0; s < n; ++s) {
    double pe = model.trans[0][s + 1];
    c.entry[s] = pe > 0.0 ? std::log(pe) : kNegInf;
    if (pe > 0.0) c.entry_refs[s] = {CompositeHmm::TransRef{0, 0, s + 1}};
    double px = model.trans[s + 1][n + 1];
    c.exit[s] = px > 0.0 ? std::log(px) : kNegInf;
    if (px > 0.0) c.exit_refs[s] = {CompositeHmm::TransRef{0, s + 1, n + 1}};
  }
  for (int i = 0; i < n; ++i) {
    for (int j = i; j < n; ++j) {
      double p = model.trans[i + 1][j + 1];
      if (p <= 0.0) continue;
      c.arcs.push_back({i, j, std::log(p)});
      c.arc_refs.push_back({CompositeHmm::TransRef{0, i + 1, j + 1}});
    }
  }
  return c;
}

CompositeHmm concatenate_composites(std::vector<CompositeHmm> pieces) {
  if (pieces.empty()) throw UsageError("concatenate: empty model list");
  if (pieces.size() == 1) return std::move(pieces[0]);
  CompositeHmm out;
  out.dim = pieces[0].dim;
  for (const CompositeHmm& p : pieces)
    if (p.dim != out.dim) throw FormatError("concatenate: dimension mismatch");

  int state_base = 0;
  int unit_base = 0;
  for (size_t k = 0; k < pieces.size(); ++k) {
    CompositeHmm& p = pieces[k];
    const int n = p.num_states();
    out.trainable = out.trainable && p.trainable;
    for (int s = 0; s < n; ++s) {
      out.states.push_back(std::move(p.states[s]));
      out.state_unit.push_back(p.state_unit[s] + unit_base);
      out.state_local.push_back(p.state_local[s]);
      // Only the first piece contributes entries, only the last exits.
      out.entry.push_back(k == 0 ? p.entry[s] : kNegInf);
      out.exit.push_back(k + 1 == pieces.size() ? p.exit[s] : kNegInf);
    }
    auto shift_refs = [&](std::vector<CompositeHmm::TransRef> refs) {
      for (auto& r : refs) r.unit += unit_base;
      return refs;
    };
    for (int s = 0; s < n; ++s) {
      out.entry_refs.push_back(k == 0 ? shift_refs(p.entry_refs[s])
                                      : std::vector<CompositeHmm::TransRef>{});
      out.exit_refs.push_back(k + 1 == pieces.size() ? shift_refs(p.exit_refs[s])
                                                     : std::vector<CompositeHmm::TransRef>{});
    }
    for (size_t a = 0; a < p.arcs.size(); ++a) {
      CompositeHmm::Arc arc = p.arcs[a];
      arc.from += state_base;
      arc.to += state_base;
      out.arcs.push_back(arc);
      out.arc_refs.push_back(shift_refs(p.arc_refs[a]));
    }
    for (const std::string& ph : p.unit_phone) out.unit_phone.push_back(ph);
    state_base += n;
    unit_base += p.num_units();
  }

  // Splice arcs: exit of piece k joins entry of piece k+1.
  int from_base = 0;
  for (size_t k = 0; k + 1 < pieces.size(); ++k) {
    const CompositeHmm& a = pieces[k];
    const CompositeHmm& b = pieces[k + 1];
    int to_base = from_base + a.num_states();
    int a_units = 0;
    for (size_t j = 0; j <= k; ++j) a_units += pieces[j].num_units();
    int b_unit_base = a_units;
    int a_unit_base = a_units - a.num_units();
    for (int s = 0; s < a.num_states(); ++s) {
      if (a.exit[s] == kNegInf) continue;
      for (int s2 = 0; s2 < b.num_states(); ++s2) {
        if (b.entry[s2] == kNegInf) continue;
        out.arcs.push_back({from_base + s, to_base + s2, a.exit[s] + b.entry[s2]});
        std::vector<CompositeHmm::TransRef> refs;
        for (auto r : a.exit_refs[s]) {
          r.unit += a_unit_base;
          refs.push_back(r);
        }
        for (auto r : b.entry_refs[s2]) {
          r.unit += b_unit_base;
          refs.push_back(r);
        }
        out.arc_refs.push_back(std::move(refs));
      }
    }
    from_base = to_base;
  }
  return out;
}

CompositeHmm concatenate(const std::vector<const PhoneHmm*>& models) {
  if (models.empty()) throw UsageError("concatenate: empty model list");
  std::vector<CompositeHmm> pieces;
  pieces.reserve(models.size());
  for (const PhoneHmm* m : models) pieces.push_back(composite_from_phone(*m));
  return concatenate_composites(std::move(pieces));
}

CompositeHmm concatenate(const ModelSet& set, const std::vector<std::string>& phones) {
  std::vector<const PhoneHmm*> models;
  models.reserve(phones.size());
  for (const std::string& id : phones) models.push_back(&set.model(id));
  return concatenate(models);
}

CompositeHmm merge_branches(std::vector<CompositeHmm> branches,
                            const std::vector<double>& log_weights) {
  if (branches.empty()) throw UsageError("merge_branches: no branches");
  if (branches.size() != log_weights.size())
    throw UsageError("merge_branches: weight count mismatch");
  CompositeHmm out;
  out.dim = branches[0].dim;
  out.trainable = false;
  int state_base = 0;
  int unit_base = 0;
  for (size_t b = 0; b < branches.size(); ++b) {
    CompositeHmm& p = branches[b];
    if (p.dim != out.dim) throw FormatError("merge_branches: dimension mismatch");
    const int n = p.num_states();
    for (int s = 0; s < n; ++s) {
      out.states.push_back(std::move(p.states[s]));
      out.state_unit.push_back(p.state_unit[s] + unit_base);
      out.state_local.push_back(p.state_local[s]);
      out.entry.push_back(p.entry[s] == kNegInf ? kNegInf : p.entry[s] + log_weights[b]);
      out.exit.push_back(p.exit[s]);
      out.entry_refs.emplace_back();
      out.exit_refs.emplace_back();
    }
    for (const auto& arc : p.arcs) {
      out.arcs.push_back({arc.from + state_base, arc.to + state_base, arc.logp});
      out.arc_refs.emplace_back();
    }
    for (const std::string& ph : p.unit_phone) out.unit_phone.push_back(ph);
    state_base += n;
    unit_base += p.num_units();
  }
  return out;
}

}  // namespace nnasr
