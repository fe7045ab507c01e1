// train.cpp
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

#include "nnasr/train.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "forward_backward.hpp"
#include "nnasr/composite.hpp"
#include "nnasr/error.hpp"

namespace nnasr {

namespace {
constexpr double kNegInf = -std::numeric_limits<double>::infinity();

struct StateAccum {
  std::vector<double> occ;                  // per component
  std::vector<std::vector<double>> first;   // per component, per dim
  std::vector<std::vector<double>> second;  // per component, per dim
};

struct PhoneAccum {
  std::vector<std::vector<double>> trans;  // (N+2)x(N+2) expected counts
  std::vector<StateAccum> states;
};

PhoneAccum make_accum(const PhoneHmm& m, int dim) {
  PhoneAccum a;
  const int n = m.num_states();
  a.trans.assign(n + 2, std::vector<double>(n + 2, 0.0));
  a.states.resize(n);
  for (int s = 0; s < n; ++s) {
    size_t k = m.states[s].components.size();
    a.states[s].occ.assign(k, 0.0);
    a.states[s].first.assign(k, std::vector<double>(dim, 0.0));
    a.states[s].second.assign(k, std::vector<double>(dim, 0.0));
  }
  return a;
}

// Distributes a state's frame posterior over its mixture components and
// accumulates zeroth/first/second moments.
void accumulate_emission(const GmmState& state, const double* frame, int dim,
                         double log_gamma, StateAccum* acc) {
  double total = log_emission(state, frame, dim);
  for (size_t k = 0; k < state.components.size(); ++k) {
    const GaussianComponent& c = state.components[k];
    double lp = std::log(c.weight);
    for (int d = 0; d < dim; ++d) {
      double diff = frame[d] - c.mean[d];
      lp -= 0.5 * (std::log(2.0 * M_PI) + std::log(c.var[d]) + diff * diff / c.var[d]);
    }
    double g = std::exp(log_gamma + lp - total);
    acc->occ[k] += g;
    for (int d = 0; d < dim; ++d) {
      acc->first[k][d] += g * frame[d];
      acc->second[k][d] += g * frame[d] * frame[d];
    }
  }
}

}  // namespace

ModelSet init_flat(const std::vector<PhoneSymbol>& inventory,
                   const std::vector<LabeledUtterance>& corpus,
                   const InitOptions& options,
                   std::vector<std::string>* warnings) {
  if (inventory.empty()) throw UsageError("init_flat: empty inventory");
  if (corpus.empty()) throw UsageError("init_flat: empty corpus");
  const int dim = corpus[0].features.dim;
  const int n = options.n_states;
  if (n < 1) throw UsageError("init_flat: need at least one state");

  struct Stats {
    std::vector<double> sum, sq;
    double count = 0.0;
    Stats(int d) : sum(d, 0.0), sq(d, 0.0) {}
  };
  std::map<std::string, std::vector<Stats>> per_phone;
  for (const PhoneSymbol& p : inventory)
    per_phone.emplace(p.id, std::vector<Stats>(n, Stats(dim)));
  Stats global(dim);

  for (const LabeledUtterance& utt : corpus) {
    utt.features.validate();
    utt.labels.validate();
    if (utt.features.dim != dim) throw FormatError("init_flat: mixed feature dimensions");
    for (const Segment& seg : utt.labels.segments) {
      auto it = per_phone.find(seg.phone);
      if (it == per_phone.end())
        throw FormatError("init_flat: corpus phone '" + seg.phone + "' not in inventory");
      int len = seg.end - seg.start;
      for (int i = 0; i < len; ++i) {
        int t = seg.start + i;
        if (t >= utt.features.frames)
          throw FormatError("init_flat: segment exceeds utterance length");
        const double* f = utt.features.frame(t);
        // Uniform split: frame i of the segment feeds state floor(i*n/len).
        int s = std::min(n - 1, i * n / std::max(1, len));
        Stats& st = it->second[s];
        st.count += 1.0;
        global.count += 1.0;
        for (int d = 0; d < dim; ++d) {
          st.sum[d] += f[d];
          st.sq[d] += f[d] * f[d];
          global.sum[d] += f[d];
          global.sq[d] += f[d] * f[d];
        }
      }
    }
  }
  if (global.count < 1.0) throw UsageError("init_flat: corpus has no labeled frames");

  auto to_gaussian = [&](const Stats& st) {
    GaussianComponent c;
    c.weight = 1.0;
    c.mean.resize(dim);
    c.var.resize(dim);
    for (int d = 0; d < dim; ++d) {
      c.mean[d] = st.sum[d] / st.count;
      double v = st.sq[d] / st.count - c.mean[d] * c.mean[d];
      c.var[d] = std::max(v, options.var_floor);
    }
    return c;
  };
  GaussianComponent global_g = to_gaussian(global);

  ModelSet set;
  set.dim = dim;
  for (const PhoneSymbol& p : inventory) {
    PhoneHmm m;
    m.phone = p;
    m.trans = uniform_left_right(n);
    const auto& stats = per_phone.at(p.id);
    bool unseen = true;
    for (const Stats& st : stats)
      if (st.count > 0.0) unseen = false;
    if (unseen && warnings)
      warnings->push_back("phone '" + p.id + "' unseen in corpus; using global statistics");
    for (int s = 0; s < n; ++s) {
      GmmState gs;
      gs.components.push_back(stats[s].count > 0.0 ? to_gaussian(stats[s]) : global_g);
      m.states.push_back(std::move(gs));
    }
    set.inventory.push_back(p);
    set.models.emplace(p.id, std::move(m));
  }
  if (options.n_components > 1) set = mix_up(set, options.n_components);
  set.validate(options.var_floor);
  return set;
}

std::vector<double> baum_welch(ModelSet& set,
                               const std::vector<LabeledUtterance>& corpus,
                               const TrainOptions& options,
                               std::vector<std::string>* warnings) {
  if (corpus.empty()) throw UsageError("baum_welch: empty corpus");
  if (options.n_iters < 1) throw UsageError("baum_welch: need at least one iteration");
  const int dim = set.dim;

  // Pre-compile phone chains; they are rebuilt each iteration from the
  // current parameters, but sequences and feasibility are fixed.
  std::vector<std::vector<std::string>> chains(corpus.size());
  std::vector<bool> usable(corpus.size(), true);
  for (size_t u = 0; u < corpus.size(); ++u) {
    chains[u] = corpus[u].labels.phone_sequence();
    if (chains[u].empty()) {
      usable[u] = false;
      if (warnings) warnings->push_back("utterance " + std::to_string(u) + ": empty transcription, skipped");
      continue;
    }
    for (const std::string& ph : chains[u]) set.model(ph);  // throws on unknown
    CompositeHmm comp = concatenate(set, chains[u]);
    if (corpus[u].features.frames < comp.min_frames()) {
      usable[u] = false;
      if (warnings)
        warnings->push_back("utterance " + std::to_string(u) + ": " +
                            std::to_string(corpus[u].features.frames) +
                            " frames shorter than minimal path, skipped");
    }
  }
  if (std::none_of(usable.begin(), usable.end(), [](bool b) { return b; }))
    throw UsageError("baum_welch: every utterance was skipped");

  std::vector<double> loglik_per_iter;
  for (int iter = 0; iter < options.n_iters; ++iter) {
    std::map<std::string, PhoneAccum> accums;
    for (const auto& [id, m] : set.models) accums.emplace(id, make_accum(m, dim));
    double total_ll = 0.0;

    for (size_t u = 0; u < corpus.size(); ++u) {
      if (!usable[u]) continue;
      CompositeHmm comp = concatenate(set, chains[u]);
      const FeatureMatrix& feats = corpus[u].features;
      FbLattice lat = forward_backward(comp, feats);
      total_ll += lat.loglik;
      const int T = lat.frames;
      const int S = lat.states;

      // Emission statistics from state occupancies.
      for (int t = 0; t < T; ++t)
        for (int s = 0; s < S; ++s) {
          double lg = lat.log_gamma(t, s);
          if (lg == kNegInf || lg < -30.0) continue;
          const std::string& ph = comp.unit_phone[comp.state_unit[s]];
          accumulate_emission(comp.states[s], feats.frame(t), dim, lg,
                              &accums.at(ph).states[comp.state_local[s]]);
        }

      // Transition statistics. Entry/exit/arc posteriors land on the
      // originating matrix cells recorded during concatenation.
      auto add_refs = [&](const std::vector<CompositeHmm::TransRef>& refs, double post) {
        for (const auto& r : refs) {
          const std::string& ph = comp.unit_phone[r.unit];
          accums.at(ph).trans[r.row][r.col] += post;
        }
      };
      for (int s = 0; s < S; ++s) {
        double lg = lat.log_gamma(0, s);
        if (lg != kNegInf && lg > -30.0) add_refs(comp.entry_refs[s], std::exp(lg));
        double lx = lat.alpha[static_cast<size_t>(T - 1) * S + s];
        if (lx != kNegInf && comp.exit[s] != kNegInf)
          add_refs(comp.exit_refs[s], std::exp(lx + comp.exit[s] - lat.loglik));
      }
      for (int t = 0; t + 1 < T; ++t) {
        const double* a_row = lat.alpha.data() + static_cast<size_t>(t) * S;
        const double* b_next = lat.beta.data() + static_cast<size_t>(t + 1) * S;
        const double* e_next = lat.emis.data() + static_cast<size_t>(t + 1) * S;
        for (size_t ai = 0; ai < comp.arcs.size(); ++ai) {
          const auto& arc = comp.arcs[ai];
          if (a_row[arc.from] == kNegInf || b_next[arc.to] == kNegInf) continue;
          double lxi = a_row[arc.from] + arc.logp + e_next[arc.to] + b_next[arc.to] - lat.loglik;
          if (lxi < -30.0) continue;
          add_refs(comp.arc_refs[ai], std::exp(lxi));
        }
      }
    }
    loglik_per_iter.push_back(total_ll);

    // M-step.
    for (auto& [id, m] : set.models) {
      PhoneAccum& acc = accums.at(id);
      const int n = m.num_states();
      if (options.update.trans) {
        for (int i = 0; i < n + 1; ++i) {  // exit row stays absorbing
          double row_sum = 0.0;
          for (int j = 0; j < n + 2; ++j) row_sum += acc.trans[i][j];
          if (row_sum <= 0.0) continue;
          for (int j = 0; j < n + 2; ++j) m.trans[i][j] = acc.trans[i][j] / row_sum;
        }
      }
      for (int s = 0; s < n; ++s) {
        StateAccum& sa = acc.states[s];
        double occ_total = 0.0;
        for (double o : sa.occ) occ_total += o;
        if (occ_total < options.occupancy_floor) continue;
        GmmState& gs = m.states[s];
        for (size_t k = 0; k < gs.components.size(); ++k) {
          GaussianComponent& c = gs.components[k];
          if (options.update.weights) c.weight = sa.occ[k] / occ_total;
          if (sa.occ[k] <= 0.0) continue;
          for (int d = 0; d < dim; ++d) {
            double mean = sa.first[k][d] / sa.occ[k];
            if (options.update.means) c.mean[d] = mean;
            if (options.update.vars) {
              double ex2 = sa.second[k][d] / sa.occ[k];
              double v = ex2 - 2.0 * c.mean[d] * mean + c.mean[d] * c.mean[d];
              c.var[d] = std::max(v, options.var_floor);
            }
          }
        }
        if (options.update.weights) {
          // Renormalize, then fold vanishing components into the heaviest.
          double wsum = 0.0;
          for (const auto& c : gs.components) wsum += c.weight;
          if (wsum > 0.0)
            for (auto& c : gs.components) c.weight /= wsum;
          while (gs.components.size() > 1) {
            size_t low = 0, high = 0;
            for (size_t k = 1; k < gs.components.size(); ++k) {
              if (gs.components[k].weight < gs.components[low].weight) low = k;
              if (gs.components[k].weight > gs.components[high].weight) high = k;
            }
            if (gs.components[low].weight >= options.weight_prune) break;
            gs.components[high].weight += gs.components[low].weight;
            gs.components.erase(gs.components.begin() + low);
          }
        }
      }
    }
    set.validate(options.var_floor);
  }
  return loglik_per_iter;
}

ModelSet mix_up(const ModelSet& set, int target_components) {
  int current_max = 0;
  for (const auto& [id, m] : set.models)
    for (const GmmState& s : m.states)
      current_max = std::max(current_max, static_cast<int>(s.components.size()));
  if (target_components < current_max)
    throw UsageError("mix_up: target " + std::to_string(target_components) +
                     " below current mixture size " + std::to_string(current_max));
  ModelSet out = set;
  for (auto& [id, m] : out.models) {
    for (GmmState& s : m.states) {
      while (static_cast<int>(s.components.size()) < target_components) {
        size_t heavy = 0;
        for (size_t k = 1; k < s.components.size(); ++k)
          if (s.components[k].weight > s.components[heavy].weight) heavy = k;
        GaussianComponent a = s.components[heavy];
        a.weight *= 0.5;
        GaussianComponent b = a;
        for (size_t d = 0; d < a.mean.size(); ++d) {
          double delta = 0.2 * std::sqrt(a.var[d]);
          a.mean[d] += delta;
          b.mean[d] -= delta;
        }
        s.components[heavy] = a;
        s.components.push_back(b);
      }
    }
  }
  out.validate();
  return out;
}

}  // namespace nnasr
