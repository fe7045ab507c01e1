// model.cpp
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

#include "nnasr/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "nnasr/error.hpp"

namespace nnasr {

namespace {
constexpr double kLog2Pi = 1.8378770664093454835606594728112;
constexpr double kNegInf = -std::numeric_limits<double>::infinity();
}  // namespace

int PhoneHmm::min_duration() const {
  const int n = num_states();
  // Shortest emitting path entry -> exit over the upper-triangular graph.
  std::vector<int> best(n + 2, std::numeric_limits<int>::max());
  best[0] = 0;
  for (int i = 0; i <= n; ++i) {
    if (best[i] == std::numeric_limits<int>::max()) continue;
    for (int j = i + 1; j <= n + 1; ++j) {
      if (trans[i][j] <= 0.0) continue;
      int cost = (j >= 1 && j <= n) ? 1 : 0;  // emitting states cost one frame
      best[j] = std::min(best[j], best[i] + cost);
    }
  }
  return best[n + 1] == std::numeric_limits<int>::max() ? -1 : best[n + 1];
}

void PhoneHmm::validate(double var_floor) const {
  const std::string where = "phone '" + phone.id + "'";
  if (phone.id.empty()) throw FormatError("phone with empty id");
  for (char c : phone.id)
    if (std::isspace(static_cast<unsigned char>(c)))
      throw FormatError(where + ": id contains whitespace");
  const int n = num_states();
  if (n < 1) throw FormatError(where + ": no emitting states");
  const int d = dim();
  for (int s = 0; s < n; ++s) {
    const GmmState& st = states[s];
    const std::string sw = where + ".states[" + std::to_string(s) + "]";
    if (st.components.empty()) throw FormatError(sw + ": empty mixture");
    double wsum = 0.0;
    for (size_t k = 0; k < st.components.size(); ++k) {
      const GaussianComponent& c = st.components[k];
      const std::string cw = sw + ".components[" + std::to_string(k) + "]";
      if (!(c.weight > 0.0) || c.weight > 1.0 + kStochasticTol)
        throw FormatError(cw + ".weight: must be in (0,1], got " + std::to_string(c.weight));
      if (static_cast<int>(c.mean.size()) != d || static_cast<int>(c.var.size()) != d)
        throw FormatError(cw + ": mean/var dimension mismatch");
      for (int i = 0; i < d; ++i) {
        if (!std::isfinite(c.mean[i])) throw FormatError(cw + ".mean[" + std::to_string(i) + "]: not finite");
        if (!std::isfinite(c.var[i]))
          throw FormatError(cw + ".var[" + std::to_string(i) + "]: not finite");
        if (!(c.var[i] >= var_floor))
          throw FormatError(cw + ".var[" + std::to_string(i) + "]: below variance floor (" +
                            std::to_string(c.var[i]) + " < " + std::to_string(var_floor) + ")");
      }
      wsum += c.weight;
    }
    if (std::abs(wsum - 1.0) > kStochasticTol)
      throw FormatError(sw + ": component weights sum to " + std::to_string(wsum));
  }
  if (static_cast<int>(trans.size()) != n + 2)
    throw FormatError(where + ".trans: expected " + std::to_string(n + 2) + " rows");
  for (int i = 0; i < n + 2; ++i) {
    if (static_cast<int>(trans[i].size()) != n + 2)
      throw FormatError(where + ".trans[" + std::to_string(i) + "]: expected " +
                        std::to_string(n + 2) + " columns");
    double rsum = 0.0;
    for (int j = 0; j < n + 2; ++j) {
      double p = trans[i][j];
      if (!(p >= 0.0) || p > 1.0 + kStochasticTol)
        throw FormatError(where + ".trans[" + std::to_string(i) + "][" + std::to_string(j) +
                          "]: not a probability");
      if (j < i && p != 0.0)
        throw FormatError(where + ".trans[" + std::to_string(i) + "][" + std::to_string(j) +
                          "]: backward transition in left-right model");
      rsum += p;
    }
    if (std::abs(rsum - 1.0) > kStochasticTol)
      throw FormatError(where + ".trans[" + std::to_string(i) + "]: row sums to " +
                        std::to_string(rsum));
  }
  if (trans[0][0] != 0.0) throw FormatError(where + ".trans[0][0]: entry self-loop");
  if (trans[0][n + 1] != 0.0)
    throw FormatError(where + ".trans[0][" + std::to_string(n + 1) +
                      "]: entry-to-exit mass (phone must emit at least one frame)");
  for (int j = 0; j < n + 1; ++j)
    if (trans[n + 1][j] != 0.0)
      throw FormatError(where + ".trans[" + std::to_string(n + 1) + "]: exit row not absorbing");
  if (std::abs(trans[n + 1][n + 1] - 1.0) > kStochasticTol)
    throw FormatError(where + ".trans exit row: self mass must be 1");
}

std::vector<std::vector<double>> uniform_left_right(int n_states) {
  const int m = n_states + 2;
  std::vector<std::vector<double>> t(m, std::vector<double>(m, 0.0));
  t[0][1] = 1.0;
  for (int s = 1; s <= n_states; ++s) {
    t[s][s] = 0.5;
    t[s][s + 1] = 0.5;
  }
  t[m - 1][m - 1] = 1.0;
  return t;
}

const PhoneHmm& ModelSet::model(const std::string& phone_id) const {
  auto it = models.find(phone_id);
  if (it == models.end()) throw FormatError("unknown phone id '" + phone_id + "'");
  return it->second;
}

void ModelSet::validate(double var_floor) const {
  if (dim <= 0) throw FormatError("model set: dim must be positive");
  std::set<std::string> seen;
  for (const PhoneSymbol& p : inventory) {
    if (!seen.insert(p.id).second)
      throw FormatError("model set: duplicate phone id '" + p.id + "'");
    auto it = models.find(p.id);
    if (it == models.end())
      throw FormatError("model set: phone '" + p.id + "' has no model");
    it->second.validate(var_floor);
    if (it->second.dim() != dim)
      throw FormatError("phone '" + p.id + "': dimension " +
                        std::to_string(it->second.dim()) + " != set dim " + std::to_string(dim));
    if (!(it->second.phone == p))
      throw FormatError("phone '" + p.id + "': inventory/model symbol mismatch");
  }
  if (models.size() != inventory.size())
    throw FormatError("model set: models not listed in inventory present");
}

double log_emission(const GmmState& state, const double* frame, int dim) {
  if (state.dim() != dim)
    throw FormatError("log_emission: frame dimension " + std::to_string(dim) +
                      " != state dimension " + std::to_string(state.dim()));
  double best = kNegInf;
  std::vector<double> terms(state.components.size());
  for (size_t k = 0; k < state.components.size(); ++k) {
    const GaussianComponent& c = state.components[k];
    double acc = std::log(c.weight);
    for (int d = 0; d < dim; ++d) {
      double diff = frame[d] - c.mean[d];
      acc -= 0.5 * (kLog2Pi + std::log(c.var[d]) + diff * diff / c.var[d]);
    }
    terms[k] = acc;
    best = std::max(best, acc);
  }
  if (best == kNegInf) return kNegInf;
  double sum = 0.0;
  for (double t : terms) sum += std::exp(t - best);
  return best + std::log(sum);
}

double log_emission(const GmmState& state, const std::vector<double>& frame) {
  return log_emission(state, frame.data(), static_cast<int>(frame.size()));
}

void sample_frame(const GmmState& state, Rng& rng, double* out, int dim) {
  std::vector<double> weights(state.components.size());
  for (size_t k = 0; k < weights.size(); ++k) weights[k] = state.components[k].weight;
  const GaussianComponent& c = state.components[rng.categorical(weights)];
  for (int d = 0; d < dim; ++d) out[d] = c.mean[d] + std::sqrt(c.var[d]) * rng.normal();
}

int sample_phone(const PhoneHmm& model, Rng& rng, std::vector<double>* frames_out) {
  const int n = model.num_states();
  const int d = model.dim();
  int emitted = 0;
  int state = 0;  // entry
  while (state != n + 1) {
    state = rng.categorical(model.trans[state]);
    if (state >= 1 && state <= n) {
      size_t base = frames_out->size();
      frames_out->resize(base + d);
      sample_frame(model.states[state - 1], rng, frames_out->data() + base, d);
      ++emitted;
    }
  }
  return emitted;
}

std::pair<FeatureMatrix, Transcription> sample_utterance(
    const ModelSet& set, const std::vector<std::string>& phones, uint64_t seed) {
  if (phones.empty()) throw UsageError("sample_utterance: empty phone sequence");
  Rng rng(seed);
  FeatureMatrix feats;
  feats.dim = set.dim;
  Transcription trans;
  int t = 0;
  for (const std::string& id : phones) {
    const PhoneHmm& m = set.model(id);
    int n = sample_phone(m, rng, &feats.data);
    trans.segments.push_back(Segment{id, t, t + n});
    t += n;
  }
  feats.frames = t;
  feats.validate();
  trans.validate();
  return {std::move(feats), std::move(trans)};
}

}  // namespace nnasr
