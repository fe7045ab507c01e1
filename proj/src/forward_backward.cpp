// forward_backward.cpp
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

#include "forward_backward.hpp"

#include <cmath>
#include <limits>

#include "nnasr/error.hpp"
#include "nnasr/model.hpp"

namespace nnasr {

namespace {
constexpr double kNegInf = -std::numeric_limits<double>::infinity();

inline double log_add(double a, double b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  if (a < b) std::swap(a, b);
  return a + std::log1p(std::exp(b - a));
}
}  // namespace

FbLattice forward_backward(const CompositeHmm& comp, const FeatureMatrix& features) {
  features.validate();
  if (features.dim != comp.dim)
    throw FormatError("forward-backward: feature/model dimension mismatch");
  const int T = features.frames;
  const int S = comp.num_states();
  FbLattice lat;
  lat.frames = T;
  lat.states = S;
  lat.alpha.assign(static_cast<size_t>(T) * S, kNegInf);
  lat.beta.assign(static_cast<size_t>(T) * S, kNegInf);
  lat.emis.resize(static_cast<size_t>(T) * S);

  for (int t = 0; t < T; ++t) {
    const double* frame = features.frame(t);
    for (int s = 0; s < S; ++s)
      lat.emis[static_cast<size_t>(t) * S + s] =
          log_emission(comp.states[s], frame, features.dim);
  }

  for (int s = 0; s < S; ++s)
    if (comp.entry[s] != kNegInf)
      lat.alpha[s] = comp.entry[s] + lat.emis[s];
  for (int t = 1; t < T; ++t) {
    double* a_cur = lat.alpha.data() + static_cast<size_t>(t) * S;
    const double* a_prev = lat.alpha.data() + static_cast<size_t>(t - 1) * S;
    for (const auto& arc : comp.arcs)
      if (a_prev[arc.from] != kNegInf)
        a_cur[arc.to] = log_add(a_cur[arc.to], a_prev[arc.from] + arc.logp);
    const double* e = lat.emis.data() + static_cast<size_t>(t) * S;
    for (int s = 0; s < S; ++s)
      if (a_cur[s] != kNegInf) a_cur[s] += e[s];
  }

  double total = kNegInf;
  {
    const double* a_last = lat.alpha.data() + static_cast<size_t>(T - 1) * S;
    for (int s = 0; s < S; ++s)
      if (comp.exit[s] != kNegInf && a_last[s] != kNegInf)
        total = log_add(total, a_last[s] + comp.exit[s]);
  }
  if (total == kNegInf)
    throw NumericError("forward-backward: no complete path covers " +
                       std::to_string(T) + " frames");
  lat.loglik = total;

  double* b_last = lat.beta.data() + static_cast<size_t>(T - 1) * S;
  for (int s = 0; s < S; ++s) b_last[s] = comp.exit[s];
  for (int t = T - 2; t >= 0; --t) {
    double* b_cur = lat.beta.data() + static_cast<size_t>(t) * S;
    const double* b_next = lat.beta.data() + static_cast<size_t>(t + 1) * S;
    const double* e_next = lat.emis.data() + static_cast<size_t>(t + 1) * S;
    for (const auto& arc : comp.arcs)
      if (b_next[arc.to] != kNegInf)
        b_cur[arc.from] = log_add(b_cur[arc.from],
                                  arc.logp + e_next[arc.to] + b_next[arc.to]);
  }
  return lat;
}

}  // namespace nnasr
