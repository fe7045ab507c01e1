// mllr.cpp
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

#include "nnasr/mllr.hpp"

#include <cmath>
#include <limits>
#include <map>

#include <json.hpp>

#include "forward_backward.hpp"
#include "ioutil.hpp"
#include "nnasr/composite.hpp"
#include "nnasr/error.hpp"

namespace nnasr {

namespace {
constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Gaussian elimination with partial pivoting; solves M x = rhs in place.
std::vector<double> solve_linear(std::vector<std::vector<double>> m,
                                 std::vector<double> rhs, int row_label) {
  const int n = static_cast<int>(rhs.size());
  for (int col = 0; col < n; ++col) {
    int pivot = col;
    for (int r = col + 1; r < n; ++r)
      if (std::abs(m[r][col]) > std::abs(m[pivot][col])) pivot = r;
    if (std::abs(m[pivot][col]) < 1e-12)
      throw NumericError("mllr estimation: singular system for transform row " +
                         std::to_string(row_label));
    std::swap(m[col], m[pivot]);
    std::swap(rhs[col], rhs[pivot]);
    for (int r = col + 1; r < n; ++r) {
      double f = m[r][col] / m[col][col];
      for (int c = col; c < n; ++c) m[r][c] -= f * m[col][c];
      rhs[r] -= f * rhs[col];
    }
  }
  std::vector<double> x(n);
  for (int r = n - 1; r >= 0; --r) {
    double acc = rhs[r];
    for (int c = r + 1; c < n; ++c) acc -= m[r][c] * x[c];
    x[r] = acc / m[r][r];
  }
  return x;
}

struct ComponentStats {
  double occ = 0.0;
  std::vector<double> obs_sum;  // sum_t gamma_m(t) * o_t
};

}  // namespace

MllrTransform MllrTransform::identity(int dim) {
  MllrTransform t;
  t.A.assign(dim, std::vector<double>(dim, 0.0));
  for (int d = 0; d < dim; ++d) t.A[d][d] = 1.0;
  t.b.assign(dim, 0.0);
  return t;
}

void MllrTransform::validate(int dim) const {
  if (static_cast<int>(A.size()) != dim || static_cast<int>(b.size()) != dim)
    throw UsageError("mllr transform: dimension mismatch");
  for (const auto& row : A) {
    if (static_cast<int>(row.size()) != dim)
      throw UsageError("mllr transform: A is not square");
    for (double v : row)
      if (!std::isfinite(v)) throw FormatError("mllr transform: non-finite entry in A");
  }
  for (double v : b)
    if (!std::isfinite(v)) throw FormatError("mllr transform: non-finite entry in b");
}

double corpus_loglik(const ModelSet& set, const std::vector<LabeledUtterance>& corpus) {
  double total = 0.0;
  for (const LabeledUtterance& utt : corpus) {
    CompositeHmm comp = concatenate(set, utt.labels.phone_sequence());
    total += forward_backward(comp, utt.features).loglik;
  }
  return total;
}

MllrTransform estimate_mllr(const ModelSet& set,
                            const std::vector<LabeledUtterance>& adaptation) {
  if (adaptation.empty()) throw UsageError("mllr estimation: empty adaptation corpus");
  const int dim = set.dim;

  // Occupancy and first moments per Gaussian component, keyed by
  // (phone, state, component).
  std::map<std::tuple<std::string, int, int>, ComponentStats> stats;
  for (const LabeledUtterance& utt : adaptation) {
    const std::vector<std::string> chain = utt.labels.phone_sequence();
    if (chain.empty()) throw UsageError("mllr estimation: utterance without transcription");
    CompositeHmm comp = concatenate(set, chain);
    FbLattice lat = forward_backward(comp, utt.features);
    for (int t = 0; t < lat.frames; ++t) {
      const double* frame = utt.features.frame(t);
      for (int s = 0; s < lat.states; ++s) {
        double lg = lat.log_gamma(t, s);
        if (lg == kNegInf || lg < -30.0) continue;
        const GmmState& gs = comp.states[s];
        double total = log_emission(gs, frame, dim);
        for (size_t k = 0; k < gs.components.size(); ++k) {
          const GaussianComponent& c = gs.components[k];
          double lp = std::log(c.weight);
          for (int d = 0; d < dim; ++d) {
            double diff = frame[d] - c.mean[d];
            lp -= 0.5 * (std::log(2.0 * M_PI) + std::log(c.var[d]) + diff * diff / c.var[d]);
          }
          double g = std::exp(lg + lp - total);
          if (g <= 0.0) continue;
          auto key = std::make_tuple(comp.unit_phone[comp.state_unit[s]],
                                     comp.state_local[s], static_cast<int>(k));
          auto [it, inserted] = stats.try_emplace(key);
          if (inserted) it->second.obs_sum.assign(dim, 0.0);
          it->second.occ += g;
          for (int d = 0; d < dim; ++d) it->second.obs_sum[d] += g * frame[d];
        }
      }
    }
  }

  int active = 0;
  for (const auto& [key, st] : stats)
    if (st.occ > 1e-8) ++active;
  if (active < dim + 1)
    throw NumericError("mllr estimation: only " + std::to_string(active) +
                       " Gaussian components with occupancy; need at least " +
                       std::to_string(dim + 1));

  // Row i of W = [A | b] solves  G_i w = k_i  with
  //   G_i = sum_m (occ_m / var_mi) xi_m xi_m',   xi_m = [mean_m; 1]
  //   k_i = sum_m (obs_sum_mi / var_mi) xi_m.
  MllrTransform t;
  t.A.assign(dim, std::vector<double>(dim, 0.0));
  t.b.assign(dim, 0.0);
  for (int i = 0; i < dim; ++i) {
    std::vector<std::vector<double>> G(dim + 1, std::vector<double>(dim + 1, 0.0));
    std::vector<double> k(dim + 1, 0.0);
    for (const auto& [key, st] : stats) {
      if (st.occ <= 0.0) continue;
      const GmmState& gs =
          set.model(std::get<0>(key)).states[static_cast<size_t>(std::get<1>(key))];
      const GaussianComponent& c = gs.components[static_cast<size_t>(std::get<2>(key))];
      double inv_var = 1.0 / c.var[i];
      std::vector<double> xi(dim + 1, 1.0);
      for (int d = 0; d < dim; ++d) xi[d] = c.mean[d];
      for (int r = 0; r < dim + 1; ++r) {
        for (int col = 0; col < dim + 1; ++col)
          G[r][col] += st.occ * inv_var * xi[r] * xi[col];
        k[r] += st.obs_sum[i] * inv_var * xi[r];
      }
    }
    std::vector<double> w = solve_linear(std::move(G), std::move(k), i);
    for (int d = 0; d < dim; ++d) t.A[i][d] = w[d];
    t.b[i] = w[dim];
  }
  t.validate(dim);
  return t;
}

ModelSet apply_mllr(const ModelSet& set, const MllrTransform& t) {
  t.validate(set.dim);
  ModelSet out = set;
  for (auto& [id, m] : out.models)
    for (GmmState& s : m.states)
      for (GaussianComponent& c : s.components) {
        std::vector<double> mean(set.dim, 0.0);
        for (int i = 0; i < set.dim; ++i) {
          double acc = t.b[i];
          for (int d = 0; d < set.dim; ++d) acc += t.A[i][d] * c.mean[d];
          mean[i] = acc;
        }
        c.mean = std::move(mean);
      }
  out.validate();
  return out;
}

MllrTransform load_mllr(const std::string& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_text_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(path + ": " + e.what());
  }
  MllrTransform t;
  try {
    t.A = j.at("A").get<std::vector<std::vector<double>>>();
    t.b = j.at("b").get<std::vector<double>>();
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(path + ": " + e.what());
  }
  t.validate(static_cast<int>(t.b.size()));
  return t;
}

void save_mllr(const MllrTransform& t, const std::string& path) {
  std::string out = "{\n  \"A\": [";
  for (size_t r = 0; r < t.A.size(); ++r) {
    out += r ? ",\n        [" : "\n        [";
    for (size_t c = 0; c < t.A[r].size(); ++c) {
      if (c) out += ",";
      out += format_g17(t.A[r][c]);
    }
    out += "]";
  }
  out += "\n  ],\n  \"b\": [";
  for (size_t d = 0; d < t.b.size(); ++d) {
    if (d) out += ",";
    out += format_g17(t.b[d]);
  }
  out += "]\n}\n";
  write_text_file_atomic(path, out);
}

}  // namespace nnasr
