// model.hpp
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
//
// Continuous-density phone models: diagonal-covariance GMM emissions on a
// strict left-right HMM with non-emitting entry/exit states. Probabilities
// are stored linear in files and in these structs; decoders work in the
// natural-log domain throughout.

#ifndef NNASR_MODEL_HPP_
#define NNASR_MODEL_HPP_

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "nnasr/rng.hpp"
#include "nnasr/types.hpp"

namespace nnasr {

// Default per-dimension variance floor. Keeps EM away from degenerate
// solutions and emission scores finite.
inline constexpr double kVarFloor = 1e-4;

// Row-sum / weight-sum tolerance used by all stochasticity checks.
inline constexpr double kStochasticTol = 1e-6;

struct GaussianComponent {
  double weight = 1.0;
  std::vector<double> mean;
  std::vector<double> var;  // diagonal covariance
};

struct GmmState {
  std::vector<GaussianComponent> components;

  int dim() const { return components.empty() ? 0 : static_cast<int>(components[0].mean.size()); }
};

// N emitting states plus non-emitting entry (row 0) and exit (row N+1).
// trans is (N+2)x(N+2), row-stochastic, upper-triangular (self-loops allowed,
// no backward arcs). The entry row has no self-loop and no direct mass to
// exit: every phone emits at least one frame.
struct PhoneHmm {
  PhoneSymbol phone;
  std::vector<GmmState> states;
  std::vector<std::vector<double>> trans;

  int num_states() const { return static_cast<int>(states.size()); }
  int dim() const { return states.empty() ? 0 : states[0].dim(); }

  // Fewest frames any entry->exit path emits (skip arcs shorten it).
  int min_duration() const;

  // Field-path diagnostics on violation.
  void validate(double var_floor = kVarFloor) const;
};

// Uniform left-right transition matrix: entry -> s1, each emitting state
// splits mass evenly between self-loop and advance, exit absorbing.
std::vector<std::vector<double>> uniform_left_right(int n_states);

struct ModelSet {
  int dim = 0;
  std::vector<PhoneSymbol> inventory;          // declared order
  std::map<std::string, PhoneHmm> models;      // keyed by phone id

  const PhoneHmm& model(const std::string& phone_id) const;
  bool has(const std::string& phone_id) const { return models.count(phone_id) != 0; }
  void validate(double var_floor = kVarFloor) const;
};

// ln sum_k w_k N(frame; mean_k, diag var_k), via log-sum-exp. Finite for all
// finite frames when variances respect the floor.
double log_emission(const GmmState& state, const double* frame, int dim);
double log_emission(const GmmState& state, const std::vector<double>& frame);

// One draw from the state's mixture.
void sample_frame(const GmmState& state, Rng& rng, double* out, int dim);

// Samples a state path through one phone model and a frame per emitting
// visit. Frames are appended; returns the number of frames emitted.
int sample_phone(const PhoneHmm& model, Rng& rng, std::vector<double>* frames_out);

// Samples the concatenation of the named phones. Deterministic in
// (set, phones, seed). Segments are contiguous and cover [0, T).
std::pair<FeatureMatrix, Transcription> sample_utterance(
    const ModelSet& set, const std::vector<std::string>& phones, uint64_t seed);

// --- serialization ---------------------------------------------------------

// Model-set JSON. Numbers are written with 17 significant digits; loading
// re-validates every invariant and reports the offending field path.
ModelSet load_model_set(const std::string& path);
void save_model_set(const ModelSet& set, const std::string& path);
std::string model_set_to_json(const ModelSet& set);
ModelSet model_set_from_json(const std::string& text, const std::string& origin);

// FEAT1 text features: "FEAT1 D T" header then T rows of D reals.
FeatureMatrix load_features(const std::string& path);
void save_features(const FeatureMatrix& feats, const std::string& path);

// Label files: one "start end phone" line per segment; an optional trailing
// "score <value>" line is produced by decoders and tolerated on read.
Transcription load_labels(const std::string& path, double* score = nullptr);
void save_labels(const Transcription& trans, const std::string& path,
                 const double* score = nullptr);

}  // namespace nnasr

#endif  // NNASR_MODEL_HPP_
