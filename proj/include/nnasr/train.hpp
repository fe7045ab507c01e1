// train.hpp
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
// Maximum-likelihood training of model sets from labeled feature corpora.
// Embedded forward-backward in the log domain; accumulators merge in fixed
// utterance order so training is bit-reproducible.

#ifndef NNASR_TRAIN_HPP_
#define NNASR_TRAIN_HPP_

#include <string>
#include <vector>

#include "nnasr/model.hpp"
#include "nnasr/types.hpp"

namespace nnasr {

struct LabeledUtterance {
  FeatureMatrix features;
  Transcription labels;
};

struct InitOptions {
  int n_states = 3;
  int n_components = 1;
  double var_floor = kVarFloor;
};

// Flat start: uniform left-right transitions; state Gaussians from a uniform
// N-way split of each phone's labeled frames. Phones with no data fall back
// to global statistics and are reported in `warnings`.
ModelSet init_flat(const std::vector<PhoneSymbol>& inventory,
                   const std::vector<LabeledUtterance>& corpus,
                   const InitOptions& options,
                   std::vector<std::string>* warnings = nullptr);

struct UpdateFlags {
  bool means = true;
  bool vars = true;
  bool weights = true;
  bool trans = true;
};

struct TrainOptions {
  int n_iters = 4;
  UpdateFlags update;
  double var_floor = kVarFloor;
  // States accumulating fewer frames than this keep their previous
  // emission parameters (guards sparse phones).
  double occupancy_floor = 3.0;
  // Components whose weight falls below this are merged into the heaviest
  // sibling.
  double weight_prune = 1e-5;
};

// Returns per-iteration total corpus log-likelihood (computed with the
// parameters in force at the start of each iteration); the sequence is
// nondecreasing up to a 1e-6 slack. Utterances shorter than their minimal
// path are skipped with a warning; all skipped is a usage error.
std::vector<double> baum_welch(ModelSet& set,
                               const std::vector<LabeledUtterance>& corpus,
                               const TrainOptions& options,
                               std::vector<std::string>* warnings = nullptr);

// Splits the heaviest component of every state (weight halved, means moved
// +-0.2 sigma) until each state has target_components.
ModelSet mix_up(const ModelSet& set, int target_components);

}  // namespace nnasr

#endif  // NNASR_TRAIN_HPP_
