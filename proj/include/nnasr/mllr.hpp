// mllr.hpp
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
// Single-class MLLR mean adaptation: one global affine transform
// mean' = A*mean + b maximizing the EM auxiliary over supervised
// adaptation data, with diagonal covariances held fixed.

#ifndef NNASR_MLLR_HPP_
#define NNASR_MLLR_HPP_

#include <string>
#include <vector>

#include "nnasr/model.hpp"
#include "nnasr/train.hpp"

namespace nnasr {

struct MllrTransform {
  std::vector<std::vector<double>> A;  // D x D
  std::vector<double> b;               // D

  static MllrTransform identity(int dim);
  void validate(int dim) const;
};

// Component occupancies come from forward-backward over each utterance's
// reference phone chain. Requires at least D+1 Gaussian components with
// nonzero occupancy; a singular row system is reported by row.
MllrTransform estimate_mllr(const ModelSet& set,
                            const std::vector<LabeledUtterance>& adaptation);

// Replaces every component mean by A*mean + b; variances, weights and
// transitions untouched.
ModelSet apply_mllr(const ModelSet& set, const MllrTransform& t);

// Adaptation-corpus total log-likelihood under the set (reference chains).
double corpus_loglik(const ModelSet& set, const std::vector<LabeledUtterance>& corpus);

MllrTransform load_mllr(const std::string& path);
void save_mllr(const MllrTransform& t, const std::string& path);

}  // namespace nnasr

#endif  // NNASR_MLLR_HPP_
