// forward_backward.hpp
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

#ifndef NNASR_FORWARD_BACKWARD_HPP_
#define NNASR_FORWARD_BACKWARD_HPP_

#include <vector>

#include "nnasr/composite.hpp"
#include "nnasr/types.hpp"

namespace nnasr {

// Log-domain lattice quantities over a composite chain. alpha/beta/emis are
// T x S row-major; gamma(t, s) = alpha + beta - loglik.
struct FbLattice {
  double loglik = 0.0;
  int frames = 0;
  int states = 0;
  std::vector<double> alpha;
  std::vector<double> beta;
  std::vector<double> emis;

  double log_gamma(int t, int s) const {
    return alpha[static_cast<size_t>(t) * states + s] +
           beta[static_cast<size_t>(t) * states + s] - loglik;
  }
};

// Throws NumericError when no complete path covers the utterance.
FbLattice forward_backward(const CompositeHmm& comp, const FeatureMatrix& features);

}  // namespace nnasr

#endif  // NNASR_FORWARD_BACKWARD_HPP_
