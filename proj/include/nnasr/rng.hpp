// rng.hpp
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

#ifndef NNASR_RNG_HPP_
#define NNASR_RNG_HPP_

#include <cstdint>
#include <random>
#include <vector>

namespace nnasr {

// Deterministic random source. All transforms (uniform, normal, categorical)
// are implemented here rather than with std:: distributions, whose output is
// implementation-defined; given a seed the stream is reproducible.
class Rng {
 public:
  explicit Rng(uint64_t seed) : engine_(seed) {}

  // Uniform in [0, 1).
  double uniform();

  // Standard normal via Box-Muller (one variate per call).
  double normal();

  // Index drawn proportionally to non-negative weights.
  int categorical(const std::vector<double>& weights);

  // Uniform integer in [0, n).
  int uniform_int(int n);

  uint64_t raw() { return engine_(); }

 private:
  std::mt19937_64 engine_;
};

// splitmix64 step; used to derive independent per-item seeds so that
// parallel and serial generation orders agree bit for bit.
uint64_t mix_seed(uint64_t seed, uint64_t index);

}  // namespace nnasr

#endif  // NNASR_RNG_HPP_
