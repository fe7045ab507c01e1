// composite.hpp
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
// Flattened log-domain HMM with a single virtual entry and exit. Closed
// under two constructions: splicing models end to end (concatenation) and
// joining weighted parallel branches at a shared entry/exit (merging).
// Either construction keeps every constituent's internal transition
// structure verbatim.

#ifndef NNASR_COMPOSITE_HPP_
#define NNASR_COMPOSITE_HPP_

#include <string>
#include <vector>

#include "nnasr/model.hpp"

namespace nnasr {

struct CompositeHmm {
  // Points one arc/entry/exit weight back at a source transition-matrix
  // cell so embedded training can accumulate posteriors per phone.
  struct TransRef {
    int unit = -1;  // phone occurrence
    int row = 0;    // indices into the source (N+2)x(N+2) matrix
    int col = 0;
  };
  struct Arc {
    int from = 0;
    int to = 0;
    double logp = 0.0;
  };

  int dim = 0;
  std::vector<GmmState> states;       // emitting states, value copies
  std::vector<int> state_unit;        // owning phone occurrence per state
  std::vector<int> state_local;       // state index within its source model
  std::vector<double> entry;          // log entry weight per state (-inf absent)
  std::vector<double> exit;           // log exit weight per state
  std::vector<Arc> arcs;

  // Phone occurrence table, in left-to-right order for concatenations.
  std::vector<std::string> unit_phone;

  // Provenance, parallel to arcs/entry/exit. Splice arcs reference two
  // cells (exit of one model, entry of the next). Empty once branches have
  // been merged: merged composites are decodable but not trainable.
  std::vector<std::vector<TransRef>> arc_refs;
  std::vector<std::vector<TransRef>> entry_refs;
  std::vector<std::vector<TransRef>> exit_refs;
  bool trainable = true;

  int num_states() const { return static_cast<int>(states.size()); }
  int num_units() const { return static_cast<int>(unit_phone.size()); }

  // Fewest frames on any complete entry->exit path; -1 if none exists.
  int min_frames() const;
};

// Wraps one phone model; the single unit is occurrence 0.
CompositeHmm composite_from_phone(const PhoneHmm& model);

// Splices models left to right: exit weights of model i multiply entry
// weights of model i+1. Any complete path through the result factors into
// complete paths through each constituent with identical log probability.
CompositeHmm concatenate(const std::vector<const PhoneHmm*>& models);
CompositeHmm concatenate(const ModelSet& set, const std::vector<std::string>& phones);
CompositeHmm concatenate_composites(std::vector<CompositeHmm> pieces);

// Parallel branches behind one entry/exit; branch i's entry weights are
// shifted by log_weight[i]. No cross-branch transitions are created.
CompositeHmm merge_branches(std::vector<CompositeHmm> branches,
                            const std::vector<double>& log_weights);

}  // namespace nnasr

#endif  // NNASR_COMPOSITE_HPP_
