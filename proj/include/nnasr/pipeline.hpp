// pipeline.hpp
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
// End-to-end experiment driver with leave-one-out cross-validation over
// speakers: confusion rules for a test speaker are extracted only from the
// other speakers; per-speaker MLLR adapts on that speaker's held-out
// adaptation utterances. Emits a system x {WER, SER} report covering
// baseline / confusion / confusion+graphemes, each with and without MLLR,
// under the strict and word-loop grammars.

#ifndef NNASR_PIPELINE_HPP_
#define NNASR_PIPELINE_HPP_

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace nnasr {

struct PipelineConfig {
  // Inputs.
  std::string l2_models;
  std::string l1_models;
  std::string lexicon;
  std::string grammar;    // strict grammar file; may be empty when strict=false
  std::string manifest;   // corpus manifest
  std::string g2p_model;  // optional; trained from the lexicon when empty
  std::string rules_file; // optional; skips per-fold extraction when given
  std::string out_dir;

  // Parameters.
  double beta = 0.5;
  long min_count = 10;
  int top_k = 3;
  double min_rel_freq = 0.1;
  double phone_penalty = 0.0;
  double word_penalty = 0.0;
  double loop_penalty = 0.0;
  double beam = 0.0;
  uint64_t seed = 1;
  int g2p_iters = 10;

  // Mode flags.
  bool strict = true;
  bool loop = true;
  bool graphemes = true;
  bool mllr = true;
  int jobs = 1;

  void validate() const;
};

struct PipelineResult {
  struct Row {
    std::string grammar;  // "strict" or "loop"
    std::string system;
    double wer = 0.0;
    double ser = 0.0;
  };
  std::vector<Row> rows;
  // grammar -> system -> held-out speaker -> WER.
  std::map<std::string, std::map<std::string, std::map<int, double>>> fold_wer;
  std::string report_path;
  std::string run_dir;

  const Row& row(const std::string& grammar, const std::string& system) const;
};

PipelineResult run_pipeline(const PipelineConfig& config);

}  // namespace nnasr

#endif  // NNASR_PIPELINE_HPP_
