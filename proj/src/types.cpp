// types.cpp
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

#include "nnasr/types.hpp"

#include <cmath>

#include "nnasr/error.hpp"

namespace nnasr {

std::string lang_name(Lang lang) { return lang == Lang::kL2 ? "L2" : "L1"; }

Lang parse_lang(const std::string& name) {
  if (name == "L2") return Lang::kL2;
  if (name == "L1") return Lang::kL1;
  throw FormatError("unknown lang '" + name + "' (expected L2 or L1)");
}

void Transcription::validate() const {
  int prev_end = 0;
  int prev_start = -1;
  for (size_t i = 0; i < segments.size(); ++i) {
    const Segment& s = segments[i];
    if (s.phone.empty())
      throw FormatError("segment " + std::to_string(i) + ": empty phone label");
    if (s.start < 0 || s.start >= s.end)
      throw FormatError("segment " + std::to_string(i) + ": bad interval [" +
                        std::to_string(s.start) + "," + std::to_string(s.end) + ")");
    if (static_cast<int>(i) > 0 && s.start < prev_end)
      throw FormatError("segment " + std::to_string(i) + ": overlaps previous segment");
    if (static_cast<int>(i) > 0 && s.start <= prev_start)
      throw FormatError("segment " + std::to_string(i) + ": starts not strictly increasing");
    prev_end = s.end;
    prev_start = s.start;
  }
}

std::vector<std::string> Transcription::phone_sequence() const {
  std::vector<std::string> out;
  out.reserve(segments.size());
  for (const Segment& s : segments) out.push_back(s.phone);
  return out;
}

void FeatureMatrix::validate() const {
  if (dim <= 0) throw FormatError("feature matrix: dim must be positive");
  if (frames < 1) throw FormatError("feature matrix: needs at least one frame");
  if (data.size() != static_cast<size_t>(dim) * frames)
    throw FormatError("feature matrix: data size does not match dim*frames");
  for (size_t i = 0; i < data.size(); ++i)
    if (!std::isfinite(data[i]))
      throw FormatError("feature matrix: non-finite value at frame " +
                        std::to_string(i / dim) + ", dim " + std::to_string(i % dim));
}

}  // namespace nnasr
