// types.hpp
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

#ifndef NNASR_TYPES_HPP_
#define NNASR_TYPES_HPP_

#include <string>
#include <vector>

namespace nnasr {

// L2: the spoken/target language of the recognizer.
// L1: the speaker's mother tongue, supplying alternative pronunciations.
enum class Lang { kL2, kL1 };

std::string lang_name(Lang lang);
Lang parse_lang(const std::string& name);

struct PhoneSymbol {
  std::string id;  // non-empty, no whitespace
  Lang lang = Lang::kL2;

  bool operator==(const PhoneSymbol& o) const {
    return id == o.id && lang == o.lang;
  }
};

// Half-open frame interval [start, end) labeled with a phone id. Which
// inventory the id belongs to is determined by the producing recognizer.
struct Segment {
  std::string phone;
  int start = 0;
  int end = 0;

  int length() const { return end - start; }
  bool operator==(const Segment& o) const {
    return phone == o.phone && start == o.start && end == o.end;
  }
};

// Time-ordered, non-overlapping segments.
struct Transcription {
  std::vector<Segment> segments;

  // Throws FormatError if ordering or interval invariants are violated.
  void validate() const;

  std::vector<std::string> phone_sequence() const;
  bool operator==(const Transcription& o) const { return segments == o.segments; }
};

struct FeatureMatrix {
  int dim = 0;
  int frames = 0;
  std::vector<double> data;  // row-major, frames x dim

  const double* frame(int t) const { return data.data() + static_cast<size_t>(t) * dim; }
  double* frame(int t) { return data.data() + static_cast<size_t>(t) * dim; }
  void validate() const;
};

}  // namespace nnasr

#endif  // NNASR_TYPES_HPP_
