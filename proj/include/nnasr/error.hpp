// error.hpp
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

#ifndef NNASR_ERROR_HPP_
#define NNASR_ERROR_HPP_

#include <stdexcept>
#include <string>

namespace nnasr {

// Error categories align with process exit codes:
//   usage errors -> 1, data/format errors -> 2, numeric/estimation -> 3.
enum class ErrorKind { kUsage = 1, kFormat = 2, kNumeric = 3 };

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& msg)
      : std::runtime_error(msg), kind_(kind) {}
  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

// Bad parameters, empty inputs, inconsistent option combinations.
class UsageError : public Error {
 public:
  explicit UsageError(const std::string& m) : Error(ErrorKind::kUsage, m) {}
};

// Malformed files, invariant violations on load, unresolved lookups.
class FormatError : public Error {
 public:
  explicit FormatError(const std::string& m) : Error(ErrorKind::kFormat, m) {}
};

// Estimation failures, singular systems, infeasible alignments.
class NumericError : public Error {
 public:
  explicit NumericError(const std::string& m) : Error(ErrorKind::kNumeric, m) {}
};

}  // namespace nnasr

#endif  // NNASR_ERROR_HPP_
