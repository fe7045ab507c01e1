// ioutil.hpp
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

#ifndef NNASR_IOUTIL_HPP_
#define NNASR_IOUTIL_HPP_

#include <string>
#include <vector>

namespace nnasr {

std::string read_text_file(const std::string& path);

// Write-temp-then-rename so concurrent producers never interleave output.
void write_text_file_atomic(const std::string& path, const std::string& content);

void ensure_directory(const std::string& path);

// 17 significant digits; round-trips IEEE doubles exactly.
std::string format_g17(double v);

std::vector<std::string> split_ws(const std::string& line);
std::vector<std::string> split_lines(const std::string& text);
std::string join(const std::vector<std::string>& items, const std::string& sep);

double parse_double(const std::string& tok, const std::string& context);
long parse_long(const std::string& tok, const std::string& context);

}  // namespace nnasr

#endif  // NNASR_IOUTIL_HPP_
