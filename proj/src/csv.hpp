// Copyright 2026 The dptomo Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef DPTOMO_SRC_CSV_HPP
#define DPTOMO_SRC_CSV_HPP

#include <string>
#include <string_view>
#include <vector>

namespace dptomo::csv {

// Shortest representation that round-trips exactly.
std::string format_double(double v);

std::vector<std::string> split(std::string_view line, char sep = ',');

// Throws InvalidArgument on anything but a complete finite number.
double parse_double(std::string_view text);

}  // namespace dptomo::csv

#endif  // DPTOMO_SRC_CSV_HPP
