// Copyright 2026 The confchain Authors.
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

#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace confchain::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitProblems = 1;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitData = 3;

/// Entry point of the `confchain` tool. argv[0] is the program name.
int run(const std::vector<std::string>& argv, std::ostream& out, std::ostream& err);

/// Parses "start:stop:step"; stop is included when it lands on the grid
/// within 1e-9. Throws std::invalid_argument.
std::vector<double> parse_delta_grid(const std::string& spec);

/// --threads flag if positive, else CONFCHAIN_THREADS, else the machine's
/// hardware concurrency.
unsigned resolve_threads(int flag);

}  // namespace confchain::cli
