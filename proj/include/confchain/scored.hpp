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

#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace confchain {

struct ScoreDiagnostics {
  std::size_t fallback_steps = 0;
  std::size_t n_steps = 0;

  bool operator==(const ScoreDiagnostics&) const = default;
};

/// One line of scores.jsonl.
struct ScoredTrace {
  std::string id;
  std::string method;
  std::vector<std::pair<std::string, double>> params;  // in output order
  double confidence = 0.0;
  std::optional<ScoreDiagnostics> diagnostics;

  bool operator==(const ScoredTrace&) const = default;
};

std::string serialize_scored(const ScoredTrace& s);

/// Throws SchemaError on malformed lines.
ScoredTrace parse_scored(std::string_view line);

std::vector<ScoredTrace> read_scores(const std::string& path);

}  // namespace confchain
