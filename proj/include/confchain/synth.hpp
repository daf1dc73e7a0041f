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

#include <cstdint>
#include <string>
#include <vector>

#include "confchain/metrics.hpp"
#include "confchain/trace.hpp"
#include "json.hpp"

namespace confchain {

/// Generator settings for synthetic labeled corpora. Each trace gets a hidden
/// per-step reliability; token probabilities scatter around it and the label
/// is drawn with P(correct) = the weakest step's reliability.
struct SynthConfig {
  std::size_t n_traces = 1000;
  int steps_min = 1;  // reasoning steps, the answer comes on top
  int steps_max = 3;
  int tokens_min = 3;
  int tokens_max = 8;
  int embedding_dim = 8;
  double reliability_floor = 0.55;
  double reliability_ceil = 0.95;
  double confidence_noise = 0.05;
  double early_corruption_rate = 0.2;
  double corruption_reliability = 0.25;
  std::uint64_t seed = 42;

  /// Throws ConfigError.
  void validate() const;

  static SynthConfig from_json(const nlohmann::json& j);
  nlohmann::ordered_json to_json() const;
};

/// Deterministic in `config` alone; `threads` never changes the output.
std::vector<InferenceTrace> generate(const SynthConfig& config, unsigned threads = 1);

/// Writes the corpus as JSONL (atomically) to `path`.
void generate_to_file(const SynthConfig& config, const std::string& path, unsigned threads = 1);

/// Bayes-optimal confidence under the generator: the minimum hidden step
/// reliability, paired with the trace label. Throws MissingMetadataError for
/// traces the generator did not produce.
std::vector<LabeledScore> oracle_scores(const std::vector<InferenceTrace>& corpus);

}  // namespace confchain
