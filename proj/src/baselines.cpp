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

#include "confchain/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

#include "confchain/errors.hpp"

namespace confchain {

std::string to_string(BaselineMethod m) {
  switch (m) {
    case BaselineMethod::kLogitsFinal: return "logits_final";
    case BaselineMethod::kLogitsAverage: return "logits_average";
    case BaselineMethod::kSelfConsistency: return "self_consistency";
    case BaselineMethod::kVerbalized: return "verbalized";
  }
  return "unknown";
}

BaselineMethod parse_baseline_method(const std::string& name) {
  if (name == "logits_final") return BaselineMethod::kLogitsFinal;
  if (name == "logits_average") return BaselineMethod::kLogitsAverage;
  if (name == "self_consistency") return BaselineMethod::kSelfConsistency;
  if (name == "verbalized") return BaselineMethod::kVerbalized;
  throw std::invalid_argument("unknown baseline method '" + name + "'");
}

ScoredTrace score_logits_final(const InferenceTrace& trace) {
  double joint = 1.0;
  for (const auto& t : trace.answer.tokens) joint *= t.prob;
  return {trace.id, "logits_final", {}, joint, std::nullopt};
}

ScoredTrace score_logits_average(const InferenceTrace& trace) {
  double log_sum = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 1; i <= trace.chain_length(); ++i) {
    for (const auto& t : trace.chain_step(i).tokens) {
      log_sum += std::log(t.prob);
      ++n;
    }
  }
  return {trace.id, "logits_average", {}, std::exp(log_sum / static_cast<double>(n)), std::nullopt};
}

std::vector<ScoredTrace> score_self_consistency(const std::vector<InferenceTrace>& group) {
  std::map<std::string, std::size_t> counts;
  for (const auto& t : group) {
    if (!t.answer_key) throw MissingAnswerKeyError("trace '" + t.id + "' has no answer_key");
    ++counts[*t.answer_key];
  }
  std::vector<ScoredTrace> out;
  out.reserve(group.size());
  const auto size = static_cast<double>(group.size());
  for (const auto& t : group) {
    out.push_back({t.id, "self_consistency", {}, static_cast<double>(counts[*t.answer_key]) / size, std::nullopt});
  }
  return out;
}

ScoredTrace score_verbalized(const InferenceTrace& trace, bool* clamped) {
  if (!trace.verbalized_confidence) {
    throw MissingFieldError("trace '" + trace.id + "' has no verbalized_confidence");
  }
  const double raw = *trace.verbalized_confidence;
  const double c = std::clamp(raw, 0.0, 1.0);
  if (clamped) *clamped = c != raw;
  return {trace.id, "verbalized", {}, c, std::nullopt};
}

}  // namespace confchain
