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

#include <string>
#include <vector>

#include "confchain/scored.hpp"
#include "confchain/trace.hpp"

namespace confchain {

enum class BaselineMethod { kLogitsFinal, kLogitsAverage, kSelfConsistency, kVerbalized };

std::string to_string(BaselineMethod m);
/// Throws std::invalid_argument for names that are not a baseline.
BaselineMethod parse_baseline_method(const std::string& name);

/// Joint probability of the answer tokens.
ScoredTrace score_logits_final(const InferenceTrace& trace);

/// Geometric mean of the probabilities of every response token (reasoning
/// steps and answer).
ScoredTrace score_logits_average(const InferenceTrace& trace);

/// Share of the group whose answer_key matches each member's own key.
/// `group` must hold every sampled response to one instruction.
/// Throws MissingAnswerKeyError if any member lacks an answer_key.
std::vector<ScoredTrace> score_self_consistency(const std::vector<InferenceTrace>& group);

/// Reads verbalized_confidence, clamped to [0, 1]. `clamped` reports whether
/// clamping happened. Throws MissingFieldError when the field is absent.
ScoredTrace score_verbalized(const InferenceTrace& trace, bool* clamped = nullptr);

}  // namespace confchain
