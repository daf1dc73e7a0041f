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

#include <cstddef>
#include <string>
#include <vector>

#include "confchain/trace.hpp"

namespace confchain {

enum class SegmentationMode { kExplicitMarkers, kSentence, kPreSegmented };

struct SegmentationRule {
  SegmentationMode mode = SegmentationMode::kPreSegmented;
  std::vector<std::string> marker_patterns;  // ECMAScript regex, case-sensitive
  std::size_t min_step_tokens = 3;

  static SegmentationRule pre_segmented() { return {}; }
  static SegmentationRule sentence(std::size_t min_step_tokens = 3);
  static SegmentationRule explicit_markers(std::vector<std::string> patterns = default_marker_patterns(),
                                           std::size_t min_step_tokens = 3);
  static std::vector<std::string> default_marker_patterns();
};

SegmentationMode parse_segmentation_mode(const std::string& name);
std::string to_string(SegmentationMode mode);

/// Splits a flat token sequence into steps. The concatenation of the output
/// equals the input. In pre_segmented mode the input comes back as one step.
/// Throws RuleError for explicit_markers without patterns or an invalid regex.
std::vector<ReasoningStep> segment(const std::vector<TokenRecord>& tokens, const SegmentationRule& rule);

/// Re-segments the reasoning chain of a trace (instruction and answer are
/// never touched). A no-op in pre_segmented mode or when the trace carries
/// precomputed attention, whose shapes are tied to the producer's steps.
InferenceTrace resegment(const InferenceTrace& trace, const SegmentationRule& rule);

}  // namespace confchain
