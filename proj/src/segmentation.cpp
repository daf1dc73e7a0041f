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

#include "confchain/segmentation.hpp"

#include <algorithm>
#include <regex>

#include "confchain/errors.hpp"

namespace confchain {

namespace {

bool ends_sentence(const std::string& text) {
  if (text.empty()) return false;
  const char last = text.back();
  return last == '.' || last == '!' || last == '?' || last == '\n';
}

// Boundaries are token indices at which a new step starts (excluding 0).
std::vector<std::size_t> sentence_boundaries(const std::vector<TokenRecord>& tokens) {
  std::vector<std::size_t> cuts;
  for (std::size_t k = 0; k + 1 < tokens.size(); ++k) {
    if (ends_sentence(tokens[k].text)) cuts.push_back(k + 1);
  }
  return cuts;
}

std::vector<std::size_t> marker_boundaries(const std::vector<TokenRecord>& tokens,
                                           const std::vector<std::string>& patterns) {
  std::string text;
  std::vector<std::size_t> owner;  // char offset -> token index
  for (std::size_t k = 0; k < tokens.size(); ++k) {
    text += tokens[k].text;
    owner.insert(owner.end(), tokens[k].text.size(), k);
  }

  std::vector<std::size_t> cuts;
  for (const auto& pattern : patterns) {
    std::regex re;
    try {
      re = std::regex(pattern, std::regex::ECMAScript);
    } catch (const std::regex_error& e) {
      throw RuleError("invalid marker pattern '" + pattern + "': " + e.what());
    }
    for (auto it = std::sregex_iterator(text.begin(), text.end(), re); it != std::sregex_iterator(); ++it) {
      if (it->length(0) == 0) continue;
      const auto pos = static_cast<std::size_t>(it->position(0));
      const std::size_t k = owner[pos];
      if (k > 0) cuts.push_back(k);
    }
  }
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
  return cuts;
}

// Cuts the sequence, then folds short pieces forward; a short tail is merged
// into its predecessor.
std::vector<ReasoningStep> assemble(const std::vector<TokenRecord>& tokens, const std::vector<std::size_t>& cuts,
                                    std::size_t min_tokens) {
  std::vector<ReasoningStep> out;
  ReasoningStep pending;
  std::size_t start = 0;
  auto take = [&](std::size_t end) {
    pending.tokens.insert(pending.tokens.end(), tokens.begin() + static_cast<std::ptrdiff_t>(start),
                          tokens.begin() + static_cast<std::ptrdiff_t>(end));
    start = end;
    if (pending.size() >= min_tokens) {
      out.push_back(std::move(pending));
      pending = {};
    }
  };
  for (std::size_t cut : cuts) take(cut);
  take(tokens.size());
  if (!pending.tokens.empty()) {
    if (out.empty()) {
      out.push_back(std::move(pending));
    } else {
      auto& last = out.back().tokens;
      last.insert(last.end(), pending.tokens.begin(), pending.tokens.end());
    }
  }
  return out;
}

}  // namespace

SegmentationRule SegmentationRule::sentence(std::size_t min_step_tokens) {
  return {SegmentationMode::kSentence, {}, min_step_tokens};
}

SegmentationRule SegmentationRule::explicit_markers(std::vector<std::string> patterns, std::size_t min_step_tokens) {
  return {SegmentationMode::kExplicitMarkers, std::move(patterns), min_step_tokens};
}

std::vector<std::string> SegmentationRule::default_marker_patterns() {
  return {R"(Step \d+)", "First,", "Second,", "Next,", "Finally,", "Therefore"};
}

SegmentationMode parse_segmentation_mode(const std::string& name) {
  if (name == "explicit_markers") return SegmentationMode::kExplicitMarkers;
  if (name == "sentence") return SegmentationMode::kSentence;
  if (name == "pre_segmented") return SegmentationMode::kPreSegmented;
  throw RuleError("unknown segmentation mode '" + name + "'");
}

std::string to_string(SegmentationMode mode) {
  switch (mode) {
    case SegmentationMode::kExplicitMarkers: return "explicit_markers";
    case SegmentationMode::kSentence: return "sentence";
    case SegmentationMode::kPreSegmented: return "pre_segmented";
  }
  return "unknown";
}

std::vector<ReasoningStep> segment(const std::vector<TokenRecord>& tokens, const SegmentationRule& rule) {
  if (rule.mode == SegmentationMode::kExplicitMarkers && rule.marker_patterns.empty()) {
    throw RuleError("explicit_markers mode needs at least one marker pattern");
  }
  if (rule.min_step_tokens == 0) throw RuleError("min_step_tokens must be positive");
  if (tokens.empty()) return {};

  switch (rule.mode) {
    case SegmentationMode::kPreSegmented:
      return {ReasoningStep{tokens}};
    case SegmentationMode::kSentence:
      return assemble(tokens, sentence_boundaries(tokens), rule.min_step_tokens);
    case SegmentationMode::kExplicitMarkers:
      return assemble(tokens, marker_boundaries(tokens, rule.marker_patterns), rule.min_step_tokens);
  }
  return {ReasoningStep{tokens}};
}

InferenceTrace resegment(const InferenceTrace& trace, const SegmentationRule& rule) {
  if (rule.mode == SegmentationMode::kPreSegmented || trace.has_precomputed_attention() || trace.steps.empty()) {
    return trace;
  }
  std::vector<TokenRecord> flat;
  flat.reserve(trace.response_size());
  for (const auto& s : trace.steps) flat.insert(flat.end(), s.tokens.begin(), s.tokens.end());
  InferenceTrace out = trace;
  out.steps = segment(flat, rule);
  return out;
}

}  // namespace confchain
