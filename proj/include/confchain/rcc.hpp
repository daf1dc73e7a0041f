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
#include <vector>

#include "confchain/attention.hpp"
#include "confchain/scored.hpp"
#include "confchain/segmentation.hpp"
#include "confchain/trace.hpp"
#include "confchain/types.hpp"

namespace confchain {

struct CorrelatedConfidence {
  double value = 0.0;
  bool fallback = false;  // no row of the filter had a survivor
};

/// Step confidence seen through the filtered attention of the previous step.
/// Each row with survivors contributes the mean confidence of the tokens it
/// attends to; the result is the mean over those rows. Without any survivor
/// the plain mean of `confidences` is returned and `fallback` is set.
/// Throws ShapeError if filtered.cols() != confidences.size().
CorrelatedConfidence correlated_confidence(const BinaryMatrix& filtered, const VectorXd& confidences);

struct ConfidenceTrajectory {
  std::vector<double> q;  // correlated confidence per step
  std::vector<double> p;  // accumulated confidence per step
  double delta = 0.4;
  double final() const { return p.back(); }
};

/// p_1 = q_1, p_i = delta * q_i + (1 - delta) * p_{i-1}.
/// Throws EmptyChainError on empty q and DomainError unless delta is in (0, 1].
ConfidenceTrajectory propagate(const std::vector<double>& q, double delta);

struct RccResult {
  ConfidenceTrajectory trajectory;
  std::vector<AttentionPair> chain;
  std::size_t fallback_steps = 0;
};

/// Recurrent confidence chain scorer. Immutable once built; safe to share
/// across threads.
class RccScorer {
 public:
  RccScorer(double mu, double delta, SegmentationRule rule = SegmentationRule::pre_segmented());

  double mu() const noexcept { return mu_; }
  double delta() const noexcept { return delta_; }
  const SegmentationRule& rule() const noexcept { return rule_; }

  RccResult evaluate(const InferenceTrace& trace) const;
  ScoredTrace score(const InferenceTrace& trace) const;

 private:
  double mu_;
  double delta_;
  SegmentationRule rule_;
};

inline ScoredTrace score_rcc(const InferenceTrace& trace, double mu, double delta,
                             const SegmentationRule& rule = SegmentationRule::pre_segmented()) {
  return RccScorer(mu, delta, rule).score(trace);
}

}  // namespace confchain
