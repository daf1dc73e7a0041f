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

#include "confchain/rcc.hpp"

#include <cmath>

#include "confchain/errors.hpp"

namespace confchain {

CorrelatedConfidence correlated_confidence(const BinaryMatrix& filtered, const VectorXd& confidences) {
  if (filtered.cols() != confidences.size()) {
    throw ShapeError("filter has " + std::to_string(filtered.cols()) + " columns but the step has " +
                     std::to_string(confidences.size()) + " confidences");
  }
  if (confidences.size() == 0) throw ShapeError("empty confidence chain");

  double sum = 0.0;
  Eigen::Index rows = 0;
  for (Eigen::Index j = 0; j < filtered.rows(); ++j) {
    double attended = 0.0;
    Eigen::Index survivors = 0;
    for (Eigen::Index k = 0; k < filtered.cols(); ++k) {
      if (filtered(j, k) != 0) {
        attended += confidences(k);
        ++survivors;
      }
    }
    if (survivors == 0) continue;
    sum += attended / static_cast<double>(survivors);
    ++rows;
  }
  if (rows == 0) return {confidences.mean(), true};
  return {sum / static_cast<double>(rows), false};
}

ConfidenceTrajectory propagate(const std::vector<double>& q, double delta) {
  if (q.empty()) throw EmptyChainError("cannot propagate an empty confidence chain");
  if (!(delta > 0.0 && delta <= 1.0)) {
    throw DomainError("delta must lie in (0, 1], got " + std::to_string(delta));
  }
  ConfidenceTrajectory t;
  t.q = q;
  t.delta = delta;
  t.p.reserve(q.size());
  t.p.push_back(q.front());
  for (std::size_t i = 1; i < q.size(); ++i) t.p.push_back(delta * q[i] + (1.0 - delta) * t.p.back());
  return t;
}

RccScorer::RccScorer(double mu, double delta, SegmentationRule rule) : mu_(mu), delta_(delta), rule_(std::move(rule)) {
  if (!(mu >= 0.0 && mu <= 1.0)) throw DomainError("mu must lie in [0, 1], got " + std::to_string(mu));
  if (!(delta > 0.0 && delta <= 1.0)) throw DomainError("delta must lie in (0, 1], got " + std::to_string(delta));
}

RccResult RccScorer::evaluate(const InferenceTrace& input) const {
  const InferenceTrace trace = resegment(input, rule_);
  RccResult result;
  result.chain = build_chain(trace, mu_);

  std::vector<double> q;
  q.reserve(result.chain.size());
  for (std::size_t i = 0; i < result.chain.size(); ++i) {
    const auto cc = correlated_confidence(result.chain[i].filtered, trace.chain_step(i + 1).confidences());
    if (cc.fallback) ++result.fallback_steps;
    q.push_back(cc.value);
  }
  result.trajectory = propagate(q, delta_);
  return result;
}

ScoredTrace RccScorer::score(const InferenceTrace& trace) const {
  const RccResult r = evaluate(trace);
  ScoredTrace s;
  s.id = trace.id;
  s.method = "rcc";
  s.params = {{"mu", mu_}, {"delta", delta_}};
  s.confidence = r.trajectory.final();
  s.diagnostics = ScoreDiagnostics{r.fallback_steps, r.trajectory.q.size()};
  return s;
}

}  // namespace confchain
