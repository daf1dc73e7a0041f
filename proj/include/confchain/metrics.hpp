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
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "confchain/segmentation.hpp"
#include "confchain/trace.hpp"
#include "json.hpp"

namespace confchain {

inline constexpr double kDefaultEpsilon = 1e-12;
inline constexpr int kDefaultBins = 10;

struct LabeledScore {
  double confidence = 0.0;
  bool correct = false;
};

struct ReliabilityBin {
  double lo = 0.0;
  double hi = 0.0;
  std::size_t count = 0;
  std::optional<double> mean_confidence;  // absent for empty bins
  std::optional<double> accuracy;
};

/// Mean binary cross-entropy of the labels under the clamped confidences.
/// Throws EmptyInputError on no samples and DomainError unless
/// epsilon is in (0, 1e-3].
double nll(std::span<const LabeledScore> samples, double epsilon = kDefaultEpsilon);

struct EceResult {
  double ece = 0.0;
  std::vector<ReliabilityBin> bins;
};

/// Equal-width binning over [0, 1]; a confidence c lands in bin
/// floor(c * bins), with c = 1 in the last bin.
EceResult ece(std::span<const LabeledScore> samples, int bins = kDefaultBins);

struct CalibrationReport {
  double nll = 0.0;
  double ece = 0.0;
  std::vector<ReliabilityBin> bins;
  std::size_t n = 0;
  double epsilon = kDefaultEpsilon;

  /// report.json layout; ece_percent is ece * 100.
  nlohmann::ordered_json to_json(const std::string& method,
                                 const std::vector<std::pair<std::string, double>>& params) const;
};

CalibrationReport calibration_report(std::span<const LabeledScore> samples, int bins = kDefaultBins,
                                     double epsilon = kDefaultEpsilon);

struct SweepRow {
  double delta = 0.0;
  double nll = 0.0;
  double ece = 0.0;
};

/// Scores every trace with RCC at each delta (rows in input order). Every
/// trace must carry a `correct` label. Parallel across traces with
/// `threads` workers; results do not depend on the thread count.
std::vector<SweepRow> sweep_delta(const std::vector<InferenceTrace>& corpus, double mu,
                                  const std::vector<double>& deltas, const SegmentationRule& rule,
                                  int bins = kDefaultBins, unsigned threads = 1);

/// Streaming variant over a JSONL corpus.
std::vector<SweepRow> sweep_delta(Corpus& corpus, double mu, const std::vector<double>& deltas,
                                  const SegmentationRule& rule, int bins = kDefaultBins, unsigned threads = 1);

/// sweep.csv: header "delta,nll,ece_percent".
std::string sweep_csv(const std::vector<SweepRow>& rows);

/// Header "bin_lo,bin_hi,count,mean_confidence,accuracy"; empty bins leave
/// the two statistics blank.
std::string reliability_csv(const std::vector<ReliabilityBin>& bins);

/// Accuracy bars against the ideal diagonal.
std::string reliability_svg(const std::vector<ReliabilityBin>& bins, const std::string& title = "Reliability diagram");

/// Writes both files atomically. Throws IoError.
void emit_reliability(const std::vector<ReliabilityBin>& bins, const std::string& csv_path,
                      const std::string& svg_path);

}  // namespace confchain
