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

#include <cmath>
#include <cstddef>
#include <vector>

#include "confchain/errors.hpp"
#include "confchain/trace.hpp"
#include "confchain/types.hpp"

namespace confchain {

/// Scaled dot-product similarity between the tokens of two consecutive steps:
/// entry (j, k) = <prev_j, next_k> / sqrt(d). Rows are tokens of `prev`,
/// columns tokens of `next`, both given as (tokens x d). Accumulation is in
/// double whatever the storage scalar.
template <typename DerivedA, typename DerivedB>
MatrixXd attention_matrix(const Eigen::MatrixBase<DerivedA>& prev, const Eigen::MatrixBase<DerivedB>& next,
                          Eigen::Index d) {
  if (d < 1) throw DimensionError("embedding dimension must be at least 1");
  if (prev.cols() != d || next.cols() != d) {
    throw DimensionError("token vectors have length " + std::to_string(prev.cols()) + " and " +
                         std::to_string(next.cols()) + ", expected " + std::to_string(d));
  }
  const MatrixXd a = prev.template cast<double>();
  const MatrixXd b = next.template cast<double>();
  MatrixXd out(a.rows(), b.rows());
  const double scale = 1.0 / std::sqrt(static_cast<double>(d));
  // One dot product per entry: the reduction order depends only on d.
  for (Eigen::Index j = 0; j < a.rows(); ++j) {
    for (Eigen::Index k = 0; k < b.rows(); ++k) out(j, k) = a.row(j).dot(b.row(k)) * scale;
  }
  return out;
}

inline MatrixXd attention_matrix(const ReasoningStep& prev, const ReasoningStep& next, std::size_t d) {
  return attention_matrix(prev.embeddings(d), next.embeddings(d), static_cast<Eigen::Index>(d));
}

/// Row-wise softmax with per-row max subtraction.
template <typename Derived>
Matrix<typename Derived::Scalar> normalize_rows(const Eigen::MatrixBase<Derived>& raw) {
  using Scalar = typename Derived::Scalar;
  Matrix<Scalar> out(raw.rows(), raw.cols());
  for (Eigen::Index j = 0; j < raw.rows(); ++j) {
    const Scalar top = raw.row(j).maxCoeff();
    Scalar sum = 0;
    for (Eigen::Index k = 0; k < raw.cols(); ++k) {
      out(j, k) = std::exp(raw(j, k) - top);
      sum += out(j, k);
    }
    out.row(j) /= sum;
  }
  return out;
}

/// Heaviside filter H(v - mu) with H(0) = 1: an entry survives iff v >= mu.
template <typename Derived>
BinaryMatrix threshold_filter(const Eigen::MatrixBase<Derived>& normalized, typename Derived::Scalar mu) {
  return (normalized.array() >= mu).template cast<std::uint8_t>().matrix();
}

/// The three views of one step-to-step link.
struct AttentionPair {
  MatrixXd raw;
  MatrixXd normalized;
  BinaryMatrix filtered;
  double mu = 0.5;
};

/// One AttentionPair per chain link: instruction -> s_1 -> ... -> answer.
/// Raw matrices come from precomputed_attention verbatim when present,
/// otherwise from the token vectors. Throws MissingVectorsError when the
/// trace has neither.
std::vector<AttentionPair> build_chain(const InferenceTrace& trace, double mu);

}  // namespace confchain
