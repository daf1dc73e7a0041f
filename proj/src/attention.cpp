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

#include "confchain/attention.hpp"

namespace confchain {

std::vector<AttentionPair> build_chain(const InferenceTrace& trace, double mu) {
  const std::size_t n = trace.chain_length();
  std::vector<AttentionPair> chain;
  chain.reserve(n);

  if (trace.precomputed_attention) {
    const auto& mats = *trace.precomputed_attention;
    if (mats.size() != n) {
      throw DimensionError("trace '" + trace.id + "': " + std::to_string(mats.size()) +
                           " precomputed matrices for a chain of " + std::to_string(n));
    }
    for (std::size_t i = 0; i < n; ++i) {
      const auto rows = static_cast<Eigen::Index>(trace.chain_step(i).size());
      const auto cols = static_cast<Eigen::Index>(trace.chain_step(i + 1).size());
      if (mats[i].rows() != rows || mats[i].cols() != cols) {
        throw DimensionError("trace '" + trace.id + "': precomputed matrix " + std::to_string(i) + " has shape " +
                             std::to_string(mats[i].rows()) + "x" + std::to_string(mats[i].cols()));
      }
      AttentionPair pair{mats[i], normalize_rows(mats[i]), {}, mu};
      pair.filtered = threshold_filter(pair.normalized, mu);
      chain.push_back(std::move(pair));
    }
    return chain;
  }

  if (!trace.has_vectors() || !trace.embedding_dim) {
    throw MissingVectorsError("trace '" + trace.id + "' has neither token vectors nor precomputed_attention");
  }
  const auto d = static_cast<std::size_t>(*trace.embedding_dim);
  MatrixXd prev = trace.chain_step(0).embeddings(d);
  for (std::size_t i = 0; i < n; ++i) {
    MatrixXd next = trace.chain_step(i + 1).embeddings(d);
    AttentionPair pair;
    pair.raw = attention_matrix(prev, next, static_cast<Eigen::Index>(d));
    pair.normalized = normalize_rows(pair.raw);
    pair.filtered = threshold_filter(pair.normalized, mu);
    pair.mu = mu;
    chain.push_back(std::move(pair));
    prev = std::move(next);
  }
  return chain;
}

}  // namespace confchain
