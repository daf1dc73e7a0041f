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
#include <fstream>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "confchain/types.hpp"
#include "json.hpp"

namespace confchain {

struct TokenRecord {
  std::string text;
  double prob = 1.0;  // softmax probability of this token given its prefix, in (0, 1]
  std::optional<std::vector<double>> vector;

  bool operator==(const TokenRecord&) const = default;
};

struct ReasoningStep {
  std::vector<TokenRecord> tokens;

  std::size_t size() const noexcept { return tokens.size(); }

  /// Per-token probabilities in token order.
  VectorXd confidences() const;

  /// Token vectors stacked as rows (size() x d). Throws MissingVectorsError
  /// if any token lacks a vector and DimensionError on a length mismatch.
  MatrixXd embeddings(std::size_t d) const;

  bool operator==(const ReasoningStep&) const = default;
};

/// One instruction/response pair. The chain seen by the scorers is
/// [instruction, steps..., answer]; chain_step(0) is the instruction and
/// chain_step(chain_length()) is the answer.
struct InferenceTrace {
  std::string id;
  std::optional<int> embedding_dim;
  ReasoningStep instruction;
  std::vector<ReasoningStep> steps;
  ReasoningStep answer;
  std::optional<bool> correct;
  std::optional<double> verbalized_confidence;
  std::optional<std::string> answer_key;
  std::optional<std::string> group_id;
  // Matrix i has shape |s_i| x |s_{i+1}|.
  std::optional<std::vector<MatrixXd>> precomputed_attention;
  // Fields the scorers never read (e.g. "synth_meta", unknown keys). Kept so
  // that serialization round-trips.
  nlohmann::json extra = nlohmann::json::object();

  /// Number of links in the chain: reasoning steps plus the answer.
  std::size_t chain_length() const noexcept { return steps.size() + 1; }
  const ReasoningStep& chain_step(std::size_t i) const;

  bool has_vectors() const;
  bool has_precomputed_attention() const { return precomputed_attention.has_value(); }

  /// Number of response tokens (reasoning steps plus answer).
  std::size_t response_size() const;
};

/// Field-for-field equality; reals compare bit-exactly.
bool operator==(const InferenceTrace& a, const InferenceTrace& b);

struct ParseStats {
  std::size_t unknown_fields = 0;
};

/// Parses and validates one JSONL line. Throws SchemaError, DimensionError
/// or ValueError. Unknown top-level fields are kept in `extra` and counted.
InferenceTrace parse_trace(std::string_view line, ParseStats* stats = nullptr);

/// Compact single-line JSON, fields in wire order, shortest round-trip reals.
std::string serialize_trace(const InferenceTrace& trace);

/// Single-consumer lazy reader over a JSONL file. Blank lines are skipped.
class Corpus {
 public:
  explicit Corpus(std::string path);

  /// Next trace in file order, or nullopt at end of file. Parse failures are
  /// rethrown as ParseError carrying the 1-based line number; the reader is
  /// positioned after the bad line so iteration may continue.
  std::optional<InferenceTrace> next();

  const std::string& source_path() const noexcept { return path_; }
  std::size_t line() const noexcept { return line_; }
  const ParseStats& stats() const noexcept { return stats_; }

 private:
  std::string path_;
  std::ifstream in_;
  std::size_t line_ = 0;
  ParseStats stats_;
};

inline Corpus stream_corpus(const std::string& path) { return Corpus(path); }

/// Reads the whole file. Convenience for small corpora and tests.
std::vector<InferenceTrace> read_corpus(const std::string& path);

struct ValidationProblem {
  std::size_t line = 0;
  std::string message;
};

struct ValidationSummary {
  std::size_t traces = 0;
  std::size_t labeled = 0;
  std::size_t with_vectors = 0;
  std::size_t with_precomputed = 0;
  std::size_t without_attention_source = 0;
  std::size_t unknown_fields = 0;
  std::vector<std::string> duplicates;
  std::vector<ValidationProblem> problems;

  bool ok() const noexcept { return duplicates.empty() && problems.empty(); }
  nlohmann::ordered_json to_json() const;
};

/// Drains the corpus, collecting problems instead of aborting.
ValidationSummary validate_corpus(Corpus& corpus);

}  // namespace confchain
