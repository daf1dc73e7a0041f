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

#include "confchain/trace.hpp"

#include <cmath>
#include <set>
#include <unordered_set>
#include <utility>

#include "confchain/errors.hpp"

namespace confchain {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

const std::set<std::string, std::less<>> kKnownFields = {
    "id",      "embedding_dim", "instruction", "steps",
    "answer",  "correct",       "verbalized_confidence",
    "answer_key", "group_id",   "precomputed_attention"};

// Opaque metadata written by our own tools; kept in `extra` without a warning.
const std::set<std::string, std::less<>> kMetadataFields = {"synth_meta"};

std::string where(const std::string& id, const std::string& field) {
  return "trace '" + id + "', field '" + field + "'";
}

double read_real(const json& v, const std::string& id, const std::string& field) {
  if (!v.is_number()) throw SchemaError(where(id, field) + ": expected a number");
  const double x = v.get<double>();
  if (!std::isfinite(x)) throw ValueError(where(id, field) + ": not finite");
  return x;
}

ReasoningStep read_step(const json& obj, const std::string& id, const std::string& field) {
  if (!obj.is_object()) throw SchemaError(where(id, field) + ": expected an object");
  const auto it = obj.find("tokens");
  if (it == obj.end()) throw SchemaError(where(id, field + ".tokens") + ": missing");
  if (!it->is_array()) throw SchemaError(where(id, field + ".tokens") + ": expected an array");
  if (it->empty()) throw SchemaError(where(id, field + ".tokens") + ": a step needs at least one token");

  ReasoningStep step;
  step.tokens.reserve(it->size());
  std::size_t k = 0;
  for (const auto& t : *it) {
    const std::string tf = field + ".tokens[" + std::to_string(k++) + "]";
    if (!t.is_object()) throw SchemaError(where(id, tf) + ": expected an object");
    TokenRecord rec;

    const auto text = t.find("text");
    if (text == t.end() || !text->is_string()) throw SchemaError(where(id, tf + ".text") + ": missing or not a string");
    rec.text = text->get<std::string>();

    const auto prob = t.find("prob");
    if (prob == t.end()) throw SchemaError(where(id, tf + ".prob") + ": missing");
    rec.prob = read_real(*prob, id, tf + ".prob");
    if (!(rec.prob > 0.0 && rec.prob <= 1.0)) {
      throw ValueError(where(id, tf + ".prob") + ": " + prob->dump() + " is outside (0, 1]");
    }

    const auto vec = t.find("vector");
    if (vec != t.end() && !vec->is_null()) {
      if (!vec->is_array()) throw SchemaError(where(id, tf + ".vector") + ": expected an array");
      std::vector<double> values;
      values.reserve(vec->size());
      for (const auto& x : *vec) values.push_back(read_real(x, id, tf + ".vector"));
      rec.vector = std::move(values);
    }
    step.tokens.push_back(std::move(rec));
  }
  return step;
}

MatrixXd read_matrix(const json& m, const std::string& id, const std::string& field) {
  if (!m.is_array() || m.empty()) throw SchemaError(where(id, field) + ": expected a non-empty array of rows");
  const std::size_t cols = m.front().is_array() ? m.front().size() : 0;
  MatrixXd out(static_cast<Eigen::Index>(m.size()), static_cast<Eigen::Index>(cols));
  for (std::size_t r = 0; r < m.size(); ++r) {
    const auto& row = m[r];
    if (!row.is_array()) throw SchemaError(where(id, field) + ": rows must be arrays");
    if (row.size() != cols) {
      throw DimensionError(where(id, field) + ": ragged matrix (row " + std::to_string(r) + " has " +
                           std::to_string(row.size()) + " entries, expected " + std::to_string(cols) + ")");
    }
    for (std::size_t c = 0; c < cols; ++c) {
      out(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = read_real(row[c], id, field);
    }
  }
  return out;
}

ordered_json write_step(const ReasoningStep& step) {
  ordered_json tokens = ordered_json::array();
  for (const auto& t : step.tokens) {
    ordered_json tok;
    tok["text"] = t.text;
    tok["prob"] = t.prob;
    if (t.vector) tok["vector"] = *t.vector;
    tokens.push_back(std::move(tok));
  }
  ordered_json out;
  out["tokens"] = std::move(tokens);
  return out;
}

bool matrices_equal(const MatrixXd& a, const MatrixXd& b) {
  return a.rows() == b.rows() && a.cols() == b.cols() && (a.array() == b.array()).all();
}

void check_dimensions(InferenceTrace& trace) {
  const std::size_t n = trace.chain_length();
  std::size_t with_vec = 0;
  std::size_t total = 0;
  std::optional<std::size_t> dim;
  if (trace.embedding_dim) dim = static_cast<std::size_t>(*trace.embedding_dim);

  for (std::size_t i = 0; i <= n; ++i) {
    for (const auto& tok : trace.chain_step(i).tokens) {
      ++total;
      if (!tok.vector) continue;
      ++with_vec;
      if (!dim) dim = tok.vector->size();
      if (tok.vector->size() != *dim) {
        throw DimensionError("trace '" + trace.id + "': token '" + tok.text + "' has a vector of length " +
                             std::to_string(tok.vector->size()) + ", expected embedding_dim " +
                             std::to_string(*dim));
      }
    }
  }
  if (with_vec > 0 && *dim == 0) throw DimensionError("trace '" + trace.id + "': zero-length token vectors");
  if (with_vec > 0 && !trace.embedding_dim) trace.embedding_dim = static_cast<int>(*dim);

  if (trace.precomputed_attention) {
    const auto& mats = *trace.precomputed_attention;
    if (mats.size() != n) {
      throw DimensionError(where(trace.id, "precomputed_attention") + ": expected " + std::to_string(n) +
                           " matrices, got " + std::to_string(mats.size()));
    }
    for (std::size_t i = 0; i < n; ++i) {
      const auto rows = static_cast<Eigen::Index>(trace.chain_step(i).size());
      const auto cols = static_cast<Eigen::Index>(trace.chain_step(i + 1).size());
      if (mats[i].rows() != rows || mats[i].cols() != cols) {
        throw DimensionError(where(trace.id, "precomputed_attention[" + std::to_string(i) + "]") + ": shape " +
                             std::to_string(mats[i].rows()) + "x" + std::to_string(mats[i].cols()) +
                             ", expected " + std::to_string(rows) + "x" + std::to_string(cols));
      }
    }
  } else if (with_vec > 0 && with_vec != total) {
    throw SchemaError("trace '" + trace.id + "': " + std::to_string(total - with_vec) +
                      " tokens lack a vector and no precomputed_attention is given");
  }
}

}  // namespace

VectorXd ReasoningStep::confidences() const {
  VectorXd c(static_cast<Eigen::Index>(tokens.size()));
  for (std::size_t k = 0; k < tokens.size(); ++k) c(static_cast<Eigen::Index>(k)) = tokens[k].prob;
  return c;
}

MatrixXd ReasoningStep::embeddings(std::size_t d) const {
  MatrixXd m(static_cast<Eigen::Index>(tokens.size()), static_cast<Eigen::Index>(d));
  for (std::size_t j = 0; j < tokens.size(); ++j) {
    const auto& v = tokens[j].vector;
    if (!v) throw MissingVectorsError("token '" + tokens[j].text + "' has no vector");
    if (v->size() != d) {
      throw DimensionError("token '" + tokens[j].text + "' has a vector of length " + std::to_string(v->size()) +
                           ", expected " + std::to_string(d));
    }
    m.row(static_cast<Eigen::Index>(j)) = Eigen::Map<const Eigen::RowVectorXd>(v->data(), static_cast<Eigen::Index>(d));
  }
  return m;
}

const ReasoningStep& InferenceTrace::chain_step(std::size_t i) const {
  if (i == 0) return instruction;
  if (i <= steps.size()) return steps[i - 1];
  if (i == steps.size() + 1) return answer;
  throw std::out_of_range("chain step index " + std::to_string(i) + " out of range");
}

bool InferenceTrace::has_vectors() const {
  for (std::size_t i = 0; i <= chain_length(); ++i) {
    for (const auto& t : chain_step(i).tokens) {
      if (!t.vector) return false;
    }
  }
  return true;
}

std::size_t InferenceTrace::response_size() const {
  std::size_t n = answer.size();
  for (const auto& s : steps) n += s.size();
  return n;
}

bool operator==(const InferenceTrace& a, const InferenceTrace& b) {
  if (a.id != b.id || a.embedding_dim != b.embedding_dim || a.instruction != b.instruction ||
      a.steps != b.steps || a.answer != b.answer || a.correct != b.correct ||
      a.verbalized_confidence != b.verbalized_confidence || a.answer_key != b.answer_key ||
      a.group_id != b.group_id || a.extra != b.extra) {
    return false;
  }
  if (a.precomputed_attention.has_value() != b.precomputed_attention.has_value()) return false;
  if (!a.precomputed_attention) return true;
  const auto& ma = *a.precomputed_attention;
  const auto& mb = *b.precomputed_attention;
  if (ma.size() != mb.size()) return false;
  for (std::size_t i = 0; i < ma.size(); ++i) {
    if (!matrices_equal(ma[i], mb[i])) return false;
  }
  return true;
}

InferenceTrace parse_trace(std::string_view line, ParseStats* stats) {
  json obj;
  try {
    obj = json::parse(line.begin(), line.end());
  } catch (const json::parse_error& e) {
    throw SchemaError(std::string("malformed JSON: ") + e.what());
  }
  if (!obj.is_object()) throw SchemaError("a trace must be a JSON object");

  InferenceTrace trace;
  const auto id = obj.find("id");
  if (id == obj.end() || !id->is_string()) throw SchemaError("field 'id': missing or not a string");
  trace.id = id->get<std::string>();

  if (const auto it = obj.find("embedding_dim"); it != obj.end() && !it->is_null()) {
    if (!it->is_number_integer() || it->get<long long>() <= 0) {
      throw SchemaError(where(trace.id, "embedding_dim") + ": expected a positive integer");
    }
    trace.embedding_dim = it->get<int>();
  }

  const auto instr = obj.find("instruction");
  if (instr == obj.end()) throw SchemaError(where(trace.id, "instruction") + ": missing");
  trace.instruction = read_step(*instr, trace.id, "instruction");

  const auto steps = obj.find("steps");
  if (steps == obj.end()) throw SchemaError(where(trace.id, "steps") + ": missing");
  if (!steps->is_array()) throw SchemaError(where(trace.id, "steps") + ": expected an array");
  for (std::size_t i = 0; i < steps->size(); ++i) {
    trace.steps.push_back(read_step((*steps)[i], trace.id, "steps[" + std::to_string(i) + "]"));
  }

  const auto answer = obj.find("answer");
  if (answer == obj.end()) throw SchemaError(where(trace.id, "answer") + ": missing");
  trace.answer = read_step(*answer, trace.id, "answer");

  if (const auto it = obj.find("correct"); it != obj.end() && !it->is_null()) {
    if (!it->is_boolean()) throw SchemaError(where(trace.id, "correct") + ": expected a boolean");
    trace.correct = it->get<bool>();
  }
  if (const auto it = obj.find("verbalized_confidence"); it != obj.end() && !it->is_null()) {
    trace.verbalized_confidence = read_real(*it, trace.id, "verbalized_confidence");
  }
  if (const auto it = obj.find("answer_key"); it != obj.end() && !it->is_null()) {
    if (!it->is_string()) throw SchemaError(where(trace.id, "answer_key") + ": expected a string");
    trace.answer_key = it->get<std::string>();
  }
  if (const auto it = obj.find("group_id"); it != obj.end() && !it->is_null()) {
    if (!it->is_string()) throw SchemaError(where(trace.id, "group_id") + ": expected a string");
    trace.group_id = it->get<std::string>();
  }
  if (const auto it = obj.find("precomputed_attention"); it != obj.end() && !it->is_null()) {
    if (!it->is_array()) throw SchemaError(where(trace.id, "precomputed_attention") + ": expected an array");
    std::vector<MatrixXd> mats;
    for (std::size_t i = 0; i < it->size(); ++i) {
      mats.push_back(read_matrix((*it)[i], trace.id, "precomputed_attention[" + std::to_string(i) + "]"));
    }
    trace.precomputed_attention = std::move(mats);
  }

  for (auto it = obj.begin(); it != obj.end(); ++it) {
    if (kKnownFields.count(it.key())) continue;
    if (!kMetadataFields.count(it.key()) && stats) ++stats->unknown_fields;
    trace.extra[it.key()] = it.value();
  }

  check_dimensions(trace);
  return trace;
}

std::string serialize_trace(const InferenceTrace& trace) {
  ordered_json out;
  out["id"] = trace.id;
  if (trace.embedding_dim) out["embedding_dim"] = *trace.embedding_dim;
  out["instruction"] = write_step(trace.instruction);
  out["steps"] = ordered_json::array();
  for (const auto& s : trace.steps) out["steps"].push_back(write_step(s));
  out["answer"] = write_step(trace.answer);
  if (trace.correct) out["correct"] = *trace.correct;
  if (trace.verbalized_confidence) out["verbalized_confidence"] = *trace.verbalized_confidence;
  if (trace.answer_key) out["answer_key"] = *trace.answer_key;
  if (trace.group_id) out["group_id"] = *trace.group_id;
  if (trace.precomputed_attention) {
    ordered_json mats = ordered_json::array();
    for (const auto& m : *trace.precomputed_attention) {
      ordered_json rows = ordered_json::array();
      for (Eigen::Index r = 0; r < m.rows(); ++r) {
        ordered_json row = ordered_json::array();
        for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
        rows.push_back(std::move(row));
      }
      mats.push_back(std::move(rows));
    }
    out["precomputed_attention"] = std::move(mats);
  }
  for (auto it = trace.extra.begin(); it != trace.extra.end(); ++it) {
    out[it.key()] = ordered_json::parse(it.value().dump());
  }
  return out.dump();
}

Corpus::Corpus(std::string path) : path_(std::move(path)), in_(path_) {
  if (!in_) throw IoError("cannot open '" + path_ + "' for reading");
}

std::optional<InferenceTrace> Corpus::next() {
  std::string buf;
  while (std::getline(in_, buf)) {
    ++line_;
    if (buf.find_first_not_of(" \t\r\n") == std::string::npos) continue;
    try {
      return parse_trace(buf, &stats_);
    } catch (const Error& e) {
      throw ParseError(line_, e.what());
    }
  }
  if (in_.bad()) throw IoError("read failure on '" + path_ + "'");
  return std::nullopt;
}

std::vector<InferenceTrace> read_corpus(const std::string& path) {
  Corpus corpus(path);
  std::vector<InferenceTrace> out;
  while (auto t = corpus.next()) out.push_back(std::move(*t));
  return out;
}

ordered_json ValidationSummary::to_json() const {
  ordered_json out;
  out["traces"] = traces;
  out["labeled"] = labeled;
  out["vectors"] = with_vectors;
  out["precomputed"] = with_precomputed;
  out["no_attention_source"] = without_attention_source;
  out["unknown_fields"] = unknown_fields;
  out["duplicates"] = duplicates;
  ordered_json probs = ordered_json::array();
  for (const auto& p : problems) probs.push_back({{"line", p.line}, {"message", p.message}});
  out["problems"] = std::move(probs);
  return out;
}

ValidationSummary validate_corpus(Corpus& corpus) {
  ValidationSummary summary;
  std::unordered_set<std::string> seen;
  std::set<std::string> dups;
  for (;;) {
    std::optional<InferenceTrace> t;
    try {
      t = corpus.next();
    } catch (const ParseError& e) {
      summary.problems.push_back({e.line(), e.what()});
      continue;
    }
    if (!t) break;
    ++summary.traces;
    if (t->correct) ++summary.labeled;
    if (t->has_precomputed_attention()) {
      ++summary.with_precomputed;
    } else if (t->has_vectors()) {
      ++summary.with_vectors;
    } else {
      ++summary.without_attention_source;
    }
    if (!seen.insert(t->id).second) dups.insert(t->id);
  }
  summary.duplicates.assign(dups.begin(), dups.end());
  summary.unknown_fields = corpus.stats().unknown_fields;
  return summary;
}

}  // namespace confchain
