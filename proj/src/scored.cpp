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

#include "confchain/scored.hpp"

#include <fstream>

#include "confchain/errors.hpp"
#include "json.hpp"

namespace confchain {

using nlohmann::json;
using nlohmann::ordered_json;

std::string serialize_scored(const ScoredTrace& s) {
  ordered_json out;
  out["id"] = s.id;
  out["method"] = s.method;
  out["params"] = ordered_json::object();
  for (const auto& [k, v] : s.params) out["params"][k] = v;
  out["confidence"] = s.confidence;
  if (s.diagnostics) {
    out["diagnostics"] = {{"fallback_steps", s.diagnostics->fallback_steps}, {"n_steps", s.diagnostics->n_steps}};
  }
  return out.dump();
}

ScoredTrace parse_scored(std::string_view line) {
  ordered_json obj;
  try {
    obj = ordered_json::parse(line.begin(), line.end());
  } catch (const json::parse_error& e) {
    throw SchemaError(std::string("malformed score line: ") + e.what());
  }
  if (!obj.is_object()) throw SchemaError("a score line must be a JSON object");
  ScoredTrace s;
  try {
    s.id = obj.at("id").get<std::string>();
    s.method = obj.at("method").get<std::string>();
    s.confidence = obj.at("confidence").get<double>();
    if (const auto it = obj.find("params"); it != obj.end()) {
      for (auto p = it->begin(); p != it->end(); ++p) s.params.emplace_back(p.key(), p.value().get<double>());
    }
    if (const auto it = obj.find("diagnostics"); it != obj.end()) {
      s.diagnostics = ScoreDiagnostics{it->at("fallback_steps").get<std::size_t>(), it->at("n_steps").get<std::size_t>()};
    }
  } catch (const json::exception& e) {
    throw SchemaError(std::string("score line: ") + e.what());
  }
  if (!obj.at("confidence").is_number()) throw SchemaError("score line: confidence is not a number");
  return s;
}

std::vector<ScoredTrace> read_scores(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  std::vector<ScoredTrace> out;
  std::string buf;
  std::size_t line = 0;
  while (std::getline(in, buf)) {
    ++line;
    if (buf.find_first_not_of(" \t\r\n") == std::string::npos) continue;
    try {
      out.push_back(parse_scored(buf));
    } catch (const Error& e) {
      throw ParseError(line, e.what());
    }
  }
  return out;
}

}  // namespace confchain
