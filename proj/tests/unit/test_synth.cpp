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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "confchain/baselines.hpp"
#include "confchain/errors.hpp"
#include "confchain/rcc.hpp"
#include "confchain/synth.hpp"
#include "test_util.hpp"

using namespace confchain;
using namespace confchain::testing;

namespace {

std::string dump(const std::vector<InferenceTrace>& corpus) {
  std::string s;
  for (const auto& t : corpus) s += serialize_trace(t) + "\n";
  return s;
}

// Frozen from the default config with seed 42 and 2000 traces.
constexpr std::uint64_t kGoldenHash = 8533540958175094841ULL;

}  // namespace

TEST_CASE("zero traces is an empty corpus") {
  SynthConfig c;
  c.n_traces = 0;
  CHECK(generate(c).empty());
  const auto dir = scratch_dir("synth_empty");
  generate_to_file(c, (dir / "c.jsonl").string());
  CHECK(slurp(dir / "c.jsonl").empty());
}

TEST_CASE("generated traces have the configured shape") {
  SynthConfig c;
  c.n_traces = 300;
  c.steps_min = 2;
  c.steps_max = 4;
  c.tokens_min = 2;
  c.tokens_max = 5;
  c.embedding_dim = 10;
  const auto corpus = generate(c);
  REQUIRE(corpus.size() == 300);
  CHECK(corpus[7].id == "synth-000007");
  for (const auto& t : corpus) {
    CHECK(t.embedding_dim == 10);
    CHECK(t.steps.size() >= 2);
    CHECK(t.steps.size() <= 4);
    CHECK(t.correct.has_value());
    CHECK(t.has_vectors());
    for (std::size_t i = 0; i < t.chain_length(); ++i) {
      CHECK(t.chain_step(i).size() >= 2);
      CHECK(t.chain_step(i).size() <= 5);
    }
    for (const auto& tk : t.instruction.tokens) CHECK(tk.prob == 1.0);
    const auto rho = t.extra.at("synth_meta").at("rho").get<std::vector<double>>();
    CHECK(rho.size() == t.steps.size() + 1);
  }
}

TEST_CASE("attention follows the wiring: each prev token lands on one target") {
  SynthConfig c;
  c.n_traces = 50;
  for (const auto& t : generate(c)) {
    for (const auto& pair : build_chain(t, 0.5)) {
      for (Eigen::Index r = 0; r < pair.filtered.rows(); ++r) {
        CHECK(pair.filtered.row(r).cast<int>().sum() == 1);
        CHECK(pair.normalized.row(r).maxCoeff() >= 0.95);
      }
    }
  }
}

TEST_CASE("constant reliability without noise gives a flat trajectory") {
  SynthConfig c;
  c.n_traces = 100;
  c.confidence_noise = 0.0;
  c.early_corruption_rate = 0.0;
  c.reliability_floor = c.reliability_ceil = 0.7;
  c.corruption_reliability = 0.7;
  for (const auto& t : generate(c)) {
    for (std::size_t i = 1; i < t.chain_length(); ++i)
      for (const auto& tk : t.chain_step(i).tokens) CHECK(tk.prob == 0.7);
    for (double delta : {0.1, 0.4, 1.0}) CHECK(std::abs(score_rcc(t, 0.5, delta).confidence - 0.7) <= 1e-12);
  }
}

TEST_CASE("generation is deterministic across runs and thread counts") {
  SynthConfig c;
  c.n_traces = 2000;
  c.seed = 42;
  const auto one = dump(generate(c, 1));
  CHECK(one == dump(generate(c, 1)));
  CHECK(one == dump(generate(c, 3)));
  CHECK(one == dump(generate(c, 8)));
  CHECK(fnv1a(one) == kGoldenHash);

  c.seed = 43;
  CHECK(dump(generate(c)) != one);
}

TEST_CASE("prefix stability: trace i does not depend on n_traces") {
  SynthConfig a;
  a.n_traces = 20;
  SynthConfig b = a;
  b.n_traces = 40;
  const auto x = generate(a);
  const auto y = generate(b);
  for (std::size_t i = 0; i < x.size(); ++i) CHECK(x[i] == y[i]);
}

TEST_CASE("generated corpora validate cleanly") {
  SynthConfig c;
  c.n_traces = 500;
  const auto dir = scratch_dir("synth_validate");
  generate_to_file(c, (dir / "c.jsonl").string(), 2);
  Corpus corpus((dir / "c.jsonl").string());
  const auto summary = validate_corpus(corpus);
  CHECK(summary.ok());
  CHECK(summary.traces == 500);
  CHECK(summary.labeled == 500);
  CHECK(summary.with_vectors == 500);
  CHECK(summary.unknown_fields == 0);
  CHECK(read_corpus((dir / "c.jsonl").string()) == generate(c));
}

TEST_CASE("oracle scores") {
  SynthConfig c;
  c.n_traces = 50;
  const auto corpus = generate(c);
  const auto oracle = oracle_scores(corpus);
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    const auto rho = corpus[i].extra.at("synth_meta").at("rho").get<std::vector<double>>();
    CHECK(oracle[i].confidence == *std::min_element(rho.begin(), rho.end()));
    CHECK(oracle[i].correct == *corpus[i].correct);
  }

  auto foreign = read_corpus(fixture("golden_trace.jsonl"));
  foreign[0].correct = true;
  CHECK_THROWS_AS(oracle_scores(foreign), MissingMetadataError);
}

TEST_CASE("oracle is calibrated on an uncorrupted constant-reliability corpus") {
  SynthConfig c;
  c.n_traces = 100000;
  c.steps_min = c.steps_max = 1;
  c.tokens_min = c.tokens_max = 1;
  c.early_corruption_rate = 0.0;
  c.reliability_floor = c.reliability_ceil = 0.8;
  c.corruption_reliability = 0.8;
  CHECK(ece(oracle_scores(generate(c, 2))).ece < 0.01);
}

TEST_CASE("oracle beats every scorer on NLL for a corrupted corpus") {
  SynthConfig c;
  c.n_traces = 4000;
  c.early_corruption_rate = 0.4;
  const auto corpus = generate(c);
  const double oracle = nll(oracle_scores(corpus));
  std::vector<LabeledScore> rcc, last, avg;
  for (const auto& t : corpus) {
    rcc.push_back({score_rcc(t, 0.5, 0.4).confidence, *t.correct});
    last.push_back({score_logits_final(t).confidence, *t.correct});
    avg.push_back({score_logits_average(t).confidence, *t.correct});
  }
  CHECK(oracle <= nll(rcc));
  CHECK(oracle <= nll(last));
  CHECK(oracle <= nll(avg));
}

TEST_CASE("config parsing and validation") {
  const auto c = SynthConfig::from_json(nlohmann::json::parse(R"({
    "n_traces": 12, "steps_range": [2, 5], "tokens_per_step_range": [4, 6], "embedding_dim": 12,
    "reliability_floor": 0.6, "reliability_ceil": 0.9, "confidence_noise": 0.0,
    "early_corruption_rate": 0.3, "corruption_reliability": 0.2, "seed": 9})"));
  CHECK(c.n_traces == 12);
  CHECK(c.steps_min == 2);
  CHECK(c.steps_max == 5);
  CHECK(c.tokens_min == 4);
  CHECK(c.embedding_dim == 12);
  CHECK(c.seed == 9);
  CHECK(SynthConfig::from_json(c.to_json()).to_json() == c.to_json());

  auto bad = [](const char* text) { return SynthConfig::from_json(nlohmann::json::parse(text)); };
  CHECK_THROWS_AS(bad(R"({"steps_range": [3, 2]})"), ConfigError);
  CHECK_THROWS_AS(bad(R"({"steps_range": [0, 2]})"), ConfigError);
  CHECK_THROWS_AS(bad(R"({"steps_range": 3})"), ConfigError);
  CHECK_THROWS_AS(bad(R"({"embedding_dim": 4})"), ConfigError);
  CHECK_THROWS_AS(bad(R"({"reliability_floor": 0.9, "reliability_ceil": 0.8})"), ConfigError);
  CHECK_THROWS_AS(bad(R"({"early_corruption_rate": 1.5})"), ConfigError);
  CHECK_THROWS_AS(bad(R"({"corruption_reliability": 0.7})"), ConfigError);
  CHECK_THROWS_AS(bad(R"({"n_traces": "many"})"), ConfigError);
}
