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

#include "confchain/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "confchain/errors.hpp"
#include "confchain/io.hpp"
#include "confchain/parallel.hpp"

namespace confchain {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

constexpr double kProbFloor = 1e-6;
// Extra log-odds the dominant attention target gets over all others combined.
constexpr double kAttentionMargin = 3.0;

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// std:: distributions are implementation-defined; these are not, so corpora
// are byte-identical across standard libraries.
class Stream {
 public:
  Stream(std::uint64_t seed, std::uint64_t index) : eng_(splitmix64(seed ^ splitmix64(index))) {}

  double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  int uniform_int(int lo, int hi) {
    const auto span = static_cast<std::uint64_t>(hi - lo) + 1;
    return lo + static_cast<int>(eng_() % span);
  }
  bool bernoulli(double p) { return uniform() < p; }
  double normal(double mean, double sd) {
    const double u1 = 1.0 - uniform();  // (0, 1]
    const double u2 = uniform();
    return mean + sd * std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

 private:
  std::mt19937_64 eng_;
};

void place(std::vector<double>& v, int block, double x, double y) {
  v[static_cast<std::size_t>(2 * block)] = x;
  v[static_cast<std::size_t>(2 * block + 1)] = y;
}

// Step i talks to step i+1 only through the 2-d block i % 3: incoming
// tokens sit on unit circle points, each outgoing token points at one random
// incoming token, scaled so that its softmax row puts most mass there.
void wire_link(ReasoningStep& prev, ReasoningStep& next, int block, int d, Stream& rng) {
  const auto targets = static_cast<int>(next.size());
  for (int k = 0; k < targets; ++k) {
    const double angle = 2.0 * std::numbers::pi * k / targets;
    place(*next.tokens[static_cast<std::size_t>(k)].vector, block, std::cos(angle), std::sin(angle));
  }
  double scale = 1.0;
  if (targets > 1) {
    const double gap = 1.0 - std::cos(2.0 * std::numbers::pi / targets);
    scale = std::sqrt(static_cast<double>(d)) * (std::log(targets - 1.0) + kAttentionMargin) / gap;
  }
  for (auto& tok : prev.tokens) {
    const int k = rng.uniform_int(0, targets - 1);
    const double angle = 2.0 * std::numbers::pi * k / targets;
    place(*tok.vector, block, scale * std::cos(angle), scale * std::sin(angle));
  }
}

ReasoningStep make_step(int len, double reliability, double noise, int d, Stream& rng) {
  ReasoningStep step;
  step.tokens.reserve(static_cast<std::size_t>(len));
  for (int k = 0; k < len; ++k) {
    TokenRecord t;
    t.text = "t" + std::to_string(rng.uniform_int(0, 9999));
    t.prob = noise > 0.0 ? std::clamp(rng.normal(reliability, noise), kProbFloor, 1.0) : reliability;
    t.vector = std::vector<double>(static_cast<std::size_t>(d), 0.0);
    step.tokens.push_back(std::move(t));
  }
  return step;
}

InferenceTrace make_trace(const SynthConfig& c, std::size_t index) {
  Stream rng(c.seed, index);
  const int reasoning = rng.uniform_int(c.steps_min, c.steps_max);
  const int n = reasoning + 1;

  std::vector<double> rho(static_cast<std::size_t>(n));
  for (auto& r : rho) r = rng.uniform(c.reliability_floor, c.reliability_ceil);
  const bool corrupted = rng.bernoulli(c.early_corruption_rate);
  if (corrupted) rho.front() = c.corruption_reliability;
  const double weakest = *std::min_element(rho.begin(), rho.end());

  std::vector<ReasoningStep> chain;
  chain.reserve(static_cast<std::size_t>(n) + 1);
  chain.push_back(make_step(rng.uniform_int(c.tokens_min, c.tokens_max), 1.0, 0.0, c.embedding_dim, rng));
  for (int i = 0; i < n; ++i) {
    chain.push_back(make_step(rng.uniform_int(c.tokens_min, c.tokens_max), rho[static_cast<std::size_t>(i)],
                              c.confidence_noise, c.embedding_dim, rng));
  }
  for (int i = 0; i < n; ++i) {
    wire_link(chain[static_cast<std::size_t>(i)], chain[static_cast<std::size_t>(i) + 1], i % 3, c.embedding_dim, rng);
  }

  InferenceTrace t;
  char id[32];
  std::snprintf(id, sizeof(id), "synth-%06zu", index);
  t.id = id;
  t.embedding_dim = c.embedding_dim;
  t.instruction = std::move(chain.front());
  t.answer = std::move(chain.back());
  t.steps.assign(std::make_move_iterator(chain.begin() + 1), std::make_move_iterator(chain.end() - 1));
  t.correct = rng.bernoulli(weakest);
  t.extra["synth_meta"] = {{"rho", rho}, {"corrupted", corrupted}};
  return t;
}

template <typename T>
void read_opt(const json& j, const char* key, T& out) {
  if (const auto it = j.find(key); it != j.end()) out = it->get<T>();
}

void read_range(const json& j, const char* key, int& lo, int& hi) {
  const auto it = j.find(key);
  if (it == j.end()) return;
  if (!it->is_array() || it->size() != 2) throw ConfigError(std::string(key) + " must be [min, max]");
  lo = (*it)[0].get<int>();
  hi = (*it)[1].get<int>();
}

}  // namespace

void SynthConfig::validate() const {
  if (steps_min < 1 || steps_max < steps_min) throw ConfigError("steps_range must satisfy 1 <= min <= max");
  if (tokens_min < 1 || tokens_max < tokens_min) throw ConfigError("tokens_per_step_range must satisfy 1 <= min <= max");
  if (embedding_dim < 6) throw ConfigError("embedding_dim must be at least 6");
  if (!(reliability_floor > 0.0 && reliability_floor <= reliability_ceil && reliability_ceil <= 1.0)) {
    throw ConfigError("reliabilities must satisfy 0 < floor <= ceil <= 1");
  }
  if (!(confidence_noise >= 0.0) || !std::isfinite(confidence_noise)) throw ConfigError("confidence_noise must be >= 0");
  if (!(early_corruption_rate >= 0.0 && early_corruption_rate <= 1.0)) {
    throw ConfigError("early_corruption_rate must lie in [0, 1]");
  }
  if (!(corruption_reliability > 0.0 && corruption_reliability <= reliability_floor)) {
    throw ConfigError("corruption_reliability must lie in (0, reliability_floor]");
  }
}

SynthConfig SynthConfig::from_json(const json& j) {
  SynthConfig c;
  try {
    read_opt(j, "n_traces", c.n_traces);
    read_range(j, "steps_range", c.steps_min, c.steps_max);
    read_range(j, "tokens_per_step_range", c.tokens_min, c.tokens_max);
    read_opt(j, "embedding_dim", c.embedding_dim);
    read_opt(j, "reliability_floor", c.reliability_floor);
    read_opt(j, "reliability_ceil", c.reliability_ceil);
    read_opt(j, "confidence_noise", c.confidence_noise);
    read_opt(j, "early_corruption_rate", c.early_corruption_rate);
    read_opt(j, "corruption_reliability", c.corruption_reliability);
    read_opt(j, "seed", c.seed);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("synth config: ") + e.what());
  }
  c.validate();
  return c;
}

ordered_json SynthConfig::to_json() const {
  ordered_json j;
  j["n_traces"] = n_traces;
  j["steps_range"] = {steps_min, steps_max};
  j["tokens_per_step_range"] = {tokens_min, tokens_max};
  j["embedding_dim"] = embedding_dim;
  j["reliability_floor"] = reliability_floor;
  j["reliability_ceil"] = reliability_ceil;
  j["confidence_noise"] = confidence_noise;
  j["early_corruption_rate"] = early_corruption_rate;
  j["corruption_reliability"] = corruption_reliability;
  j["seed"] = seed;
  return j;
}

std::vector<InferenceTrace> generate(const SynthConfig& config, unsigned threads) {
  config.validate();
  std::vector<InferenceTrace> out(config.n_traces);
  parallel_for(out.size(), threads, [&](std::size_t i) { out[i] = make_trace(config, i); });
  return out;
}

void generate_to_file(const SynthConfig& config, const std::string& path, unsigned threads) {
  std::string body;
  for (const auto& t : generate(config, threads)) {
    body += serialize_trace(t);
    body += '\n';
  }
  write_file_atomic(path, body);
}

std::vector<LabeledScore> oracle_scores(const std::vector<InferenceTrace>& corpus) {
  std::vector<LabeledScore> out;
  out.reserve(corpus.size());
  for (const auto& t : corpus) {
    const auto meta = t.extra.find("synth_meta");
    if (meta == t.extra.end() || !meta->contains("rho") || !t.correct) {
      throw MissingMetadataError("trace '" + t.id + "' carries no generator metadata");
    }
    const auto rho = meta->at("rho").get<std::vector<double>>();
    if (rho.empty()) throw MissingMetadataError("trace '" + t.id + "': empty reliability list");
    out.push_back({*std::min_element(rho.begin(), rho.end()), *t.correct});
  }
  return out;
}

}  // namespace confchain
