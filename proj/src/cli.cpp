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

#include "confchain/cli.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <stdexcept>
#include <thread>
#include <unordered_map>

#include "CLI11.hpp"
#include "confchain/baselines.hpp"
#include "confchain/errors.hpp"
#include "confchain/io.hpp"
#include "confchain/metrics.hpp"
#include "confchain/parallel.hpp"
#include "confchain/rcc.hpp"
#include "confchain/synth.hpp"
#include "confchain/trace.hpp"
#include "json.hpp"

namespace confchain::cli {

using nlohmann::ordered_json;

namespace {

constexpr std::size_t kChunk = 4096;

class Log {
 public:
  Log(std::ostream& err, bool json) : err_(err), json_(json) {}

  void warn(const std::string& code, const std::string& message, const std::string& trace_id = {}) {
    if (json_) {
      ordered_json j;
      j["level"] = "warning";
      j["code"] = code;
      if (!trace_id.empty()) j["id"] = trace_id;
      j["message"] = message;
      err_ << j.dump() << "\n";
    } else {
      err_ << "warning: " << message << "\n";
    }
  }

 private:
  std::ostream& err_;
  bool json_;
};

struct SegmentationOptions {
  std::string mode = "pre_segmented";
  std::vector<std::string> markers;
  std::size_t min_step_tokens = 3;

  void attach(CLI::App* app) {
    app->add_option("--segmentation", mode, "Step segmentation of the reasoning chain")
        ->check(CLI::IsMember({"pre_segmented", "sentence", "explicit_markers"}));
    app->add_option("--marker", markers, "Marker regex for explicit_markers (repeatable; defaults built in)");
    app->add_option("--min-step-tokens", min_step_tokens, "Shortest step kept on its own")->check(CLI::PositiveNumber);
  }

  SegmentationRule rule() const {
    SegmentationRule r;
    r.mode = parse_segmentation_mode(mode);
    r.min_step_tokens = min_step_tokens;
    if (r.mode == SegmentationMode::kExplicitMarkers) {
      r.marker_patterns = markers.empty() ? SegmentationRule::default_marker_patterns() : markers;
    }
    return r;
  }
};

struct ScoreOptions {
  std::string input;
  std::string output = "scores.jsonl";
  std::string method = "rcc";
  double mu = 0.5;
  double delta = 0.4;
  int threads = 0;
  bool stable_order = true;
  bool dump_attention = false;
  std::string group_by = "group_id";
  SegmentationOptions seg;
};

struct EvaluateOptions {
  std::string scores;
  std::string traces;
  int bins = kDefaultBins;
  double epsilon = kDefaultEpsilon;
  std::string report = "report.json";
  std::string csv;
  std::string svg;
};

struct SweepOptions {
  std::string input;
  std::string grid = "0.1:0.9:0.1";
  std::string output = "sweep.csv";
  double mu = 0.5;
  int bins = kDefaultBins;
  int threads = 0;
  SegmentationOptions seg;
};

struct SynthOptions {
  std::string config;
  std::string output = "corpus.jsonl";
  int threads = 0;
  std::optional<std::size_t> n_traces;
  std::optional<std::uint64_t> seed;
  std::optional<double> early_corruption_rate;
  std::optional<double> corruption_reliability;
  std::optional<double> confidence_noise;
  std::optional<double> reliability_floor;
  std::optional<double> reliability_ceil;
  std::optional<int> embedding_dim;
};

ordered_json matrix_json(const auto& m) {
  ordered_json rows = ordered_json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    ordered_json row = ordered_json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string attention_dump(const std::string& id, const std::vector<AttentionPair>& chain) {
  ordered_json j;
  j["id"] = id;
  j["pairs"] = ordered_json::array();
  for (const auto& p : chain) {
    ordered_json pair;
    pair["mu"] = p.mu;
    pair["raw"] = matrix_json(p.raw);
    pair["normalized"] = matrix_json(p.normalized);
    pair["filtered"] = matrix_json(p.filtered.cast<int>());
    j["pairs"].push_back(std::move(pair));
  }
  return j.dump();
}

std::string instruction_text(const InferenceTrace& t) {
  std::string s;
  for (const auto& tok : t.instruction.tokens) s += tok.text;
  return s;
}

int cmd_score_self_consistency(const ScoreOptions& o) {
  const auto traces = read_corpus(o.input);
  std::map<std::string, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < traces.size(); ++i) {
    std::string key;
    if (o.group_by == "group_id") {
      if (!traces[i].group_id) throw SchemaError("trace '" + traces[i].id + "' has no group_id");
      key = *traces[i].group_id;
    } else {
      key = instruction_text(traces[i]);
    }
    groups[key].push_back(i);
  }
  std::vector<ScoredTrace> scored(traces.size());
  for (const auto& [key, members] : groups) {
    std::vector<InferenceTrace> group;
    group.reserve(members.size());
    for (std::size_t i : members) group.push_back(traces[i]);
    const auto s = score_self_consistency(group);
    for (std::size_t g = 0; g < members.size(); ++g) scored[members[g]] = s[g];
  }
  AtomicWriter w(o.output);
  for (const auto& s : scored) w.write(serialize_scored(s) + "\n");
  w.commit();
  return kExitOk;
}

int cmd_score(const ScoreOptions& o, Log& log) {
  if (o.method == "self_consistency") return cmd_score_self_consistency(o);
  const unsigned threads = resolve_threads(o.threads);
  const bool is_rcc = o.method == "rcc";
  std::optional<RccScorer> rcc;
  if (is_rcc) rcc.emplace(o.mu, o.delta, o.seg.rule());
  const auto baseline = is_rcc ? BaselineMethod::kLogitsFinal : parse_baseline_method(o.method);

  Corpus corpus(o.input);
  AtomicWriter out(o.output);
  std::optional<AtomicWriter> dump;
  if (o.dump_attention && is_rcc) dump.emplace(o.output + ".attention.jsonl");

  std::vector<InferenceTrace> batch;
  std::vector<std::string> lines;
  std::vector<std::string> dumps;
  std::vector<std::uint8_t> clamped;
  std::vector<std::size_t> completion;
  batch.reserve(kChunk);

  auto flush = [&] {
    const std::size_t n = batch.size();
    lines.assign(n, {});
    dumps.assign(n, {});
    clamped.assign(n, 0);
    completion.assign(n, 0);
    std::atomic<std::size_t> done{0};
    parallel_for(n, threads, [&](std::size_t i) {
      const auto& t = batch[i];
      ScoredTrace s;
      if (is_rcc) {
        const RccResult r = rcc->evaluate(t);
        s = {t.id, "rcc", {{"mu", rcc->mu()}, {"delta", rcc->delta()}}, r.trajectory.final(),
             ScoreDiagnostics{r.fallback_steps, r.trajectory.q.size()}};
        if (dump) dumps[i] = attention_dump(t.id, r.chain);
      } else if (baseline == BaselineMethod::kLogitsFinal) {
        s = score_logits_final(t);
      } else if (baseline == BaselineMethod::kLogitsAverage) {
        s = score_logits_average(t);
      } else {
        bool c = false;
        s = score_verbalized(t, &c);
        clamped[i] = c;
      }
      lines[i] = serialize_scored(s) + "\n";
      completion[done.fetch_add(1)] = i;
    });
    for (std::size_t k = 0; k < n; ++k) {
      const std::size_t i = o.stable_order ? k : completion[k];
      if (clamped[i]) log.warn("clamped", "verbalized_confidence of '" + batch[i].id + "' clamped to [0, 1]", batch[i].id);
      out.write(lines[i]);
      if (dump) dump->write(dumps[i] + "\n");
    }
    batch.clear();
  };

  while (auto t = corpus.next()) {
    batch.push_back(std::move(*t));
    if (batch.size() == kChunk) flush();
  }
  flush();
  if (corpus.stats().unknown_fields > 0) {
    log.warn("unknown_fields", std::to_string(corpus.stats().unknown_fields) + " unknown trace fields ignored");
  }
  out.commit();
  if (dump) dump->commit();
  return kExitOk;
}

std::string sibling_path(const std::string& report, const std::string& suffix) {
  std::filesystem::path p(report);
  p.replace_extension();
  return p.string() + suffix;
}

int cmd_evaluate(const EvaluateOptions& o, Log& log) {
  const auto scores = read_scores(o.scores);
  std::unordered_map<std::string, std::optional<bool>> labels;
  Corpus corpus(o.traces);
  while (auto t = corpus.next()) labels[t->id] = t->correct;

  std::vector<LabeledScore> samples;
  samples.reserve(scores.size());
  std::size_t missing = 0;
  std::size_t unlabeled = 0;
  for (const auto& s : scores) {
    const auto it = labels.find(s.id);
    if (it == labels.end()) {
      ++missing;
    } else if (!it->second) {
      ++unlabeled;
    } else {
      samples.push_back({s.confidence, *it->second});
    }
  }
  if (missing > 0) log.warn("missing_trace", std::to_string(missing) + " scores have no matching trace");
  if (unlabeled > 0) log.warn("unlabeled", std::to_string(unlabeled) + " scored traces carry no 'correct' label");
  if (samples.empty()) throw EmptyInputError("no labeled scores to evaluate");

  for (const auto& s : scores) {
    if (s.method != scores.front().method) throw SchemaError("scores file mixes methods '" + scores.front().method +
                                                             "' and '" + s.method + "'");
  }

  const auto report = calibration_report(samples, o.bins, o.epsilon);
  write_file_atomic(o.report, report.to_json(scores.front().method, scores.front().params).dump(2) + "\n");
  emit_reliability(report.bins, o.csv.empty() ? sibling_path(o.report, ".reliability.csv") : o.csv,
                   o.svg.empty() ? sibling_path(o.report, ".reliability.svg") : o.svg);
  return kExitOk;
}

int cmd_sweep(const SweepOptions& o) {
  const auto deltas = parse_delta_grid(o.grid);
  Corpus corpus(o.input);
  const auto rows = sweep_delta(corpus, o.mu, deltas, o.seg.rule(), o.bins, resolve_threads(o.threads));
  write_file_atomic(o.output, sweep_csv(rows));
  return kExitOk;
}

int cmd_synth(const SynthOptions& o) {
  SynthConfig c;
  if (!o.config.empty()) {
    std::ifstream in(o.config);
    if (!in) throw IoError("cannot open '" + o.config + "' for reading");
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
      throw ConfigError(std::string("synth config: ") + e.what());
    }
    c = SynthConfig::from_json(j);
  }
  if (o.n_traces) c.n_traces = *o.n_traces;
  if (o.seed) c.seed = *o.seed;
  if (o.early_corruption_rate) c.early_corruption_rate = *o.early_corruption_rate;
  if (o.corruption_reliability) c.corruption_reliability = *o.corruption_reliability;
  if (o.confidence_noise) c.confidence_noise = *o.confidence_noise;
  if (o.reliability_floor) c.reliability_floor = *o.reliability_floor;
  if (o.reliability_ceil) c.reliability_ceil = *o.reliability_ceil;
  if (o.embedding_dim) c.embedding_dim = *o.embedding_dim;
  generate_to_file(c, o.output, resolve_threads(o.threads));
  return kExitOk;
}

int cmd_validate(const std::string& input, std::ostream& out) {
  Corpus corpus(input);
  const auto summary = validate_corpus(corpus);
  out << summary.to_json().dump(2) << "\n";
  return summary.ok() ? kExitOk : kExitProblems;
}

}  // namespace

std::vector<double> parse_delta_grid(const std::string& spec) {
  const auto a = spec.find(':');
  const auto b = a == std::string::npos ? std::string::npos : spec.find(':', a + 1);
  if (b == std::string::npos || spec.find(':', b + 1) != std::string::npos) {
    throw std::invalid_argument("delta grid must be start:stop:step, got '" + spec + "'");
  }
  double start = 0, stop = 0, step = 0;
  try {
    std::size_t used = 0;
    start = std::stod(spec.substr(0, a), &used);
    stop = std::stod(spec.substr(a + 1, b - a - 1));
    step = std::stod(spec.substr(b + 1));
  } catch (const std::exception&) {
    throw std::invalid_argument("delta grid must be start:stop:step, got '" + spec + "'");
  }
  if (!(step > 0.0) || stop < start) throw std::invalid_argument("delta grid needs step > 0 and stop >= start");
  std::vector<double> out;
  for (std::size_t i = 0;; ++i) {
    const double v = start + static_cast<double>(i) * step;
    if (v > stop + 1e-9) break;
    // Snap to 12 decimals so 0.1 + 2 * 0.1 reads back as 0.3.
    out.push_back(std::round(v * 1e12) / 1e12);
  }
  return out;
}

unsigned resolve_threads(int flag) {
  if (flag > 0) return static_cast<unsigned>(flag);
  if (const char* env = std::getenv("CONFCHAIN_THREADS")) {
    try {
      const int n = std::stoi(env);
      if (n > 0) return static_cast<unsigned>(n);
    } catch (const std::exception&) {
    }
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

int run(const std::vector<std::string>& argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Confidence scoring and calibration for multi-step reasoning traces", "confchain"};
  app.require_subcommand(1);
  bool log_json = false;
  app.add_flag("--log-json", log_json, "Emit warnings on stderr as JSON objects");

  ScoreOptions score;
  auto* score_cmd = app.add_subcommand("score", "Score traces with RCC or a baseline");
  score_cmd->add_option("--input", score.input, "Trace JSONL")->required()->check(CLI::ExistingFile);
  score_cmd->add_option("--output", score.output, "Scores JSONL")->capture_default_str();
  score_cmd->add_option("--method", score.method, "Scoring method")->capture_default_str()
      ->check(CLI::IsMember({"rcc", "logits_final", "logits_average", "self_consistency", "verbalized"}));
  score_cmd->add_option("--mu", score.mu, "Attention threshold")->capture_default_str()->check(CLI::Range(0.0, 1.0));
  score_cmd->add_option("--delta", score.delta, "Propagation weight in (0, 1]")->capture_default_str();
  score_cmd->add_option("--threads", score.threads, "Worker threads");
  score_cmd->add_flag("--stable-order,!--no-stable-order", score.stable_order, "Keep input order in the output");
  score_cmd->add_flag("--dump-attention", score.dump_attention, "Write <output>.attention.jsonl (rcc only)");
  score_cmd->add_option("--group-by", score.group_by, "Self-consistency grouping")->capture_default_str()
      ->check(CLI::IsMember({"group_id", "instruction"}));
  score.seg.attach(score_cmd);

  EvaluateOptions eval;
  auto* eval_cmd = app.add_subcommand("evaluate", "NLL, ECE and reliability diagram for scored traces");
  eval_cmd->add_option("--scores", eval.scores, "Scores JSONL")->required()->check(CLI::ExistingFile);
  eval_cmd->add_option("--traces", eval.traces, "Trace JSONL carrying labels")->required()->check(CLI::ExistingFile);
  eval_cmd->add_option("--bins", eval.bins, "Reliability bins")->capture_default_str()->check(CLI::PositiveNumber);
  eval_cmd->add_option("--epsilon", eval.epsilon, "Probability clamp for NLL")->capture_default_str();
  eval_cmd->add_option("--report", eval.report, "Report JSON")->capture_default_str();
  eval_cmd->add_option("--reliability-csv", eval.csv, "Defaults to <report>.reliability.csv");
  eval_cmd->add_option("--reliability-svg", eval.svg, "Defaults to <report>.reliability.svg");

  SweepOptions sweep;
  auto* sweep_cmd = app.add_subcommand("sweep", "NLL and ECE of RCC over a delta grid");
  sweep_cmd->add_option("--input", sweep.input, "Labeled trace JSONL")->required()->check(CLI::ExistingFile);
  sweep_cmd->add_option("--delta-grid", sweep.grid, "start:stop:step")->capture_default_str();
  sweep_cmd->add_option("--output", sweep.output, "Sweep CSV")->capture_default_str();
  sweep_cmd->add_option("--mu", sweep.mu, "Attention threshold")->capture_default_str()->check(CLI::Range(0.0, 1.0));
  sweep_cmd->add_option("--bins", sweep.bins, "Reliability bins")->capture_default_str()->check(CLI::PositiveNumber);
  sweep_cmd->add_option("--threads", sweep.threads, "Worker threads");
  sweep.seg.attach(sweep_cmd);

  SynthOptions synth;
  auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic labeled corpus");
  synth_cmd->add_option("--config", synth.config, "Generator config JSON")->check(CLI::ExistingFile);
  synth_cmd->add_option("--output", synth.output, "Corpus JSONL")->capture_default_str();
  synth_cmd->add_option("--threads", synth.threads, "Worker threads");
  synth_cmd->add_option("--n-traces", synth.n_traces);
  synth_cmd->add_option("--seed", synth.seed);
  synth_cmd->add_option("--early-corruption-rate", synth.early_corruption_rate);
  synth_cmd->add_option("--corruption-reliability", synth.corruption_reliability);
  synth_cmd->add_option("--confidence-noise", synth.confidence_noise);
  synth_cmd->add_option("--reliability-floor", synth.reliability_floor);
  synth_cmd->add_option("--reliability-ceil", synth.reliability_ceil);
  synth_cmd->add_option("--embedding-dim", synth.embedding_dim);

  std::string validate_input;
  auto* validate_cmd = app.add_subcommand("validate", "Check a trace corpus and print a summary");
  validate_cmd->add_option("--input", validate_input, "Trace JSONL")->required()->check(CLI::ExistingFile);

  std::vector<const char*> cargv;
  cargv.reserve(argv.size());
  for (const auto& a : argv) cargv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(cargv.size()), cargv.data());
  } catch (const CLI::CallForHelp&) {
    out << (app.get_subcommands().empty() ? app.help() : app.get_subcommands().front()->help());
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    err << (app.get_subcommands().empty() ? app.help() : app.get_subcommands().front()->help());
    return kExitUsage;
  }

  Log log(err, log_json);
  try {
    if (*score_cmd) {
      if (!(score.delta > 0.0 && score.delta <= 1.0)) throw std::invalid_argument("--delta must lie in (0, 1]");
      return cmd_score(score, log);
    }
    if (*eval_cmd) return cmd_evaluate(eval, log);
    if (*sweep_cmd) return cmd_sweep(sweep);
    if (*synth_cmd) return cmd_synth(synth);
    if (*validate_cmd) return cmd_validate(validate_input, out);
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << "\n";
    err << app.get_subcommands().front()->help();
    return kExitUsage;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const nlohmann::json::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitData;
  }
  return kExitUsage;
}

}  // namespace confchain::cli
