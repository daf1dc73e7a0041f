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

#include "confchain/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "confchain/errors.hpp"
#include "confchain/io.hpp"
#include "confchain/parallel.hpp"
#include "confchain/rcc.hpp"

namespace confchain {

using nlohmann::ordered_json;

namespace {

void check_samples(std::span<const LabeledScore> samples) {
  if (samples.empty()) throw EmptyInputError("no labeled samples");
  for (const auto& s : samples) {
    if (!std::isfinite(s.confidence)) throw ValueError("non-finite confidence");
  }
}

std::size_t bin_index(double c, int bins) {
  const double scaled = std::floor(c * bins);
  if (!(scaled > 0.0)) return 0;
  return std::min(static_cast<std::size_t>(scaled), static_cast<std::size_t>(bins - 1));
}

// Labels and per-trace q chains; delta only enters through propagate.
struct ChainSample {
  std::vector<double> q;
  bool correct = false;
};

ChainSample chain_sample(const RccScorer& scorer, const InferenceTrace& t) {
  if (!t.correct) throw MissingFieldError("trace '" + t.id + "' has no 'correct' label");
  return {scorer.evaluate(t).trajectory.q, *t.correct};
}

std::vector<SweepRow> sweep_rows(const std::vector<ChainSample>& chains, const std::vector<double>& deltas,
                                 int bins, unsigned threads) {
  std::vector<SweepRow> rows(deltas.size());
  parallel_for(deltas.size(), threads, [&](std::size_t r) {
    std::vector<LabeledScore> samples;
    samples.reserve(chains.size());
    for (const auto& c : chains) samples.push_back({propagate(c.q, deltas[r]).final(), c.correct});
    rows[r] = {deltas[r], nll(samples), ece(samples, bins).ece};
  });
  return rows;
}

void check_deltas(const std::vector<double>& deltas) {
  if (deltas.empty()) throw DomainError("empty delta grid");
  for (double d : deltas) {
    if (!(d > 0.0 && d <= 1.0)) throw DomainError("delta must lie in (0, 1], got " + format_real(d));
  }
}

std::string svg_num(double x) {
  std::ostringstream os;
  os.precision(6);
  os << std::fixed << x;
  std::string s = os.str();
  s.erase(s.find_last_not_of('0') + 1);
  if (s.back() == '.') s.pop_back();
  return s;
}

}  // namespace

double nll(std::span<const LabeledScore> samples, double epsilon) {
  check_samples(samples);
  if (!(epsilon > 0.0 && epsilon <= 1e-3)) throw DomainError("epsilon must lie in (0, 1e-3]");
  double total = 0.0;
  for (const auto& s : samples) {
    const double p = std::clamp(s.confidence, epsilon, 1.0 - epsilon);
    total += s.correct ? -std::log(p) : -std::log1p(-p);
  }
  return total / static_cast<double>(samples.size());
}

EceResult ece(std::span<const LabeledScore> samples, int bins) {
  check_samples(samples);
  if (bins < 1) throw DomainError("bins must be positive");
  std::vector<double> conf_sum(static_cast<std::size_t>(bins), 0.0);
  std::vector<std::size_t> hits(static_cast<std::size_t>(bins), 0);
  EceResult out;
  out.bins.resize(static_cast<std::size_t>(bins));
  for (const auto& s : samples) {
    const std::size_t b = bin_index(s.confidence, bins);
    conf_sum[b] += s.confidence;
    hits[b] += s.correct ? 1 : 0;
    ++out.bins[b].count;
  }
  const auto n = static_cast<double>(samples.size());
  for (std::size_t b = 0; b < out.bins.size(); ++b) {
    auto& bin = out.bins[b];
    bin.lo = static_cast<double>(b) / bins;
    bin.hi = static_cast<double>(b + 1) / bins;
    if (bin.count == 0) continue;
    const auto cnt = static_cast<double>(bin.count);
    bin.mean_confidence = conf_sum[b] / cnt;
    bin.accuracy = static_cast<double>(hits[b]) / cnt;
    out.ece += (cnt / n) * std::abs(*bin.accuracy - *bin.mean_confidence);
  }
  return out;
}

CalibrationReport calibration_report(std::span<const LabeledScore> samples, int bins, double epsilon) {
  CalibrationReport r;
  r.nll = nll(samples, epsilon);
  auto e = ece(samples, bins);
  r.ece = e.ece;
  r.bins = std::move(e.bins);
  r.n = samples.size();
  r.epsilon = epsilon;
  return r;
}

ordered_json CalibrationReport::to_json(const std::string& method,
                                        const std::vector<std::pair<std::string, double>>& params) const {
  ordered_json out;
  out["method"] = method;
  out["params"] = ordered_json::object();
  for (const auto& [k, v] : params) out["params"][k] = v;
  out["n"] = n;
  out["nll"] = nll;
  out["ece"] = ece;
  out["ece_percent"] = ece * 100.0;
  out["epsilon"] = epsilon;
  ordered_json rows = ordered_json::array();
  for (const auto& b : bins) {
    ordered_json row;
    row["lo"] = b.lo;
    row["hi"] = b.hi;
    row["count"] = b.count;
    row["mean_confidence"] = b.mean_confidence ? ordered_json(*b.mean_confidence) : ordered_json(nullptr);
    row["accuracy"] = b.accuracy ? ordered_json(*b.accuracy) : ordered_json(nullptr);
    rows.push_back(std::move(row));
  }
  out["bins"] = std::move(rows);
  return out;
}

std::vector<SweepRow> sweep_delta(const std::vector<InferenceTrace>& corpus, double mu,
                                  const std::vector<double>& deltas, const SegmentationRule& rule, int bins,
                                  unsigned threads) {
  check_deltas(deltas);
  const RccScorer scorer(mu, 1.0, rule);
  std::vector<ChainSample> chains(corpus.size());
  parallel_for(corpus.size(), threads, [&](std::size_t i) { chains[i] = chain_sample(scorer, corpus[i]); });
  return sweep_rows(chains, deltas, bins, threads);
}

std::vector<SweepRow> sweep_delta(Corpus& corpus, double mu, const std::vector<double>& deltas,
                                  const SegmentationRule& rule, int bins, unsigned threads) {
  check_deltas(deltas);
  const RccScorer scorer(mu, 1.0, rule);
  constexpr std::size_t kChunk = 4096;
  std::vector<ChainSample> chains;
  std::vector<InferenceTrace> batch;
  batch.reserve(kChunk);
  auto flush = [&] {
    const std::size_t base = chains.size();
    chains.resize(base + batch.size());
    parallel_for(batch.size(), threads, [&](std::size_t i) { chains[base + i] = chain_sample(scorer, batch[i]); });
    batch.clear();
  };
  while (auto t = corpus.next()) {
    batch.push_back(std::move(*t));
    if (batch.size() == kChunk) flush();
  }
  flush();
  return sweep_rows(chains, deltas, bins, threads);
}

std::string sweep_csv(const std::vector<SweepRow>& rows) {
  std::string out = "delta,nll,ece_percent\n";
  for (const auto& r : rows) {
    out += format_real(r.delta) + "," + format_real(r.nll) + "," + format_real(r.ece * 100.0) + "\n";
  }
  return out;
}

std::string reliability_csv(const std::vector<ReliabilityBin>& bins) {
  std::string out = "bin_lo,bin_hi,count,mean_confidence,accuracy\n";
  for (const auto& b : bins) {
    out += format_real(b.lo) + "," + format_real(b.hi) + "," + std::to_string(b.count) + ",";
    if (b.mean_confidence) out += format_real(*b.mean_confidence);
    out += ",";
    if (b.accuracy) out += format_real(*b.accuracy);
    out += "\n";
  }
  return out;
}

std::string reliability_svg(const std::vector<ReliabilityBin>& bins, const std::string& title) {
  constexpr double kMargin = 50.0;
  constexpr double kSide = 400.0;
  const double size = kSide + 2 * kMargin;
  auto px = [&](double v) { return kMargin + v * kSide; };          // confidence -> x
  auto py = [&](double v) { return kMargin + (1.0 - v) * kSide; };  // accuracy -> y

  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << svg_num(size) << "\" height=\"" << svg_num(size)
     << "\" viewBox=\"0 0 " << svg_num(size) << " " << svg_num(size) << "\">\n";
  os << "  <title>" << title << "</title>\n";
  os << "  <rect x=\"" << svg_num(kMargin) << "\" y=\"" << svg_num(kMargin) << "\" width=\"" << svg_num(kSide)
     << "\" height=\"" << svg_num(kSide) << "\" fill=\"none\" stroke=\"#444\"/>\n";
  for (const auto& b : bins) {
    if (!b.accuracy) continue;
    const double height = *b.accuracy * kSide;
    os << "  <rect class=\"bar\" x=\"" << svg_num(px(b.lo)) << "\" y=\"" << svg_num(py(*b.accuracy)) << "\" width=\""
       << svg_num((b.hi - b.lo) * kSide) << "\" height=\"" << svg_num(height)
       << "\" fill=\"#4c72b0\" stroke=\"#fff\" data-count=\"" << b.count << "\"/>\n";
  }
  os << "  <line class=\"diagonal\" x1=\"" << svg_num(px(0)) << "\" y1=\"" << svg_num(py(0)) << "\" x2=\""
     << svg_num(px(1)) << "\" y2=\"" << svg_num(py(1)) << "\" stroke=\"#c44e52\" stroke-dasharray=\"6,4\"/>\n";
  os << "  <text x=\"" << svg_num(size / 2) << "\" y=\"" << svg_num(size - 12)
     << "\" text-anchor=\"middle\" font-size=\"14\">Confidence</text>\n";
  os << "  <text x=\"16\" y=\"" << svg_num(size / 2) << "\" text-anchor=\"middle\" font-size=\"14\" transform=\"rotate(-90 16 "
     << svg_num(size / 2) << ")\">Accuracy</text>\n";
  os << "</svg>\n";
  return os.str();
}

void emit_reliability(const std::vector<ReliabilityBin>& bins, const std::string& csv_path,
                      const std::string& svg_path) {
  write_file_atomic(csv_path, reliability_csv(bins));
  write_file_atomic(svg_path, reliability_svg(bins));
}

}  // namespace confchain
