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

#include <cstdlib>
#include <sstream>
#include <sys/wait.h>

#include "confchain/cli.hpp"
#include "confchain/scored.hpp"
#include "json.hpp"
#include "test_util.hpp"

using namespace confchain;
using namespace confchain::testing;
using nlohmann::json;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result invoke(std::vector<std::string> args) {
  args.insert(args.begin(), "confchain");
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string p(const std::filesystem::path& path) { return path.string(); }

std::size_t count_lines(const std::string& s) { return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n')); }

}  // namespace

TEST_CASE("synth, score, evaluate pipeline") {
  const auto dir = scratch_dir("cli_pipeline");
  REQUIRE(invoke({"synth", "--n-traces", "400", "--seed", "3", "--output", p(dir / "c.jsonl")}).code == 0);
  REQUIRE(invoke({"score", "--input", p(dir / "c.jsonl"), "--output", p(dir / "s.jsonl"), "--method", "rcc",
               "--mu", "0.5", "--delta", "0.4"})
              .code == 0);
  const auto scores = read_scores(p(dir / "s.jsonl"));
  REQUIRE(scores.size() == 400);
  CHECK(scores[0].method == "rcc");
  CHECK(scores[0].diagnostics.has_value());

  const auto r = invoke({"evaluate", "--scores", p(dir / "s.jsonl"), "--traces", p(dir / "c.jsonl"), "--report",
                      p(dir / "report.json")});
  REQUIRE(r.code == 0);
  const auto report = json::parse(slurp(dir / "report.json"));
  CHECK(report["method"] == "rcc");
  CHECK(report["n"] == 400);
  CHECK(report.contains("nll"));
  CHECK(report["ece_percent"].get<double>() >= 0.0);
  CHECK(report["bins"].size() == 10);
  CHECK(report["params"]["delta"] == 0.4);
  CHECK(std::filesystem::exists(dir / "report.reliability.csv"));
  CHECK(std::filesystem::exists(dir / "report.reliability.svg"));
  CHECK(count_lines(slurp(dir / "report.reliability.csv")) == 11);
}

TEST_CASE("every baseline scores a corpus") {
  const auto dir = scratch_dir("cli_baselines");
  REQUIRE(invoke({"synth", "--n-traces", "30", "--output", p(dir / "c.jsonl")}).code == 0);
  for (const char* m : {"logits_final", "logits_average"}) {
    CHECK(invoke({"score", "--input", p(dir / "c.jsonl"), "--output", p(dir / "s.jsonl"), "--method", m}).code == 0);
    CHECK(read_scores(p(dir / "s.jsonl")).front().method == m);
  }
  const auto bad = invoke({"score", "--input", p(dir / "c.jsonl"), "--method", "nonsense"});
  CHECK(bad.code == 2);
}

TEST_CASE("sweep writes one row per grid value") {
  const auto dir = scratch_dir("cli_sweep");
  REQUIRE(invoke({"synth", "--n-traces", "200", "--output", p(dir / "c.jsonl")}).code == 0);
  REQUIRE(invoke({"sweep", "--input", p(dir / "c.jsonl"), "--delta-grid", "0.1:0.9:0.1", "--output",
               p(dir / "sweep.csv")})
              .code == 0);
  const auto csv = slurp(dir / "sweep.csv");
  CHECK(count_lines(csv) == 10);
  CHECK(csv.rfind("delta,nll,ece_percent\n0.1,", 0) == 0);
  CHECK(csv.find("\n0.9,") != std::string::npos);
  CHECK(invoke({"sweep", "--input", p(dir / "c.jsonl"), "--delta-grid", "0.5:0.1:0.1"}).code == 2);
}

TEST_CASE("rcc without an attention source is a data error naming the trace") {
  const auto dir = scratch_dir("cli_missing_vectors");
  const auto r = invoke({"score", "--input", fixture("mixed_sources.jsonl"), "--output", p(dir / "s.jsonl")});
  CHECK(r.code == 3);
  CHECK(r.err.find("bare") != std::string::npos);
  CHECK_FALSE(std::filesystem::exists(dir / "s.jsonl"));
  CHECK_FALSE(std::filesystem::exists(dir / "s.jsonl.tmp"));

  CHECK(invoke({"score", "--input", fixture("mixed_sources.jsonl"), "--output", p(dir / "s.jsonl"), "--method",
             "logits_final"})
            .code == 0);
}

TEST_CASE("validate exit codes") {
  const auto ok = invoke({"validate", "--input", fixture("golden_trace.jsonl")});
  CHECK(ok.code == 0);
  CHECK(json::parse(ok.out)["traces"] == 1);

  const auto dir = scratch_dir("cli_validate");
  const std::string line = slurp(fixture("golden_trace.jsonl"));
  spit(dir / "dup.jsonl", line + line);
  const auto dup = invoke({"validate", "--input", p(dir / "dup.jsonl")});
  CHECK(dup.code == 1);
  CHECK(json::parse(dup.out)["duplicates"] == json::array({"golden-3step"}));

  spit(dir / "broken.jsonl", line + "{not json\n");
  const auto broken = invoke({"validate", "--input", p(dir / "broken.jsonl")});
  CHECK(broken.code == 1);
  CHECK(json::parse(broken.out)["problems"].size() == 1);
}

TEST_CASE("usage errors and help") {
  CHECK(invoke({}).code == 2);
  CHECK(invoke({"bogus"}).code == 2);
  CHECK(invoke({"score"}).code == 2);
  CHECK(invoke({"score", "--input", "/no/such/file.jsonl"}).code == 2);
  CHECK(invoke({"score", "--input", fixture("golden_trace.jsonl"), "--delta", "0"}).code == 2);
  CHECK(invoke({"score", "--input", fixture("golden_trace.jsonl"), "--mu", "1.5"}).code == 2);
  const auto help = invoke({"score", "--help"});
  CHECK(help.code == 0);
  CHECK(help.out.find("--delta") != std::string::npos);
}

TEST_CASE("golden fixture through the CLI") {
  const auto dir = scratch_dir("cli_golden");
  REQUIRE(invoke({"score", "--input", fixture("golden_trace.jsonl"), "--output", p(dir / "s.jsonl"), "--delta", "0.4",
               "--dump-attention"})
              .code == 0);
  const auto s = read_scores(p(dir / "s.jsonl"));
  REQUIRE(s.size() == 1);
  CHECK(std::abs(s[0].confidence - 0.814) <= 1e-12);
  const auto dump = json::parse(slurp(p(dir / "s.jsonl") + ".attention.jsonl"));
  CHECK(dump["id"] == "golden-3step");
  CHECK(dump["pairs"].size() == 3);
  CHECK(dump["pairs"][1]["filtered"][1] == json::array({1, 1}));
}

TEST_CASE("thread count does not change any output byte") {
  const auto dir = scratch_dir("cli_threads");
  REQUIRE(invoke({"synth", "--n-traces", "5000", "--output", p(dir / "a.jsonl"), "--threads", "1"}).code == 0);
  REQUIRE(invoke({"synth", "--n-traces", "5000", "--output", p(dir / "b.jsonl"), "--threads", "4"}).code == 0);
  CHECK(slurp(dir / "a.jsonl") == slurp(dir / "b.jsonl"));
  for (const char* t : {"1", "3", "8"}) {
    REQUIRE(invoke({"score", "--input", p(dir / "a.jsonl"), "--output", p(dir / (std::string("s") + t + ".jsonl")),
                 "--threads", t})
                .code == 0);
  }
  CHECK(slurp(dir / "s1.jsonl") == slurp(dir / "s3.jsonl"));
  CHECK(slurp(dir / "s1.jsonl") == slurp(dir / "s8.jsonl"));
}

TEST_CASE("self-consistency groups by group_id or instruction") {
  const auto dir = scratch_dir("cli_sc");
  auto trace = [](const std::string& id, const std::string& group, const std::string& key, const std::string& instr) {
    return R"({"id":")" + id + R"(","group_id":")" + group + R"(","answer_key":")" + key +
           R"(","instruction":{"tokens":[{"text":")" + instr + R"(","prob":1.0}]},"steps":[],)" +
           R"("answer":{"tokens":[{"text":"x","prob":0.5}]},"correct":true})" + "\n";
  };
  spit(dir / "c.jsonl", trace("a1", "g1", "A", "q1") + trace("a2", "g1", "A", "q1") + trace("a3", "g1", "B", "q1") +
                            trace("b1", "g2", "C", "q2") + trace("b2", "g2", "D", "q1"));
  REQUIRE(invoke({"score", "--input", p(dir / "c.jsonl"), "--output", p(dir / "s.jsonl"), "--method",
               "self_consistency"})
              .code == 0);
  auto s = read_scores(p(dir / "s.jsonl"));
  REQUIRE(s.size() == 5);
  CHECK(s[0].id == "a1");
  CHECK(s[0].confidence == doctest::Approx(2.0 / 3.0));
  CHECK(s[2].confidence == doctest::Approx(1.0 / 3.0));
  CHECK(s[3].confidence == 0.5);

  REQUIRE(invoke({"score", "--input", p(dir / "c.jsonl"), "--output", p(dir / "s.jsonl"), "--method",
               "self_consistency", "--group-by", "instruction"})
              .code == 0);
  s = read_scores(p(dir / "s.jsonl"));
  CHECK(s[0].confidence == doctest::Approx(0.5));  // q1 holds A, A, B, D
  CHECK(s[3].confidence == 1.0);
}

TEST_CASE("verbalized clamping warns, as text or JSON") {
  const auto dir = scratch_dir("cli_verbalized");
  spit(dir / "c.jsonl",
       R"({"id":"v","instruction":{"tokens":[{"text":"q","prob":1.0}]},"steps":[],"answer":{"tokens":[{"text":"x","prob":0.5}]},"verbalized_confidence":1.3})"
       "\n");
  const auto text = invoke({"score", "--input", p(dir / "c.jsonl"), "--output", p(dir / "s.jsonl"), "--method",
                         "verbalized"});
  CHECK(text.code == 0);
  CHECK(text.err.rfind("warning: ", 0) == 0);
  CHECK(read_scores(p(dir / "s.jsonl"))[0].confidence == 1.0);

  const auto structured = invoke({"--log-json", "score", "--input", p(dir / "c.jsonl"), "--output", p(dir / "s.jsonl"),
                               "--method", "verbalized"});
  const auto j = json::parse(structured.err.substr(0, structured.err.find('\n')));
  CHECK(j["level"] == "warning");
  CHECK(j["code"] == "clamped");
  CHECK(j["id"] == "v");
}

TEST_CASE("delta grid parsing") {
  const auto g = cli::parse_delta_grid("0.1:0.9:0.1");
  REQUIRE(g.size() == 9);
  CHECK(g.front() == 0.1);
  CHECK(g[2] == 0.3);
  CHECK(g.back() == 0.9);
  CHECK(cli::parse_delta_grid("0.5:0.5:0.1") == std::vector<double>{0.5});
  CHECK(cli::parse_delta_grid("0.25:1:0.25") == std::vector<double>{0.25, 0.5, 0.75, 1.0});
  for (const char* bad : {"", "0.1:0.9", "0.1:0.9:0", "0.1:0.9:-0.1", "a:b:c", "0.9:0.1:0.1", "1:2:3:4"}) {
    CHECK_THROWS_AS(cli::parse_delta_grid(bad), std::invalid_argument);
  }
}

TEST_CASE("thread resolution") {
  CHECK(cli::resolve_threads(3) == 3);
  setenv("CONFCHAIN_THREADS", "5", 1);
  CHECK(cli::resolve_threads(0) == 5);
  unsetenv("CONFCHAIN_THREADS");
  CHECK(cli::resolve_threads(0) >= 1);
}

TEST_CASE("installed binary reports exit codes") {
  const std::string bin = CONFCHAIN_CLI_PATH;
  auto status = [](const std::string& cmd) {
    const int raw = std::system((cmd + " >/dev/null 2>&1").c_str());
    return WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  };
  CHECK(status(bin + " --help") == 0);
  CHECK(status(bin + " validate --input " + fixture("golden_trace.jsonl")) == 0);
  CHECK(status(bin + " score --input " + fixture("mixed_sources.jsonl") + " --output /tmp/confchain_bin_s.jsonl") ==
        3);
  CHECK(status(bin + " score") == 2);
}
