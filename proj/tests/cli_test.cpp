/*
 * Copyright 2026 The editshap Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <gtest/gtest.h>

#include <sys/wait.h>

#include <array>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct Outcome {
  int code;
  std::string out;
};

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("editshap_cli_" + std::to_string(::getpid()) + "_" +
            ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  void write(const std::string& name, const std::string& text) const {
    std::ofstream(path(name)) << text;
  }

  std::string read(const std::string& name) const {
    std::ifstream in(path(name));
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
  }

  // Runs the tool in the scratch directory; captures stdout only.
  Outcome run(const std::string& args) const {
    const std::string cmd = "cd '" + dir_.string() + "' && " + EDITSHAP_CLI + " " + args + " 2>/dev/null";
    FILE* p = ::popen(cmd.c_str(), "r");
    std::string out;
    std::array<char, 4096> buf{};
    while (std::size_t n = std::fread(buf.data(), 1, buf.size(), p)) out.append(buf.data(), n);
    const int status = ::pclose(p);
    return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, out};
  }

  static std::vector<json> lines(const std::string& text) {
    std::vector<json> out;
    std::istringstream in(text);
    for (std::string l; std::getline(in, l);) {
      if (!l.empty()) out.push_back(json::parse(l));
    }
    return out;
  }

  void write_toy() const {
    write("toy.jsonl",
          R"({"source": "A job is performed by him .", "edits": [{"start": 0, "end": 1, "replacement": "The", "type": "R:DET"}, {"start": 1, "end": 2, "replacement": "work", "type": "R:NOUN"}, {"start": 2, "end": 3, "replacement": "was", "type": "R:VERB:TENSE"}]})"
          "\n"
          R"({"source": "Nothing to fix .", "hypothesis": "Nothing to fix ."})"
          "\n");
    write("toy.oracle", "{\"bonuses\": [0.2, 0.1, -0.35]}\n{\"bonuses\": []}\n");
  }

  void write_lm_corpus() const {
    write("corpus.txt",
          "the cat sat on the mat .\nthe dog sat on the rug .\na cat is on the mat .\n"
          "the work was done by him .\nhe goes to the school .\nshe goes to work .\n"
          "the cat was on the rug .\nthe dog goes to the mat .\n");
    ASSERT_EQ(run("train-lm --corpus corpus.txt --out lm.json --order 2").code, 0);
  }

  fs::path dir_;
};

TEST_F(Cli, RunningExampleAttribution) {
  write_toy();
  auto r = run("attribute --input toy.jsonl --scorer additive:toy.oracle --no-timing");
  ASSERT_EQ(r.code, 0);
  auto recs = lines(r.out);
  ASSERT_EQ(recs.size(), 2u);
  const double expected[] = {0.2, 0.1, -0.35};
  for (int i = 0; i < 3; ++i) EXPECT_NEAR(recs[0]["edits"][i]["phi"].get<double>(), expected[i], 1e-12);
  EXPECT_NEAR(recs[0]["delta_m"].get<double>(), -0.05, 1e-12);
  EXPECT_EQ(recs[0]["scorer_calls"], 8);
  EXPECT_TRUE(recs[1]["edits"].empty());
  EXPECT_EQ(recs[1]["delta_m"], 0.0);
}

TEST_F(Cli, SeededSamplingIsByteIdentical) {
  write_lm_corpus();
  write("pairs.jsonl",
        R"({"source": "the cat sat in a mat", "hypothesis": "a dog sat on the mat ."})" "\n"
        R"({"source": "he go to school", "hypothesis": "he goes to the school ."})" "\n"
        R"({"source": "she go work", "hypothesis": "she goes to work ."})" "\n");
  const std::string args = "attribute --input pairs.jsonl --scorer ngram:lm.json --method sampling --t 64 --seed 7 --no-timing";
  ASSERT_EQ(run(args + " --out a.jsonl").code, 0);
  ASSERT_EQ(run(args + " --out b.jsonl").code, 0);
  ASSERT_EQ(run(args + " --jobs 3 --out c.jsonl").code, 0);
  EXPECT_FALSE(read("a.jsonl").empty());
  EXPECT_EQ(read("a.jsonl"), read("b.jsonl"));
  EXPECT_EQ(read("a.jsonl"), read("c.jsonl"));
  auto recs = lines(read("a.jsonl"));
  EXPECT_EQ(recs[0]["seed"], 7);
  EXPECT_EQ(recs[0]["method"], "shapley_sampling");
}

TEST_F(Cli, ExitCodes) {
  write_toy();
  EXPECT_EQ(run("attribute --input missing.jsonl").code, 1);
  write("bad.jsonl", "{\"source\": \"a b\", \"hypothesis\": \n");
  EXPECT_EQ(run("attribute --input bad.jsonl").code, 1);
  EXPECT_EQ(run("attribute --input toy.jsonl --scorer external:/bin/false").code, 2);
  EXPECT_EQ(run("attribute --input toy.jsonl --scorer ngram:missing.json").code, 2);
  EXPECT_EQ(run("attribute --input toy.jsonl --max-edits 2").code, 3);
  auto routed = run("attribute --input toy.jsonl --max-edits 2 --auto-sampling --no-timing");
  ASSERT_EQ(routed.code, 0);
  EXPECT_EQ(lines(routed.out)[0]["method"], "shapley_sampling");
  EXPECT_EQ(run("no-such-command").code, 1);
}

TEST_F(Cli, EnvironmentFallbackAndPrecedence) {
  write_toy();
  ASSERT_EQ(run("consistency --input toy.jsonl --scorer additive:toy.oracle --out-json r.json").code, 0);
  EXPECT_EQ(json::parse(read("r.json"))["config"]["seed"]["source"], "default");
  ASSERT_EQ(run("consistency --input toy.jsonl --out-json r.json").code, 0);
  ::setenv("ESH_SEED", "11", 1);
  ::setenv("ESH_SCORER", "additive:toy.oracle", 1);
  ASSERT_EQ(run("consistency --input toy.jsonl --out-json r.json").code, 0);
  auto cfg = json::parse(read("r.json"))["config"];
  EXPECT_EQ(cfg["seed"]["source"], "env");
  EXPECT_EQ(cfg["seed"]["value"], "11");
  EXPECT_EQ(cfg["scorer"]["value"], "additive:toy.oracle");
  ASSERT_EQ(run("consistency --input toy.jsonl --seed 3 --out-json r.json").code, 0);
  cfg = json::parse(read("r.json"))["config"];
  EXPECT_EQ(cfg["seed"]["source"], "flag");
  EXPECT_EQ(cfg["seed"]["value"], "3");
  ::unsetenv("ESH_SEED");
  ::unsetenv("ESH_SCORER");
}

TEST_F(Cli, ConsistencyReport) {
  write_toy();
  auto r = run("consistency --input toy.jsonl --scorer additive:toy.oracle --out-json r.json --out-csv r.csv");
  ASSERT_EQ(r.code, 0);
  auto rep = json::parse(read("r.json"));
  EXPECT_EQ(rep["command"], "consistency");
  EXPECT_EQ(rep["report"]["sign_agreement_ratio"], 1.0);
  EXPECT_EQ(read("r.csv").substr(0, 9), "sentence,");
  EXPECT_NE(r.out.find("sign agreement ratio"), std::string::npos);
}

TEST_F(Cli, AgreementWithHypothesisAsReference) {
  write_lm_corpus();
  write("src.txt", "the cat sat in a mat\nhe go to school\nshe go work\ndog sat rug\n");
  write("hyp.txt", "a dog sat on the mat .\nhe goes to the school .\nshe goes to work .\nthe dog sat on the rug .\n");
  ASSERT_EQ(run("attribute --source src.txt --hyp hyp.txt --scorer ngram:lm.json --no-timing --out attr.jsonl").code, 0);
  std::size_t positive = 0, total = 0;
  for (const auto& rec : lines(read("attr.jsonl"))) {
    if (rec["edits"].size() < 2) continue;
    for (const auto& e : rec["edits"]) {
      if (e["phi"].get<double>() == 0.0) continue;
      ++total;
      positive += e["phi"].get<double>() > 0;
    }
  }
  ASSERT_GT(total, 0u);
  ASSERT_EQ(run("agreement --source src.txt --hyp hyp.txt --refs hyp.txt --scorer ngram:lm.json "
                "--out-json ag.json --out-csv ag.csv").code, 0);
  auto curve = json::parse(read("ag.json"))["report"]["curve"];
  ASSERT_EQ(curve.size(), 10u);
  EXPECT_NEAR(curve[9]["accuracy"].get<double>(), static_cast<double>(positive) / total, 1e-12);
  EXPECT_EQ(curve[9]["n_edits"], total);
  EXPECT_EQ(run("agreement --source src.txt --hyp hyp.txt --scorer ngram:lm.json").code, 1);
}

TEST_F(Cli, PrecisionAllPositive) {
  write("sys.jsonl",
        R"({"source": "a b c", "edits": [{"start": 0, "end": 1, "replacement": "x", "type": "R:NOUN"}, {"start": 2, "end": 3, "replacement": "y", "type": "M:DET"}]})" "\n"
        R"({"source": "d e", "edits": [{"start": 1, "end": 2, "replacement": "z", "type": "R:NOUN"}]})" "\n");
  write("sys.oracle", "{\"bonuses\": [0.5, 0.25]}\n{\"bonuses\": [1.0]}\n");
  ASSERT_EQ(run("attribute --input sys.jsonl --scorer additive:sys.oracle --no-timing --out sys_a.jsonl").code, 0);
  ASSERT_EQ(run("precision sys_a.jsonl --out-json p.json --out-csv p.csv").code, 0);
  auto rep = json::parse(read("p.json"))["report"]["sys_a"];
  EXPECT_EQ(rep["R:NOUN"]["precision"], 1.0);
  EXPECT_EQ(rep["M:DET"]["precision"], 1.0);
  EXPECT_EQ(read("p.csv"), "row,M:DET,R:NOUN\nsys_a,1,1\n");

  ASSERT_EQ(run("aggregate sys_a.jsonl --name sysA --min-count 2 --out-json m.json").code, 0);
  auto means = json::parse(read("m.json"))["report"]["sysA"];
  // Normalized: sentence 1 (2/3, 1/3), sentence 2 (1). R:NOUN mean (2/3 + 1) / 2.
  EXPECT_NEAR(means["R:NOUN"]["mean"].get<double>(), 5.0 / 6.0, 1e-12);
  EXPECT_EQ(means["R:NOUN"]["low_support"], false);
  EXPECT_EQ(means["M:DET"]["low_support"], true);
}

TEST_F(Cli, BenchCallBudget) {
  ASSERT_EQ(run("bench --n 2..8 --min-reps 1 --min-total 0 --out-csv b.csv").code, 0);
  std::istringstream in(read("b.csv"));
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "n,mean_s,std_s,scorer_calls,repetitions");
  int rows = 0;
  while (std::getline(in, line)) {
    std::istringstream cells(line);
    std::string n, mean, sd, calls;
    std::getline(cells, n, ',');
    std::getline(cells, mean, ',');
    std::getline(cells, sd, ',');
    std::getline(cells, calls, ',');
    EXPECT_EQ(std::stoul(calls), 1ul << std::stoul(n));
    ++rows;
  }
  EXPECT_EQ(rows, 7);
}

TEST_F(Cli, M2InputCarriesErrorTypes) {
  write("data.m2",
        "S He go to school\nA 1 2|||R:VERB:SVA|||goes|||REQUIRED|||-NONE-|||0\n"
        "A 3 3|||M:DET|||the|||REQUIRED|||-NONE-|||0\n\n");
  write("sys.txt", "He goes to school\n");
  auto gold = run("attribute --m2 data.m2 --no-timing");
  ASSERT_EQ(gold.code, 0);
  auto rec = lines(gold.out).at(0);
  EXPECT_EQ(rec["hypothesis"], "He goes to the school");
  EXPECT_EQ(rec["edits"][1]["type"], "M:DET");
  auto sys = run("attribute --m2 data.m2 --hyp sys.txt --no-timing");
  ASSERT_EQ(sys.code, 0);
  rec = lines(sys.out).at(0);
  ASSERT_EQ(rec["edits"].size(), 1u);
  EXPECT_EQ(rec["edits"][0]["type"], "R:VERB:SVA");
}

TEST_F(Cli, SamplingErrorReport) {
  write_toy();
  ASSERT_EQ(run("sampling-error --input toy.jsonl --scorer additive:toy.oracle --t 2 --out-json s.json --out-csv s.csv").code, 0);
  auto rep = json::parse(read("s.json"))["report"];
  EXPECT_EQ(rep["t"], 2);
  EXPECT_LE(rep["mean_abs_error"].get<double>(), 1e-12);
}

}  // namespace
