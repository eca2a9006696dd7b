//
// Copyright 2026 The adsim Authors
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
//

#include "adsim/cli.h"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "adsim/metrics.h"
#include "gtest/gtest.h"
#include "nlohmann/json.hpp"

namespace adsim {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

const std::string kSmall = std::string(ADSIM_SOURCE_DIR) + "/scenarios/small_paired.json";
const std::string kDefault = std::string(ADSIM_SOURCE_DIR) + "/scenarios/default_skew.json";

struct Result {
  int code = 0;
  std::string out;
  std::string err;
};

Result Invoke(std::vector<std::string> args) {
  args.insert(args.begin(), "adsim");
  std::vector<const char*> argv;
  for (const std::string& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  Result r;
  r.code = RunCli(static_cast<int>(argv.size()), argv.data(), out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

fs::path FreshDir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / "adsim_cli_test" / name;
  fs::remove_all(p);
  return p;
}

std::string Slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::ostringstream s;
  s << f.rdbuf();
  return s.str();
}

json ReadJson(const fs::path& p) { return json::parse(Slurp(p)); }

fs::path WriteScenario(const std::string& name, const json& doc) {
  const fs::path dir = fs::temp_directory_path() / "adsim_cli_test";
  fs::create_directories(dir);
  std::ofstream(dir / name) << doc.dump();
  return dir / name;
}

TEST(CliTest, UsageErrorsExitOne) {
  EXPECT_EQ(Invoke({}).code, kExitValidation);
  EXPECT_EQ(Invoke({"launch", "--scenario", kSmall}).code, kExitValidation);
  EXPECT_EQ(Invoke({"paired"}).code, kExitValidation);
  EXPECT_EQ(Invoke({"paired", "--scenario", "/nonexistent.json"}).code, kExitValidation);
  EXPECT_EQ(Invoke({"paired", "--scenario", kSmall, "--replications", "0"}).code, kExitValidation);
  EXPECT_EQ(Invoke({"paired", "--help"}).code, kExitOk);
}

TEST(CliTest, ScenarioErrorNamesField) {
  json doc = ReadJson(kSmall);
  doc["campaign"]["budget_usd"] = -1;
  const Result r = Invoke({"paired", "--scenario", WriteScenario("neg.json", doc).string(), "--out",
                        FreshDir("neg").string()});
  EXPECT_EQ(r.code, kExitValidation);
  EXPECT_NE(r.err.find("campaign.budget_usd"), std::string::npos) << r.err;
  EXPECT_FALSE(fs::exists(FreshDir("neg")));
}

TEST(CliTest, RuntimeFailureExitsTwo) {
  json doc = ReadJson(kSmall);
  doc["audience"]["partition_size"] = 1000000;
  const Result r = Invoke({"paired", "--scenario", WriteScenario("huge.json", doc).string(), "--out",
                        FreshDir("huge").string()});
  EXPECT_EQ(r.code, kExitRuntime) << r.err;
}

TEST(CliTest, CoverageScenarioCannotRunPaired) {
  const fs::path p = WriteScenario("cov.json", json::parse(R"({"experiment": "coverage"})"));
  const Result r = Invoke({"paired", "--scenario", p.string(), "--out", FreshDir("cov").string()});
  EXPECT_EQ(r.code, kExitValidation);
  EXPECT_NE(r.err.find("population"), std::string::npos);
}

TEST(CliTest, PairedSmokeOnDefaultScenario) {
  const fs::path out = FreshDir("smoke");
  const Result r = Invoke({"paired", "--scenario", kDefault, "--replications", "1", "--out",
                        out.string()});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  for (const char* f : {"paired_results.json", "paired_groups.csv", "paired_summary.csv",
                        "eligible_estimate.json", "manifest_paired.json"}) {
    EXPECT_TRUE(fs::exists(out / f)) << f;
  }
  const json results = ReadJson(out / "paired_results.json");
  EXPECT_EQ(results.size(), 6u * 2u);
  EXPECT_NE(r.out.find("housing_a"), std::string::npos);

  // Every file in the directory is declared, with its hash.
  const json manifest = ReadJson(out / "manifest_paired.json");
  std::set<std::string> declared;
  for (const json& e : manifest["outputs"]) {
    declared.insert(e["path"].get<std::string>());
    const std::string content = Slurp(out / e["path"].get<std::string>());
    EXPECT_EQ(e["bytes"].get<size_t>(), content.size());
    EXPECT_EQ(e["fnv1a64"].get<std::string>(), HashedAdId(content));
  }
  for (const auto& entry : fs::directory_iterator(out)) {
    const std::string name = entry.path().filename().string();
    if (name != "manifest_paired.json") EXPECT_EQ(declared.count(name), 1u) << name;
  }
  EXPECT_EQ(manifest["seed"].get<uint64_t>(), 20240601u);
  EXPECT_EQ(manifest["replications"].get<int>(), 1);
  EXPECT_GT(manifest["totals"]["impressions"].get<int64_t>(), 0);
  EXPECT_EQ(manifest["config_hash"].get<std::string>().size(), 16u);
}

TEST(CliTest, SeedOverrideChangesOutputs) {
  const fs::path a = FreshDir("seed_a");
  const fs::path b = FreshDir("seed_b");
  ASSERT_EQ(Invoke({"simulate", "--scenario", kSmall, "--out", a.string()}).code, kExitOk);
  ASSERT_EQ(Invoke({"simulate", "--scenario", kSmall, "--seed", "7", "--out", b.string()}).code,
            kExitOk);
  EXPECT_NE(Slurp(a / "impressions.csv"), Slurp(b / "impressions.csv"));
  EXPECT_EQ(ReadJson(b / "manifest_simulate.json")["seed"].get<uint64_t>(), 7u);
}

TEST(CliTest, OutputDirFromEnvironment) {
  const fs::path out = FreshDir("env");
  setenv("ADSIM_OUT", out.string().c_str(), 1);
  const Result r = Invoke({"coverage", "--scenario", kSmall});
  unsetenv("ADSIM_OUT");
  ASSERT_EQ(r.code, kExitOk) << r.err;
  EXPECT_TRUE(fs::exists(out / "coverage_strategies.csv"));
}

TEST(CliTest, CoverageOnSampleCsvHasOneRowPerCell) {
  const fs::path out = FreshDir("coverage");
  ASSERT_EQ(Invoke({"coverage", "--scenario", kSmall, "--out", out.string()}).code, kExitOk);
  std::istringstream csv(Slurp(out / "coverage_strategies.csv"));
  std::string line;
  int lines = 0;
  while (std::getline(csv, line)) ++lines;
  EXPECT_EQ(lines, 1 + 8);
  EXPECT_TRUE(fs::exists(out / "ad_stats.csv"));
}

TEST(CliTest, VerifyRoundTrip) {
  for (bool noise_off : {true, false}) {
    const fs::path out = FreshDir(noise_off ? "verify_off" : "verify_on");
    std::vector<std::string> flags;
    if (noise_off) flags.push_back("--noise-off");
    std::vector<std::string> exp = {"compliance-export", "--scenario", kSmall, "--out",
                                    out.string()};
    exp.insert(exp.end(), flags.begin(), flags.end());
    ASSERT_EQ(Invoke(exp).code, kExitOk);
    std::vector<std::string> ver = {"verify-report", "--out", out.string()};
    ver.insert(ver.end(), flags.begin(), flags.end());
    const Result r = Invoke(ver);
    ASSERT_EQ(r.code, kExitOk) << r.err;
    const json summary = ReadJson(out / "verify_summary.json");
    EXPECT_GT(summary["rows"].get<int>(), 0);
    EXPECT_TRUE(summary["discrepancies"].empty()) << summary.dump();
    EXPECT_TRUE(summary["malformed"].empty());
  }
}

TEST(CliTest, VerifyFlagsTamperedReport) {
  const fs::path out = FreshDir("tamper");
  ASSERT_EQ(Invoke({"compliance-export", "--scenario", kSmall, "--noise-off", "--out", out.string()})
                .code,
            kExitOk);
  std::istringstream in(Slurp(out / "compliance_report.csv"));
  std::string header, row, rest;
  std::getline(in, header);
  std::getline(in, row);
  // Replace the trailing var_race field.
  row = row.substr(0, row.rfind(',')) + ",0.999";
  std::ostringstream tampered;
  tampered << header << "\n" << row << "\n" << in.rdbuf();
  std::ofstream(out / "tampered.csv") << tampered.str();
  const Result r = Invoke({"verify-report", "--noise-off", "--report",
                        (out / "tampered.csv").string(), "--out", out.string()});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  EXPECT_EQ(ReadJson(out / "verify_summary.json")["discrepancies"].size(), 1u);
  EXPECT_EQ(Invoke({"verify-report", "--report", "/nonexistent.csv", "--out", out.string()}).code,
            kExitValidation);
}

std::string FirstLine(const fs::path& p) {
  std::istringstream in(Slurp(p));
  std::string line;
  std::getline(in, line);
  return line;
}

// Column layouts read by the plotting scripts.
TEST(CliTest, FigureInputsHaveStableColumns) {
  const fs::path out = FreshDir("figures");
  for (const char* sub : {"paired", "split-compare", "coverage"}) {
    ASSERT_EQ(Invoke({sub, "--scenario", kSmall, "--replications", "1", "--out", out.string()}).code,
              kExitOk);
  }
  EXPECT_EQ(FirstLine(out / "paired_summary.csv"),
            "creative_id,attribute,replication,arm,campaign_id,impressions,reach,spend_usd,cpp_usd,"
            "variance_gender,variance_race,reach_variance_gender,reach_variance_race,"
            "reach_delta_pct,cpp_delta_pct,leveling_down");
  EXPECT_EQ(FirstLine(out / "paired_groups.csv"),
            "creative_id,attribute,replication,arm,campaign_id,group_attribute,group,impressions,"
            "reach,spend_usd,cpp_usd,delivery_ratio");
  EXPECT_EQ(FirstLine(out / "split_groups.csv"),
            "comparison,creative_id,group_attribute,group,vrs_impressions,vrs_reach,vrs_spend_usd,"
            "vrs_cpp_usd,split_impressions,split_reach,split_spend_usd,split_cpp_usd");
  EXPECT_EQ(FirstLine(out / "ad_stats.csv"), "ad_id,spend_usd,impressions");
  // Two arms per creative and attribute; six groups per comparison.
  std::istringstream summary(Slurp(out / "paired_summary.csv"));
  std::string line;
  int rows = -1;
  while (std::getline(summary, line)) ++rows;
  EXPECT_EQ(rows, 2 * 2 * 2);
  std::istringstream groups(Slurp(out / "split_groups.csv"));
  rows = -1;
  while (std::getline(groups, line)) ++rows;
  EXPECT_EQ(rows, 2 * 4);
}

// Identical scenario and seed give byte-identical data files; manifests
// differ only in their wall-clock fields.
TEST(CliTest, EverySubcommandIsDeterministic) {
  const fs::path a = FreshDir("det_a");
  const fs::path b = FreshDir("det_b");
  for (const char* sub : {"simulate", "paired", "split-compare", "coverage", "compliance-export",
                          "verify-report"}) {
    for (const fs::path& dir : {a, b}) {
      const Result r = Invoke({sub, "--scenario", kSmall, "--out", dir.string(), "--threads",
                            dir == a ? "1" : "3"});
      ASSERT_EQ(r.code, kExitOk) << sub << ": " << r.err;
    }
  }
  int compared = 0;
  for (const auto& entry : fs::directory_iterator(a)) {
    const std::string name = entry.path().filename().string();
    if (name.rfind("manifest_", 0) == 0) {
      json ma = ReadJson(a / name);
      json mb = ReadJson(b / name);
      for (const char* k : {"started_at_utc", "wall_clock_seconds"}) {
        ma.erase(k);
        mb.erase(k);
      }
      ma.erase("scenario");
      mb.erase("scenario");
      EXPECT_EQ(ma, mb) << name;
    } else {
      EXPECT_EQ(Slurp(a / name), Slurp(b / name)) << name;
    }
    ++compared;
  }
  EXPECT_GE(compared, 20);
}

}  // namespace
}  // namespace adsim
