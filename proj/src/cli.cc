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

#include <chrono>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "absl/status/statusor.h"
#include "absl/strings/str_cat.h"
#include "absl/strings/str_format.h"
#include "adsim/compliance.h"
#include "adsim/coverage_analyzer.h"
#include "adsim/runner.h"
#include "adsim/scenario.h"
#include "nlohmann/json.hpp"

namespace adsim {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct Options {
  std::string subcommand;
  std::string scenario;
  std::string out;
  std::string report;
  std::optional<uint64_t> seed;
  std::optional<int> replications;
  bool noise_off = false;
  int threads = 0;
};

// Data files of one invocation, held in memory until the run succeeds.
class OutputSet {
 public:
  void Add(std::string name, std::string content) {
    files_.emplace_back(std::move(name), std::move(content));
  }

  absl::Status WriteAll(const fs::path& dir) const {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) return absl::InternalError(absl::StrCat("cannot create ", dir.string(), ": ", ec.message()));
    for (const auto& [name, content] : files_) {
      std::ofstream f(dir / name, std::ios::binary);
      f << content;
      if (!f) return absl::InternalError(absl::StrCat("cannot write ", (dir / name).string()));
    }
    return absl::OkStatus();
  }

  json Entries() const {
    json list = json::array();
    for (const auto& [name, content] : files_) {
      list.push_back({{"path", name}, {"bytes", content.size()}, {"fnv1a64", HashedAdId(content)}});
    }
    return list;
  }

 private:
  std::vector<std::pair<std::string, std::string>> files_;
};

struct Totals {
  int64_t impressions = 0;
  Micros spend;
};

struct RunOutput {
  OutputSet files;
  Totals totals;
  std::string summary;
};

template <typename F>
std::string Render(F&& write) {
  std::ostringstream s;
  write(s);
  return s.str();
}

std::string Dump(const json& j) { return j.dump(2) + "\n"; }

std::string UtcNow() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

json GroupJson(const GroupVector& v) {
  json j = json::object();
  for (int g = 0; g < v.size(); ++g) j[std::string(GroupLabel(v.attribute, g))] = v[g];
  return j;
}

std::string VarText(const std::optional<AttributeVariance>& av) {
  return av ? absl::StrFormat("%.3f", av->variance) : std::string("-");
}

double Mean(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

absl::StatusOr<RunOutput> Simulate(const Scenario& scenario) {
  absl::StatusOr<World> world = BuildWorld(scenario);
  if (!world.ok()) return world.status();
  absl::StatusOr<SingleRun> run = RunSingle(scenario, *world);
  if (!run.ok()) return run.status();
  RunOutput out;
  out.files.Add("population.csv",
                Render([&](std::ostream& s) { WritePopulationCsv(s, world->population); }));
  out.files.Add("impressions.csv",
                Render([&](std::ostream& s) { WriteImpressionLogCsv(s, run->result.log); }));
  json campaigns = json::array();
  std::string summary = absl::StrFormat("%-16s %-10s %8s %10s %8s %8s\n", "campaign", "category",
                                        "imps", "spend", "var_g", "var_r");
  for (size_t i = 0; i < run->result.campaigns.size(); ++i) {
    const CampaignSummary& c = run->result.campaigns[i];
    campaigns.push_back({{"id", c.id},
                         {"category", std::string(Label(scenario.creatives[i].category))},
                         {"budget_usd", FormatUsd(c.budget)},
                         {"spent_usd", FormatUsd(c.spent)},
                         {"impressions", c.impressions},
                         {"epochs", c.epochs},
                         {"final_multipliers",
                          {{"gender", GroupJson(c.final_multipliers.gender)},
                           {"race", GroupJson(c.final_multipliers.race)}}}});
    out.totals.impressions += c.impressions;
    out.totals.spend += c.spent;
    absl::StrAppend(&summary, absl::StrFormat("%-16s %-10s %8d %10s %8s %8s\n", c.id,
                                              Label(scenario.creatives[i].category),
                                              c.impressions, FormatUsd(c.spent),
                                              VarText(run->reports[i].gender),
                                              VarText(run->reports[i].race)));
  }
  out.files.Add("campaigns.json", Dump(campaigns));
  json reports = json::array();
  for (const VarianceReport& r : run->reports) reports.push_back(ToJson(r));
  out.files.Add("variance_reports.json", Dump(reports));
  out.files.Add("telemetry.csv",
                Render([&](std::ostream& s) { WriteTelemetryCsv(s, run->result.telemetry); }));
  out.summary = summary;
  return out;
}

absl::StatusOr<RunOutput> Paired(const Scenario& scenario, int threads) {
  absl::StatusOr<World> world = BuildWorld(scenario);
  if (!world.ok()) return world.status();
  absl::StatusOr<std::vector<PairedResult>> results = RunPairedSet(scenario, *world, threads);
  if (!results.ok()) return results.status();
  RunOutput out;
  json all = json::array();
  std::vector<VarianceReport> vrs_reports;
  for (const PairedResult& r : *results) {
    all.push_back(ToJson(r));
    vrs_reports.push_back(r.vrs.report);
    out.totals.impressions += r.vrs.impressions + r.no_vrs.impressions;
    out.totals.spend += r.vrs.spent;
    out.totals.spend += r.no_vrs.spent;
  }
  out.files.Add("paired_results.json", Dump(all));
  out.files.Add("paired_groups.csv",
                Render([&](std::ostream& s) { WritePairedGroupsCsv(s, *results); }));
  out.files.Add("paired_summary.csv",
                Render([&](std::ostream& s) { WritePairedSummaryCsv(s, *results); }));

  json estimate = json::object();
  for (Attribute a : {Attribute::kGender, Attribute::kRace}) {
    absl::StatusOr<GroupVector> est = EstimateEligibleRatioExternal(vrs_reports, a);
    if (!est.ok()) continue;
    GroupVector platform(a);
    int n = 0;
    for (const VarianceReport& r : vrs_reports) {
      if (!r.For(a)) continue;
      for (int g = 0; g < platform.size(); ++g) platform[g] += r.For(a)->eligible[g];
      ++n;
    }
    for (int g = 0; g < platform.size() && n > 0; ++g) platform[g] /= n;
    estimate[std::string(Label(a))] = {{"external_estimate", GroupJson(*est)},
                                       {"platform_eligible_mean", GroupJson(platform)},
                                       {"reports", n}};
  }
  out.files.Add("eligible_estimate.json", Dump(estimate));

  // Per creative and attribute: mean variances and deltas.
  std::string summary = absl::StrFormat("%-12s %-6s %4s %9s %9s %8s %8s %s\n", "creative", "attr",
                                        "runs", "var_novrs", "var_vrs", "reach%", "cpp%",
                                        "leveling_down");
  for (const CreativeSpec& creative : scenario.creatives) {
    for (Attribute a : scenario.paired.attributes) {
      std::vector<double> vn, vv, dr, dc;
      int leveling = 0;
      for (const PairedResult& r : *results) {
        if (r.creative_id != creative.id || r.attribute != a) continue;
        if (r.no_vrs.report.For(a)) vn.push_back(r.no_vrs.report.For(a)->variance);
        if (r.vrs.report.For(a)) vv.push_back(r.vrs.report.For(a)->variance);
        dr.push_back(r.reach_delta_pct);
        if (r.cpp_delta_pct) dc.push_back(*r.cpp_delta_pct);
        leveling += r.leveling.verdict == LevelingDownVerdict::kLevelingDown;
      }
      absl::StrAppend(&summary, absl::StrFormat("%-12s %-6s %4d %9.3f %9.3f %+8.1f %+8.1f %d\n",
                                                creative.id, Label(a), dr.size(), Mean(vn),
                                                Mean(vv), Mean(dr), Mean(dc), leveling));
    }
  }
  out.summary = summary;
  return out;
}

absl::StatusOr<RunOutput> Split(const Scenario& scenario, int threads) {
  absl::StatusOr<World> world = BuildWorld(scenario);
  if (!world.ok()) return world.status();
  absl::StatusOr<std::vector<SplitComparison>> comps = RunSplitSet(scenario, *world, threads);
  if (!comps.ok()) return comps.status();
  RunOutput out;
  json all = json::array();
  for (const SplitComparison& c : *comps) {
    all.push_back(ToJson(c));
    out.totals.impressions += c.vrs.impressions + c.split_total.impressions;
    out.totals.spend += c.vrs.spent;
    out.totals.spend += c.split_total.spend;
  }
  out.files.Add("split_results.json", Dump(all));
  out.files.Add("split_groups.csv",
                Render([&](std::ostream& s) { WriteSplitGroupsCsv(s, *comps); }));
  out.files.Add("split_summary.csv",
                Render([&](std::ostream& s) { WriteSplitSummaryCsv(s, *comps); }));
  std::string summary = absl::StrFormat("%-12s %4s %9s %11s %11s %9s\n", "creative", "runs",
                                        "dominates", "reach_vrs", "reach_split", "split_var");
  for (const CreativeSpec& creative : scenario.creatives) {
    std::vector<double> rv, rs, sv;
    int dominates = 0;
    for (const SplitComparison& c : *comps) {
      if (c.creative_id != creative.id) continue;
      rv.push_back(static_cast<double>(c.vrs.gender.total.reach));
      rs.push_back(static_cast<double>(c.split_total.reach));
      sv.push_back(std::max(c.split_variance_gender.value_or(0), c.split_variance_race.value_or(0)));
      dominates += c.SplitDominates();
    }
    absl::StrAppend(&summary, absl::StrFormat("%-12s %4d %9d %11.0f %11.0f %9.3f\n", creative.id,
                                              rv.size(), dominates, Mean(rv), Mean(rs), Mean(sv)));
  }
  out.summary = summary;
  return out;
}

absl::StatusOr<RunOutput> CoverageRun(const Scenario& scenario, std::ostream& err) {
  std::vector<IngestIssue> malformed;
  absl::StatusOr<std::vector<AdStat>> ads = CoverageAds(scenario, &malformed);
  if (!ads.ok()) return ads.status();
  for (const IngestIssue& issue : malformed) {
    err << "warning: ad stats line " << issue.line << ": " << issue.message << "\n";
  }
  absl::StatusOr<std::vector<StrategyRow>> rows =
      CompareStrategies(*ads, scenario.coverage_targets,
                        StreamSeed(scenario, SeedStream::kCoverage, {1}),
                        scenario.coverage.random_trials);
  if (!rows.ok()) return rows.status();
  RunOutput out;
  for (const AdStat& a : *ads) {
    out.totals.impressions += a.impressions;
    out.totals.spend += Micros::FromUsd(a.spend_usd);
  }
  out.files.Add("ad_stats.csv", Render([&](std::ostream& s) { WriteAdStatsCsv(s, *ads); }));
  out.files.Add("coverage_strategies.csv",
                Render([&](std::ostream& s) { WriteStrategiesCsv(s, *rows); }));
  std::string summary = absl::StrFormat("%zu ads\n%-18s %6s %9s %9s %7s\n", ads->size(), "cell",
                                        "ads", "largest", "random", "ratio");
  for (const StrategyRow& r : *rows) {
    absl::StrAppend(&summary, absl::StrFormat("%-18s %6d %9.4f %9.4f %7.2f\n", r.target_label,
                                              r.qualifying_ads, r.largest.impression_fraction,
                                              r.random.impression_fraction, r.ratio));
  }
  out.summary = summary;
  return out;
}

std::string CoverageSummary(std::span<const CoverageResult> rows) {
  std::string s = absl::StrFormat("%-6s %5s %5s %5s %9s %7s %s\n", "attr", "thr", "floor", "ads",
                                  "coverage", "target", "pass");
  for (const CoverageResult& c : rows) {
    absl::StrAppend(&s, absl::StrFormat("%-6s %5.2f %5d %5d %9.3f %7s %s\n", Label(c.attribute),
                                        c.threshold, c.floor, c.qualifying, c.coverage,
                                        c.target ? absl::StrFormat("%.3f", *c.target) : "-",
                                        c.pass ? "yes" : "no"));
  }
  return s;
}

absl::StatusOr<RunOutput> ComplianceExport(const Scenario& scenario, bool noise, int threads) {
  absl::StatusOr<World> world = BuildWorld(scenario);
  if (!world.ok()) return world.status();
  absl::StatusOr<ComplianceSet> set = RunComplianceSet(scenario, *world, threads);
  if (!set.ok()) return set.status();
  Rng rng(StreamSeed(scenario, SeedStream::kExport));
  std::ostringstream csv;
  absl::StatusOr<std::vector<ComplianceRow>> rows =
      ExportComplianceReport(set->inputs, scenario.compliance.epsilon_report, noise, rng, csv);
  if (!rows.ok()) return rows.status();
  RunOutput out;
  for (const ComplianceInput& in : set->inputs) {
    out.totals.impressions += static_cast<int64_t>(in.impressions.size());
    for (const Impression& imp : in.impressions) out.totals.spend += imp.price;
  }
  out.files.Add("compliance_report.csv", csv.str());
  json reports = json::array();
  for (const VarianceReport& r : set->reports) reports.push_back(ToJson(r));
  out.files.Add("compliance_variance_reports.json", Dump(reports));
  const std::vector<CoverageResult> coverage =
      SettlementCoverage(set->reports, scenario.coverage_targets);
  out.files.Add("settlement_coverage.csv",
                Render([&](std::ostream& s) { WriteCoverageCsv(s, coverage); }));
  out.summary = absl::StrCat(absl::StrFormat("%zu ads, %zu rows exported (noise %s)\n",
                                             set->inputs.size(), rows->size(),
                                             noise ? "on" : "off"),
                             CoverageSummary(coverage));
  return out;
}

absl::StatusOr<RunOutput> VerifyReport(const std::string& path, const Scenario& scenario,
                                       bool noise) {
  std::ifstream in(path);
  if (!in) return absl::NotFoundError(absl::StrCat("cannot open report ", path));
  VerifyOptions options;
  options.noise = noise;
  options.epsilon_report = scenario.compliance.epsilon_report;
  options.delta = scenario.compliance.delta;
  absl::StatusOr<VerifySummary> summary =
      ReviewerVerify(in, scenario.coverage_targets, options);
  if (!summary.ok()) return absl::InvalidArgumentError(summary.status().message());
  RunOutput out;
  out.files.Add("verify_summary.json", Dump(ToJson(*summary)));
  out.summary = absl::StrCat(
      absl::StrFormat("%d rows, %zu malformed, %zu discrepancies\n", summary->rows,
                      summary->malformed.size(), summary->discrepancies.size()),
      CoverageSummary(summary->coverage));
  return out;
}

int Fail(std::ostream& err, int code, const absl::Status& status) {
  err << "adsim: " << status.message() << "\n";
  return code;
}

bool NeedsWorld(absl::string_view sub) {
  return sub == "simulate" || sub == "paired" || sub == "split-compare" ||
         sub == "compliance-export";
}

}  // namespace

int RunCli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  Options opt;
  CLI::App app{"Ad delivery simulator with a variance-reduction controller and audit tools",
               "adsim"};
  app.require_subcommand(1);
  const std::vector<std::pair<const char*, const char*>> subs = {
      {"simulate", "Run every creative once and export logs and variance reports"},
      {"paired", "Paired VRS vs no-VRS experiments per creative and attribute"},
      {"split-compare", "VRS against a four-way budget split"},
      {"coverage", "Selective-application analysis of an ad population"},
      {"compliance-export", "Export a compliance report for VRS ads"},
      {"verify-report", "Recompute a compliance report as an outside reviewer"},
  };
  for (const auto& [name, help] : subs) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->add_option("--scenario", opt.scenario, "Scenario JSON file");
    sub->add_option("--seed", opt.seed, "Override the master seed");
    sub->add_option("--out", opt.out, "Output directory (default $ADSIM_OUT or ./adsim_out)");
    sub->add_flag("--noise-off", opt.noise_off, "Disable differential-privacy noise");
    sub->add_option("--replications", opt.replications, "Override the replication count");
    sub->add_option("--threads", opt.threads, "Worker threads (default: all cores)");
    if (absl::string_view(name) == "verify-report") {
      sub->add_option("--report", opt.report,
                      "Compliance CSV (default: compliance_report.csv in the output directory)");
    }
    sub->final_callback([&opt, n = std::string(name)] { opt.subcommand = n; });
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitValidation;
  }

  if (opt.out.empty()) {
    const char* env = std::getenv("ADSIM_OUT");
    opt.out = env != nullptr && *env != '\0' ? env : "adsim_out";
  }
  if (opt.threads <= 0) opt.threads = DefaultThreads();

  Scenario scenario;
  if (opt.scenario.empty()) {
    if (opt.subcommand != "verify-report") {
      return Fail(err, kExitValidation, absl::InvalidArgumentError("--scenario is required"));
    }
  } else {
    absl::StatusOr<Scenario> parsed = ParseScenarioFile(opt.scenario);
    if (!parsed.ok()) return Fail(err, kExitValidation, parsed.status());
    scenario = *std::move(parsed);
  }
  if (opt.seed) scenario.seed = *opt.seed;
  if (opt.replications) {
    if (*opt.replications < 1) {
      return Fail(err, kExitValidation,
                  absl::InvalidArgumentError("--replications: must be at least 1"));
    }
    scenario.replications = *opt.replications;
  }
  if (opt.noise_off) scenario.controller.noise = false;
  if (NeedsWorld(opt.subcommand)) {
    if (scenario.population.n <= 0) {
      return Fail(err, kExitValidation,
                  absl::InvalidArgumentError(
                      absl::StrCat("population: required by ", opt.subcommand)));
    }
    if (scenario.creatives.empty()) {
      return Fail(err, kExitValidation,
                  absl::InvalidArgumentError(
                      absl::StrCat("creatives: required by ", opt.subcommand)));
    }
  }
  const fs::path out_dir(opt.out);

  const auto started = std::chrono::steady_clock::now();
  const std::string started_at = UtcNow();
  absl::StatusOr<RunOutput> run = absl::UnknownError("unknown subcommand");
  if (opt.subcommand == "simulate") {
    run = Simulate(scenario);
  } else if (opt.subcommand == "paired") {
    run = Paired(scenario, opt.threads);
  } else if (opt.subcommand == "split-compare") {
    run = Split(scenario, opt.threads);
  } else if (opt.subcommand == "coverage") {
    run = CoverageRun(scenario, err);
  } else if (opt.subcommand == "compliance-export") {
    run = ComplianceExport(scenario, !opt.noise_off, opt.threads);
  } else if (opt.subcommand == "verify-report") {
    const std::string path =
        opt.report.empty() ? (out_dir / "compliance_report.csv").string() : opt.report;
    run = VerifyReport(path, scenario, !opt.noise_off);
    if (!run.ok()) return Fail(err, kExitValidation, run.status());
  }
  if (!run.ok()) return Fail(err, kExitRuntime, run.status());
  if (absl::Status s = run->files.WriteAll(out_dir); !s.ok()) return Fail(err, kExitRuntime, s);

  const double wall =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  json manifest = {
      {"tool", "adsim"},
      {"version", kToolVersion},
      {"subcommand", opt.subcommand},
      {"scenario", opt.scenario},
      {"scenario_name", scenario.name},
      {"config_hash", scenario.config_hash},
      {"seed", scenario.seed},
      {"replications", scenario.replications},
      {"noise", !opt.noise_off},
      {"outputs", run->files.Entries()},
      {"totals",
       {{"impressions", run->totals.impressions}, {"spend_usd", FormatUsd(run->totals.spend)}}},
      {"started_at_utc", started_at},
      {"wall_clock_seconds", wall},
  };
  const std::string manifest_name = absl::StrCat("manifest_", opt.subcommand, ".json");
  std::ofstream mf(out_dir / manifest_name);
  mf << Dump(manifest);
  if (!mf) {
    return Fail(err, kExitRuntime, absl::InternalError("cannot write the run manifest"));
  }

  out << "adsim " << opt.subcommand;
  if (!scenario.name.empty()) out << " [" << scenario.name << "]";
  out << " seed " << scenario.seed << "\n" << run->summary;
  out << absl::StrFormat("wrote %s (%.1fs)\n", (out_dir / manifest_name).string(), wall);
  return kExitOk;
}

}  // namespace adsim
