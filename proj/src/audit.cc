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

#include "adsim/audit.h"

#include <algorithm>
#include <cmath>
#include <set>

#include "absl/container/flat_hash_set.h"
#include "absl/strings/str_cat.h"
#include "absl/strings/str_format.h"

namespace adsim {

namespace {

std::vector<User> Eligible(std::span<const User> audience) {
  std::vector<User> out;
  for (const User& u : audience) {
    if (u.activity_weight > 0) out.push_back(u);
  }
  return out;
}

absl::StatusOr<GroupVector> PlatformEligible(const EligibleRatios& sampled,
                                             std::span<const User> eligible,
                                             Attribute attribute) {
  if (sampled.ratios.attribute == attribute && sampled.ratios.Sum() > 0) return sampled.ratios;
  absl::StatusOr<EligibleRatios> er = EligibleRatioFromSample(eligible, attribute);
  if (!er.ok()) return er.status();
  return er->ratios;
}

absl::Status CheckDisjoint(const MatchedAudience& a, const MatchedAudience& b) {
  absl::flat_hash_set<int64_t> ids;
  for (const User& u : a.matched) ids.insert(u.id);
  for (const User& u : b.matched) {
    if (ids.contains(u.id)) {
      return absl::InvalidArgumentError(
          absl::StrFormat("arm audiences overlap: user %d is in both partitions", u.id));
    }
  }
  return absl::OkStatus();
}

std::optional<double> PctChange(double from, double to) {
  if (from == 0) return std::nullopt;
  return 100.0 * (to - from) / from;
}

nlohmann::json OptionalJson(const std::optional<double>& v) {
  return v ? nlohmann::json(*v) : nlohmann::json();
}

nlohmann::json ReachJson(const ReachStats& s) {
  return {{"reach", s.reach},
          {"impressions", s.impressions},
          {"spend_usd", s.spend.usd()},
          {"cpp_usd", OptionalJson(s.cpp)}};
}

nlohmann::json GroupReachJson(const GroupReach& r) {
  nlohmann::json j;
  j["total"] = ReachJson(r.total);
  for (int g = 0; g < GroupCount(r.attribute); ++g) {
    j["groups"][std::string(GroupLabel(r.attribute, g))] = ReachJson(r.groups[g]);
  }
  return j;
}

std::string Cpp(const std::optional<double>& cpp) {
  return cpp ? absl::StrFormat("%.6f", *cpp) : std::string();
}

std::string Var(const VarianceReport& r, Attribute attribute) {
  const auto& av = r.For(attribute);
  return av ? absl::StrFormat("%.9f", av->variance) : std::string();
}

std::string ReachVar(const VarianceReport& r, Attribute attribute) {
  const auto& av = r.For(attribute);
  return av ? absl::StrFormat("%.9f", av->reach_variance) : std::string();
}

void WriteArmGroups(std::ostream& out, absl::string_view prefix, absl::string_view arm,
                    const ArmMetrics& m) {
  for (Attribute attribute : {Attribute::kGender, Attribute::kRace}) {
    const GroupReach& r = m.For(attribute);
    const auto& av = m.oracle_report.For(attribute);
    for (int g = 0; g < GroupCount(attribute); ++g) {
      const ReachStats& s = r.groups[g];
      out << absl::StrFormat("%s,%s,%s,%s,%s,%d,%d,%s,%s,%s\n", prefix, arm, m.campaign_id,
                             Label(attribute), GroupLabel(attribute, g), s.impressions, s.reach,
                             FormatUsd(s.spend), Cpp(s.cpp),
                             av ? absl::StrFormat("%.9f", av->delivery[g]) : std::string());
    }
  }
}

}  // namespace

absl::StatusOr<ArmMetrics> MeasureArm(const SimulationResult& result, int campaign,
                                      std::span<const User> audience) {
  if (campaign < 0 || campaign >= static_cast<int>(result.campaigns.size())) {
    return absl::InvalidArgumentError("campaign index out of range");
  }
  const CampaignSummary& summary = result.campaigns[campaign];
  const std::vector<Impression> imps = result.log.ForCampaign(campaign);
  const std::vector<User> eligible = Eligible(audience);
  ArmMetrics m;
  m.campaign_id = summary.id;
  m.impressions = static_cast<int64_t>(imps.size());
  m.spent = summary.spent;

  absl::StatusOr<GroupVector> pg =
      PlatformEligible(summary.eligible_gender, eligible, Attribute::kGender);
  absl::StatusOr<GroupVector> pr =
      PlatformEligible(summary.eligible_race, eligible, Attribute::kRace);
  if (!pg.ok()) return pg.status();
  if (!pr.ok()) return pr.status();
  absl::StatusOr<VarianceReport> report =
      BuildVarianceReport(summary.id, imps, *pg, *pr, eligible, View::kPlatform);
  if (!report.ok()) return report.status();
  m.report = *report;

  absl::StatusOr<EligibleRatios> tg =
      EligibleRatioFromSample(eligible, Attribute::kGender, View::kGroundTruth);
  absl::StatusOr<EligibleRatios> tr =
      EligibleRatioFromSample(eligible, Attribute::kRace, View::kGroundTruth);
  if (!tg.ok()) return tg.status();
  if (!tr.ok()) return tr.status();
  absl::StatusOr<VarianceReport> oracle = BuildVarianceReport(
      summary.id, imps, tg->ratios, tr->ratios, eligible, View::kGroundTruth);
  if (!oracle.ok()) return oracle.status();
  m.oracle_report = *oracle;

  m.gender = ReachAndCpp(imps, Attribute::kGender, View::kGroundTruth);
  m.race = ReachAndCpp(imps, Attribute::kRace, View::kGroundTruth);
  return m;
}

absl::string_view Label(LevelingDownVerdict verdict) {
  switch (verdict) {
    case LevelingDownVerdict::kLevelingDown:
      return "leveling_down";
    case LevelingDownVerdict::kOneSidedLoss:
      return "one_sided_loss";
    case LevelingDownVerdict::kRedistribution:
      return "redistribution";
    case LevelingDownVerdict::kImprovement:
      return "improvement";
  }
  return "improvement";
}

absl::StatusOr<LevelingDownResult> DetectLevelingDown(std::span<const double> no_vrs_reach,
                                                      std::span<const double> vrs_reach,
                                                      double tolerance) {
  if (no_vrs_reach.size() != vrs_reach.size() || no_vrs_reach.empty()) {
    return absl::InvalidArgumentError("reach vectors must cover the same, nonempty group set");
  }
  if (!(tolerance >= 0)) return absl::InvalidArgumentError("tolerance must be >= 0");
  size_t drops = 0, rises = 0;
  for (size_t g = 0; g < vrs_reach.size(); ++g) {
    if (vrs_reach[g] < no_vrs_reach[g] - tolerance) ++drops;
    if (vrs_reach[g] > no_vrs_reach[g] + tolerance) ++rises;
  }
  LevelingDownResult r;
  r.tolerance = tolerance;
  if (drops == vrs_reach.size()) {
    r.verdict = LevelingDownVerdict::kLevelingDown;
  } else if (drops > 0 && rises == 0) {
    r.verdict = LevelingDownVerdict::kOneSidedLoss;
  } else if (drops > 0) {
    r.verdict = LevelingDownVerdict::kRedistribution;
  } else {
    r.verdict = LevelingDownVerdict::kImprovement;
  }
  return r;
}

double DefaultLevelingDownTolerance(std::span<const double> no_vrs_reach,
                                    std::span<const double> group_sizes) {
  double se = 0.0;
  for (size_t g = 0; g < no_vrs_reach.size() && g < group_sizes.size(); ++g) {
    const double r = no_vrs_reach[g];
    const double n = group_sizes[g];
    if (n <= 0) continue;
    se = std::max(se, std::sqrt(std::max(0.0, r * (1.0 - r / n))));
  }
  return 2.0 * se;
}

absl::StatusOr<PairedResult> RunPairedExperiment(const PairedSetup& setup, uint64_t seed) {
  if (absl::Status s = CheckDisjoint(setup.audience_vrs, setup.audience_no_vrs); !s.ok()) {
    return s;
  }
  SimulationInput input;
  input.params = setup.params;
  input.controller = setup.controller;
  input.paired = true;
  const std::string base = absl::StrCat(setup.creative_id, "-", Label(setup.attribute), "-r",
                                        setup.replication);
  CampaignConfig a = setup.creative;
  a.id = base + "-vrs";
  a.category = setup.vrs_category;
  a.audience = setup.audience_vrs;
  CampaignConfig b = setup.creative;
  b.id = base + "-novrs";
  b.category = setup.control_category;
  b.audience = setup.audience_no_vrs;
  input.campaigns = {a, b};
  absl::StatusOr<SimulationResult> sim = Simulate(input, seed);
  if (!sim.ok()) return sim.status();

  PairedResult out;
  out.creative_id = setup.creative_id;
  out.attribute = setup.attribute;
  out.replication = setup.replication;
  absl::StatusOr<ArmMetrics> vrs = MeasureArm(*sim, 0, a.audience.matched);
  if (!vrs.ok()) return vrs.status();
  absl::StatusOr<ArmMetrics> ctl = MeasureArm(*sim, 1, b.audience.matched);
  if (!ctl.ok()) return ctl.status();
  out.vrs = *std::move(vrs);
  out.no_vrs = *std::move(ctl);
  out.reach_delta_pct =
      PctChange(out.no_vrs.gender.total.reach, out.vrs.gender.total.reach).value_or(0.0);
  if (out.no_vrs.gender.total.cpp && out.vrs.gender.total.cpp) {
    out.cpp_delta_pct = PctChange(*out.no_vrs.gender.total.cpp, *out.vrs.gender.total.cpp);
  }

  // Group sizes of the control audience, by true group.
  std::array<double, kRaceGroups> sizes{};
  for (const User& u : b.audience.matched) {
    if (auto g = TrueGroup(u, setup.attribute)) sizes[*g] += 1.0;
  }
  std::vector<double> before, after, present_sizes;
  const GroupReach& rv = out.vrs.For(setup.attribute);
  const GroupReach& rc = out.no_vrs.For(setup.attribute);
  for (int g = 0; g < GroupCount(setup.attribute); ++g) {
    if (sizes[g] == 0) continue;
    GroupDelta d;
    d.group = g;
    d.no_vrs_reach = static_cast<double>(rc.groups[g].reach);
    d.vrs_reach = static_cast<double>(rv.groups[g].reach);
    d.no_vrs_cpp = rc.groups[g].cpp;
    d.vrs_cpp = rv.groups[g].cpp;
    out.groups.push_back(d);
    before.push_back(d.no_vrs_reach);
    after.push_back(d.vrs_reach);
    present_sizes.push_back(sizes[g]);
  }
  if (!before.empty()) {
    absl::StatusOr<LevelingDownResult> lv = DetectLevelingDown(
        before, after, DefaultLevelingDownTolerance(before, present_sizes));
    if (!lv.ok()) return lv.status();
    out.leveling = *lv;
  }
  return out;
}

absl::StatusOr<GroupVector> EstimateEligibleRatioExternal(
    std::span<const VarianceReport> vrs_reports, Attribute attribute) {
  GroupVector sum(attribute);
  int used = 0;
  for (const VarianceReport& r : vrs_reports) {
    const auto& av = r.For(attribute);
    if (!av.has_value()) continue;
    for (int g = 0; g < sum.size(); ++g) sum[g] += av->delivery[g];
    ++used;
  }
  if (used == 0) return absl::InvalidArgumentError("no VRS-arm delivery ratios to average");
  return sum.Normalized();
}

absl::StatusOr<std::vector<CampaignConfig>> SplitBudgetCampaigns(const CampaignConfig& base,
                                                                 std::span<const CellKey> cells) {
  if (cells.empty()) return absl::InvalidArgumentError("no subgroup cells");
  std::vector<std::vector<User>> members(cells.size());
  for (const User& u : base.audience.matched) {
    bool placed = false;
    for (size_t i = 0; i < cells.size() && !placed; ++i) {
      if (cells[i].Matches(u)) {
        members[i].push_back(u);
        placed = true;
      }
    }
    if (!placed) {
      return absl::InvalidArgumentError(
          absl::StrFormat("user %d belongs to none of the subgroup cells", u.id));
    }
  }
  const int64_t n = static_cast<int64_t>(cells.size());
  const int64_t share = base.budget.value() / n;
  const int64_t remainder = base.budget.value() % n;
  std::vector<CampaignConfig> out;
  for (size_t i = 0; i < cells.size(); ++i) {
    if (members[i].empty()) {
      return absl::InvalidArgumentError(absl::StrCat("subgroup ", i, " has an empty audience"));
    }
    CampaignConfig c = base;
    std::string label;
    if (cells[i].gender) absl::StrAppend(&label, Label(*cells[i].gender));
    if (cells[i].race) absl::StrAppend(&label, Label(*cells[i].race));
    c.id = absl::StrCat(base.id, "-split-", label.empty() ? absl::StrCat(i) : label);
    c.category = Category::kNone;
    // Leftover micro-dollars go to the first cells so the total is exact.
    c.budget = Micros(share + (static_cast<int64_t>(i) < remainder ? 1 : 0));
    c.audience = FullyMatched(members[i]);
    out.push_back(std::move(c));
  }
  return out;
}

bool SplitComparison::SplitDominates() const {
  for (const SplitGroupPair& p : pairs) {
    if (p.split.reach < p.vrs.reach) return false;
  }
  return !pairs.empty();
}

absl::StatusOr<SplitComparison> CompareVrsVsSplit(const SplitSetup& setup, uint64_t seed) {
  if (absl::Status s = CheckDisjoint(setup.audience_vrs, setup.audience_split); !s.ok()) return s;
  CampaignConfig vrs = setup.creative;
  vrs.id = setup.creative_id + "-vrs";
  vrs.category = setup.vrs_category;
  vrs.audience = setup.audience_vrs;
  CampaignConfig split_base = setup.creative;
  split_base.id = setup.creative_id;
  split_base.audience = setup.audience_split;
  absl::StatusOr<std::vector<CampaignConfig>> arms = SplitBudgetCampaigns(split_base, setup.cells);
  if (!arms.ok()) return arms.status();

  SimulationInput input;
  input.params = setup.params;
  input.controller = setup.controller;
  input.paired = true;
  input.campaigns.push_back(vrs);
  for (const CampaignConfig& c : *arms) input.campaigns.push_back(c);
  absl::StatusOr<SimulationResult> sim = Simulate(input, seed);
  if (!sim.ok()) return sim.status();

  SplitComparison out;
  out.creative_id = setup.creative_id;
  absl::StatusOr<ArmMetrics> v = MeasureArm(*sim, 0, vrs.audience.matched);
  if (!v.ok()) return v.status();
  out.vrs = *std::move(v);
  std::vector<Impression> combined;
  for (int c = 1; c < static_cast<int>(input.campaigns.size()); ++c) {
    absl::StatusOr<ArmMetrics> m = MeasureArm(*sim, c, input.campaigns[c].audience.matched);
    if (!m.ok()) return m.status();
    out.split_arms.push_back(*std::move(m));
  }
  for (const Impression& imp : sim->log.records) {
    if (imp.campaign > 0) combined.push_back(imp);
  }
  out.split_gender = ReachAndCpp(combined, Attribute::kGender, View::kGroundTruth);
  out.split_race = ReachAndCpp(combined, Attribute::kRace, View::kGroundTruth);
  out.split_total = out.split_gender.total;

  const std::span<const User> split_users = setup.audience_split.matched;
  for (Attribute attribute : {Attribute::kGender, Attribute::kRace}) {
    absl::StatusOr<GroupVector> heads =
        HeadcountShares(split_users, attribute, View::kGroundTruth);
    if (!heads.ok()) continue;
    const GroupReach& sr = attribute == Attribute::kGender ? out.split_gender : out.split_race;
    for (int g = 0; g < GroupCount(attribute); ++g) {
      if ((*heads)[g] <= 0) continue;
      out.pairs.push_back({attribute, g, out.vrs.For(attribute).groups[g], sr.groups[g]});
    }
    absl::StatusOr<GroupVector> dr = DeliveryRatio(combined, attribute, View::kGroundTruth);
    if (!dr.ok()) continue;
    absl::StatusOr<double> var = VarianceImpressions(*heads, *dr);
    if (!var.ok()) return var.status();
    (attribute == Attribute::kGender ? out.split_variance_gender : out.split_variance_race) = *var;
  }
  return out;
}

absl::StatusOr<std::array<int64_t, kRaceGroups>> RaceFromDma(std::span<const Impression> log,
                                                             const std::map<int, Race>& dma_race) {
  std::array<int64_t, kRaceGroups> counts{};
  for (const Impression& imp : log) {
    auto it = dma_race.find(imp.dma);
    if (it == dma_race.end()) {
      return absl::InvalidArgumentError(absl::StrCat("DMA ", imp.dma, " is not mapped to a race"));
    }
    if (auto g = GroupIndex(it->second)) ++counts[*g];
  }
  return counts;
}

nlohmann::json ToJson(const ArmMetrics& arm) {
  return {{"campaign_id", arm.campaign_id},
          {"impressions", arm.impressions},
          {"spend_usd", arm.spent.usd()},
          {"platform_view", ToJson(arm.report)},
          {"oracle_view", ToJson(arm.oracle_report)},
          {"gender", GroupReachJson(arm.gender)},
          {"race", GroupReachJson(arm.race)}};
}

nlohmann::json ToJson(const PairedResult& r) {
  nlohmann::json j = {{"creative_id", r.creative_id},
                      {"attribute", std::string(Label(r.attribute))},
                      {"replication", r.replication},
                      {"vrs", ToJson(r.vrs)},
                      {"no_vrs", ToJson(r.no_vrs)},
                      {"reach_delta_pct", r.reach_delta_pct},
                      {"cpp_delta_pct", OptionalJson(r.cpp_delta_pct)},
                      {"leveling_down",
                       {{"verdict", std::string(Label(r.leveling.verdict))},
                        {"tolerance", r.leveling.tolerance}}}};
  j["groups"] = nlohmann::json::array();
  for (const GroupDelta& d : r.groups) {
    j["groups"].push_back({{"group", std::string(GroupLabel(r.attribute, d.group))},
                           {"no_vrs_reach", d.no_vrs_reach},
                           {"vrs_reach", d.vrs_reach},
                           {"no_vrs_cpp_usd", OptionalJson(d.no_vrs_cpp)},
                           {"vrs_cpp_usd", OptionalJson(d.vrs_cpp)}});
  }
  return j;
}

nlohmann::json ToJson(const SplitComparison& c) {
  nlohmann::json j = {{"creative_id", c.creative_id},
                      {"vrs", ToJson(c.vrs)},
                      {"split_total", ReachJson(c.split_total)},
                      {"split_gender", GroupReachJson(c.split_gender)},
                      {"split_race", GroupReachJson(c.split_race)},
                      {"split_variance_gender", OptionalJson(c.split_variance_gender)},
                      {"split_variance_race", OptionalJson(c.split_variance_race)},
                      {"split_dominates", c.SplitDominates()}};
  j["split_arms"] = nlohmann::json::array();
  for (const ArmMetrics& a : c.split_arms) j["split_arms"].push_back(ToJson(a));
  j["pairs"] = nlohmann::json::array();
  for (const SplitGroupPair& p : c.pairs) {
    j["pairs"].push_back({{"attribute", std::string(Label(p.attribute))},
                          {"group", std::string(GroupLabel(p.attribute, p.group))},
                          {"vrs", ReachJson(p.vrs)},
                          {"split", ReachJson(p.split)}});
  }
  return j;
}

void WritePairedGroupsCsv(std::ostream& out, std::span<const PairedResult> results) {
  out << "creative_id,attribute,replication,arm,campaign_id,group_attribute,group,impressions,"
         "reach,spend_usd,cpp_usd,delivery_ratio\n";
  for (const PairedResult& r : results) {
    const std::string prefix =
        absl::StrFormat("%s,%s,%d", r.creative_id, Label(r.attribute), r.replication);
    WriteArmGroups(out, prefix, "vrs", r.vrs);
    WriteArmGroups(out, prefix, "no_vrs", r.no_vrs);
  }
}

void WritePairedSummaryCsv(std::ostream& out, std::span<const PairedResult> results) {
  out << "creative_id,attribute,replication,arm,campaign_id,impressions,reach,spend_usd,cpp_usd,"
         "variance_gender,variance_race,reach_variance_gender,reach_variance_race,"
         "reach_delta_pct,cpp_delta_pct,leveling_down\n";
  for (const PairedResult& r : results) {
    for (const ArmMetrics* arm : {&r.vrs, &r.no_vrs}) {
      const bool is_vrs = arm == &r.vrs;
      out << absl::StrFormat(
          "%s,%s,%d,%s,%s,%d,%d,%s,%s,%s,%s,%s,%s,%.6f,%s,%s\n", r.creative_id,
          Label(r.attribute), r.replication, is_vrs ? "vrs" : "no_vrs", arm->campaign_id,
          arm->impressions, arm->gender.total.reach, FormatUsd(arm->spent),
          Cpp(arm->gender.total.cpp), Var(arm->report, Attribute::kGender),
          Var(arm->report, Attribute::kRace), ReachVar(arm->report, Attribute::kGender),
          ReachVar(arm->report, Attribute::kRace), r.reach_delta_pct, Cpp(r.cpp_delta_pct),
          Label(r.leveling.verdict));
    }
  }
}

void WriteSplitGroupsCsv(std::ostream& out, std::span<const SplitComparison> comparisons) {
  out << "comparison,creative_id,group_attribute,group,vrs_impressions,vrs_reach,vrs_spend_usd,"
         "vrs_cpp_usd,split_impressions,split_reach,split_spend_usd,split_cpp_usd\n";
  for (size_t i = 0; i < comparisons.size(); ++i) {
    const SplitComparison& c = comparisons[i];
    for (const SplitGroupPair& p : c.pairs) {
      out << absl::StrFormat("%d,%s,%s,%s,%d,%d,%s,%s,%d,%d,%s,%s\n", i, c.creative_id,
                             Label(p.attribute), GroupLabel(p.attribute, p.group),
                             p.vrs.impressions, p.vrs.reach, FormatUsd(p.vrs.spend),
                             Cpp(p.vrs.cpp), p.split.impressions, p.split.reach,
                             FormatUsd(p.split.spend), Cpp(p.split.cpp));
    }
  }
}

void WriteSplitSummaryCsv(std::ostream& out, std::span<const SplitComparison> comparisons) {
  out << "comparison,creative_id,vrs_reach,split_reach,vrs_spend_usd,split_spend_usd,vrs_cpp_usd,"
         "split_cpp_usd,vrs_variance_gender,vrs_variance_race,split_variance_gender,"
         "split_variance_race,split_dominates\n";
  for (size_t i = 0; i < comparisons.size(); ++i) {
    const SplitComparison& c = comparisons[i];
    auto opt = [](const std::optional<double>& v) {
      return v ? absl::StrFormat("%.9f", *v) : std::string();
    };
    out << absl::StrFormat("%d,%s,%d,%d,%s,%s,%s,%s,%s,%s,%s,%s,%d\n", i, c.creative_id,
                           c.vrs.gender.total.reach, c.split_total.reach,
                           FormatUsd(c.vrs.spent), FormatUsd(c.split_total.spend),
                           Cpp(c.vrs.gender.total.cpp), Cpp(c.split_total.cpp),
                           Var(c.vrs.oracle_report, Attribute::kGender),
                           Var(c.vrs.oracle_report, Attribute::kRace),
                           opt(c.split_variance_gender), opt(c.split_variance_race),
                           c.SplitDominates() ? 1 : 0);
  }
}

}  // namespace adsim
