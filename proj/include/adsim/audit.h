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

// Black-box audit designs run against the simulator: paired VRS / no-VRS
// campaigns on disjoint audiences, the auditor's eligible-ratio estimate,
// leveling-down classification, DMA race readout and the budget-splitting
// alternative.

#ifndef ADSIM_AUDIT_H_
#define ADSIM_AUDIT_H_

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "absl/status/statusor.h"
#include "adsim/auction.h"
#include "adsim/metrics.h"
#include "nlohmann/json.hpp"

namespace adsim {

// Everything measured about one campaign of an experiment.
struct ArmMetrics {
  std::string campaign_id;
  int64_t impressions = 0;
  Micros spent;
  // Platform view: estimated race, sampled eligible ratios.
  VarianceReport report;
  // Oracle view: true race, eligible ratios over the whole audience.
  VarianceReport oracle_report;
  // Reach, spend and CPP per group, read through true demographics (what the
  // auditor recovers with the DMA proxy).
  GroupReach gender;
  GroupReach race;

  const GroupReach& For(Attribute attribute) const {
    return attribute == Attribute::kGender ? gender : race;
  }
};

absl::StatusOr<ArmMetrics> MeasureArm(const SimulationResult& result, int campaign,
                                      std::span<const User> audience);

enum class LevelingDownVerdict { kLevelingDown, kOneSidedLoss, kRedistribution, kImprovement };

absl::string_view Label(LevelingDownVerdict verdict);

struct LevelingDownResult {
  LevelingDownVerdict verdict = LevelingDownVerdict::kImprovement;
  double tolerance = 0.0;
};

// Per-group reach without and with VRS. LevelingDown when every group drops
// by more than the tolerance; OneSidedLoss when some group drops and none
// rises by more than it; Redistribution when some drop and some rise;
// Improvement when none drop.
absl::StatusOr<LevelingDownResult> DetectLevelingDown(std::span<const double> no_vrs_reach,
                                                      std::span<const double> vrs_reach,
                                                      double tolerance);

// Twice the binomial standard error of reach, sqrt(r (1 - r / n)), taking the
// largest over groups with r the no-VRS reach and n the group's audience size.
double DefaultLevelingDownTolerance(std::span<const double> no_vrs_reach,
                                    std::span<const double> group_sizes);

struct GroupDelta {
  int group = 0;
  double no_vrs_reach = 0.0;
  double vrs_reach = 0.0;
  std::optional<double> no_vrs_cpp;
  std::optional<double> vrs_cpp;
};

struct PairedSetup {
  std::string creative_id;
  // Template: id, category and audience are overwritten per arm.
  CampaignConfig creative;
  Attribute attribute = Attribute::kGender;
  int replication = 0;
  MatchedAudience audience_vrs;
  MatchedAudience audience_no_vrs;
  AuctionParams params;
  VrsControllerConfig controller;
  // Arm A is declared housing and arm B left undeclared by default.
  Category vrs_category = Category::kHousing;
  Category control_category = Category::kNone;
};

struct PairedResult {
  std::string creative_id;
  Attribute attribute = Attribute::kGender;
  int replication = 0;
  ArmMetrics vrs;
  ArmMetrics no_vrs;
  // Percent change of the VRS arm relative to the no-VRS arm.
  double reach_delta_pct = 0.0;
  std::optional<double> cpp_delta_pct;
  std::vector<GroupDelta> groups;  // groups of `attribute`
  LevelingDownResult leveling;
};

absl::StatusOr<PairedResult> RunPairedExperiment(const PairedSetup& setup, uint64_t seed);

// Unweighted mean of the delivery ratios of VRS-arm reports, renormalised.
absl::StatusOr<GroupVector> EstimateEligibleRatioExternal(
    std::span<const VarianceReport> vrs_reports, Attribute attribute);

// One campaign per cell, each targeting the users of the base audience in
// that cell (first matching key) with an equal share of the budget. Budgets
// sum to the base budget exactly; the split campaigns run without VRS.
absl::StatusOr<std::vector<CampaignConfig>> SplitBudgetCampaigns(const CampaignConfig& base,
                                                                 std::span<const CellKey> cells);

struct SplitSetup {
  std::string creative_id;
  CampaignConfig creative;
  std::vector<CellKey> cells;
  // Disjoint, balance-matched partitions for the two strategies.
  MatchedAudience audience_vrs;
  MatchedAudience audience_split;
  AuctionParams params;
  VrsControllerConfig controller;
  Category vrs_category = Category::kHousing;
};

struct SplitGroupPair {
  Attribute attribute = Attribute::kGender;
  int group = 0;
  ReachStats vrs;
  ReachStats split;
};

struct SplitComparison {
  std::string creative_id;
  ArmMetrics vrs;
  std::vector<ArmMetrics> split_arms;
  // Split arms combined (their audiences are disjoint, so reach adds).
  GroupReach split_gender;
  GroupReach split_race;
  ReachStats split_total;
  // Groups with a nonzero share of the audience.
  std::vector<SplitGroupPair> pairs;
  // Impression variance of the combined split log against head-count
  // eligible ratios of the split audience, ground-truth view.
  std::optional<double> split_variance_gender;
  std::optional<double> split_variance_race;

  // True when the split arms reach at least as many users of every group.
  bool SplitDominates() const;
};

absl::StatusOr<SplitComparison> CompareVrsVsSplit(const SplitSetup& setup, uint64_t seed);

// Impressions per race read through a DMA -> race map.
absl::StatusOr<std::array<int64_t, kRaceGroups>> RaceFromDma(std::span<const Impression> log,
                                                             const std::map<int, Race>& dma_race);

nlohmann::json ToJson(const ArmMetrics& arm);
nlohmann::json ToJson(const PairedResult& result);
nlohmann::json ToJson(const SplitComparison& comparison);

// Flat CSVs, one row per group per arm.
void WritePairedGroupsCsv(std::ostream& out, std::span<const PairedResult> results);
void WritePairedSummaryCsv(std::ostream& out, std::span<const PairedResult> results);
void WriteSplitGroupsCsv(std::ostream& out, std::span<const SplitComparison> comparisons);
void WriteSplitSummaryCsv(std::ostream& out, std::span<const SplitComparison> comparisons);

}  // namespace adsim

#endif  // ADSIM_AUDIT_H_
