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

// Scenario files: one JSON document describing the population, audiences,
// creatives, auction, controller and experiment family. Every key is
// checked; unknown keys are rejected with a suggestion.

#ifndef ADSIM_SCENARIO_H_
#define ADSIM_SCENARIO_H_

#include <cstdint>
#include <string>
#include <vector>

#include "absl/status/statusor.h"
#include "absl/strings/string_view.h"
#include "adsim/auction.h"
#include "adsim/coverage_analyzer.h"
#include "adsim/demographics.h"
#include "adsim/metrics.h"
#include "adsim/vrs_controller.h"
#include "nlohmann/json.hpp"

namespace adsim {

enum class ExperimentType { kSingle, kPaired, kSplit, kCoverageAnalysis, kComplianceExport };

absl::string_view Label(ExperimentType type);

struct AudienceSpec {
  // Users per partition; 0 picks the largest size the balance allows.
  int64_t partition_size = 0;
  std::vector<BalanceTarget> balance;  // default: one key per population cell
  MatchRates match_rates = MatchRates::All(1.0);
};

struct CreativeSpec {
  std::string id;
  // Category used by the single-run experiment.
  Category category = Category::kNone;
  std::map<Cell, double> affinity;
};

struct PairedSpec {
  std::vector<Attribute> attributes = {Attribute::kGender, Attribute::kRace};
  Category vrs_category = Category::kHousing;
  Category control_category = Category::kNone;
};

struct SplitSpec {
  std::vector<CellKey> cells;  // default: the four AA/W x M/F cells
  Category vrs_category = Category::kHousing;
};

struct CoverageSpec {
  // Empty: generate a power-law population.
  std::string ad_stats_csv;
  PowerlawParams powerlaw;
  int random_trials = 100;
};

struct ComplianceSpec {
  double epsilon_report = 5.0;
  double delta = 1e-6;
};

struct Scenario {
  std::string name;
  ExperimentType experiment = ExperimentType::kPaired;
  uint64_t seed = 1;
  int replications = 3;
  PopulationSpec population;
  AudienceSpec audience;
  // Budget, duration, bid, quality and base EAR shared by every creative.
  CampaignConfig campaign;
  std::vector<CreativeSpec> creatives;
  AuctionParams auction;
  VrsControllerConfig controller;
  PairedSpec paired;
  SplitSpec split;
  CoverageSpec coverage;
  ComplianceSpec compliance;
  CoverageTargets coverage_targets = DefaultCoverageTargets();

  // FNV-1a of the canonical (key-sorted) dump of the input document.
  std::string config_hash;
};

// `base_dir` resolves relative paths inside the document.
absl::StatusOr<Scenario> ParseScenario(const nlohmann::json& doc,
                                       const std::string& base_dir = ".");
absl::StatusOr<Scenario> ParseScenarioFile(const std::string& path);

std::string ConfigHash(const nlohmann::json& doc);

// Levenshtein distance, used for key suggestions.
int EditDistance(absl::string_view a, absl::string_view b);

}  // namespace adsim

#endif  // ADSIM_SCENARIO_H_
