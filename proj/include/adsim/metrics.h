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

// Delivery-fairness metrics over impression logs: eligible and delivery
// ratios, impression- and reach-based variance, reach and cost per 1,000
// reached, and coverage against the housing-ad targets.

#ifndef ADSIM_METRICS_H_
#define ADSIM_METRICS_H_

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "absl/status/statusor.h"
#include "absl/strings/string_view.h"
#include "adsim/group_vector.h"
#include "adsim/impression.h"
#include "adsim/random.h"
#include "nlohmann/json.hpp"

namespace adsim {

// Which race a metric reads: the platform's estimate or ground truth (what
// an auditor recovers through the DMA proxy). Gender is self-reported in
// both views.
enum class View { kPlatform, kGroundTruth };

std::optional<int> ImpressionGroup(const Impression& imp, Attribute attribute,
                                   View view = View::kPlatform);
std::optional<int> UserGroup(const User& user, Attribute attribute, View view = View::kPlatform);

struct EligibleRatios {
  GroupVector ratios;
  // Sum of 30-day activity per group over the sample; the unnormalised
  // ratios, reported as potential impressions.
  GroupVector weight_sums;
  int64_t sample_size = 0;
};

// Uniform sample without replacement of the eligible audience (users with
// positive activity). The whole eligible audience is returned, in input
// order, when it is no larger than sample_size.
absl::StatusOr<std::vector<User>> SampleEligibleAudience(std::span<const User> audience,
                                                         int64_t sample_size, Rng& rng);

// Activity-weighted group shares of an already drawn sample.
absl::StatusOr<EligibleRatios> EligibleRatioFromSample(std::span<const User> sample,
                                                       Attribute attribute,
                                                       View view = View::kPlatform);

absl::StatusOr<EligibleRatios> EligibleRatio(std::span<const User> audience, Attribute attribute,
                                             int64_t sample_size, Rng& rng);

// Head-count shares of the eligible audience (every weight set to 1).
absl::StatusOr<GroupVector> HeadcountShares(std::span<const User> eligible_audience,
                                            Attribute attribute, View view = View::kPlatform);

// Group shares of one ad's impressions; impressions of unknown group are
// omitted from numerator and denominator.
absl::StatusOr<GroupVector> DeliveryRatio(std::span<const Impression> ad_impressions,
                                          Attribute attribute, View view = View::kPlatform);

// Half the L1 distance between eligible and delivery ratios.
absl::StatusOr<double> VarianceImpressions(const GroupVector& eligible,
                                           const GroupVector& delivery);

// Group shares of unique recipients of one ad.
absl::StatusOr<GroupVector> ReachRatio(std::span<const Impression> ad_impressions,
                                       Attribute attribute, View view = View::kPlatform);

// Variance with delivery measured in unique users and eligibility in head
// count.
absl::StatusOr<double> VarianceReach(std::span<const Impression> ad_impressions,
                                     std::span<const User> eligible_audience, Attribute attribute,
                                     View view = View::kPlatform);

struct ReachStats {
  int64_t reach = 0;
  int64_t impressions = 0;
  Micros spend;
  // USD per 1,000 unique recipients; absent when reach is 0.
  std::optional<double> cpp;
};

struct GroupReach {
  Attribute attribute = Attribute::kGender;
  ReachStats total;
  std::array<ReachStats, kRaceGroups> groups{};
};

ReachStats MakeReachStats(int64_t reach, int64_t impressions, Micros spend);

GroupReach ReachAndCpp(std::span<const Impression> ad_impressions, Attribute attribute,
                       View view = View::kPlatform);

struct AttributeVariance {
  GroupVector eligible;
  GroupVector delivery;
  double variance = 0.0;
  double reach_variance = 0.0;
};

struct VarianceReport {
  std::string campaign_id;
  std::string hashed_ad_id;
  int64_t total_impressions = 0;
  std::optional<AttributeVariance> gender;
  std::optional<AttributeVariance> race;

  const std::optional<AttributeVariance>& For(Attribute attribute) const {
    return attribute == Attribute::kGender ? gender : race;
  }
};

// Assembles the per-attribute metrics of one ad. An attribute is left empty
// when none of the ad's impressions has a known group for it.
absl::StatusOr<VarianceReport> BuildVarianceReport(const std::string& campaign_id,
                                                   std::span<const Impression> ad_impressions,
                                                   const GroupVector& eligible_gender,
                                                   const GroupVector& eligible_race,
                                                   std::span<const User> eligible_audience,
                                                   View view = View::kPlatform);

nlohmann::json ToJson(const VarianceReport& report);

// One housing-ad coverage requirement: for ads with at least `floor`
// impressions, the share with variance at or below `threshold` must reach
// target_permille / 1000.
struct CoverageCell {
  Attribute attribute = Attribute::kGender;
  double threshold = 0.10;
  int64_t floor = 300;
  int target_permille = 0;

  double target() const { return target_permille / 1000.0; }
  std::string label() const;
};

using CoverageTargets = std::vector<CoverageCell>;

// The eight settlement cells.
const CoverageTargets& DefaultCoverageTargets();

struct CoverageResult {
  Attribute attribute = Attribute::kGender;
  double threshold = 0.0;
  int64_t floor = 0;
  int64_t qualifying = 0;
  int64_t within = 0;
  double coverage = 0.0;
  std::optional<double> target;
  bool pass = false;
  // False when (threshold, floor) is not one of the settlement cells.
  bool settlement_cell = false;
};

absl::StatusOr<CoverageResult> Coverage(std::span<const VarianceReport> reports,
                                        Attribute attribute, double threshold,
                                        int64_t impression_floor,
                                        const CoverageTargets& targets = DefaultCoverageTargets());

// Stable 64-bit FNV-1a hash of the campaign id, as 16 lower-case hex digits.
std::string HashedAdId(absl::string_view campaign_id);

}  // namespace adsim

#endif  // ADSIM_METRICS_H_
