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

#include "adsim/metrics.h"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "absl/container/flat_hash_set.h"
#include "absl/strings/str_cat.h"
#include "absl/strings/str_format.h"

namespace adsim {

namespace {

constexpr double kSumTolerance = 1e-9;

absl::Status CheckDistribution(const GroupVector& v, absl::string_view name) {
  if (std::abs(v.Sum() - 1.0) > kSumTolerance) {
    return absl::InvalidArgumentError(
        absl::StrFormat("%s ratios sum to %.12g, not 1", name, v.Sum()));
  }
  for (int g = 0; g < v.size(); ++g) {
    if (v[g] < 0) return absl::InvalidArgumentError(absl::StrCat(name, " ratio is negative"));
  }
  return absl::OkStatus();
}

}  // namespace

std::optional<int> ImpressionGroup(const Impression& imp, Attribute attribute, View view) {
  if (attribute == Attribute::kGender) return GroupIndex(imp.gender);
  return GroupIndex(view == View::kPlatform ? imp.estimated_race : imp.true_race);
}

std::optional<int> UserGroup(const User& user, Attribute attribute, View view) {
  return view == View::kPlatform ? PlatformGroup(user, attribute) : TrueGroup(user, attribute);
}

absl::StatusOr<std::vector<User>> SampleEligibleAudience(std::span<const User> audience,
                                                         int64_t sample_size, Rng& rng) {
  if (audience.empty()) return absl::InvalidArgumentError("audience is empty");
  if (sample_size < 1) return absl::InvalidArgumentError("sample size must be at least 1");
  std::vector<User> eligible;
  eligible.reserve(audience.size());
  for (const User& u : audience) {
    if (u.activity_weight > 0) eligible.push_back(u);
  }
  if (eligible.empty()) return absl::InvalidArgumentError("eligible audience has zero weight");
  if (static_cast<int64_t>(eligible.size()) <= sample_size) return eligible;
  // Partial Fisher-Yates: the first sample_size slots become the sample.
  for (int64_t i = 0; i < sample_size; ++i) {
    const uint64_t j = i + rng.UniformInt(eligible.size() - i);
    std::swap(eligible[i], eligible[j]);
  }
  eligible.resize(sample_size);
  return eligible;
}

absl::StatusOr<EligibleRatios> EligibleRatioFromSample(std::span<const User> sample,
                                                       Attribute attribute, View view) {
  EligibleRatios out;
  out.weight_sums = GroupVector(attribute);
  out.sample_size = static_cast<int64_t>(sample.size());
  for (const User& u : sample) {
    if (!(u.activity_weight > 0)) continue;
    if (auto g = UserGroup(u, attribute, view)) out.weight_sums[*g] += u.activity_weight;
  }
  if (!(out.weight_sums.Sum() > 0)) {
    return absl::InvalidArgumentError(
        absl::StrCat("eligible audience has zero known-", Label(attribute), " weight"));
  }
  out.ratios = out.weight_sums.Normalized();
  return out;
}

absl::StatusOr<EligibleRatios> EligibleRatio(std::span<const User> audience, Attribute attribute,
                                             int64_t sample_size, Rng& rng) {
  absl::StatusOr<std::vector<User>> sample = SampleEligibleAudience(audience, sample_size, rng);
  if (!sample.ok()) return sample.status();
  return EligibleRatioFromSample(*sample, attribute);
}

absl::StatusOr<GroupVector> HeadcountShares(std::span<const User> eligible_audience,
                                            Attribute attribute, View view) {
  GroupVector counts(attribute);
  for (const User& u : eligible_audience) {
    if (auto g = UserGroup(u, attribute, view)) counts[*g] += 1.0;
  }
  if (!(counts.Sum() > 0)) return absl::InvalidArgumentError("no users of known group");
  return counts.Normalized();
}

absl::StatusOr<GroupVector> DeliveryRatio(std::span<const Impression> ad_impressions,
                                          Attribute attribute, View view) {
  GroupVector counts(attribute);
  for (const Impression& imp : ad_impressions) {
    if (auto g = ImpressionGroup(imp, attribute, view)) counts[*g] += 1.0;
  }
  if (!(counts.Sum() > 0)) {
    return absl::FailedPreconditionError(
        absl::StrCat("ad has no impressions with known ", Label(attribute)));
  }
  return counts.Normalized();
}

absl::StatusOr<double> VarianceImpressions(const GroupVector& eligible,
                                           const GroupVector& delivery) {
  if (eligible.attribute != delivery.attribute) {
    return absl::InvalidArgumentError("eligible and delivery ratios cover different groups");
  }
  if (absl::Status s = CheckDistribution(eligible, "eligible"); !s.ok()) return s;
  if (absl::Status s = CheckDistribution(delivery, "delivery"); !s.ok()) return s;
  return std::clamp(HalfL1(eligible, delivery), 0.0, 1.0);
}

absl::StatusOr<GroupVector> ReachRatio(std::span<const Impression> ad_impressions,
                                       Attribute attribute, View view) {
  GroupVector counts(attribute);
  absl::flat_hash_set<int64_t> seen;
  for (const Impression& imp : ad_impressions) {
    if (!seen.insert(imp.user_id).second) continue;
    if (auto g = ImpressionGroup(imp, attribute, view)) counts[*g] += 1.0;
  }
  if (!(counts.Sum() > 0)) {
    return absl::FailedPreconditionError(
        absl::StrCat("ad reached no users with known ", Label(attribute)));
  }
  return counts.Normalized();
}

absl::StatusOr<double> VarianceReach(std::span<const Impression> ad_impressions,
                                     std::span<const User> eligible_audience, Attribute attribute,
                                     View view) {
  absl::StatusOr<GroupVector> reach = ReachRatio(ad_impressions, attribute, view);
  if (!reach.ok()) return reach.status();
  absl::StatusOr<GroupVector> heads = HeadcountShares(eligible_audience, attribute, view);
  if (!heads.ok()) return heads.status();
  return VarianceImpressions(*heads, *reach);
}

ReachStats MakeReachStats(int64_t reach, int64_t impressions, Micros spend) {
  ReachStats s;
  s.reach = reach;
  s.impressions = impressions;
  s.spend = spend;
  if (reach > 0) s.cpp = 1000.0 * spend.usd() / static_cast<double>(reach);
  return s;
}

GroupReach ReachAndCpp(std::span<const Impression> ad_impressions, Attribute attribute,
                       View view) {
  GroupReach out;
  out.attribute = attribute;
  absl::flat_hash_set<int64_t> users;
  std::array<int64_t, kRaceGroups> reach{};
  std::array<int64_t, kRaceGroups> imps{};
  std::array<Micros, kRaceGroups> spend{};
  Micros total_spend;
  for (const Impression& imp : ad_impressions) {
    total_spend += imp.price;
    const bool first = users.insert(imp.user_id).second;
    if (auto g = ImpressionGroup(imp, attribute, view)) {
      spend[*g] += imp.price;
      ++imps[*g];
      if (first) ++reach[*g];
    }
  }
  out.total = MakeReachStats(static_cast<int64_t>(users.size()),
                             static_cast<int64_t>(ad_impressions.size()), total_spend);
  for (int g = 0; g < GroupCount(attribute); ++g) {
    out.groups[g] = MakeReachStats(reach[g], imps[g], spend[g]);
  }
  return out;
}

absl::StatusOr<VarianceReport> BuildVarianceReport(const std::string& campaign_id,
                                                   std::span<const Impression> ad_impressions,
                                                   const GroupVector& eligible_gender,
                                                   const GroupVector& eligible_race,
                                                   std::span<const User> eligible_audience,
                                                   View view) {
  VarianceReport report;
  report.campaign_id = campaign_id;
  report.hashed_ad_id = HashedAdId(campaign_id);
  report.total_impressions = static_cast<int64_t>(ad_impressions.size());
  for (Attribute attribute : {Attribute::kGender, Attribute::kRace}) {
    absl::StatusOr<GroupVector> dr = DeliveryRatio(ad_impressions, attribute, view);
    if (!dr.ok()) continue;
    AttributeVariance av;
    av.eligible = attribute == Attribute::kGender ? eligible_gender : eligible_race;
    av.delivery = *dr;
    absl::StatusOr<double> v = VarianceImpressions(av.eligible, av.delivery);
    if (!v.ok()) return v.status();
    av.variance = *v;
    absl::StatusOr<double> rv = VarianceReach(ad_impressions, eligible_audience, attribute, view);
    av.reach_variance = rv.ok() ? *rv : 0.0;
    (attribute == Attribute::kGender ? report.gender : report.race) = av;
  }
  return report;
}

nlohmann::json ToJson(const VarianceReport& report) {
  nlohmann::json j;
  j["campaign_id"] = report.campaign_id;
  j["hashed_ad_id"] = report.hashed_ad_id;
  j["total_impressions"] = report.total_impressions;
  for (Attribute attribute : {Attribute::kGender, Attribute::kRace}) {
    const auto& av = report.For(attribute);
    if (!av.has_value()) continue;
    nlohmann::json a;
    for (int g = 0; g < GroupCount(attribute); ++g) {
      const std::string label(GroupLabel(attribute, g));
      a["eligible"][label] = av->eligible[g];
      a["delivery"][label] = av->delivery[g];
    }
    a["variance"] = av->variance;
    a["reach_variance"] = av->reach_variance;
    j[std::string(Label(attribute))] = a;
  }
  return j;
}

std::string CoverageCell::label() const {
  return absl::StrFormat("%s<=%d%%@%d", Label(attribute), static_cast<int>(std::lround(threshold * 100)),
                         floor);
}

const CoverageTargets& DefaultCoverageTargets() {
  static const CoverageTargets* targets = new CoverageTargets{
      {Attribute::kGender, 0.10, 300, 902},  {Attribute::kGender, 0.10, 1000, 917},
      {Attribute::kGender, 0.05, 300, 783},  {Attribute::kGender, 0.05, 1000, 845},
      {Attribute::kRace, 0.10, 300, 801},    {Attribute::kRace, 0.10, 1000, 810},
      {Attribute::kRace, 0.05, 300, 568},    {Attribute::kRace, 0.05, 1000, 610},
  };
  return *targets;
}

absl::StatusOr<CoverageResult> Coverage(std::span<const VarianceReport> reports,
                                        Attribute attribute, double threshold,
                                        int64_t impression_floor,
                                        const CoverageTargets& targets) {
  CoverageResult result;
  result.attribute = attribute;
  result.threshold = threshold;
  result.floor = impression_floor;
  for (const VarianceReport& r : reports) {
    const auto& av = r.For(attribute);
    if (r.total_impressions < impression_floor || !av.has_value()) continue;
    ++result.qualifying;
    if (av->variance <= threshold) ++result.within;
  }
  if (result.qualifying == 0) {
    return absl::FailedPreconditionError(
        absl::StrFormat("no ads with at least %d impressions", impression_floor));
  }
  result.coverage = static_cast<double>(result.within) / static_cast<double>(result.qualifying);
  for (const CoverageCell& cell : targets) {
    if (cell.attribute == attribute && cell.floor == impression_floor &&
        std::abs(cell.threshold - threshold) < 1e-12) {
      result.target = cell.target();
      result.settlement_cell = true;
      // coverage >= target, compared exactly in integers.
      result.pass = result.within * 1000 >= cell.target_permille * result.qualifying;
    }
  }
  return result;
}

std::string HashedAdId(absl::string_view campaign_id) {
  uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : campaign_id) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return absl::StrFormat("%016x", h);
}

}  // namespace adsim
