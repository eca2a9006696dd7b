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

// Selective application of VRS: which share of impressions escapes coverage
// when the excluded ads are the largest ones rather than a random sample.

#ifndef ADSIM_COVERAGE_ANALYZER_H_
#define ADSIM_COVERAGE_ANALYZER_H_

#include <cstdint>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "absl/status/statusor.h"
#include "adsim/metrics.h"

namespace adsim {

inline constexpr int64_t kAdStatFloor = 300;

struct AdStat {
  std::string id;
  double spend_usd = 0.0;
  int64_t impressions = 0;
};

struct PowerlawParams {
  int64_t n = 10000;
  // Exponent of the density, p(x) ~ x^-alpha, so the tail index is alpha - 1.
  double alpha = 1.6;
  int64_t x_min = 300;
  double cost_per_impression_usd = 0.01;
  // Multiplicative lognormal jitter on spend.
  double jitter_sigma = 0.25;
  // Draws beyond this are clamped; the density has no finite mean for
  // alpha <= 2.
  int64_t x_max = 1'000'000'000'000;
};

// impressions = floor(x_min * U^(-1 / (alpha - 1))), spend =
// impressions * cost * LogNormal(0, jitter_sigma). Deterministic per seed.
absl::StatusOr<std::vector<AdStat>> GeneratePowerlawAds(const PowerlawParams& params,
                                                        uint64_t seed);

struct IngestIssue {
  int line = 0;
  std::string message;
};

struct IngestResult {
  std::vector<AdStat> ads;
  int64_t dropped_below_floor = 0;
  std::vector<IngestIssue> malformed;
};

// Header ad_id,spend_usd,impressions. A spend of the form "lo-hi" is read as
// its midpoint. Rows under 300 impressions are dropped and counted.
// Malformed rows are collected; more than max_malformed_fraction of the data
// rows being malformed is an error, as is an empty result.
absl::StatusOr<IngestResult> IngestAdStatsCsv(std::istream& in,
                                              double max_malformed_fraction = 0.1);

void WriteAdStatsCsv(std::ostream& out, std::span<const AdStat> ads);

enum class ExclusionStrategy { kLargestFirst, kRandom };

absl::string_view Label(ExclusionStrategy strategy);

struct ExclusionReport {
  ExclusionStrategy strategy = ExclusionStrategy::kLargestFirst;
  int64_t total_ads = 0;
  int64_t excluded_ads = 0;
  double excluded_ad_fraction = 0.0;
  // LargestFirst: exact. Random: mean over trials, with a normal 95% CI.
  double impression_fraction = 0.0;
  double ci_lo = 0.0;
  double ci_hi = 0.0;
  int trials = 0;
};

// Number of ads excluded at a coverage target: floor((1 - target) * n),
// computed in integer per-mille when the target has three decimals.
int64_t ExcludedAdCount(int64_t n, double coverage_target);

absl::StatusOr<ExclusionReport> ExclusionImpact(std::span<const AdStat> ads,
                                                double coverage_target,
                                                ExclusionStrategy strategy, uint64_t seed = 0,
                                                int trials = 100);

struct StrategyRow {
  std::string target_label;
  Attribute attribute = Attribute::kGender;
  double threshold = 0.0;
  int64_t floor = 0;
  double coverage_target = 0.0;
  int64_t qualifying_ads = 0;
  ExclusionReport largest;
  ExclusionReport random;
  // largest / random; 1 when both exclude nothing.
  double ratio = 1.0;
};

// One row per coverage cell. Each cell only considers ads at or above its
// impression floor.
absl::StatusOr<std::vector<StrategyRow>> CompareStrategies(std::span<const AdStat> ads,
                                                           const CoverageTargets& targets,
                                                           uint64_t seed, int trials = 100);

// target_label,threshold,floor,coverage_target,largest_fraction,random_mean,
// random_ci_lo,random_ci_hi,ratio
void WriteStrategiesCsv(std::ostream& out, std::span<const StrategyRow> rows);

}  // namespace adsim

#endif  // ADSIM_COVERAGE_ANALYZER_H_
