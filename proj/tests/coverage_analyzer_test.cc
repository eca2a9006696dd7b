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

#include "adsim/coverage_analyzer.h"

#include <algorithm>
#include <functional>
#include <numeric>
#include <sstream>
#include <vector>

#include "absl/strings/str_split.h"
#include "gtest/gtest.h"

namespace adsim {
namespace {

std::vector<AdStat> FromSizes(const std::vector<int64_t>& sizes) {
  std::vector<AdStat> ads;
  for (size_t i = 0; i < sizes.size(); ++i) {
    ads.push_back({"a" + std::to_string(i), 1.0, sizes[i]});
  }
  return ads;
}

TEST(PowerlawTest, SupportAndDeterminism) {
  PowerlawParams p;
  p.n = 5000;
  auto a = *GeneratePowerlawAds(p, 7);
  auto b = *GeneratePowerlawAds(p, 7);
  ASSERT_EQ(a.size(), 5000u);
  for (size_t i = 0; i < a.size(); ++i) {
    EXPECT_GE(a[i].impressions, 300);
    EXPECT_EQ(a[i].impressions, b[i].impressions);
    EXPECT_EQ(a[i].spend_usd, b[i].spend_usd);
    EXPECT_GE(a[i].spend_usd, 0.0);
  }
  auto c = *GeneratePowerlawAds(p, 8);
  int same = 0;
  for (size_t i = 0; i < a.size(); ++i) same += a[i].impressions == c[i].impressions;
  EXPECT_LT(same, 4000);
}

TEST(PowerlawTest, LargeAlphaCollapsesToFloor) {
  PowerlawParams p;
  p.n = 1000;
  p.alpha = 20001;
  auto ads = *GeneratePowerlawAds(p, 1);
  for (const AdStat& a : ads) EXPECT_EQ(a.impressions, 300);
}

TEST(PowerlawTest, RejectsBadParams) {
  PowerlawParams p;
  p.alpha = 1.0;
  EXPECT_FALSE(GeneratePowerlawAds(p, 1).ok());
  p = PowerlawParams();
  p.x_min = 299;
  EXPECT_FALSE(GeneratePowerlawAds(p, 1).ok());
  p = PowerlawParams();
  p.n = 0;
  EXPECT_FALSE(GeneratePowerlawAds(p, 1).ok());
  p = PowerlawParams();
  p.jitter_sigma = -1;
  EXPECT_FALSE(GeneratePowerlawAds(p, 1).ok());
}

TEST(PowerlawTest, TopNineteenPercentHoldMostImpressions) {
  PowerlawParams p;
  int hits = 0;
  for (uint64_t seed = 0; seed < 100; ++seed) {
    auto ads = *GeneratePowerlawAds(p, seed);
    std::vector<double> s;
    for (const AdStat& a : ads) s.push_back(static_cast<double>(a.impressions));
    std::sort(s.rbegin(), s.rend());
    const double top = std::accumulate(s.begin(), s.begin() + 1900, 0.0);
    const double all = std::accumulate(s.begin(), s.end(), 0.0);
    hits += top / all > 0.60;
  }
  EXPECT_GE(hits, 95);
}

TEST(IngestTest, ValidRowsRangesAndFloor) {
  std::istringstream in(
      "ad_id,spend_usd,impressions\n"
      "a,10.5,1000\n"
      "b,100-199,400\n"
      "c,3,300\n"
      "d,1,250\n");
  auto r = IngestAdStatsCsv(in);
  ASSERT_TRUE(r.ok()) << r.status();
  ASSERT_EQ(r->ads.size(), 3u);
  EXPECT_EQ(r->dropped_below_floor, 1);
  EXPECT_DOUBLE_EQ(r->ads[1].spend_usd, 149.5);
  EXPECT_EQ(r->ads[0].impressions, 1000);
  EXPECT_TRUE(r->malformed.empty());
}

TEST(IngestTest, MalformedRowsUpToThreshold) {
  std::string csv = "ad_id,spend_usd,impressions\n";
  for (int i = 0; i < 19; ++i) csv += "ad" + std::to_string(i) + ",1,500\n";
  csv += "bad,x,500\n";
  std::istringstream in(csv);
  auto r = IngestAdStatsCsv(in);
  ASSERT_TRUE(r.ok());
  EXPECT_EQ(r->ads.size(), 19u);
  ASSERT_EQ(r->malformed.size(), 1u);
  EXPECT_EQ(r->malformed[0].line, 21);

  std::istringstream worse("ad_id,spend_usd,impressions\na,1,500\nb,1\nc,-1,400\n");
  EXPECT_FALSE(IngestAdStatsCsv(worse).ok());
}

TEST(IngestTest, EmptyResultAndHeaderErrors) {
  std::istringstream small("ad_id,spend_usd,impressions\na,1,10\n");
  EXPECT_FALSE(IngestAdStatsCsv(small).ok());
  std::istringstream header("id,spend,impressions\na,1,500\n");
  EXPECT_FALSE(IngestAdStatsCsv(header).ok());
  std::istringstream empty("");
  EXPECT_FALSE(IngestAdStatsCsv(empty).ok());
}

TEST(IngestTest, WriteThenIngestRoundTrip) {
  PowerlawParams p;
  p.n = 50;
  auto ads = *GeneratePowerlawAds(p, 3);
  std::ostringstream out;
  WriteAdStatsCsv(out, ads);
  std::istringstream in(out.str());
  auto r = *IngestAdStatsCsv(in);
  ASSERT_EQ(r.ads.size(), ads.size());
  for (size_t i = 0; i < ads.size(); ++i) {
    EXPECT_EQ(r.ads[i].impressions, ads[i].impressions);
    EXPECT_NEAR(r.ads[i].spend_usd, ads[i].spend_usd, 0.005 + 1e-9);
  }
}

TEST(ExclusionTest, CountFloor) {
  EXPECT_EQ(ExcludedAdCount(100, 0.81), 19);
  EXPECT_EQ(ExcludedAdCount(1000, 0.902), 98);
  EXPECT_EQ(ExcludedAdCount(5, 0.8), 1);
  EXPECT_EQ(ExcludedAdCount(1, 0.568), 0);
  EXPECT_EQ(ExcludedAdCount(10, 1.0), 0);
}

TEST(ExclusionTest, UniformAdsBothStrategiesEqualF) {
  auto ads = FromSizes(std::vector<int64_t>(100, 500));
  auto lf = *ExclusionImpact(ads, 0.81, ExclusionStrategy::kLargestFirst);
  auto rd = *ExclusionImpact(ads, 0.81, ExclusionStrategy::kRandom, 5);
  EXPECT_EQ(lf.excluded_ads, 19);
  EXPECT_NEAR(lf.impression_fraction, 0.19, 1e-12);
  EXPECT_NEAR(rd.impression_fraction, 0.19, 1e-12);
  EXPECT_EQ(rd.trials, 100);
}

TEST(ExclusionTest, OneLargeAd) {
  auto ads = FromSizes({1000, 100, 100, 100, 100});
  auto lf = *ExclusionImpact(ads, 0.8, ExclusionStrategy::kLargestFirst);
  EXPECT_EQ(lf.excluded_ads, 1);
  EXPECT_NEAR(lf.impression_fraction, 1000.0 / 1400.0, 1e-12);
  // Exact expectation by symmetry: each ad is excluded with probability 1/5.
  auto rd = *ExclusionImpact(ads, 0.8, ExclusionStrategy::kRandom, 11);
  EXPECT_NEAR(rd.impression_fraction, 280.0 / 1400.0, 0.08);
  EXPECT_LE(rd.ci_lo, rd.impression_fraction);
  EXPECT_GE(rd.ci_hi, rd.impression_fraction);
}

TEST(ExclusionTest, SingleAdNothingExcluded) {
  auto ads = FromSizes({5000});
  for (double t : {0.568, 0.81, 0.917}) {
    auto lf = *ExclusionImpact(ads, t, ExclusionStrategy::kLargestFirst);
    auto rd = *ExclusionImpact(ads, t, ExclusionStrategy::kRandom, 1);
    EXPECT_EQ(lf.excluded_ads, 0);
    EXPECT_EQ(lf.impression_fraction, 0.0);
    EXPECT_EQ(rd.impression_fraction, 0.0);
  }
}

TEST(ExclusionTest, Errors) {
  EXPECT_FALSE(ExclusionImpact({}, 0.8, ExclusionStrategy::kLargestFirst).ok());
  auto ads = FromSizes({500});
  EXPECT_FALSE(ExclusionImpact(ads, 0.0, ExclusionStrategy::kLargestFirst).ok());
  EXPECT_FALSE(ExclusionImpact(ads, 1.1, ExclusionStrategy::kLargestFirst).ok());
  EXPECT_FALSE(ExclusionImpact(ads, 0.8, ExclusionStrategy::kRandom, 1, 0).ok());
}

// All subsets of size k: the largest-first fraction is their maximum, and the
// subset mean (the exact Random expectation) is k / n.
TEST(ExclusionTest, BruteForceOverAllSubsets) {
  Rng rng(17);
  for (int round = 0; round < 200; ++round) {
    const int n = 1 + static_cast<int>(rng.UniformInt(8));
    std::vector<int64_t> sizes;
    for (int i = 0; i < n; ++i) sizes.push_back(300 + static_cast<int64_t>(rng.UniformInt(5000)));
    const double total = std::accumulate(sizes.begin(), sizes.end(), 0.0);
    auto ads = FromSizes(sizes);
    for (int k = 0; k <= n; ++k) {
      const double target = 1.0 - static_cast<double>(k) / n;
      if (target <= 0.0) continue;
      auto lf = *ExclusionImpact(ads, target, ExclusionStrategy::kLargestFirst);
      const int64_t kk = lf.excluded_ads;
      double best = 0.0, sum = 0.0;
      int count = 0;
      for (int mask = 0; mask < (1 << n); ++mask) {
        if (__builtin_popcount(mask) != kk) continue;
        double s = 0.0;
        for (int i = 0; i < n; ++i) {
          if (mask & (1 << i)) s += sizes[i];
        }
        best = std::max(best, s / total);
        sum += s / total;
        ++count;
      }
      const double expectation = sum / count;
      EXPECT_NEAR(lf.impression_fraction, best, 1e-12);
      EXPECT_GE(lf.impression_fraction + 1e-12, expectation);
      EXPECT_NEAR(expectation, static_cast<double>(kk) / n, 1e-12);
    }
  }
}

TEST(ExclusionTest, LargestFirstMonotoneInExcludedFraction) {
  PowerlawParams p;
  p.n = 2000;
  auto ads = *GeneratePowerlawAds(p, 4);
  double last = 0.0;
  for (int pm = 1000; pm >= 10; pm -= 10) {
    auto r = *ExclusionImpact(ads, pm / 1000.0, ExclusionStrategy::kLargestFirst);
    EXPECT_GE(r.impression_fraction, last);
    last = r.impression_fraction;
  }
}

TEST(CompareStrategiesTest, EightRowsAndUniformRatioOne) {
  auto ads = FromSizes(std::vector<int64_t>(200, 1500));
  auto rows = *CompareStrategies(ads, DefaultCoverageTargets(), 3);
  ASSERT_EQ(rows.size(), 8u);
  for (const StrategyRow& r : rows) {
    EXPECT_DOUBLE_EQ(r.ratio, 1.0) << r.target_label;
    EXPECT_EQ(r.qualifying_ads, 200);
  }
  EXPECT_EQ(rows[0].target_label, "gender<=10%@300");
  std::ostringstream out;
  WriteStrategiesCsv(out, rows);
  std::vector<std::string> lines = absl::StrSplit(out.str(), '\n', absl::SkipEmpty());
  ASSERT_EQ(lines.size(), 9u);
  EXPECT_EQ(lines[0],
            "target_label,threshold,floor,coverage_target,largest_fraction,random_mean,"
            "random_ci_lo,random_ci_hi,ratio");
}

TEST(CompareStrategiesTest, FloorFiltersPerCell) {
  auto ads = FromSizes({400, 400, 400, 2000, 3000});
  auto rows = *CompareStrategies(ads, DefaultCoverageTargets(), 3);
  for (const StrategyRow& r : rows) {
    EXPECT_EQ(r.qualifying_ads, r.floor == 300 ? 5 : 2);
  }
}

}  // namespace
}  // namespace adsim
