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

#include <map>
#include <set>
#include <vector>

#include "gtest/gtest.h"

namespace adsim {
namespace {

Impression Imp(int64_t user, Gender g, Race r = Race::kWhite, double price_usd = 0.0) {
  Impression imp;
  imp.user_id = user;
  imp.gender = g;
  imp.true_race = r;
  imp.estimated_race = r;
  imp.price = Micros::FromUsd(price_usd);
  return imp;
}

User U(int64_t id, Gender g, double w, Race r = Race::kWhite) {
  User u;
  u.id = id;
  u.gender = g;
  u.true_race = r;
  u.estimated_race = r;
  u.activity_weight = w;
  return u;
}

std::vector<Impression> Gendered(int m, int f, int unknown = 0) {
  std::vector<Impression> out;
  int64_t id = 0;
  for (int i = 0; i < m; ++i) out.push_back(Imp(id++, Gender::kMale));
  for (int i = 0; i < f; ++i) out.push_back(Imp(id++, Gender::kFemale));
  for (int i = 0; i < unknown; ++i) out.push_back(Imp(id++, Gender::kUnknown));
  return out;
}

TEST(EligibleRatioTest, Symmetric) {
  std::vector<User> users = {U(1, Gender::kMale, 1), U(2, Gender::kFemale, 1)};
  Rng rng(1);
  auto er = EligibleRatio(users, Attribute::kGender, 6000, rng);
  ASSERT_TRUE(er.ok());
  EXPECT_DOUBLE_EQ(er->ratios[0], 0.5);
  EXPECT_DOUBLE_EQ(er->ratios[1], 0.5);
  EXPECT_EQ(er->sample_size, 2);
}

TEST(EligibleRatioTest, WeightedNotHeadcount) {
  std::vector<User> users = {U(1, Gender::kMale, 3), U(2, Gender::kFemale, 1)};
  Rng rng(1);
  auto er = EligibleRatio(users, Attribute::kGender, 6000, rng);
  ASSERT_TRUE(er.ok());
  EXPECT_DOUBLE_EQ(er->ratios[0], 0.75);
  EXPECT_DOUBLE_EQ(er->ratios[1], 0.25);
}

TEST(EligibleRatioTest, UnknownGenderAndRaceExcluded) {
  std::vector<User> users = {U(1, Gender::kMale, 1), U(2, Gender::kFemale, 1),
                             U(3, Gender::kUnknown, 8)};
  users[0].estimated_race = Race::kUnknown;
  users[1].estimated_race = Race::kAfricanAmerican;
  Rng rng(1);
  auto g = EligibleRatio(users, Attribute::kGender, 10, rng);
  ASSERT_TRUE(g.ok());
  EXPECT_DOUBLE_EQ(g->ratios[0], 0.5);
  auto r = EligibleRatio(users, Attribute::kRace, 10, rng);
  ASSERT_TRUE(r.ok());
  // User 1 is estimated Unknown; users 2 and 3 remain.
  EXPECT_DOUBLE_EQ(r->ratios[0], 1.0 / 9.0);
  EXPECT_DOUBLE_EQ(r->ratios[2], 8.0 / 9.0);
}

TEST(EligibleRatioTest, Errors) {
  Rng rng(1);
  std::vector<User> none;
  EXPECT_FALSE(EligibleRatio(none, Attribute::kGender, 10, rng).ok());
  std::vector<User> zero = {U(1, Gender::kMale, 0)};
  EXPECT_FALSE(EligibleRatio(zero, Attribute::kGender, 10, rng).ok());
  std::vector<User> one = {U(1, Gender::kMale, 1)};
  EXPECT_FALSE(EligibleRatio(one, Attribute::kGender, 0, rng).ok());
}

TEST(EligibleRatioTest, BalancedSampleOf6000) {
  std::vector<User> users;
  Rng gen(4);
  // Men and women share one weight draw per pair, so the audience-wide ratio
  // is exactly 0.5 and only the sampler moves the estimate.
  for (int i = 0; i < 30000; i += 2) {
    const double w = gen.LogNormal(0, 0.5);
    users.push_back(U(i, Gender::kMale, w));
    users.push_back(U(i + 1, Gender::kFemale, w));
  }
  // sd of the sampled share is about 0.5 * sqrt(exp(0.25) * 0.8 / 6000) = 0.0065.
  int inside = 0;
  for (int t = 0; t < 200; ++t) {
    Rng rng(DeriveSeed(99, {static_cast<uint64_t>(t)}));
    auto er = EligibleRatio(users, Attribute::kGender, 6000, rng);
    ASSERT_TRUE(er.ok());
    inside += std::abs(er->ratios[0] - 0.5) <= 0.02;
  }
  EXPECT_GE(inside, 198);
}

TEST(EligibleRatioTest, FullSampleEqualsFullAudience) {
  std::vector<User> users;
  Rng gen(6);
  for (int i = 0; i < 500; ++i) {
    users.push_back(U(i, i % 3 ? Gender::kFemale : Gender::kMale, gen.LogNormal(0, 1)));
  }
  Rng rng(1);
  auto sampled = EligibleRatio(users, Attribute::kGender, 500, rng);
  auto full = EligibleRatioFromSample(users, Attribute::kGender);
  ASSERT_TRUE(sampled.ok() && full.ok());
  EXPECT_EQ(sampled->ratios, full->ratios);
}

TEST(DeliveryRatioTest, FortySixty) {
  auto dr = DeliveryRatio(Gendered(40, 60), Attribute::kGender);
  ASSERT_TRUE(dr.ok());
  EXPECT_DOUBLE_EQ((*dr)[0], 0.4);
  EXPECT_DOUBLE_EQ((*dr)[1], 0.6);
}

TEST(DeliveryRatioTest, SingleImpression) {
  auto dr = DeliveryRatio(Gendered(0, 1), Attribute::kGender);
  ASSERT_TRUE(dr.ok());
  EXPECT_EQ((*dr)[1], 1.0);
}

TEST(DeliveryRatioTest, UnknownOmitted) {
  auto dr = DeliveryRatio(Gendered(0, 10, 10), Attribute::kGender);
  ASSERT_TRUE(dr.ok());
  EXPECT_EQ((*dr)[0], 0.0);
  EXPECT_EQ((*dr)[1], 1.0);
  EXPECT_FALSE(DeliveryRatio(Gendered(0, 0, 5), Attribute::kGender).ok());
}

TEST(VarianceTest, WorkedExample) {
  GroupVector er(Attribute::kGender, {0.5, 0.5});
  GroupVector dr(Attribute::kGender, {0.4, 0.6});
  EXPECT_NEAR(*VarianceImpressions(er, dr), 0.1, 1e-15);
  EXPECT_EQ(*VarianceImpressions(er, er), 0.0);
}

TEST(VarianceTest, RaceExample) {
  GroupVector er(Attribute::kRace, {0.4, 0.2, 0.2, 0.2});
  GroupVector dr(Attribute::kRace, {0.25, 0.25, 0.25, 0.25});
  EXPECT_NEAR(*VarianceImpressions(er, dr), 0.15, 1e-15);
}

TEST(VarianceTest, SymmetricBoundedAndTriangle) {
  Rng rng(2);
  auto random_dist = [&rng] {
    GroupVector v(Attribute::kRace);
    for (int g = 0; g < 4; ++g) v[g] = rng.Uniform01();
    return v.Normalized();
  };
  for (int t = 0; t < 1000; ++t) {
    GroupVector a = random_dist(), b = random_dist(), c = random_dist();
    const double ab = *VarianceImpressions(a, b);
    EXPECT_EQ(ab, *VarianceImpressions(b, a));
    EXPECT_GE(ab, 0.0);
    EXPECT_LE(ab, 1.0);
    EXPECT_LE(*VarianceImpressions(a, c), ab + *VarianceImpressions(b, c) + 1e-15);
  }
  GroupVector x(Attribute::kRace, {1, 0, 0, 0});
  GroupVector y(Attribute::kRace, {0, 0, 0.5, 0.5});
  EXPECT_EQ(*VarianceImpressions(x, y), 1.0);
}

TEST(VarianceTest, Errors) {
  GroupVector g(Attribute::kGender, {0.5, 0.5});
  GroupVector r(Attribute::kRace, {0.25, 0.25, 0.25, 0.25});
  EXPECT_FALSE(VarianceImpressions(g, r).ok());
  GroupVector bad(Attribute::kGender, {0.5, 0.6});
  EXPECT_FALSE(VarianceImpressions(g, bad).ok());
}

TEST(VarianceReachTest, OneWomanHundredTimes) {
  std::vector<Impression> log;
  std::vector<User> eligible;
  for (int i = 0; i < 100; ++i) {
    log.push_back(Imp(i, Gender::kMale));
    eligible.push_back(U(i, Gender::kMale, 1));
  }
  for (int i = 0; i < 100; ++i) log.push_back(Imp(1000, Gender::kFemale));
  for (int i = 0; i < 100; ++i) eligible.push_back(U(1000 + i, Gender::kFemale, 1));
  GroupVector er(Attribute::kGender, {0.5, 0.5});
  EXPECT_EQ(*VarianceImpressions(er, *DeliveryRatio(log, Attribute::kGender)), 0.0);
  const double expected = 0.5 * (std::abs(0.5 - 100.0 / 101) + std::abs(0.5 - 1.0 / 101));
  auto v = VarianceReach(log, eligible, Attribute::kGender);
  ASSERT_TRUE(v.ok());
  EXPECT_NEAR(*v, expected, 1e-12);
  EXPECT_NEAR(*v, 0.490, 1e-3);
}

TEST(VarianceReachTest, OneImpressionEachMatchesImpressionVariance) {
  std::vector<Impression> log = Gendered(30, 70);
  std::vector<User> eligible;
  for (int i = 0; i < 50; ++i) eligible.push_back(U(i, Gender::kMale, 1));
  for (int i = 0; i < 50; ++i) eligible.push_back(U(100 + i, Gender::kFemale, 1));
  const GroupVector heads = *HeadcountShares(eligible, Attribute::kGender);
  EXPECT_DOUBLE_EQ(*VarianceReach(log, eligible, Attribute::kGender),
                   *VarianceImpressions(heads, *DeliveryRatio(log, Attribute::kGender)));
}

TEST(VarianceReachTest, EmptyGroupContributesItsShare) {
  std::vector<Impression> log = Gendered(10, 0);
  std::vector<User> eligible = {U(0, Gender::kMale, 1), U(1, Gender::kFemale, 1)};
  // |0.5 - 1| + |0.5 - 0|, halved: each group contributes 0.25.
  EXPECT_DOUBLE_EQ(*VarianceReach(log, eligible, Attribute::kGender), 0.5);
}

TEST(ReachAndCppTest, ThreeImpressionsOneUser) {
  std::vector<Impression> log(3, Imp(7, Gender::kFemale, Race::kWhite, 0.5));
  GroupReach r = ReachAndCpp(log, Attribute::kGender);
  EXPECT_EQ(r.groups[1].reach, 1);
  EXPECT_EQ(r.groups[1].spend, Micros::FromUsd(1.5));
  ASSERT_TRUE(r.groups[1].cpp.has_value());
  EXPECT_DOUBLE_EQ(*r.groups[1].cpp, 1500.0);
  EXPECT_EQ(r.groups[0].reach, 0);
  EXPECT_FALSE(r.groups[0].cpp.has_value());
  EXPECT_EQ(r.total.reach, 1);
  EXPECT_EQ(r.total.impressions, 3);
}

TEST(ReachAndCppTest, MatchesSetRecount) {
  Rng rng(12);
  for (int t = 0; t < 200; ++t) {
    std::vector<Impression> log;
    const int n = 1 + static_cast<int>(rng.UniformInt(200));
    for (int i = 0; i < n; ++i) {
      const int64_t u = static_cast<int64_t>(rng.UniformInt(20));
      log.push_back(Imp(u, u % 3 == 0 ? Gender::kUnknown : (u % 3 == 1 ? Gender::kMale : Gender::kFemale),
                        static_cast<Race>(u % 4), 0.001 * rng.UniformInt(1000)));
    }
    GroupReach r = ReachAndCpp(log, Attribute::kRace);
    std::map<int, std::set<int64_t>> users;
    std::map<int, int64_t> spend;
    for (const Impression& imp : log) {
      users[static_cast<int>(imp.true_race)].insert(imp.user_id);
      spend[static_cast<int>(imp.true_race)] += imp.price.value();
    }
    for (int g = 0; g < 4; ++g) {
      EXPECT_EQ(r.groups[g].reach, static_cast<int64_t>(users[g].size()));
      EXPECT_EQ(r.groups[g].spend.value(), spend[g]);
    }
  }
}

VarianceReport Report(int64_t impressions, std::optional<double> gender,
                      std::optional<double> race) {
  VarianceReport r;
  r.total_impressions = impressions;
  if (gender) r.gender = AttributeVariance{{}, {}, *gender, 0};
  if (race) r.race = AttributeVariance{{}, {}, *race, 0};
  return r;
}

TEST(CoverageTest, AllZeroPassesEveryCell) {
  std::vector<VarianceReport> reports(20, Report(5000, 0.0, 0.0));
  for (const CoverageCell& cell : DefaultCoverageTargets()) {
    auto c = Coverage(reports, cell.attribute, cell.threshold, cell.floor);
    ASSERT_TRUE(c.ok());
    EXPECT_EQ(c->coverage, 1.0);
    EXPECT_TRUE(c->pass) << cell.label();
    EXPECT_TRUE(c->settlement_cell);
  }
}

TEST(CoverageTest, NineOfTenRace) {
  std::vector<VarianceReport> reports(9, Report(1000, 0.0, 0.08));
  reports.push_back(Report(1000, 0.0, 0.2));
  auto c = Coverage(reports, Attribute::kRace, 0.10, 1000);
  ASSERT_TRUE(c.ok());
  EXPECT_DOUBLE_EQ(c->coverage, 0.9);
  EXPECT_DOUBLE_EQ(*c->target, 0.81);
  EXPECT_TRUE(c->pass);
}

TEST(CoverageTest, FloorExcludesSmallAds) {
  std::vector<VarianceReport> reports(5, Report(200, 0.5, 0.5));
  reports.push_back(Report(300, 0.0, 0.0));
  reports.push_back(Report(301, 0.2, 0.2));
  auto c = Coverage(reports, Attribute::kGender, 0.10, 300);
  ASSERT_TRUE(c.ok());
  EXPECT_EQ(c->qualifying, 2);
  EXPECT_EQ(c->within, 1);
  std::vector<VarianceReport> small(3, Report(200, 0.0, 0.0));
  EXPECT_FALSE(Coverage(small, Attribute::kGender, 0.10, 300).ok());
}

TEST(CoverageTest, NonSettlementCellFlagged) {
  std::vector<VarianceReport> reports(3, Report(500, 0.0, 0.0));
  auto c = Coverage(reports, Attribute::kGender, 0.07, 300);
  ASSERT_TRUE(c.ok());
  EXPECT_FALSE(c->settlement_cell);
  EXPECT_FALSE(c->target.has_value());
}

TEST(CoverageTest, MonotoneInThresholdAndOrderInvariant) {
  Rng rng(3);
  std::vector<VarianceReport> reports;
  for (int i = 0; i < 50; ++i) reports.push_back(Report(300 + rng.UniformInt(2000), rng.Uniform01() * 0.3, rng.Uniform01() * 0.3));
  double last = 0.0;
  for (double th = 0.0; th <= 0.3; th += 0.01) {
    const double c = Coverage(reports, Attribute::kRace, th, 300)->coverage;
    EXPECT_GE(c, last);
    last = c;
  }
  const double before = Coverage(reports, Attribute::kGender, 0.1, 1000)->coverage;
  rng.Shuffle(std::span<VarianceReport>(reports));
  EXPECT_EQ(Coverage(reports, Attribute::kGender, 0.1, 1000)->coverage, before);
}

TEST(HashedAdIdTest, StableHex) {
  EXPECT_EQ(HashedAdId(""), "cbf29ce484222325");
  EXPECT_EQ(HashedAdId("a"), "af63dc4c8601ec8c");
  EXPECT_EQ(HashedAdId("HA-vrs"), HashedAdId("HA-vrs"));
  EXPECT_NE(HashedAdId("HA-vrs"), HashedAdId("HA-novrs"));
}

TEST(BuildVarianceReportTest, JsonCarriesBothAttributes) {
  std::vector<Impression> log = Gendered(40, 60);
  std::vector<User> eligible = {U(0, Gender::kMale, 1), U(1, Gender::kFemale, 1)};
  auto r = BuildVarianceReport("ad-1", log, GroupVector(Attribute::kGender, {0.5, 0.5}),
                               GroupVector(Attribute::kRace, {0, 0, 1, 0}), eligible);
  ASSERT_TRUE(r.ok());
  EXPECT_NEAR(r->gender->variance, 0.1, 1e-15);
  EXPECT_EQ(r->race->variance, 0.0);
  nlohmann::json j = ToJson(*r);
  EXPECT_EQ(j["hashed_ad_id"], HashedAdId("ad-1"));
  EXPECT_EQ(j["total_impressions"], 100);
  EXPECT_NEAR(j["gender"]["variance"].get<double>(), 0.1, 1e-15);
}

}  // namespace
}  // namespace adsim
