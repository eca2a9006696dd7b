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

#include "adsim/demographics.h"

#include <cmath>
#include <map>
#include <set>
#include <sstream>
#include <vector>

#include "gtest/gtest.h"

namespace adsim {
namespace {

PopulationSpec FourCellSpec(int64_t n) {
  PopulationSpec spec;
  spec.n = n;
  spec.cells = {{{Gender::kMale, Race::kAfricanAmerican}, 0.25},
                {{Gender::kFemale, Race::kAfricanAmerican}, 0.25},
                {{Gender::kMale, Race::kWhite}, 0.25},
                {{Gender::kFemale, Race::kWhite}, 0.25}};
  return spec;
}

std::map<Cell, int64_t> CellCounts(const std::vector<User>& users) {
  std::map<Cell, int64_t> counts;
  for (const User& u : users) ++counts[u.TrueCell()];
  return counts;
}

TEST(GeneratePopulationTest, EnumerationOnePerCell) {
  absl::StatusOr<std::vector<User>> users = GeneratePopulation(FourCellSpec(4), 1);
  ASSERT_TRUE(users.ok()) << users.status();
  ASSERT_EQ(users->size(), 4u);
  for (const auto& [cell, n] : CellCounts(*users)) EXPECT_EQ(n, 1) << CellLabel(cell);
  EXPECT_EQ(CellCounts(*users).size(), 4u);
}

TEST(GeneratePopulationTest, EnumerationExactCellCounts) {
  absl::StatusOr<std::vector<User>> users = GeneratePopulation(FourCellSpec(30000), 9);
  ASSERT_TRUE(users.ok());
  for (const auto& [cell, n] : CellCounts(*users)) EXPECT_EQ(n, 7500) << CellLabel(cell);
}

TEST(GeneratePopulationTest, Deterministic) {
  PopulationSpec spec = FourCellSpec(500);
  spec.mode = PopulationMode::kSampling;
  auto a = GeneratePopulation(spec, 1);
  auto b = GeneratePopulation(spec, 1);
  ASSERT_TRUE(a.ok() && b.ok());
  std::ostringstream sa, sb;
  WritePopulationCsv(sa, *a);
  WritePopulationCsv(sb, *b);
  EXPECT_EQ(sa.str(), sb.str());
  auto c = GeneratePopulation(spec, 2);
  std::ostringstream sc;
  WritePopulationCsv(sc, *c);
  EXPECT_NE(sa.str(), sc.str());
}

TEST(GeneratePopulationTest, SamplingWithinThreeSigma) {
  PopulationSpec spec = FourCellSpec(20000);
  spec.cells[0].proportion = 0.1;
  spec.cells[1].proportion = 0.2;
  spec.cells[2].proportion = 0.3;
  spec.cells[3].proportion = 0.4;
  spec.mode = PopulationMode::kSampling;
  auto users = GeneratePopulation(spec, 77);
  ASSERT_TRUE(users.ok());
  std::map<Cell, int64_t> counts = CellCounts(*users);
  for (const CellProportion& c : spec.cells) {
    const double sd = std::sqrt(spec.n * c.proportion * (1 - c.proportion));
    EXPECT_NEAR(counts[c.cell], spec.n * c.proportion, 3 * sd) << CellLabel(c.cell);
  }
}

TEST(GeneratePopulationTest, RejectsBadSpecs) {
  PopulationSpec spec = FourCellSpec(0);
  EXPECT_FALSE(GeneratePopulation(spec, 1).ok());
  spec = FourCellSpec(10);
  spec.cells[0].proportion = 0.3;
  EXPECT_FALSE(GeneratePopulation(spec, 1).ok());
  spec = FourCellSpec(10);
  spec.dma.proxy = false;
  spec.dma.dma_count = 0;
  EXPECT_FALSE(GeneratePopulation(spec, 1).ok());
  spec = FourCellSpec(10);
  spec.dma.proxy = true;
  spec.dma.race_dmas[Race::kAfricanAmerican] = {1, 2};
  spec.dma.race_dmas[Race::kWhite] = {2};
  EXPECT_FALSE(GeneratePopulation(spec, 1).ok());
  spec = FourCellSpec(10);
  spec.cells[0].cell.race = Race::kUnknown;
  EXPECT_FALSE(GeneratePopulation(spec, 1).ok());
}

TEST(GeneratePopulationTest, ProxyDmasHoldOneRace) {
  PopulationSpec spec = FourCellSpec(4000);
  spec.dma.proxy = true;
  spec.dma.dmas_per_race = 3;
  auto users = GeneratePopulation(spec, 5);
  ASSERT_TRUE(users.ok());
  std::map<int, std::set<Race>> races;
  for (const User& u : *users) races[u.dma].insert(u.true_race);
  EXPECT_EQ(races.size(), 6u);
  for (const auto& [dma, set] : races) EXPECT_EQ(set.size(), 1u) << dma;
  auto map = DmaRaceMap(spec);
  ASSERT_TRUE(map.ok());
  for (const User& u : *users) EXPECT_EQ(map->at(u.dma), u.true_race);
}

TEST(BisgTest, IdentityIsIdentity) {
  for (double threshold : {0.1, 0.5, 1.0}) {
    BisgConfusionModel m = BisgConfusionModel::Identity(threshold);
    for (Race r : {Race::kAfricanAmerican, Race::kHispanic, Race::kWhite, Race::kOther}) {
      EXPECT_EQ(BisgEstimate(r, m), r);
    }
  }
}

TEST(BisgTest, BelowThresholdIsUnknown) {
  std::array<BisgConfusionModel::Row, kRaceGroups> rows = {{{1, 0, 0, 0},
                                                            {0, 1, 0, 0},
                                                            {0.1, 0.1, 0.45, 0.35},
                                                            {0, 0, 0, 1}}};
  auto m = BisgConfusionModel::Create(rows, 0.5);
  ASSERT_TRUE(m.ok());
  EXPECT_EQ(BisgEstimate(Race::kWhite, *m), Race::kUnknown);
}

TEST(BisgTest, ArgmaxIsDeterministic) {
  std::array<BisgConfusionModel::Row, kRaceGroups> rows = {{{0.7, 0.1, 0.1, 0.1},
                                                            {0, 1, 0, 0},
                                                            {0, 0, 1, 0},
                                                            {0, 0, 0, 1}}};
  auto m = BisgConfusionModel::Create(rows, 0.5);
  ASSERT_TRUE(m.ok());
  int aa = 0;
  for (int i = 0; i < 10000; ++i) aa += BisgEstimate(Race::kAfricanAmerican, *m) == Race::kAfricanAmerican;
  EXPECT_EQ(aa, 10000);
}

TEST(BisgTest, RejectsNonStochasticRows) {
  std::array<BisgConfusionModel::Row, kRaceGroups> rows = {{{0.7, 0.1, 0.1, 0.2},
                                                            {0, 1, 0, 0},
                                                            {0, 0, 1, 0},
                                                            {0, 0, 0, 1}}};
  EXPECT_FALSE(BisgConfusionModel::Create(rows).ok());
  rows[0] = {1.2, -0.2, 0, 0};
  EXPECT_FALSE(BisgConfusionModel::Create(rows).ok());
  rows[0] = {1, 0, 0, 0};
  EXPECT_FALSE(BisgConfusionModel::Create(rows, 0.0).ok());
}

std::vector<User> MakeUsers(int n_black, int n_white) {
  std::vector<User> users;
  for (int i = 0; i < n_black + n_white; ++i) {
    User u;
    u.id = i;
    u.gender = i % 2 ? Gender::kFemale : Gender::kMale;
    u.true_race = i < n_black ? Race::kAfricanAmerican : Race::kWhite;
    u.estimated_race = u.true_race;
    u.activity_weight = 1.0;
    users.push_back(u);
  }
  return users;
}

TEST(MatchCustomAudienceTest, FullRateKeepsEveryone) {
  std::vector<User> users = MakeUsers(50, 50);
  Rng rng(1);
  auto m = MatchCustomAudience(users, MatchRates::All(1.0), rng);
  ASSERT_TRUE(m.ok());
  EXPECT_EQ(m->matched.size(), users.size());
  EXPECT_EQ(m->MatchedIds(), m->requested);
  EXPECT_EQ(m->reported_size_range, (SizeRange{0, 1000}));
}

TEST(MatchCustomAudienceTest, GroupRatesSkewComposition) {
  std::vector<User> users = MakeUsers(10000, 10000);
  // 0.43 and 0.57 scaled so the larger rate is a valid probability.
  const double s = 1.0 / (2 * 0.57);
  MatchRates rates;
  rates.by_race[Race::kAfricanAmerican] = 0.43 * 2 * s;
  rates.by_race[Race::kWhite] = 0.57 * 2 * s;
  Rng rng(8);
  auto m = MatchCustomAudience(users, rates, rng);
  ASSERT_TRUE(m.ok());
  double black = 0;
  for (const User& u : m->matched) black += u.true_race == Race::kAfricanAmerican;
  EXPECT_NEAR(black / m->matched.size(), 0.43, 0.02);
}

TEST(MatchCustomAudienceTest, HalfRateSizeBand) {
  std::vector<User> users = MakeUsers(5000, 5000);
  Rng rng(21);
  auto m = MatchCustomAudience(users, MatchRates::All(0.5), rng);
  ASSERT_TRUE(m.ok());
  EXPECT_GE(m->matched.size(), 4700u);
  EXPECT_LE(m->matched.size(), 5300u);
  const SizeRange r = m->reported_size_range;
  EXPECT_LE(r.lo, static_cast<int64_t>(m->matched.size()));
  EXPECT_GE(r.hi, static_cast<int64_t>(m->matched.size()));
  EXPECT_DOUBLE_EQ(r.Midpoint(), 0.5 * (r.lo + r.hi));
}

TEST(MatchCustomAudienceTest, BinomialMeanOver100Trials) {
  std::vector<User> users = MakeUsers(500, 500);
  const double r = 0.3;
  double sum = 0;
  for (int t = 0; t < 100; ++t) {
    Rng rng(DeriveSeed(5, {static_cast<uint64_t>(t)}));
    sum += MatchCustomAudience(users, MatchRates::All(r), rng)->matched.size();
  }
  const double sd_of_mean = std::sqrt(1000 * r * (1 - r) / 100);
  EXPECT_NEAR(sum / 100, 1000 * r, 4 * sd_of_mean);
}

TEST(MatchCustomAudienceTest, MissingRateIsError) {
  std::vector<User> users = MakeUsers(2, 2);
  MatchRates rates;
  rates.by_race[Race::kWhite] = 1.0;
  Rng rng(1);
  EXPECT_FALSE(MatchCustomAudience(users, rates, rng).ok());
}

TEST(SizeBucketTest, Boundaries) {
  EXPECT_EQ(SizeBucket(0), (SizeRange{0, 1000}));
  EXPECT_EQ(SizeBucket(999), (SizeRange{0, 1000}));
  EXPECT_EQ(SizeBucket(1000), (SizeRange{1000, 5000}));
  EXPECT_EQ(SizeBucket(5000), (SizeRange{5000, 10000}));
  EXPECT_EQ(SizeBucket(10000), (SizeRange{10000, 20000}));
  EXPECT_EQ(SizeBucket(34567), (SizeRange{30000, 40000}));
}

std::vector<BalanceTarget> GenderBalance() {
  return {{{Gender::kMale, std::nullopt}, 0.5}, {{Gender::kFemale, std::nullopt}, 0.5}};
}

TEST(PartitionAudienceTest, SixUsersThreePartitions) {
  std::vector<User> users = MakeUsers(3, 3);
  auto parts = PartitionAudience(users, 3, GenderBalance(), 0, 4);
  ASSERT_TRUE(parts.ok()) << parts.status();
  ASSERT_EQ(parts->size(), 3u);
  for (const auto& p : *parts) {
    ASSERT_EQ(p.size(), 2u);
    EXPECT_NE(p[0].gender, p[1].gender);
  }
}

TEST(PartitionAudienceTest, DisjointAndDeterministicOverSeeds) {
  auto pop = GeneratePopulation(FourCellSpec(120000), 3);
  ASSERT_TRUE(pop.ok());
  std::vector<BalanceTarget> balance;
  for (Gender g : {Gender::kMale, Gender::kFemale}) {
    for (Race r : {Race::kAfricanAmerican, Race::kWhite}) balance.push_back({{g, r}, 0.25});
  }
  for (uint64_t seed : {1u, 2u, 3u}) {
    auto parts = PartitionAudience(*pop, 3, balance, 30000, seed);
    ASSERT_TRUE(parts.ok());
    std::set<int64_t> seen;
    for (const auto& p : *parts) {
      ASSERT_EQ(p.size(), 30000u);
      for (const auto& [cell, n] : CellCounts(p)) EXPECT_EQ(n, 7500);
      for (const User& u : p) EXPECT_TRUE(seen.insert(u.id).second);
    }
    auto again = PartitionAudience(*pop, 3, balance, 30000, seed);
    for (int i = 0; i < 3; ++i) {
      std::vector<int64_t> a, b;
      for (const User& u : (*parts)[i]) a.push_back(u.id);
      for (const User& u : (*again)[i]) b.push_back(u.id);
      EXPECT_EQ(a, b);
    }
  }
}

TEST(PartitionAudienceTest, InsufficientUsers) {
  std::vector<User> users = MakeUsers(3, 3);
  EXPECT_FALSE(PartitionAudience(users, 4, GenderBalance(), 2, 1).ok());
}

TEST(ApportionTest, LargestRemainder) {
  std::vector<double> w = {1, 1, 1};
  EXPECT_EQ(Apportion(10, w), (std::vector<int64_t>{4, 3, 3}));
  std::vector<double> q = {0.25, 0.25, 0.25, 0.25};
  EXPECT_EQ(Apportion(30000, q), (std::vector<int64_t>{7500, 7500, 7500, 7500}));
}

}  // namespace
}  // namespace adsim
