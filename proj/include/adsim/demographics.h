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

// Synthetic user populations: demographic ground truth, thresholded race
// estimates, activity weights, DMA placement and custom-audience matching.

#ifndef ADSIM_DEMOGRAPHICS_H_
#define ADSIM_DEMOGRAPHICS_H_

#include <array>
#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "absl/strings/string_view.h"
#include "adsim/random.h"

namespace adsim {

enum class Gender { kMale, kFemale, kUnknown };

// kUnknown is only ever produced by race estimation; ground truth always
// carries one of the four settlement groups.
enum class Race { kAfricanAmerican, kHispanic, kWhite, kOther, kUnknown };

enum class Attribute { kGender, kRace };

inline constexpr int kGenderGroups = 2;
inline constexpr int kRaceGroups = 4;

constexpr int GroupCount(Attribute attribute) {
  return attribute == Attribute::kGender ? kGenderGroups : kRaceGroups;
}

// Index of a value inside its settlement partition; nullopt for kUnknown.
std::optional<int> GroupIndex(Gender gender);
std::optional<int> GroupIndex(Race race);

// Short labels used in every CSV: M/F/U and AA/H/W/O/U.
absl::string_view Label(Gender gender);
absl::string_view Label(Race race);
absl::string_view Label(Attribute attribute);
absl::string_view GroupLabel(Attribute attribute, int group);

absl::StatusOr<Gender> ParseGender(absl::string_view text);
absl::StatusOr<Race> ParseRace(absl::string_view text);
absl::StatusOr<Attribute> ParseAttribute(absl::string_view text);

struct Cell {
  Gender gender = Gender::kUnknown;
  Race race = Race::kUnknown;

  friend auto operator<=>(const Cell&, const Cell&) = default;
};

std::string CellLabel(const Cell& cell);

struct User {
  int64_t id = 0;
  Gender gender = Gender::kUnknown;
  Race true_race = Race::kOther;
  Race estimated_race = Race::kUnknown;
  // Expected platform-wide impressions over the trailing 30 days.
  double activity_weight = 0.0;
  int dma = 0;
  // Expected auction opportunities per simulated hour.
  double session_rate = 0.0;

  Cell TrueCell() const { return {gender, true_race}; }
  Cell EstimatedCell() const { return {gender, estimated_race}; }
};

// Group of `user` under `attribute` as seen by the platform: self-reported
// gender, estimated race. nullopt when that value is unknown.
std::optional<int> PlatformGroup(const User& user, Attribute attribute);
// Same, but with ground-truth race (the auditor's view via location proxy).
std::optional<int> TrueGroup(const User& user, Attribute attribute);

// A row-stochastic matrix over the four race groups. Each user's estimate
// probability vector is the row of its true race; the estimate is the argmax
// if that probability reaches the threshold, otherwise kUnknown.
class BisgConfusionModel {
 public:
  using Row = std::array<double, kRaceGroups>;

  static absl::StatusOr<BisgConfusionModel> Create(
      const std::array<Row, kRaceGroups>& rows, double threshold = 0.5);
  static BisgConfusionModel Identity(double threshold = 0.5);

  Race Estimate(Race true_race) const;

  const Row& row(Race true_race) const;
  double threshold() const { return threshold_; }

 private:
  BisgConfusionModel(const std::array<Row, kRaceGroups>& rows, double threshold)
      : rows_(rows), threshold_(threshold) {}

  std::array<Row, kRaceGroups> rows_;
  double threshold_;
};

// Free-function form used throughout the tests.
Race BisgEstimate(Race true_race, const BisgConfusionModel& model);

struct LogNormalParams {
  double mu = 0.0;
  double sigma = 0.0;
};

// With proxy on, each race occupies its own disjoint set of DMAs, so a DMA
// breakdown of impressions reveals their racial breakdown.
struct DmaLayout {
  bool proxy = false;
  int dmas_per_race = 1;
  int dma_count = 1;  // non-proxy mode: users spread uniformly over these
  // Optional explicit proxy assignment; when empty, race r gets DMAs
  // [r * dmas_per_race, (r + 1) * dmas_per_race).
  std::map<Race, std::vector<int>> race_dmas;
};

enum class PopulationMode { kEnumeration, kSampling };

struct CellProportion {
  Cell cell;
  double proportion = 0.0;
};

struct PopulationSpec {
  int64_t n = 0;
  std::vector<CellProportion> cells;
  LogNormalParams activity_weight{4.6, 1.0};
  LogNormalParams session_rate{-1.6, 0.5};
  DmaLayout dma;
  PopulationMode mode = PopulationMode::kEnumeration;
  BisgConfusionModel bisg = BisgConfusionModel::Identity();
  int64_t first_id = 0;
};

absl::Status ValidatePopulationSpec(const PopulationSpec& spec);

// Exactly spec.n users with ids first_id, first_id + 1, ... In enumeration
// mode cell counts are the largest-remainder rounding of n * proportion;
// in sampling mode each user's cell is an independent categorical draw.
absl::StatusOr<std::vector<User>> GeneratePopulation(const PopulationSpec& spec,
                                                     uint64_t seed);

// DMA -> race for a proxy layout.
absl::StatusOr<std::map<int, Race>> DmaRaceMap(const PopulationSpec& spec);

// Match probability per user, looked up by most specific key first:
// exact cell, then race, then gender, then the default.
struct MatchRates {
  std::optional<double> default_rate;
  std::map<Race, double> by_race;
  std::map<Gender, double> by_gender;
  std::map<Cell, double> by_cell;

  static MatchRates All(double rate) {
    MatchRates rates;
    rates.default_rate = rate;
    return rates;
  }
  std::optional<double> RateFor(const User& user) const;
};

// Half-open size bucket [lo, hi) reported instead of the exact match count.
struct SizeRange {
  int64_t lo = 0;
  int64_t hi = 0;

  double Midpoint() const { return 0.5 * static_cast<double>(lo + hi); }
  friend bool operator==(const SizeRange&, const SizeRange&) = default;
};

// Buckets: [0,1k), [1k,5k), [5k,10k), then 10k wide.
SizeRange SizeBucket(int64_t size);

struct MatchedAudience {
  std::vector<int64_t> requested;
  std::vector<User> matched;
  SizeRange reported_size_range;
  MatchRates match_rates;

  std::vector<int64_t> MatchedIds() const;
};

absl::StatusOr<MatchedAudience> MatchCustomAudience(std::span<const User> requested,
                                                    const MatchRates& rates, Rng& rng);

// Audience with every requested user matched; used by tests and by split
// arms that inherit an already matched audience.
MatchedAudience FullyMatched(std::span<const User> users);

// Selects users by true gender and/or race; an empty field is a wildcard.
struct CellKey {
  std::optional<Gender> gender;
  std::optional<Race> race;

  bool Matches(const User& user) const;
};

struct BalanceTarget {
  CellKey key;
  double proportion = 0.0;
};

// k pairwise-disjoint partitions with identical per-key counts. When
// partition_size is 0 the largest feasible size is used.
absl::StatusOr<std::vector<std::vector<User>>> PartitionAudience(
    std::span<const User> population, int k, std::span<const BalanceTarget> balance,
    int64_t partition_size, uint64_t seed);

// Largest-remainder apportionment of `total` over `weights` (ties resolved
// by position). The result sums to `total` exactly.
std::vector<int64_t> Apportion(int64_t total, std::span<const double> weights);

// CSV: id,gender,true_race,estimated_race,activity_weight,session_rate,dma
void WritePopulationCsv(std::ostream& out, std::span<const User> users);

}  // namespace adsim

#endif  // ADSIM_DEMOGRAPHICS_H_
