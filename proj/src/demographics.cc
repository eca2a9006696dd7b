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

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "absl/strings/ascii.h"
#include "absl/strings/str_cat.h"
#include "absl/strings/str_format.h"

namespace adsim {

namespace {

constexpr double kProportionTolerance = 1e-9;

constexpr std::array<Race, kRaceGroups> kRaces = {
    Race::kAfricanAmerican, Race::kHispanic, Race::kWhite, Race::kOther};

bool ValidLogNormal(const LogNormalParams& p) {
  return std::isfinite(p.mu) && std::isfinite(p.sigma) && p.sigma >= 0.0;
}

}  // namespace

std::optional<int> GroupIndex(Gender gender) {
  switch (gender) {
    case Gender::kMale:
      return 0;
    case Gender::kFemale:
      return 1;
    case Gender::kUnknown:
      return std::nullopt;
  }
  return std::nullopt;
}

std::optional<int> GroupIndex(Race race) {
  if (race == Race::kUnknown) return std::nullopt;
  return static_cast<int>(race);
}

absl::string_view Label(Gender gender) {
  switch (gender) {
    case Gender::kMale:
      return "M";
    case Gender::kFemale:
      return "F";
    case Gender::kUnknown:
      return "U";
  }
  return "U";
}

absl::string_view Label(Race race) {
  switch (race) {
    case Race::kAfricanAmerican:
      return "AA";
    case Race::kHispanic:
      return "H";
    case Race::kWhite:
      return "W";
    case Race::kOther:
      return "O";
    case Race::kUnknown:
      return "U";
  }
  return "U";
}

absl::string_view Label(Attribute attribute) {
  return attribute == Attribute::kGender ? "gender" : "race";
}

absl::string_view GroupLabel(Attribute attribute, int group) {
  if (attribute == Attribute::kGender) return Label(group == 0 ? Gender::kMale : Gender::kFemale);
  return Label(kRaces[group]);
}

absl::StatusOr<Gender> ParseGender(absl::string_view text) {
  const std::string t = absl::AsciiStrToLower(text);
  if (t == "m" || t == "male") return Gender::kMale;
  if (t == "f" || t == "female") return Gender::kFemale;
  if (t == "u" || t == "unknown") return Gender::kUnknown;
  return absl::InvalidArgumentError(absl::StrCat("unknown gender '", text, "'"));
}

absl::StatusOr<Race> ParseRace(absl::string_view text) {
  const std::string t = absl::AsciiStrToLower(text);
  if (t == "aa" || t == "b" || t == "black" || t == "african_american") {
    return Race::kAfricanAmerican;
  }
  if (t == "h" || t == "hispanic") return Race::kHispanic;
  if (t == "w" || t == "white") return Race::kWhite;
  if (t == "o" || t == "other") return Race::kOther;
  if (t == "u" || t == "unknown") return Race::kUnknown;
  return absl::InvalidArgumentError(absl::StrCat("unknown race '", text, "'"));
}

absl::StatusOr<Attribute> ParseAttribute(absl::string_view text) {
  const std::string t = absl::AsciiStrToLower(text);
  if (t == "gender") return Attribute::kGender;
  if (t == "race") return Attribute::kRace;
  return absl::InvalidArgumentError(absl::StrCat("unknown attribute '", text, "'"));
}

std::string CellLabel(const Cell& cell) {
  return absl::StrCat(Label(cell.race), "-", Label(cell.gender));
}

std::optional<int> PlatformGroup(const User& user, Attribute attribute) {
  return attribute == Attribute::kGender ? GroupIndex(user.gender)
                                         : GroupIndex(user.estimated_race);
}

std::optional<int> TrueGroup(const User& user, Attribute attribute) {
  return attribute == Attribute::kGender ? GroupIndex(user.gender)
                                         : GroupIndex(user.true_race);
}

absl::StatusOr<BisgConfusionModel> BisgConfusionModel::Create(
    const std::array<Row, kRaceGroups>& rows, double threshold) {
  if (!(threshold > 0.0 && threshold <= 1.0)) {
    return absl::InvalidArgumentError("bisg threshold must lie in (0, 1]");
  }
  for (int r = 0; r < kRaceGroups; ++r) {
    double sum = 0.0;
    for (double p : rows[r]) {
      if (!(p >= 0.0 && p <= 1.0)) {
        return absl::InvalidArgumentError(
            absl::StrCat("bisg row ", Label(kRaces[r]), " has an entry outside [0, 1]"));
      }
      sum += p;
    }
    if (std::abs(sum - 1.0) > kProportionTolerance) {
      return absl::InvalidArgumentError(
          absl::StrFormat("bisg row %s sums to %.12g, not 1", Label(kRaces[r]), sum));
    }
  }
  return BisgConfusionModel(rows, threshold);
}

BisgConfusionModel BisgConfusionModel::Identity(double threshold) {
  std::array<Row, kRaceGroups> rows{};
  for (int r = 0; r < kRaceGroups; ++r) rows[r][r] = 1.0;
  return BisgConfusionModel(rows, threshold);
}

const BisgConfusionModel::Row& BisgConfusionModel::row(Race true_race) const {
  return rows_[static_cast<int>(true_race)];
}

Race BisgConfusionModel::Estimate(Race true_race) const {
  const Row& p = row(true_race);
  // First maximal entry wins ties, which keeps the mapping deterministic.
  const int best = static_cast<int>(std::max_element(p.begin(), p.end()) - p.begin());
  return p[best] >= threshold_ ? kRaces[best] : Race::kUnknown;
}

Race BisgEstimate(Race true_race, const BisgConfusionModel& model) {
  return model.Estimate(true_race);
}

absl::Status ValidatePopulationSpec(const PopulationSpec& spec) {
  if (spec.n < 1) return absl::InvalidArgumentError("population size must be at least 1");
  if (spec.cells.empty()) return absl::InvalidArgumentError("population has no cells");
  double sum = 0.0;
  std::set<Cell> seen;
  for (const CellProportion& c : spec.cells) {
    if (!(c.proportion >= 0.0) || !std::isfinite(c.proportion)) {
      return absl::InvalidArgumentError(
          absl::StrCat("cell ", CellLabel(c.cell), " has an invalid proportion"));
    }
    if (c.cell.race == Race::kUnknown) {
      return absl::InvalidArgumentError("ground-truth race cannot be unknown");
    }
    if (!seen.insert(c.cell).second) {
      return absl::InvalidArgumentError(absl::StrCat("duplicate cell ", CellLabel(c.cell)));
    }
    sum += c.proportion;
  }
  if (std::abs(sum - 1.0) > kProportionTolerance) {
    return absl::InvalidArgumentError(
        absl::StrFormat("cell proportions sum to %.12g, not 1", sum));
  }
  if (!ValidLogNormal(spec.activity_weight) || !ValidLogNormal(spec.session_rate)) {
    return absl::InvalidArgumentError("invalid lognormal parameters");
  }
  const DmaLayout& dma = spec.dma;
  if (dma.proxy) {
    if (dma.race_dmas.empty()) {
      if (dma.dmas_per_race < 1) {
        return absl::InvalidArgumentError("dma layout: dmas_per_race must be at least 1");
      }
    } else {
      std::set<int> used;
      for (const CellProportion& c : spec.cells) {
        auto it = dma.race_dmas.find(c.cell.race);
        if (c.proportion > 0 && (it == dma.race_dmas.end() || it->second.empty())) {
          return absl::InvalidArgumentError(
              absl::StrCat("dma layout: no DMA assigned to race ", Label(c.cell.race)));
        }
      }
      for (const auto& [race, dmas] : dma.race_dmas) {
        for (int d : dmas) {
          if (!used.insert(d).second) {
            return absl::InvalidArgumentError(
                absl::StrCat("dma layout: DMA ", d, " assigned to more than one race"));
          }
        }
      }
    }
  } else if (dma.dma_count < 1) {
    return absl::InvalidArgumentError("dma layout: dma_count must be at least 1");
  }
  return absl::OkStatus();
}

std::vector<int64_t> Apportion(int64_t total, std::span<const double> weights) {
  std::vector<int64_t> counts(weights.size(), 0);
  if (weights.empty()) return counts;
  const double weight_sum = std::accumulate(weights.begin(), weights.end(), 0.0);
  std::vector<std::pair<double, size_t>> remainders;
  int64_t assigned = 0;
  for (size_t i = 0; i < weights.size(); ++i) {
    const double exact = static_cast<double>(total) * weights[i] / weight_sum;
    // Nudge before flooring so 0.25 * 30000 stays 7500 despite rounding.
    counts[i] = static_cast<int64_t>(std::floor(exact + 1e-9));
    assigned += counts[i];
    remainders.emplace_back(exact - static_cast<double>(counts[i]), i);
  }
  std::stable_sort(remainders.begin(), remainders.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (size_t j = 0; assigned < total && j < remainders.size(); ++j, ++assigned) {
    ++counts[remainders[j].second];
  }
  return counts;
}

namespace {

int AssignDma(const DmaLayout& layout, Race race, Rng& rng) {
  if (!layout.proxy) return static_cast<int>(rng.UniformInt(layout.dma_count));
  if (!layout.race_dmas.empty()) {
    const std::vector<int>& dmas = layout.race_dmas.at(race);
    return dmas[rng.UniformInt(dmas.size())];
  }
  return static_cast<int>(race) * layout.dmas_per_race +
         static_cast<int>(rng.UniformInt(layout.dmas_per_race));
}

}  // namespace

absl::StatusOr<std::vector<User>> GeneratePopulation(const PopulationSpec& spec,
                                                     uint64_t seed) {
  if (absl::Status s = ValidatePopulationSpec(spec); !s.ok()) return s;
  Rng rng(seed);
  std::vector<double> weights;
  for (const CellProportion& c : spec.cells) weights.push_back(c.proportion);

  std::vector<size_t> cell_of_user;
  cell_of_user.reserve(spec.n);
  if (spec.mode == PopulationMode::kEnumeration) {
    const std::vector<int64_t> counts = Apportion(spec.n, weights);
    for (size_t c = 0; c < counts.size(); ++c) cell_of_user.insert(cell_of_user.end(), counts[c], c);
  } else {
    std::vector<double> cdf(weights.size());
    std::partial_sum(weights.begin(), weights.end(), cdf.begin());
    for (int64_t i = 0; i < spec.n; ++i) {
      const double u = rng.Uniform01() * cdf.back();
      size_t c = static_cast<size_t>(std::upper_bound(cdf.begin(), cdf.end(), u) - cdf.begin());
      cell_of_user.push_back(std::min(c, cdf.size() - 1));
    }
  }

  std::vector<User> users;
  users.reserve(spec.n);
  for (int64_t i = 0; i < spec.n; ++i) {
    const Cell& cell = spec.cells[cell_of_user[i]].cell;
    User u;
    u.id = spec.first_id + i;
    u.gender = cell.gender;
    u.true_race = cell.race;
    u.estimated_race = spec.bisg.Estimate(cell.race);
    u.activity_weight = rng.LogNormal(spec.activity_weight.mu, spec.activity_weight.sigma);
    u.session_rate = rng.LogNormal(spec.session_rate.mu, spec.session_rate.sigma);
    u.dma = AssignDma(spec.dma, cell.race, rng);
    users.push_back(u);
  }
  return users;
}

absl::StatusOr<std::map<int, Race>> DmaRaceMap(const PopulationSpec& spec) {
  if (!spec.dma.proxy) {
    return absl::FailedPreconditionError("DMA-to-race map requires a proxy layout");
  }
  std::map<int, Race> map;
  if (!spec.dma.race_dmas.empty()) {
    for (const auto& [race, dmas] : spec.dma.race_dmas) {
      for (int d : dmas) map[d] = race;
    }
    return map;
  }
  for (Race race : kRaces) {
    for (int j = 0; j < spec.dma.dmas_per_race; ++j) {
      map[static_cast<int>(race) * spec.dma.dmas_per_race + j] = race;
    }
  }
  return map;
}

std::optional<double> MatchRates::RateFor(const User& user) const {
  if (auto it = by_cell.find(user.TrueCell()); it != by_cell.end()) return it->second;
  if (auto it = by_race.find(user.true_race); it != by_race.end()) return it->second;
  if (auto it = by_gender.find(user.gender); it != by_gender.end()) return it->second;
  return default_rate;
}

SizeRange SizeBucket(int64_t size) {
  if (size < 1000) return {0, 1000};
  if (size < 5000) return {1000, 5000};
  if (size < 10000) return {5000, 10000};
  const int64_t lo = size / 10000 * 10000;
  return {lo, lo + 10000};
}

std::vector<int64_t> MatchedAudience::MatchedIds() const {
  std::vector<int64_t> ids;
  ids.reserve(matched.size());
  for (const User& u : matched) ids.push_back(u.id);
  return ids;
}

absl::StatusOr<MatchedAudience> MatchCustomAudience(std::span<const User> requested,
                                                    const MatchRates& rates, Rng& rng) {
  MatchedAudience audience;
  audience.match_rates = rates;
  audience.requested.reserve(requested.size());
  for (const User& u : requested) {
    const std::optional<double> rate = rates.RateFor(u);
    if (!rate.has_value()) {
      return absl::InvalidArgumentError(
          absl::StrCat("no match rate for group ", CellLabel(u.TrueCell())));
    }
    if (!(*rate >= 0.0 && *rate <= 1.0)) {
      return absl::InvalidArgumentError(
          absl::StrCat("match rate for ", CellLabel(u.TrueCell()), " outside [0, 1]"));
    }
    audience.requested.push_back(u.id);
    if (rng.Bernoulli(*rate)) audience.matched.push_back(u);
  }
  audience.reported_size_range = SizeBucket(static_cast<int64_t>(audience.matched.size()));
  return audience;
}

MatchedAudience FullyMatched(std::span<const User> users) {
  MatchedAudience audience;
  audience.match_rates = MatchRates::All(1.0);
  audience.matched.assign(users.begin(), users.end());
  for (const User& u : users) audience.requested.push_back(u.id);
  audience.reported_size_range = SizeBucket(static_cast<int64_t>(users.size()));
  return audience;
}

bool CellKey::Matches(const User& user) const {
  if (gender.has_value() && *gender != user.gender) return false;
  if (race.has_value() && *race != user.true_race) return false;
  return true;
}

absl::StatusOr<std::vector<std::vector<User>>> PartitionAudience(
    std::span<const User> population, int k, std::span<const BalanceTarget> balance,
    int64_t partition_size, uint64_t seed) {
  if (k < 1) return absl::InvalidArgumentError("partition count must be at least 1");
  if (balance.empty()) return absl::InvalidArgumentError("balance target is empty");
  std::vector<double> weights;
  double sum = 0.0;
  for (const BalanceTarget& b : balance) {
    if (!(b.proportion >= 0.0)) return absl::InvalidArgumentError("negative balance proportion");
    weights.push_back(b.proportion);
    sum += b.proportion;
  }
  if (std::abs(sum - 1.0) > kProportionTolerance) {
    return absl::InvalidArgumentError("balance proportions must sum to 1");
  }

  // Users are bucketed by the first key they match.
  std::vector<std::vector<User>> pools(balance.size());
  for (const User& u : population) {
    for (size_t i = 0; i < balance.size(); ++i) {
      if (balance[i].key.Matches(u)) {
        pools[i].push_back(u);
        break;
      }
    }
  }

  if (partition_size <= 0) {
    int64_t best = -1;
    for (size_t i = 0; i < balance.size(); ++i) {
      if (weights[i] <= 0) continue;
      const int64_t per = static_cast<int64_t>(pools[i].size()) / k;
      const auto cap = static_cast<int64_t>(std::floor(static_cast<double>(per) / weights[i] + 1e-9));
      best = best < 0 ? cap : std::min(best, cap);
    }
    partition_size = best;
    // Apportionment can round one key up; shrink until every key fits.
    while (partition_size > 0) {
      const std::vector<int64_t> counts = Apportion(partition_size, weights);
      bool fits = true;
      for (size_t i = 0; i < counts.size(); ++i) {
        fits = fits && counts[i] * k <= static_cast<int64_t>(pools[i].size());
      }
      if (fits) break;
      --partition_size;
    }
    if (partition_size <= 0) return absl::FailedPreconditionError("no users for partitions");
  }

  const std::vector<int64_t> counts = Apportion(partition_size, weights);
  for (size_t i = 0; i < counts.size(); ++i) {
    if (counts[i] * k > static_cast<int64_t>(pools[i].size())) {
      return absl::FailedPreconditionError(absl::StrFormat(
          "balance key %d needs %d users for %d partitions but only %d are available",
          static_cast<int>(i), counts[i] * k, k, pools[i].size()));
    }
  }

  Rng rng(seed);
  std::vector<std::vector<User>> partitions(k);
  for (size_t i = 0; i < pools.size(); ++i) {
    rng.Shuffle(std::span<User>(pools[i]));
    for (int p = 0; p < k; ++p) {
      auto first = pools[i].begin() + p * counts[i];
      partitions[p].insert(partitions[p].end(), first, first + counts[i]);
    }
  }
  for (auto& part : partitions) {
    std::sort(part.begin(), part.end(), [](const User& a, const User& b) { return a.id < b.id; });
  }
  return partitions;
}

void WritePopulationCsv(std::ostream& out, std::span<const User> users) {
  out << "id,gender,true_race,estimated_race,activity_weight,session_rate,dma\n";
  for (const User& u : users) {
    out << absl::StrFormat("%d,%s,%s,%s,%.9g,%.9g,%d\n", u.id, Label(u.gender),
                           Label(u.true_race), Label(u.estimated_race), u.activity_weight,
                           u.session_rate, u.dma);
  }
}

}  // namespace adsim
