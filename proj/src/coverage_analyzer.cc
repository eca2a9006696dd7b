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
#include <cmath>
#include <numeric>
#include <string>

#include "absl/strings/numbers.h"
#include "absl/strings/str_cat.h"
#include "absl/strings/str_format.h"
#include "absl/strings/str_split.h"
#include "absl/strings/strip.h"
#include "adsim/random.h"

namespace adsim {

namespace {

constexpr char kAdStatsHeader[] = "ad_id,spend_usd,impressions";

double TotalImpressions(std::span<const AdStat> ads) {
  double total = 0.0;
  for (const AdStat& a : ads) total += static_cast<double>(a.impressions);
  return total;
}

bool ParseSpend(absl::string_view text, double* out) {
  text = absl::StripAsciiWhitespace(text);
  // A leading '-' would be a negative number, not a range.
  const size_t dash = text.find('-', 1);
  if (dash != absl::string_view::npos) {
    double lo = 0.0, hi = 0.0;
    if (!absl::SimpleAtod(text.substr(0, dash), &lo) ||
        !absl::SimpleAtod(text.substr(dash + 1), &hi) || lo < 0 || hi < lo) {
      return false;
    }
    *out = 0.5 * (lo + hi);
    return true;
  }
  return absl::SimpleAtod(text, out) && *out >= 0 && std::isfinite(*out);
}

}  // namespace

absl::StatusOr<std::vector<AdStat>> GeneratePowerlawAds(const PowerlawParams& p, uint64_t seed) {
  if (p.n < 1) return absl::InvalidArgumentError("n must be at least 1");
  if (!(p.alpha > 1.0) || !std::isfinite(p.alpha)) {
    return absl::InvalidArgumentError("alpha must be > 1");
  }
  if (p.x_min < kAdStatFloor) return absl::InvalidArgumentError("x_min must be at least 300");
  if (p.x_max < p.x_min) return absl::InvalidArgumentError("x_max must be at least x_min");
  if (!(p.cost_per_impression_usd >= 0) || !(p.jitter_sigma >= 0)) {
    return absl::InvalidArgumentError("cost and jitter must be nonnegative");
  }
  Rng size_rng(DeriveSeed(seed, {1}));
  Rng spend_rng(DeriveSeed(seed, {2}));
  const double tail = 1.0 / (p.alpha - 1.0);
  std::vector<AdStat> ads;
  ads.reserve(p.n);
  for (int64_t i = 0; i < p.n; ++i) {
    const double x = std::floor(static_cast<double>(p.x_min) *
                                std::pow(size_rng.Uniform01(), -tail));
    AdStat a;
    a.id = absl::StrCat("ad", i);
    a.impressions = x >= static_cast<double>(p.x_max) ? p.x_max : static_cast<int64_t>(x);
    a.spend_usd = static_cast<double>(a.impressions) * p.cost_per_impression_usd *
                  spend_rng.LogNormal(0.0, p.jitter_sigma);
    ads.push_back(std::move(a));
  }
  return ads;
}

absl::StatusOr<IngestResult> IngestAdStatsCsv(std::istream& in, double max_malformed_fraction) {
  std::string line;
  if (!std::getline(in, line)) return absl::InvalidArgumentError("ad stats file is empty");
  if (absl::StripAsciiWhitespace(line) != kAdStatsHeader) {
    return absl::InvalidArgumentError(absl::StrCat("unexpected ad stats header: '", line, "'"));
  }
  IngestResult result;
  int line_no = 1;
  int64_t data_rows = 0;
  while (std::getline(in, line)) {
    ++line_no;
    absl::string_view text = absl::StripAsciiWhitespace(line);
    if (text.empty()) continue;
    ++data_rows;
    std::vector<absl::string_view> f = absl::StrSplit(text, ',');
    if (f.size() != 3) {
      result.malformed.push_back({line_no, absl::StrFormat("expected 3 fields, found %d", f.size())});
      continue;
    }
    AdStat a;
    a.id = std::string(absl::StripAsciiWhitespace(f[0]));
    if (a.id.empty()) {
      result.malformed.push_back({line_no, "empty ad_id"});
      continue;
    }
    if (!ParseSpend(f[1], &a.spend_usd)) {
      result.malformed.push_back({line_no, absl::StrCat("bad spend '", f[1], "'")});
      continue;
    }
    if (!absl::SimpleAtoi(absl::StripAsciiWhitespace(f[2]), &a.impressions) || a.impressions < 0) {
      result.malformed.push_back({line_no, absl::StrCat("bad impressions '", f[2], "'")});
      continue;
    }
    if (a.impressions < kAdStatFloor) {
      ++result.dropped_below_floor;
      continue;
    }
    result.ads.push_back(std::move(a));
  }
  if (data_rows > 0 && static_cast<double>(result.malformed.size()) >
                           max_malformed_fraction * static_cast<double>(data_rows)) {
    return absl::InvalidArgumentError(absl::StrFormat(
        "%d of %d rows are malformed (first at line %d: %s)", result.malformed.size(), data_rows,
        result.malformed.front().line, result.malformed.front().message));
  }
  if (result.ads.empty()) {
    return absl::FailedPreconditionError("no ads with at least 300 impressions");
  }
  return result;
}

void WriteAdStatsCsv(std::ostream& out, std::span<const AdStat> ads) {
  out << kAdStatsHeader << "\n";
  for (const AdStat& a : ads) {
    out << absl::StrFormat("%s,%.2f,%d\n", a.id, a.spend_usd, a.impressions);
  }
}

absl::string_view Label(ExclusionStrategy strategy) {
  return strategy == ExclusionStrategy::kRandom ? "random" : "largest_first";
}

int64_t ExcludedAdCount(int64_t n, double coverage_target) {
  const double scaled = coverage_target * 1000.0;
  const double permille = std::round(scaled);
  if (std::abs(scaled - permille) < 1e-6) {
    return (1000 - static_cast<int64_t>(permille)) * n / 1000;
  }
  return static_cast<int64_t>(std::floor((1.0 - coverage_target) * static_cast<double>(n)));
}

absl::StatusOr<ExclusionReport> ExclusionImpact(std::span<const AdStat> ads,
                                                double coverage_target,
                                                ExclusionStrategy strategy, uint64_t seed,
                                                int trials) {
  if (ads.empty()) return absl::InvalidArgumentError("no ads");
  if (!(coverage_target > 0.0 && coverage_target <= 1.0)) {
    return absl::InvalidArgumentError("coverage target must be in (0, 1]");
  }
  if (strategy == ExclusionStrategy::kRandom && trials < 1) {
    return absl::InvalidArgumentError("trials must be at least 1");
  }
  const int64_t n = static_cast<int64_t>(ads.size());
  const double total = TotalImpressions(ads);
  ExclusionReport r;
  r.strategy = strategy;
  r.total_ads = n;
  r.excluded_ads = ExcludedAdCount(n, coverage_target);
  r.excluded_ad_fraction = static_cast<double>(r.excluded_ads) / static_cast<double>(n);
  if (r.excluded_ads == 0 || total <= 0) {
    r.trials = strategy == ExclusionStrategy::kRandom ? trials : 0;
    return r;
  }
  std::vector<int64_t> sizes;
  sizes.reserve(n);
  for (const AdStat& a : ads) sizes.push_back(a.impressions);

  if (strategy == ExclusionStrategy::kLargestFirst) {
    std::nth_element(sizes.begin(), sizes.begin() + (r.excluded_ads - 1), sizes.end(),
                     std::greater<>());
    double excluded = 0.0;
    for (int64_t i = 0; i < r.excluded_ads; ++i) excluded += static_cast<double>(sizes[i]);
    r.impression_fraction = excluded / total;
    r.ci_lo = r.ci_hi = r.impression_fraction;
    return r;
  }

  Rng rng(seed);
  r.trials = trials;
  // Integer sums keep the mean exact; uniform ads then give exactly k / n.
  __int128 sum = 0;
  double sum_sq = 0.0;
  for (int t = 0; t < trials; ++t) {
    int64_t excluded = 0;
    for (int64_t i = 0; i < r.excluded_ads; ++i) {
      const uint64_t j = i + rng.UniformInt(static_cast<uint64_t>(n - i));
      std::swap(sizes[i], sizes[j]);
      excluded += sizes[i];
    }
    sum += excluded;
    const double f = static_cast<double>(excluded) / total;
    sum_sq += f * f;
  }
  const double mean = static_cast<double>(sum) / (static_cast<double>(trials) * total);
  const double var = trials > 1 ? std::max(0.0, (sum_sq - trials * mean * mean) / (trials - 1)) : 0.0;
  const double half = 1.96 * std::sqrt(var / trials);
  r.impression_fraction = mean;
  r.ci_lo = std::max(0.0, mean - half);
  r.ci_hi = std::min(1.0, mean + half);
  return r;
}

absl::StatusOr<std::vector<StrategyRow>> CompareStrategies(std::span<const AdStat> ads,
                                                           const CoverageTargets& targets,
                                                           uint64_t seed, int trials) {
  if (ads.empty()) return absl::InvalidArgumentError("no ads");
  std::vector<StrategyRow> rows;
  for (size_t i = 0; i < targets.size(); ++i) {
    const CoverageCell& cell = targets[i];
    std::vector<AdStat> qualifying;
    for (const AdStat& a : ads) {
      if (a.impressions >= cell.floor) qualifying.push_back(a);
    }
    StrategyRow row;
    row.target_label = cell.label();
    row.attribute = cell.attribute;
    row.threshold = cell.threshold;
    row.floor = cell.floor;
    row.coverage_target = cell.target();
    row.qualifying_ads = static_cast<int64_t>(qualifying.size());
    if (qualifying.empty()) {
      return absl::FailedPreconditionError(
          absl::StrFormat("no ads with at least %d impressions for %s", cell.floor, row.target_label));
    }
    absl::StatusOr<ExclusionReport> largest =
        ExclusionImpact(qualifying, row.coverage_target, ExclusionStrategy::kLargestFirst);
    if (!largest.ok()) return largest.status();
    absl::StatusOr<ExclusionReport> random = ExclusionImpact(
        qualifying, row.coverage_target, ExclusionStrategy::kRandom, DeriveSeed(seed, {i}), trials);
    if (!random.ok()) return random.status();
    row.largest = *largest;
    row.random = *random;
    if (row.random.impression_fraction > 0) {
      row.ratio = row.largest.impression_fraction / row.random.impression_fraction;
    } else if (row.largest.impression_fraction > 0) {
      row.ratio = INFINITY;
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

void WriteStrategiesCsv(std::ostream& out, std::span<const StrategyRow> rows) {
  out << "target_label,threshold,floor,coverage_target,largest_fraction,random_mean,"
         "random_ci_lo,random_ci_hi,ratio\n";
  for (const StrategyRow& r : rows) {
    out << absl::StrFormat("%s,%.2f,%d,%.3f,%.9f,%.9f,%.9f,%.9f,%.6f\n", r.target_label,
                           r.threshold, r.floor, r.coverage_target, r.largest.impression_fraction,
                           r.random.impression_fraction, r.random.ci_lo, r.random.ci_hi, r.ratio);
  }
}

}  // namespace adsim
