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

#include "adsim/compliance.h"

#include <algorithm>
#include <cmath>
#include <iterator>
#include <numeric>
#include <sstream>
#include <string>

#include "absl/strings/numbers.h"
#include "absl/strings/str_cat.h"
#include "absl/strings/str_format.h"
#include "absl/strings/str_split.h"
#include "absl/strings/strip.h"

namespace adsim {

namespace {

constexpr int kColumns = 15;

GroupVector CountsOf(std::span<const Impression> imps, Attribute attribute) {
  GroupVector counts(attribute);
  for (const Impression& imp : imps) {
    if (auto g = ImpressionGroup(imp, attribute)) counts[*g] += 1.0;
  }
  return counts;
}

// One noisy integer release of a count vector.
GroupVector Release(const GroupVector& counts, double epsilon, bool noise, Rng& rng) {
  GroupVector out = counts;
  if (!noise) return out;
  for (int g = 0; g < out.size(); ++g) {
    out[g] = std::max(0.0, std::round(counts[g] + rng.Laplace(1.0 / epsilon)));
  }
  return out;
}

template <size_t N>
GroupVector ToVector(Attribute attribute, const std::array<int64_t, N>& a) {
  GroupVector v(attribute);
  for (int g = 0; g < v.size(); ++g) v[g] = static_cast<double>(a[g]);
  return v;
}

std::optional<double> VarianceOf(const GroupVector& pot, const GroupVector& act) {
  if (!(pot.Sum() > 0) || !(act.Sum() > 0)) return std::nullopt;
  return HalfL1(pot.Normalized(), act.Normalized());
}

std::string FormatVariance(const std::optional<double>& v) {
  return v ? absl::StrFormat("%.17g", *v) : std::string();
}

}  // namespace

absl::StatusOr<std::optional<ComplianceRow>> BuildComplianceRow(const ComplianceInput& input,
                                                                double epsilon_report,
                                                                bool noise, Rng& rng) {
  if (!(epsilon_report > 0)) return absl::InvalidArgumentError("epsilon_report must be > 0");
  if (static_cast<int64_t>(input.impressions.size()) < kComplianceImpressionFloor) {
    return std::optional<ComplianceRow>();
  }
  ComplianceRow row;
  row.hashed_ad_id = HashedAdId(input.campaign_id);
  for (int g = 0; g < kGenderGroups; ++g) {
    row.pot_gender[g] = std::llround(input.eligible_gender.weight_sums[g]);
  }
  for (int g = 0; g < kRaceGroups; ++g) {
    row.pot_race[g] = std::llround(input.eligible_race.weight_sums[g]);
  }
  const GroupVector gender = CountsOf(input.impressions, Attribute::kGender);
  const GroupVector race = CountsOf(input.impressions, Attribute::kRace);
  const GroupVector act_gender = Release(gender, epsilon_report, noise, rng);
  const GroupVector act_race = Release(race, epsilon_report, noise, rng);
  for (int g = 0; g < kGenderGroups; ++g) row.act_gender[g] = std::llround(act_gender[g]);
  for (int g = 0; g < kRaceGroups; ++g) row.act_race[g] = std::llround(act_race[g]);
  // The platform's own measurement is released separately from the columns.
  const GroupVector measured_gender = Release(gender, epsilon_report, noise, rng);
  const GroupVector measured_race = Release(race, epsilon_report, noise, rng);
  if (gender.Sum() > 0) {
    row.var_gender = VarianceOf(ToVector(Attribute::kGender, row.pot_gender), measured_gender);
  }
  if (race.Sum() > 0) {
    row.var_race = VarianceOf(ToVector(Attribute::kRace, row.pot_race), measured_race);
  }
  return std::optional<ComplianceRow>(row);
}

void WriteComplianceCsv(std::ostream& out, std::span<const ComplianceRow> rows) {
  out << kComplianceHeader << "\n";
  for (const ComplianceRow& r : rows) {
    out << r.hashed_ad_id;
    for (int64_t v : r.pot_gender) out << ',' << v;
    for (int64_t v : r.pot_race) out << ',' << v;
    for (int64_t v : r.act_gender) out << ',' << v;
    for (int64_t v : r.act_race) out << ',' << v;
    out << ',' << FormatVariance(r.var_gender) << ',' << FormatVariance(r.var_race) << "\n";
  }
}

absl::StatusOr<std::vector<ComplianceRow>> ExportComplianceReport(
    std::span<const ComplianceInput> inputs, double epsilon_report, bool noise, Rng& rng,
    std::ostream& out) {
  std::vector<ComplianceRow> rows;
  for (const ComplianceInput& in : inputs) {
    absl::StatusOr<std::optional<ComplianceRow>> row =
        BuildComplianceRow(in, epsilon_report, noise, rng);
    if (!row.ok()) return row.status();
    if (row->has_value()) rows.push_back(**row);
  }
  WriteComplianceCsv(out, rows);
  if (!out) return absl::DataLossError("failed writing compliance report");
  return rows;
}

std::optional<double> RecomputedVariance(const ComplianceRow& row, Attribute attribute) {
  if (attribute == Attribute::kGender) {
    return VarianceOf(ToVector(Attribute::kGender, row.pot_gender),
                      ToVector(Attribute::kGender, row.act_gender));
  }
  return VarianceOf(ToVector(Attribute::kRace, row.pot_race),
                    ToVector(Attribute::kRace, row.act_race));
}

double NoiseConsistencyBand(int groups, int64_t actual_total, const VerifyOptions& options) {
  if (!options.noise) return 1e-9;
  const double b = 1.0 / options.epsilon_report;
  const double d = 2.0 * (b * std::log(2.0 * groups / options.delta) + 0.5);
  if (actual_total <= 0) return 1.0;
  return std::min(1.0, groups * d / static_cast<double>(actual_total));
}

absl::StatusOr<std::vector<ComplianceRow>> ParseComplianceCsv(std::istream& in,
                                                              std::vector<RowIssue>* malformed) {
  std::string line;
  if (!std::getline(in, line)) return absl::InvalidArgumentError("compliance report is empty");
  if (absl::StripSuffix(line, "\r") != kComplianceHeader) {
    return absl::InvalidArgumentError(
        absl::StrCat("unexpected compliance header: '", line, "'"));
  }
  std::vector<ComplianceRow> rows;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    absl::string_view text = absl::StripSuffix(line, "\r");
    if (text.empty()) continue;
    std::vector<absl::string_view> f = absl::StrSplit(text, ',');
    auto bad = [&](std::string msg) {
      if (malformed != nullptr) malformed->push_back({line_no, std::move(msg)});
    };
    if (static_cast<int>(f.size()) != kColumns) {
      bad(absl::StrFormat("expected %d fields, found %d", kColumns, f.size()));
      continue;
    }
    ComplianceRow row;
    row.hashed_ad_id = std::string(f[0]);
    if (row.hashed_ad_id.empty()) {
      bad("empty hashed_ad_id");
      continue;
    }
    std::array<int64_t, 12> counts{};
    bool ok = true;
    for (int i = 0; i < 12 && ok; ++i) {
      if (!absl::SimpleAtoi(f[1 + i], &counts[i]) || counts[i] < 0) {
        bad(absl::StrCat("field ", 2 + i, " is not a nonnegative integer"));
        ok = false;
      }
    }
    if (!ok) continue;
    std::copy_n(counts.begin(), 2, row.pot_gender.begin());
    std::copy_n(counts.begin() + 2, 4, row.pot_race.begin());
    std::copy_n(counts.begin() + 6, 2, row.act_gender.begin());
    std::copy_n(counts.begin() + 8, 4, row.act_race.begin());
    for (int i = 0; i < 2 && ok; ++i) {
      absl::string_view v = f[13 + i];
      if (v.empty()) continue;
      double x = 0.0;
      if (!absl::SimpleAtod(v, &x) || !(x >= 0.0 && x <= 1.0)) {
        bad(absl::StrCat("variance field ", 14 + i, " is not a number in [0, 1]"));
        ok = false;
        continue;
      }
      (i == 0 ? row.var_gender : row.var_race) = x;
    }
    if (ok) rows.push_back(row);
  }
  return rows;
}

absl::StatusOr<VerifySummary> ReviewerVerify(std::istream& report, const CoverageTargets& targets,
                                             const VerifyOptions& options) {
  if (options.noise && !(options.epsilon_report > 0)) {
    return absl::InvalidArgumentError("epsilon_report must be > 0");
  }
  VerifySummary summary;
  std::vector<std::string> lines;
  {
    std::string all((std::istreambuf_iterator<char>(report)), std::istreambuf_iterator<char>());
    lines = absl::StrSplit(all, '\n');
  }
  std::vector<VarianceReport> recomputed;
  int line_no = 0;
  for (const std::string& raw : lines) {
    ++line_no;
    if (line_no == 1) {
      if (absl::StripSuffix(raw, "\r") != kComplianceHeader) {
        return absl::InvalidArgumentError(
            absl::StrCat("unexpected compliance header: '", raw, "'"));
      }
      continue;
    }
    if (absl::StripSuffix(raw, "\r").empty()) continue;
    std::istringstream one(absl::StrCat(kComplianceHeader, "\n", raw));
    std::vector<RowIssue> issues;
    absl::StatusOr<std::vector<ComplianceRow>> parsed = ParseComplianceCsv(one, &issues);
    if (!parsed.ok()) return parsed.status();
    for (RowIssue& issue : issues) summary.malformed.push_back({line_no, issue.message});
    if (parsed->empty()) continue;
    const ComplianceRow& row = parsed->front();
    ++summary.rows;

    VarianceReport vr;
    vr.hashed_ad_id = row.hashed_ad_id;
    const int64_t gender_total = std::accumulate(row.act_gender.begin(), row.act_gender.end(),
                                                 int64_t{0});
    const int64_t race_total = std::accumulate(row.act_race.begin(), row.act_race.end(),
                                               int64_t{0});
    vr.total_impressions = std::max(gender_total, race_total);
    for (Attribute attribute : {Attribute::kGender, Attribute::kRace}) {
      const std::optional<double> reported =
          attribute == Attribute::kGender ? row.var_gender : row.var_race;
      const std::optional<double> mine = RecomputedVariance(row, attribute);
      if (mine.has_value()) {
        AttributeVariance av;
        av.variance = *mine;
        (attribute == Attribute::kGender ? vr.gender : vr.race) = av;
      }
      if (!reported.has_value() && !mine.has_value()) continue;
      const int64_t total = attribute == Attribute::kGender ? gender_total : race_total;
      const double band = NoiseConsistencyBand(GroupCount(attribute), total, options);
      // A variance present on one side only is always a discrepancy.
      if (!reported.has_value() || !mine.has_value() || std::abs(*reported - *mine) > band) {
        summary.discrepancies.push_back({line_no, row.hashed_ad_id, attribute, reported, mine, band});
      }
    }
    recomputed.push_back(vr);
  }
  for (const CoverageCell& cell : targets) {
    absl::StatusOr<CoverageResult> c =
        Coverage(recomputed, cell.attribute, cell.threshold, cell.floor, targets);
    if (c.ok()) {
      summary.coverage.push_back(*c);
    } else {
      CoverageResult empty;
      empty.attribute = cell.attribute;
      empty.threshold = cell.threshold;
      empty.floor = cell.floor;
      empty.target = cell.target();
      empty.settlement_cell = true;
      summary.coverage.push_back(empty);
    }
  }
  return summary;
}

nlohmann::json ToJson(const VerifySummary& s) {
  nlohmann::json j;
  j["rows"] = s.rows;
  j["malformed"] = nlohmann::json::array();
  for (const RowIssue& m : s.malformed) {
    j["malformed"].push_back({{"line", m.line}, {"message", m.message}});
  }
  j["discrepancies"] = nlohmann::json::array();
  for (const Discrepancy& d : s.discrepancies) {
    j["discrepancies"].push_back({{"line", d.line},
                                  {"hashed_ad_id", d.hashed_ad_id},
                                  {"attribute", std::string(Label(d.attribute))},
                                  {"reported", d.reported ? nlohmann::json(*d.reported) : nlohmann::json()},
                                  {"recomputed", d.recomputed ? nlohmann::json(*d.recomputed) : nlohmann::json()},
                                  {"band", d.band}});
  }
  j["coverage"] = nlohmann::json::array();
  for (const CoverageResult& c : s.coverage) {
    nlohmann::json cj = {{"attribute", std::string(Label(c.attribute))},
                         {"threshold", c.threshold},
                         {"floor", c.floor},
                         {"qualifying", c.qualifying},
                         {"within", c.within},
                         {"coverage", c.coverage},
                         {"pass", c.pass}};
    if (c.target) cj["target"] = *c.target;
    j["coverage"].push_back(cj);
  }
  return j;
}

}  // namespace adsim
