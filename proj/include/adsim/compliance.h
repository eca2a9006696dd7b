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

// Settlement-style compliance report: one row per qualifying ad with
// potential impressions of the eligible sample, noised actual impressions and
// the platform's reported variance, plus the external reviewer's check, which
// sees only the aggregated rows.

#ifndef ADSIM_COMPLIANCE_H_
#define ADSIM_COMPLIANCE_H_

#include <array>
#include <cstdint>
#include <istream>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "absl/status/statusor.h"
#include "adsim/impression.h"
#include "adsim/metrics.h"
#include "adsim/random.h"
#include "nlohmann/json.hpp"

namespace adsim {

inline constexpr int64_t kComplianceImpressionFloor = 300;

struct ComplianceInput {
  std::string campaign_id;
  std::vector<Impression> impressions;
  // weight_sums become the potential-impression columns.
  EligibleRatios eligible_gender;
  EligibleRatios eligible_race;
};

struct ComplianceRow {
  std::string hashed_ad_id;
  std::array<int64_t, kGenderGroups> pot_gender{};
  std::array<int64_t, kRaceGroups> pot_race{};
  std::array<int64_t, kGenderGroups> act_gender{};
  std::array<int64_t, kRaceGroups> act_race{};
  // Absent when the attribute has no countable impressions.
  std::optional<double> var_gender;
  std::optional<double> var_race;
};

// Ads under the 300-impression floor yield nullopt. Actual counts are
// max(0, round(count + Laplace(1 / epsilon_report))); the reported variance
// compares the potential ratios with a second, independent noisy measurement.
// With noise off both are exact.
absl::StatusOr<std::optional<ComplianceRow>> BuildComplianceRow(const ComplianceInput& input,
                                                                double epsilon_report,
                                                                bool noise, Rng& rng);

inline constexpr char kComplianceHeader[] =
    "hashed_ad_id,pot_M,pot_F,pot_AA,pot_H,pot_W,pot_O,act_M,act_F,act_AA,act_H,act_W,act_O,"
    "var_gender,var_race";

void WriteComplianceCsv(std::ostream& out, std::span<const ComplianceRow> rows);

// Builds and writes rows for every qualifying ad; returns the rows written.
absl::StatusOr<std::vector<ComplianceRow>> ExportComplianceReport(
    std::span<const ComplianceInput> inputs, double epsilon_report, bool noise, Rng& rng,
    std::ostream& out);

// Variance the reviewer recomputes from a row's own potential and actual
// columns.
std::optional<double> RecomputedVariance(const ComplianceRow& row, Attribute attribute);

struct VerifyOptions {
  bool noise = true;
  double epsilon_report = 5.0;
  // Probability that an honest row falls outside the band.
  double delta = 1e-6;
};

// Largest |reported - recomputed| an honest row shows with probability at
// least 1 - delta: G * D / N with D = 2 (b ln(2G / delta) + 1/2), b = 1 / eps,
// G groups and N the row's actual impressions. 1e-9 with noise off.
double NoiseConsistencyBand(int groups, int64_t actual_total, const VerifyOptions& options);

struct RowIssue {
  int line = 0;
  std::string message;
};

struct Discrepancy {
  int line = 0;
  std::string hashed_ad_id;
  Attribute attribute = Attribute::kGender;
  std::optional<double> reported;
  std::optional<double> recomputed;
  double band = 0.0;
};

struct VerifySummary {
  int64_t rows = 0;
  std::vector<RowIssue> malformed;
  std::vector<Discrepancy> discrepancies;
  std::vector<CoverageResult> coverage;
};

absl::StatusOr<std::vector<ComplianceRow>> ParseComplianceCsv(std::istream& in,
                                                              std::vector<RowIssue>* malformed);

// Recomputes each row's variance, flags rows whose reported variance leaves
// the noise-consistency band, and recomputes coverage over the target cells.
// An ad's impression count for the floors is the larger of its gender and
// race actual totals. Fails only when the header is wrong.
absl::StatusOr<VerifySummary> ReviewerVerify(std::istream& report, const CoverageTargets& targets,
                                             const VerifyOptions& options);

nlohmann::json ToJson(const VerifySummary& summary);

}  // namespace adsim

#endif  // ADSIM_COMPLIANCE_H_
