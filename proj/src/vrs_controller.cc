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

#include "adsim/vrs_controller.h"

#include <algorithm>
#include <cmath>

#include "absl/strings/ascii.h"
#include "absl/strings/str_cat.h"
#include "absl/strings/str_format.h"

namespace adsim {

absl::string_view Label(Category category) {
  switch (category) {
    case Category::kNone:
      return "none";
    case Category::kHousing:
      return "housing";
    case Category::kEmployment:
      return "employment";
    case Category::kCredit:
      return "credit";
  }
  return "none";
}

absl::StatusOr<Category> ParseCategory(absl::string_view text) {
  const std::string t = absl::AsciiStrToLower(text);
  if (t == "none") return Category::kNone;
  if (t == "housing") return Category::kHousing;
  if (t == "employment") return Category::kEmployment;
  if (t == "credit") return Category::kCredit;
  return absl::InvalidArgumentError(absl::StrCat("unknown category '", text, "'"));
}

double VrsControllerConfig::TargetFor(Category category) const {
  switch (category) {
    case Category::kHousing:
      return target_housing;
    case Category::kEmployment:
      return target_employment;
    case Category::kCredit:
      return target_credit;
    case Category::kNone:
      break;
  }
  return 1.0;
}

absl::Status ValidateControllerConfig(const VrsControllerConfig& c) {
  if (c.epoch_k < 1) return absl::InvalidArgumentError("controller.epoch_k must be >= 1");
  if (!(c.epsilon > 0)) return absl::InvalidArgumentError("controller.epsilon must be > 0");
  if (!(c.step_eta > 0 && c.step_eta < 1)) {
    return absl::InvalidArgumentError("controller.step_eta must lie in (0, 1)");
  }
  if (!(c.m_min > 0 && c.m_min <= 1 && c.m_max >= 1)) {
    return absl::InvalidArgumentError("controller clamps must satisfy 0 < m_min <= 1 <= m_max");
  }
  if (!(c.deadband >= 0)) return absl::InvalidArgumentError("controller.deadband must be >= 0");
  if (c.eligible_sample_size < 1) {
    return absl::InvalidArgumentError("controller.eligible_sample_size must be >= 1");
  }
  return absl::OkStatus();
}

absl::StatusOr<GroupVector> LaplaceNoisedCounts(const GroupVector& true_counts,
                                                double epsilon, Rng& rng) {
  if (!(epsilon > 0)) return absl::InvalidArgumentError("epsilon must be positive");
  GroupVector out = true_counts;
  // Each impression changes exactly one group count by one.
  const double scale = 1.0 / epsilon;
  for (int g = 0; g < out.size(); ++g) out[g] += rng.Laplace(scale);
  return out;
}

absl::StatusOr<GroupVector> NoisyGroupCounts(const GroupVector& true_counts, double epsilon,
                                             bool noise, Rng& rng) {
  if (!(epsilon > 0)) return absl::InvalidArgumentError("epsilon must be positive");
  if (!noise) return true_counts;
  absl::StatusOr<GroupVector> noisy = LaplaceNoisedCounts(true_counts, epsilon, rng);
  if (!noisy.ok()) return noisy.status();
  for (int g = 0; g < noisy->size(); ++g) (*noisy)[g] = std::max(0.0, (*noisy)[g]);
  return noisy;
}

absl::StatusOr<std::optional<VarianceEstimate>> MeasureEpoch(
    std::span<const Impression> window, Attribute attribute, const GroupVector& eligible,
    double epsilon, bool noise, int epoch, Rng& rng) {
  if (window.empty()) return absl::InvalidArgumentError("measurement window is empty");
  if (eligible.attribute != attribute) {
    return absl::InvalidArgumentError("eligible ratios are for a different attribute");
  }
  GroupVector counts(attribute);
  bool any_known = false;
  for (const Impression& imp : window) {
    const std::optional<int> g = attribute == Attribute::kGender ? GroupIndex(imp.gender)
                                                                 : GroupIndex(imp.estimated_race);
    if (!g.has_value()) continue;
    counts[*g] += 1.0;
    any_known = true;
  }
  if (!any_known) return std::optional<VarianceEstimate>();
  absl::StatusOr<GroupVector> noisy = NoisyGroupCounts(counts, epsilon, noise, rng);
  if (!noisy.ok()) return noisy.status();
  if (noisy->Sum() <= 0) return std::optional<VarianceEstimate>();

  VarianceEstimate est;
  est.attribute = attribute;
  est.noisy_ratios = noisy->Normalized();
  est.variance = HalfL1(eligible, est.noisy_ratios);
  est.epoch = epoch;
  return std::optional<VarianceEstimate>(est);
}

GroupVector AdjustMultipliers(const GroupVector& multipliers, const VarianceEstimate& est,
                              const GroupVector& eligible, const VrsControllerConfig& config,
                              double target) {
  GroupVector out = multipliers;
  if (est.variance <= target) return out;
  for (int g = 0; g < out.size(); ++g) {
    if (est.noisy_ratios[g] < eligible[g] - config.deadband) {
      out[g] *= 1.0 + config.step_eta;
    } else if (est.noisy_ratios[g] > eligible[g] + config.deadband) {
      out[g] *= 1.0 - config.step_eta;
    }
    out[g] = std::clamp(out[g], config.m_min, config.m_max);
  }
  return out;
}

double MultiplierState::For(const Cell& estimated_cell, double m_min, double m_max) const {
  double m = 1.0;
  if (auto g = GroupIndex(estimated_cell.gender)) m *= gender[*g];
  if (auto r = GroupIndex(estimated_cell.race)) m *= race[*r];
  return std::clamp(m, m_min, m_max);
}

void WriteTelemetryCsv(std::ostream& out, std::span<const EpochTelemetry> rows) {
  out << "campaign_id,epoch,attribute,group,noisy_ratio,eligible_ratio,variance,multiplier\n";
  for (const EpochTelemetry& t : rows) {
    out << absl::StrFormat("%s,%d,%s,%s,%.9f,%.9f,%.9f,%.9f\n", t.campaign_id, t.epoch,
                           Label(t.attribute), GroupLabel(t.attribute, t.group), t.noisy_ratio,
                           t.eligible_ratio, t.variance, t.multiplier);
  }
}

VrsController::VrsController(VrsControllerConfig config, Category category,
                             GroupVector eligible_gender, GroupVector eligible_race)
    : config_(config),
      target_(config.TargetFor(category)),
      eligible_gender_(eligible_gender),
      eligible_race_(eligible_race) {
  window_.reserve(config_.epoch_k);
}

void VrsController::OnImpression(const Impression& impression, absl::string_view campaign_id,
                                 Rng& rng, std::vector<EpochTelemetry>* telemetry) {
  window_.push_back(impression);
  if (static_cast<int>(window_.size()) < config_.epoch_k) return;
  ++epoch_;
  for (Attribute attribute : {Attribute::kGender, Attribute::kRace}) {
    const GroupVector& eligible =
        attribute == Attribute::kGender ? eligible_gender_ : eligible_race_;
    absl::StatusOr<std::optional<VarianceEstimate>> est =
        MeasureEpoch(window_, attribute, eligible, config_.epsilon, config_.noise, epoch_, rng);
    if (!est.ok() || !est->has_value()) continue;
    GroupVector& factors = attribute == Attribute::kGender ? state_.gender : state_.race;
    factors = AdjustMultipliers(factors, **est, eligible, config_, target_);
    if (telemetry != nullptr) {
      for (int g = 0; g < factors.size(); ++g) {
        telemetry->push_back({std::string(campaign_id), epoch_, attribute, g,
                              (*est)->noisy_ratios[g], eligible[g], (*est)->variance,
                              factors[g]});
      }
    }
  }
  window_.clear();
}

}  // namespace adsim
