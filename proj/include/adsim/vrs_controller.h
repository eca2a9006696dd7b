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

// Variance-reduction feedback loop. Every `epoch_k` delivered impressions the
// controller takes a Laplace-noised count of the window's impressions per
// platform-known group, compares the resulting delivery ratios with the
// campaign's eligible ratios, and nudges one bid-multiplier factor per group
// up or down. This is a transparent stand-in for a learned policy.

#ifndef ADSIM_VRS_CONTROLLER_H_
#define ADSIM_VRS_CONTROLLER_H_

#include <optional>
#include <ostream>
#include <span>
#include <vector>

#include "absl/status/statusor.h"
#include "absl/strings/string_view.h"
#include "adsim/group_vector.h"
#include "adsim/impression.h"
#include "adsim/random.h"

namespace adsim {

// Special ad category. Any category other than kNone turns the controller on.
enum class Category { kNone, kHousing, kEmployment, kCredit };

absl::string_view Label(Category category);
absl::StatusOr<Category> ParseCategory(absl::string_view text);

struct VrsControllerConfig {
  int epoch_k = 100;
  double epsilon = 1.0;  // per epoch, per attribute
  bool noise = true;
  double step_eta = 0.1;
  double m_min = 0.1;
  double m_max = 10.0;
  double deadband = 0.025;
  // The controller idles while the measured variance is at or below the
  // category's target.
  double target_housing = 0.025;
  double target_employment = 0.25;
  double target_credit = 0.25;
  int64_t eligible_sample_size = 6000;

  double TargetFor(Category category) const;
};

absl::Status ValidateControllerConfig(const VrsControllerConfig& config);

// Adds independent Laplace(1/epsilon) noise to every count. Unbiased; the
// result may be negative.
absl::StatusOr<GroupVector> LaplaceNoisedCounts(const GroupVector& true_counts, double epsilon,
                                                Rng& rng);

// LaplaceNoisedCounts clamped at zero. With noise off the input is returned
// unchanged and no randomness is consumed.
absl::StatusOr<GroupVector> NoisyGroupCounts(const GroupVector& true_counts, double epsilon,
                                             bool noise, Rng& rng);

struct VarianceEstimate {
  Attribute attribute = Attribute::kGender;
  GroupVector noisy_ratios;
  double variance = 0.0;
  int epoch = 0;
};

// Counts the window's impressions by platform group (self-reported gender,
// estimated race; unknowns omitted), noises them and renormalises. Returns
// nullopt, the no-measurement sentinel, when nothing countable remains.
absl::StatusOr<std::optional<VarianceEstimate>> MeasureEpoch(
    std::span<const Impression> window, Attribute attribute, const GroupVector& eligible,
    double epsilon, bool noise, int epoch, Rng& rng);

// Per-group multiplicative update: adjust up by (1 + eta) when a group's
// measured ratio is below eligible - deadband, down by (1 - eta) when above
// eligible + deadband, then clamp. Idle when est.variance <= target.
GroupVector AdjustMultipliers(const GroupVector& multipliers, const VarianceEstimate& est,
                              const GroupVector& eligible, const VrsControllerConfig& config,
                              double target);

// One factor per gender group and per race group. The bid multiplier of a
// user is the product of the factors of its estimated cell; an unknown value
// contributes a factor of 1.
struct MultiplierState {
  GroupVector gender{Attribute::kGender, 1.0};
  GroupVector race{Attribute::kRace, 1.0};

  double For(const Cell& estimated_cell, double m_min, double m_max) const;
  const GroupVector& factors(Attribute attribute) const {
    return attribute == Attribute::kGender ? gender : race;
  }
};

struct EpochTelemetry {
  std::string campaign_id;
  int epoch = 0;
  Attribute attribute = Attribute::kGender;
  int group = 0;
  double noisy_ratio = 0.0;
  double eligible_ratio = 0.0;
  double variance = 0.0;
  double multiplier = 1.0;
};

// CSV: campaign_id,epoch,attribute,group,noisy_ratio,eligible_ratio,variance,multiplier
void WriteTelemetryCsv(std::ostream& out, std::span<const EpochTelemetry> rows);

// Controller state owned by one campaign inside one run.
class VrsController {
 public:
  VrsController(VrsControllerConfig config, Category category, GroupVector eligible_gender,
                GroupVector eligible_race);

  // Records a delivered impression; runs an epoch when the window is full.
  // Epoch telemetry is appended to `telemetry` when it is non-null.
  void OnImpression(const Impression& impression, absl::string_view campaign_id, Rng& rng,
                    std::vector<EpochTelemetry>* telemetry);

  double MultiplierFor(const Cell& estimated_cell) const {
    return state_.For(estimated_cell, config_.m_min, config_.m_max);
  }
  const MultiplierState& state() const { return state_; }
  int epochs() const { return epoch_; }

 private:
  VrsControllerConfig config_;
  double target_;
  GroupVector eligible_gender_;
  GroupVector eligible_race_;
  MultiplierState state_;
  std::vector<Impression> window_;
  int epoch_ = 0;
};

}  // namespace adsim

#endif  // ADSIM_VRS_CONTROLLER_H_
