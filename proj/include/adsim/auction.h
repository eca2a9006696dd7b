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

// Discrete-event auction loop. Users arrive by independent Poisson processes;
// at each arrival every active campaign targeting the user passes its pacing
// gate or sits out, the survivors are ranked by total value against one draw
// of background competition, and the winner pays a second-price-style amount
// expressed in bid space.

#ifndef ADSIM_AUCTION_H_
#define ADSIM_AUCTION_H_

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "absl/status/statusor.h"
#include "adsim/demographics.h"
#include "adsim/impression.h"
#include "adsim/metrics.h"
#include "adsim/money.h"
#include "adsim/random.h"
#include "adsim/vrs_controller.h"

namespace adsim {

struct CampaignConfig {
  std::string id;
  Category category = Category::kNone;
  Micros budget = Micros::FromUsd(20.0);
  double duration_hours = 24.0;
  MatchedAudience audience;
  double base_bid = 1.0;  // USD
  double quality = 0.0;
  double base_ear = 0.02;
  // Keyed by true (gender, race) cell; cells not listed have affinity 1.
  std::map<Cell, double> creative_affinity;

  bool vrs_enabled() const { return category != Category::kNone; }
};

absl::Status ValidateCampaignConfig(const CampaignConfig& config);

struct BackgroundParams {
  double median = 1.0;
  double sigma = 0.0;
};

// Highest competing total value among all other platform ads, drawn
// lognormally per event with parameters chosen by the user's true cell.
struct BackgroundModel {
  BackgroundParams fallback;
  std::map<Cell, BackgroundParams> by_cell;

  const BackgroundParams& For(const Cell& cell) const;
};

struct AuctionParams {
  double ear_floor = 1e-4;
  Micros price_cap = Micros::FromUsd(10.0);
  double decay = 0.9;
  BackgroundModel background;
  // Decay time of the pacing gate's recent-spend estimate.
  double pacing_time_constant_hours = 1.0;
};

absl::Status ValidateAuctionParams(const AuctionParams& params);

// multiplier * bid * ear + quality. The multiplier touches the bid term only.
absl::StatusOr<double> TotalValue(double bid, double multiplier, double ear, double quality);

double EstimatedActionRate(const CampaignConfig& campaign, const User& user, int repeat_count,
                           const AuctionParams& params);

// Exponentially decayed activity of one campaign, fed to the pacing gate.
struct PacingState {
  double last_update_hours = 0.0;
  double decayed_spend_usd = 0.0;
  double decayed_evaluations = 0.0;
  double decayed_passes = 0.0;
};

struct CampaignState {
  Micros budget;
  Micros spent;
  int64_t impressions = 0;
  PacingState pacing;

  Micros remaining() const { return budget - spent; }
};

// Throttle probability the gate would use at `now`, without drawing.
double PaceProbability(const CampaignState& state, double now, double duration,
                       double time_constant_hours);

// Pass with probability p: 1 while spend is at or behind the linear schedule
// budget * now / duration, otherwise the rate needed to spend the remaining
// budget by the deadline divided by the estimated unthrottled spend rate,
// clamped to [0, 1]. Always false once the budget is gone. One uniform is
// drawn on every call so that downstream streams stay aligned.
bool PaceGate(CampaignState& state, double now, double duration, double time_constant_hours,
              Rng& rng);

// Records a win in the pacing estimate.
void RecordSpend(CampaignState& state, double now, Micros price, double time_constant_hours);

struct AuctionEvent {
  int64_t user_id = 0;
  double time_hours = 0.0;
  double background_top_value = 0.0;
};

struct Bid {
  int campaign = 0;
  double bid = 0.0;
  double multiplier = 1.0;
  double ear = 0.0;
  double quality = 0.0;
};

struct AuctionOutcome {
  int bidder = 0;  // index into the bids span
  double total_value = 0.0;
  // max(background, runner-up total value).
  double price_setting_value = 0.0;
  Micros price;
};

// Highest total value wins when it is at least the background value and
// every other bid. Price = (price_setting_value - quality) / ear, clamped to
// [0, price_cap]; it depends on the winner only through quality and ear.
absl::StatusOr<std::optional<AuctionOutcome>> RunAuction(const AuctionEvent& event,
                                                         std::span<const Bid> bids,
                                                         const AuctionParams& params);

struct SimulationInput {
  std::vector<CampaignConfig> campaigns;
  AuctionParams params;
  VrsControllerConfig controller;
  // Paired runs require pairwise-disjoint audiences.
  bool paired = false;
  bool record_telemetry = true;
};

struct CampaignSummary {
  std::string id;
  Micros budget;
  Micros spent;
  int64_t impressions = 0;
  int epochs = 0;
  MultiplierState final_multipliers;
  // Platform-view eligible ratios from the campaign's eligible sample.
  EligibleRatios eligible_gender;
  EligibleRatios eligible_race;
};

struct SimulationResult {
  ImpressionLog log;
  std::vector<CampaignSummary> campaigns;
  std::vector<EpochTelemetry> telemetry;
  int64_t events = 0;
};

absl::StatusOr<SimulationResult> Simulate(const SimulationInput& input, uint64_t seed);

}  // namespace adsim

#endif  // ADSIM_AUCTION_H_
