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

#include "adsim/auction.h"

#include <algorithm>
#include <cmath>
#include <queue>
#include <utility>

#include "absl/container/flat_hash_map.h"
#include "absl/strings/str_cat.h"
#include "absl/strings/str_format.h"

namespace adsim {

namespace {

// Seed stream tags.
constexpr uint64_t kArrivalStream = 1;
constexpr uint64_t kBackgroundStream = 2;
constexpr uint64_t kPacingStream = 3;
constexpr uint64_t kNoiseStream = 4;
constexpr uint64_t kEligibleStream = 5;

bool Finite(double x) { return std::isfinite(x); }

void DecayTo(PacingState& p, double now, double tau) {
  if (now <= p.last_update_hours) return;
  const double f = std::exp(-(now - p.last_update_hours) / tau);
  p.decayed_spend_usd *= f;
  p.decayed_evaluations *= f;
  p.decayed_passes *= f;
  p.last_update_hours = now;
}

}  // namespace

absl::Status ValidateCampaignConfig(const CampaignConfig& c) {
  if (c.id.empty()) return absl::InvalidArgumentError("campaign id is empty");
  if (c.budget <= Micros(0)) {
    return absl::InvalidArgumentError(absl::StrCat("campaign ", c.id, ": budget must be > 0"));
  }
  if (!(c.duration_hours > 0) || !Finite(c.duration_hours)) {
    return absl::InvalidArgumentError(absl::StrCat("campaign ", c.id, ": duration must be > 0"));
  }
  if (!(c.base_bid > 0) || !Finite(c.base_bid)) {
    return absl::InvalidArgumentError(absl::StrCat("campaign ", c.id, ": base_bid must be > 0"));
  }
  if (!(c.quality >= 0) || !Finite(c.quality)) {
    return absl::InvalidArgumentError(absl::StrCat("campaign ", c.id, ": quality must be >= 0"));
  }
  if (!(c.base_ear > 0 && c.base_ear <= 1)) {
    return absl::InvalidArgumentError(
        absl::StrCat("campaign ", c.id, ": base_ear must lie in (0, 1]"));
  }
  for (const auto& [cell, a] : c.creative_affinity) {
    if (!(a > 0) || !Finite(a)) {
      return absl::InvalidArgumentError(absl::StrCat("campaign ", c.id, ": affinity for ",
                                                     CellLabel(cell), " must be > 0"));
    }
  }
  return absl::OkStatus();
}

const BackgroundParams& BackgroundModel::For(const Cell& cell) const {
  auto it = by_cell.find(cell);
  return it == by_cell.end() ? fallback : it->second;
}

absl::Status ValidateAuctionParams(const AuctionParams& p) {
  if (!(p.ear_floor > 0 && p.ear_floor <= 1)) {
    return absl::InvalidArgumentError("auction.ear_floor must lie in (0, 1]");
  }
  if (p.price_cap < Micros(0)) return absl::InvalidArgumentError("auction.price_cap must be >= 0");
  if (!(p.decay > 0 && p.decay <= 1)) {
    return absl::InvalidArgumentError("auction.decay must lie in (0, 1]");
  }
  if (!(p.pacing_time_constant_hours > 0)) {
    return absl::InvalidArgumentError("auction.pacing_time_constant_hours must be > 0");
  }
  auto check = [](const BackgroundParams& b) {
    return b.median > 0 && Finite(b.median) && b.sigma >= 0 && Finite(b.sigma);
  };
  if (!check(p.background.fallback)) {
    return absl::InvalidArgumentError("background median must be > 0 and sigma >= 0");
  }
  for (const auto& [cell, b] : p.background.by_cell) {
    if (!check(b)) {
      return absl::InvalidArgumentError(
          absl::StrCat("background for ", CellLabel(cell), ": median must be > 0, sigma >= 0"));
    }
  }
  return absl::OkStatus();
}

absl::StatusOr<double> TotalValue(double bid, double multiplier, double ear, double quality) {
  if (!Finite(bid) || !Finite(multiplier) || !Finite(ear) || !Finite(quality)) {
    return absl::InvalidArgumentError("total value inputs must be finite");
  }
  if (!(ear > 0)) return absl::InvalidArgumentError("estimated action rate must be > 0");
  return multiplier * bid * ear + quality;
}

double EstimatedActionRate(const CampaignConfig& campaign, const User& user, int repeat_count,
                           const AuctionParams& params) {
  double affinity = 1.0;
  if (auto it = campaign.creative_affinity.find(user.TrueCell());
      it != campaign.creative_affinity.end()) {
    affinity = it->second;
  }
  const double ear =
      campaign.base_ear * affinity * std::pow(params.decay, std::max(0, repeat_count));
  return std::clamp(ear, params.ear_floor, 1.0);
}

double PaceProbability(const CampaignState& state, double now, double duration, double tau) {
  const Micros remaining = state.remaining();
  if (remaining <= Micros(0)) return 0.0;
  if (now >= duration) return 1.0;
  const double budget = state.budget.usd();
  if (state.spent.usd() <= budget * now / duration) return 1.0;

  PacingState p = state.pacing;
  DecayTo(p, now, tau);
  if (!(p.decayed_spend_usd > 0) || !(p.decayed_passes > 0)) return 1.0;
  // Normalise the decayed sum by the window actually observed since t = 0.
  const double window = tau * (1.0 - std::exp(-now / tau));
  const double recent_rate = p.decayed_spend_usd / window;
  const double pass_fraction = p.decayed_passes / p.decayed_evaluations;
  const double unthrottled_rate = recent_rate / pass_fraction;
  const double target_rate = remaining.usd() / (duration - now);
  return std::clamp(target_rate / unthrottled_rate, 0.0, 1.0);
}

bool PaceGate(CampaignState& state, double now, double duration, double tau, Rng& rng) {
  const double u = rng.Uniform01();
  if (state.remaining() <= Micros(0)) return false;
  const double p = PaceProbability(state, now, duration, tau);
  const bool pass = u < p;
  DecayTo(state.pacing, now, tau);
  state.pacing.decayed_evaluations += 1.0;
  if (pass) state.pacing.decayed_passes += 1.0;
  return pass;
}

void RecordSpend(CampaignState& state, double now, Micros price, double tau) {
  DecayTo(state.pacing, now, tau);
  state.pacing.decayed_spend_usd += price.usd();
  state.spent += price;
  ++state.impressions;
}

absl::StatusOr<std::optional<AuctionOutcome>> RunAuction(const AuctionEvent& event,
                                                         std::span<const Bid> bids,
                                                         const AuctionParams& params) {
  if (!(event.background_top_value > 0) || !Finite(event.background_top_value)) {
    return absl::InvalidArgumentError("background top value must be positive and finite");
  }
  int best = -1;
  double best_tv = 0.0;
  double runner_up = 0.0;
  for (size_t i = 0; i < bids.size(); ++i) {
    const Bid& b = bids[i];
    absl::StatusOr<double> tv = TotalValue(b.bid, b.multiplier, b.ear, b.quality);
    if (!tv.ok()) return tv.status();
    if (best < 0 || *tv > best_tv) {
      if (best >= 0) runner_up = std::max(runner_up, best_tv);
      best = static_cast<int>(i);
      best_tv = *tv;
    } else {
      runner_up = std::max(runner_up, *tv);
    }
  }
  if (best < 0) return std::optional<AuctionOutcome>();
  const double top = std::max(event.background_top_value, runner_up);
  if (best_tv < top) return std::optional<AuctionOutcome>();

  const Bid& w = bids[best];
  const double price_usd = std::max(0.0, (top - w.quality) / w.ear);
  AuctionOutcome out;
  out.bidder = best;
  out.total_value = best_tv;
  out.price_setting_value = top;
  out.price = std::min(Micros::FromUsd(std::min(price_usd, 1e12)), params.price_cap);
  return std::optional<AuctionOutcome>(out);
}

absl::StatusOr<SimulationResult> Simulate(const SimulationInput& input, uint64_t seed) {
  if (absl::Status s = ValidateAuctionParams(input.params); !s.ok()) return s;
  if (absl::Status s = ValidateControllerConfig(input.controller); !s.ok()) return s;
  const int n_campaigns = static_cast<int>(input.campaigns.size());

  SimulationResult result;
  // Users indexed densely; each carries the campaigns that target it.
  std::vector<User> users;
  std::vector<std::vector<int>> targeting;
  absl::flat_hash_map<int64_t, int> user_index;
  for (int c = 0; c < n_campaigns; ++c) {
    const CampaignConfig& cfg = input.campaigns[c];
    if (absl::Status s = ValidateCampaignConfig(cfg); !s.ok()) return s;
    for (int d = 0; d < c; ++d) {
      if (input.campaigns[d].id == cfg.id) {
        return absl::InvalidArgumentError(absl::StrCat("duplicate campaign id ", cfg.id));
      }
    }
    result.log.campaign_ids.push_back(cfg.id);
    for (const User& u : cfg.audience.matched) {
      auto [it, inserted] = user_index.try_emplace(u.id, static_cast<int>(users.size()));
      if (inserted) {
        users.push_back(u);
        targeting.emplace_back();
      } else if (input.paired) {
        return absl::InvalidArgumentError(absl::StrFormat(
            "paired audiences overlap: user %d is targeted by more than one campaign", u.id));
      }
      std::vector<int>& t = targeting[it->second];
      if (t.empty() || t.back() != c) t.push_back(c);
    }
  }

  std::vector<CampaignState> states(n_campaigns);
  std::vector<Rng> pacing_rngs;
  std::vector<Rng> noise_rngs;
  std::vector<std::optional<VrsController>> controllers(n_campaigns);
  std::vector<absl::flat_hash_map<int64_t, int>> repeats(n_campaigns);
  result.campaigns.resize(n_campaigns);
  double horizon = 0.0;
  for (int c = 0; c < n_campaigns; ++c) {
    const CampaignConfig& cfg = input.campaigns[c];
    states[c].budget = cfg.budget;
    horizon = std::max(horizon, cfg.duration_hours);
    pacing_rngs.emplace_back(DeriveSeed(seed, {kPacingStream, static_cast<uint64_t>(c)}));
    noise_rngs.emplace_back(DeriveSeed(seed, {kNoiseStream, static_cast<uint64_t>(c)}));

    CampaignSummary& summary = result.campaigns[c];
    summary.id = cfg.id;
    summary.budget = cfg.budget;
    if (cfg.audience.matched.empty()) continue;
    Rng eligible_rng(DeriveSeed(seed, {kEligibleStream, static_cast<uint64_t>(c)}));
    absl::StatusOr<std::vector<User>> sample = SampleEligibleAudience(
        cfg.audience.matched, input.controller.eligible_sample_size, eligible_rng);
    if (!sample.ok()) {
      return absl::InvalidArgumentError(
          absl::StrCat("campaign ", cfg.id, ": ", sample.status().message()));
    }
    absl::StatusOr<EligibleRatios> eg = EligibleRatioFromSample(*sample, Attribute::kGender);
    absl::StatusOr<EligibleRatios> er = EligibleRatioFromSample(*sample, Attribute::kRace);
    if (eg.ok()) summary.eligible_gender = *eg;
    if (er.ok()) summary.eligible_race = *er;
    if (cfg.vrs_enabled()) {
      if (!eg.ok()) return eg.status();
      if (!er.ok()) return er.status();
      controllers[c].emplace(input.controller, cfg.category, eg->ratios, er->ratios);
    }
  }

  // Background parameters resolved once per user.
  std::vector<std::pair<double, double>> bg(users.size());
  for (size_t i = 0; i < users.size(); ++i) {
    const BackgroundParams& b = input.params.background.For(users[i].TrueCell());
    bg[i] = {std::log(b.median), b.sigma};
  }

  Rng arrivals(DeriveSeed(seed, {kArrivalStream}));
  Rng background(DeriveSeed(seed, {kBackgroundStream}));
  using Arrival = std::pair<double, int>;
  std::priority_queue<Arrival, std::vector<Arrival>, std::greater<>> heap;
  for (size_t i = 0; i < users.size(); ++i) {
    if (users[i].session_rate > 0) {
      heap.emplace(arrivals.Exponential(users[i].session_rate), static_cast<int>(i));
    }
  }

  const double tau = input.params.pacing_time_constant_hours;
  std::vector<Bid> bids;
  std::vector<int> bidders;
  while (!heap.empty()) {
    const auto [now, ui] = heap.top();
    heap.pop();
    if (now > horizon) break;
    const User& user = users[ui];
    heap.emplace(now + arrivals.Exponential(user.session_rate), ui);
    ++result.events;

    AuctionEvent event;
    event.user_id = user.id;
    event.time_hours = now;
    event.background_top_value = background.LogNormal(bg[ui].first, bg[ui].second);

    bids.clear();
    bidders.clear();
    for (int c : targeting[ui]) {
      const CampaignConfig& cfg = input.campaigns[c];
      if (now > cfg.duration_hours) continue;
      if (!PaceGate(states[c], now, cfg.duration_hours, tau, pacing_rngs[c])) continue;
      Bid b;
      b.campaign = c;
      b.bid = cfg.base_bid;
      b.multiplier = controllers[c] ? controllers[c]->MultiplierFor(user.EstimatedCell()) : 1.0;
      auto rep = repeats[c].find(user.id);
      b.ear = EstimatedActionRate(cfg, user, rep == repeats[c].end() ? 0 : rep->second,
                                  input.params);
      b.quality = cfg.quality;
      bids.push_back(b);
    }

    // A winner that cannot afford its price drops out and the auction reruns
    // without it, so spend never exceeds budget.
    while (!bids.empty()) {
      absl::StatusOr<std::optional<AuctionOutcome>> outcome =
          RunAuction(event, bids, input.params);
      if (!outcome.ok()) return outcome.status();
      if (!outcome->has_value()) break;
      const AuctionOutcome& win = **outcome;
      const int c = bids[win.bidder].campaign;
      if (win.price > states[c].remaining()) {
        bids.erase(bids.begin() + win.bidder);
        continue;
      }
      RecordSpend(states[c], now, win.price, tau);
      ++repeats[c][user.id];
      Impression imp = MakeImpression(c, user, now, win.price);
      result.log.records.push_back(imp);
      if (controllers[c]) {
        controllers[c]->OnImpression(imp, input.campaigns[c].id, noise_rngs[c],
                                     input.record_telemetry ? &result.telemetry : nullptr);
      }
      break;
    }
  }

  for (int c = 0; c < n_campaigns; ++c) {
    CampaignSummary& s = result.campaigns[c];
    s.spent = states[c].spent;
    s.impressions = states[c].impressions;
    if (controllers[c]) {
      s.epochs = controllers[c]->epochs();
      s.final_multipliers = controllers[c]->state();
    }
  }
  return result;
}

}  // namespace adsim
