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

#ifndef ADSIM_IMPRESSION_H_
#define ADSIM_IMPRESSION_H_

#include <cstdint>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "absl/strings/string_view.h"
#include "adsim/demographics.h"
#include "adsim/money.h"

namespace adsim {

// One delivered impression. The recipient's demographics are captured at
// delivery time so every metric can be computed from the log alone.
struct Impression {
  int campaign = 0;  // index into ImpressionLog::campaign_ids
  int64_t user_id = 0;
  double time_hours = 0.0;
  Micros price;
  Gender gender = Gender::kUnknown;
  Race true_race = Race::kOther;
  Race estimated_race = Race::kUnknown;
  int dma = 0;
};

Impression MakeImpression(int campaign, const User& user, double time_hours, Micros price);

// Time-ordered impression records for one simulation run.
struct ImpressionLog {
  std::vector<std::string> campaign_ids;
  std::vector<Impression> records;

  // Index of `id` in campaign_ids, or -1.
  int CampaignIndex(absl::string_view id) const;
  std::vector<Impression> ForCampaign(absl::string_view id) const;
  std::vector<Impression> ForCampaign(int index) const;
};

// CSV: campaign_id,user_id,time_hours,price_usd
void WriteImpressionLogCsv(std::ostream& out, const ImpressionLog& log);

}  // namespace adsim

#endif  // ADSIM_IMPRESSION_H_
