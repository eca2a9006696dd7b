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

#include "adsim/impression.h"

#include <cstdlib>

#include "absl/strings/str_format.h"

namespace adsim {

std::string FormatUsd(Micros amount) {
  const int64_t v = amount.value();
  const int64_t mag = std::llabs(v);
  return absl::StrFormat("%s%d.%06d", v < 0 ? "-" : "", mag / 1000000, mag % 1000000);
}

Impression MakeImpression(int campaign, const User& user, double time_hours, Micros price) {
  Impression imp;
  imp.campaign = campaign;
  imp.user_id = user.id;
  imp.time_hours = time_hours;
  imp.price = price;
  imp.gender = user.gender;
  imp.true_race = user.true_race;
  imp.estimated_race = user.estimated_race;
  imp.dma = user.dma;
  return imp;
}

int ImpressionLog::CampaignIndex(absl::string_view id) const {
  for (size_t i = 0; i < campaign_ids.size(); ++i) {
    if (campaign_ids[i] == id) return static_cast<int>(i);
  }
  return -1;
}

std::vector<Impression> ImpressionLog::ForCampaign(int index) const {
  std::vector<Impression> out;
  for (const Impression& imp : records) {
    if (imp.campaign == index) out.push_back(imp);
  }
  return out;
}

std::vector<Impression> ImpressionLog::ForCampaign(absl::string_view id) const {
  const int index = CampaignIndex(id);
  if (index < 0) return {};
  return ForCampaign(index);
}

void WriteImpressionLogCsv(std::ostream& out, const ImpressionLog& log) {
  out << "campaign_id,user_id,time_hours,price_usd\n";
  for (const Impression& imp : log.records) {
    out << absl::StrFormat("%s,%d,%.9f,%s\n", log.campaign_ids[imp.campaign], imp.user_id,
                           imp.time_hours, FormatUsd(imp.price));
  }
}

}  // namespace adsim
