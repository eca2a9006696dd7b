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

#include "adsim/runner.h"

#include <fstream>

#include "absl/strings/str_cat.h"
#include "absl/strings/str_format.h"

namespace adsim {

namespace {

template <typename T>
absl::StatusOr<std::vector<T>> Collect(std::vector<absl::StatusOr<T>> results) {
  std::vector<T> out;
  out.reserve(results.size());
  for (absl::StatusOr<T>& r : results) {
    if (!r.ok()) return r.status();
    out.push_back(*std::move(r));
  }
  return out;
}

}  // namespace

uint64_t StreamSeed(const Scenario& scenario, SeedStream stream,
                    std::initializer_list<uint64_t> ids) {
  return DeriveSeed(DeriveSeed(scenario.seed, {static_cast<uint64_t>(stream)}), ids);
}

int DefaultThreads() {
  const unsigned n = std::thread::hardware_concurrency();
  return n == 0 ? 1 : static_cast<int>(n);
}

absl::StatusOr<World> BuildWorld(const Scenario& scenario) {
  absl::StatusOr<std::vector<User>> pop =
      GeneratePopulation(scenario.population, StreamSeed(scenario, SeedStream::kPopulation));
  if (!pop.ok()) return pop.status();
  World world;
  world.population = *std::move(pop);
  return world;
}

absl::StatusOr<AudiencePair> ReplicationAudiences(const Scenario& scenario, const World& world,
                                                  int replication) {
  const uint64_t rep = static_cast<uint64_t>(replication);
  absl::StatusOr<std::vector<std::vector<User>>> parts = PartitionAudience(
      world.population, 2, scenario.audience.balance, scenario.audience.partition_size,
      StreamSeed(scenario, SeedStream::kPartition, {rep}));
  if (!parts.ok()) return parts.status();
  AudiencePair pair;
  for (int k = 0; k < 2; ++k) {
    Rng rng(StreamSeed(scenario, SeedStream::kMatch, {rep, static_cast<uint64_t>(k)}));
    absl::StatusOr<MatchedAudience> m =
        MatchCustomAudience((*parts)[k], scenario.audience.match_rates, rng);
    if (!m.ok()) return m.status();
    (k == 0 ? pair.first : pair.second) = *std::move(m);
  }
  return pair;
}

CampaignConfig CreativeCampaign(const Scenario& scenario, const CreativeSpec& creative,
                                Category category) {
  CampaignConfig c = scenario.campaign;
  c.id = creative.id;
  c.category = category;
  c.creative_affinity = creative.affinity;
  return c;
}

absl::StatusOr<std::vector<PairedResult>> RunPairedSet(const Scenario& scenario,
                                                       const World& world, int threads) {
  const int reps = scenario.replications;
  const int creatives = static_cast<int>(scenario.creatives.size());
  const int attrs = static_cast<int>(scenario.paired.attributes.size());
  if (creatives == 0) return absl::InvalidArgumentError("scenario has no creatives");

  // Audiences are shared by every run of a replication.
  std::vector<absl::StatusOr<AudiencePair>> audiences = ParallelMap<AudiencePair>(
      reps, threads, [&](int r) { return ReplicationAudiences(scenario, world, r); });
  for (const auto& a : audiences) {
    if (!a.ok()) return a.status();
  }

  const std::function<absl::StatusOr<PairedResult>(int)> run = [&](int i) {
    const int r = i / (creatives * attrs);
    const int c = (i / attrs) % creatives;
    const int a = i % attrs;
    const CreativeSpec& creative = scenario.creatives[c];
    const AudiencePair& pair = *audiences[r];
    PairedSetup setup;
    setup.creative_id = creative.id;
    setup.creative = CreativeCampaign(scenario, creative, Category::kNone);
    setup.attribute = scenario.paired.attributes[a];
    setup.replication = r;
    // Alternate which partition receives VRS.
    setup.audience_vrs = r % 2 == 0 ? pair.first : pair.second;
    setup.audience_no_vrs = r % 2 == 0 ? pair.second : pair.first;
    setup.params = scenario.auction;
    setup.controller = scenario.controller;
    setup.vrs_category = scenario.paired.vrs_category;
    setup.control_category = scenario.paired.control_category;
    return RunPairedExperiment(
        setup, StreamSeed(scenario, SeedStream::kPaired,
                          {static_cast<uint64_t>(r), static_cast<uint64_t>(c),
                           static_cast<uint64_t>(a)}));
  };
  return Collect(ParallelMap<PairedResult>(reps * creatives * attrs, threads, run));
}

absl::StatusOr<std::vector<SplitComparison>> RunSplitSet(const Scenario& scenario,
                                                         const World& world, int threads) {
  const int reps = scenario.replications;
  const int creatives = static_cast<int>(scenario.creatives.size());
  if (creatives == 0) return absl::InvalidArgumentError("scenario has no creatives");
  const std::function<absl::StatusOr<SplitComparison>(int)> run = [&](int i) -> absl::StatusOr<SplitComparison> {
    const int r = i / creatives;
    const int c = i % creatives;
    absl::StatusOr<AudiencePair> pair = ReplicationAudiences(scenario, world, r);
    if (!pair.ok()) return pair.status();
    const CreativeSpec& creative = scenario.creatives[c];
    SplitSetup setup;
    setup.creative_id = creative.id;
    setup.creative = CreativeCampaign(scenario, creative, Category::kNone);
    setup.creative.id = absl::StrCat(creative.id, "-r", r);
    setup.cells = scenario.split.cells;
    setup.audience_vrs = r % 2 == 0 ? pair->first : pair->second;
    setup.audience_split = r % 2 == 0 ? pair->second : pair->first;
    setup.params = scenario.auction;
    setup.controller = scenario.controller;
    setup.vrs_category = scenario.split.vrs_category;
    return CompareVrsVsSplit(
        setup, StreamSeed(scenario, SeedStream::kSplit,
                          {static_cast<uint64_t>(r), static_cast<uint64_t>(c)}));
  };
  return Collect(ParallelMap<SplitComparison>(reps * creatives, threads, run));
}

absl::StatusOr<SingleRun> RunSingle(const Scenario& scenario, const World& world) {
  if (scenario.creatives.empty()) return absl::InvalidArgumentError("scenario has no creatives");
  absl::StatusOr<AudiencePair> pair = ReplicationAudiences(scenario, world, 0);
  if (!pair.ok()) return pair.status();
  SimulationInput input;
  input.params = scenario.auction;
  input.controller = scenario.controller;
  for (const CreativeSpec& creative : scenario.creatives) {
    CampaignConfig c = CreativeCampaign(scenario, creative, creative.category);
    c.audience = pair->first;
    input.campaigns.push_back(std::move(c));
  }
  absl::StatusOr<SimulationResult> sim =
      Simulate(input, StreamSeed(scenario, SeedStream::kSingle));
  if (!sim.ok()) return sim.status();
  SingleRun out;
  out.result = *std::move(sim);
  for (int i = 0; i < static_cast<int>(input.campaigns.size()); ++i) {
    absl::StatusOr<ArmMetrics> arm = MeasureArm(out.result, i, pair->first.matched);
    if (!arm.ok()) return arm.status();
    out.reports.push_back(arm->report);
  }
  return out;
}

absl::StatusOr<ComplianceSet> RunComplianceSet(const Scenario& scenario, const World& world,
                                               int threads) {
  const int reps = scenario.replications;
  const int creatives = static_cast<int>(scenario.creatives.size());
  if (creatives == 0) return absl::InvalidArgumentError("scenario has no creatives");
  struct One {
    ComplianceInput input;
    VarianceReport report;
  };
  const std::function<absl::StatusOr<One>(int)> run = [&](int i) -> absl::StatusOr<One> {
    const int r = i / creatives;
    const int c = i % creatives;
    absl::StatusOr<AudiencePair> pair = ReplicationAudiences(scenario, world, r);
    if (!pair.ok()) return pair.status();
    SimulationInput input;
    input.params = scenario.auction;
    input.controller = scenario.controller;
    input.record_telemetry = false;
    CampaignConfig campaign =
        CreativeCampaign(scenario, scenario.creatives[c], scenario.paired.vrs_category);
    campaign.id = absl::StrCat(scenario.creatives[c].id, "-r", r);
    campaign.audience = pair->first;
    input.campaigns.push_back(std::move(campaign));
    absl::StatusOr<SimulationResult> sim = Simulate(
        input, StreamSeed(scenario, SeedStream::kCompliance,
                          {static_cast<uint64_t>(r), static_cast<uint64_t>(c)}));
    if (!sim.ok()) return sim.status();
    absl::StatusOr<ArmMetrics> arm = MeasureArm(*sim, 0, pair->first.matched);
    if (!arm.ok()) return arm.status();
    One one;
    one.input.campaign_id = sim->campaigns[0].id;
    one.input.impressions = sim->log.ForCampaign(0);
    one.input.eligible_gender = sim->campaigns[0].eligible_gender;
    one.input.eligible_race = sim->campaigns[0].eligible_race;
    one.report = arm->report;
    return one;
  };
  absl::StatusOr<std::vector<One>> all = Collect(ParallelMap<One>(reps * creatives, threads, run));
  if (!all.ok()) return all.status();
  ComplianceSet out;
  for (One& one : *all) {
    out.inputs.push_back(std::move(one.input));
    out.reports.push_back(std::move(one.report));
  }
  return out;
}

absl::StatusOr<std::vector<AdStat>> CoverageAds(const Scenario& scenario,
                                                std::vector<IngestIssue>* malformed) {
  if (scenario.coverage.ad_stats_csv.empty()) {
    return GeneratePowerlawAds(scenario.coverage.powerlaw,
                               StreamSeed(scenario, SeedStream::kCoverage, {0}));
  }
  std::ifstream in(scenario.coverage.ad_stats_csv);
  if (!in) {
    return absl::NotFoundError(
        absl::StrCat("cannot open ad stats file ", scenario.coverage.ad_stats_csv));
  }
  absl::StatusOr<IngestResult> ingest = IngestAdStatsCsv(in);
  if (!ingest.ok()) return ingest.status();
  if (malformed != nullptr) *malformed = ingest->malformed;
  return ingest->ads;
}

std::vector<CoverageResult> SettlementCoverage(std::span<const VarianceReport> reports,
                                               const CoverageTargets& targets) {
  std::vector<CoverageResult> out;
  for (const CoverageCell& cell : targets) {
    absl::StatusOr<CoverageResult> r =
        Coverage(reports, cell.attribute, cell.threshold, cell.floor, targets);
    if (r.ok()) out.push_back(*r);
  }
  return out;
}

void WriteCoverageCsv(std::ostream& out, std::span<const CoverageResult> rows) {
  out << "attribute,threshold,floor,qualifying,within,coverage,target,pass\n";
  for (const CoverageResult& r : rows) {
    out << absl::StrFormat("%s,%.2f,%d,%d,%d,%.6f,%s,%d\n", Label(r.attribute), r.threshold,
                           r.floor, r.qualifying, r.within, r.coverage,
                           r.target ? absl::StrFormat("%.3f", *r.target) : "", r.pass ? 1 : 0);
  }
}

}  // namespace adsim
