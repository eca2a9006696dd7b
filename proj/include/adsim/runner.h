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

// Orchestration of scenario runs. Every run gets its own seed from the
// scenario's master seed, so results do not depend on the worker count.

#ifndef ADSIM_RUNNER_H_
#define ADSIM_RUNNER_H_

#include <atomic>
#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <thread>
#include <vector>

#include "absl/status/statusor.h"
#include "adsim/audit.h"
#include "adsim/compliance.h"
#include "adsim/coverage_analyzer.h"
#include "adsim/scenario.h"

namespace adsim {

// Seed stream ids under the master seed.
enum class SeedStream : uint64_t {
  kPopulation = 1,
  kPartition = 2,
  kMatch = 3,
  kPaired = 4,
  kSplit = 5,
  kSingle = 6,
  kCompliance = 7,
  kCoverage = 8,
  kExport = 9,
};

uint64_t StreamSeed(const Scenario& scenario, SeedStream stream,
                    std::initializer_list<uint64_t> ids = {});

struct World {
  std::vector<User> population;
};

absl::StatusOr<World> BuildWorld(const Scenario& scenario);

// Two disjoint, balance-matched custom audiences for one replication.
struct AudiencePair {
  MatchedAudience first;
  MatchedAudience second;
};

absl::StatusOr<AudiencePair> ReplicationAudiences(const Scenario& scenario, const World& world,
                                                  int replication);

// The scenario's campaign template with the creative's id and affinities.
CampaignConfig CreativeCampaign(const Scenario& scenario, const CreativeSpec& creative,
                                Category category);

// Runs fn(0..n-1) on up to `threads` workers; results keep index order.
template <typename T>
std::vector<absl::StatusOr<T>> ParallelMap(int n, int threads,
                                           const std::function<absl::StatusOr<T>(int)>& fn);

// Ordered by replication, then creative, then attribute.
absl::StatusOr<std::vector<PairedResult>> RunPairedSet(const Scenario& scenario,
                                                       const World& world, int threads);

// Ordered by replication, then creative.
absl::StatusOr<std::vector<SplitComparison>> RunSplitSet(const Scenario& scenario,
                                                         const World& world, int threads);

// Every creative in one run on the first audience of replication 0, each
// under its own category.
struct SingleRun {
  SimulationResult result;
  std::vector<VarianceReport> reports;
};

absl::StatusOr<SingleRun> RunSingle(const Scenario& scenario, const World& world);

// One VRS run per replication and creative under the paired VRS category;
// each campaign becomes one compliance input.
struct ComplianceSet {
  std::vector<ComplianceInput> inputs;
  std::vector<VarianceReport> reports;
};

absl::StatusOr<ComplianceSet> RunComplianceSet(const Scenario& scenario, const World& world,
                                               int threads);

// Reads the scenario's ad-stats file or draws a power-law population.
absl::StatusOr<std::vector<AdStat>> CoverageAds(const Scenario& scenario,
                                                std::vector<IngestIssue>* malformed);

// Coverage of every settlement cell over the given reports; cells with no
// qualifying ads are skipped.
std::vector<CoverageResult> SettlementCoverage(std::span<const VarianceReport> reports,
                                               const CoverageTargets& targets);

void WriteCoverageCsv(std::ostream& out, std::span<const CoverageResult> rows);

int DefaultThreads();

// ---------------------------------------------------------------------------

template <typename T>
std::vector<absl::StatusOr<T>> ParallelMap(int n, int threads,
                                           const std::function<absl::StatusOr<T>(int)>& fn) {
  std::vector<absl::StatusOr<T>> out(n, absl::UnknownError("not run"));
  std::atomic<int> next{0};
  auto worker = [&] {
    for (int i = next++; i < n; i = next++) out[i] = fn(i);
  };
  const int workers = std::max(1, std::min(threads, n));
  if (workers == 1) {
    worker();
    return out;
  }
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
  for (std::thread& t : pool) t.join();
  return out;
}

}  // namespace adsim

#endif  // ADSIM_RUNNER_H_
