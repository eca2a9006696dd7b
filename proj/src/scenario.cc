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

#include "adsim/scenario.h"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <limits>
#include <set>

#include "absl/strings/str_cat.h"
#include "absl/strings/str_format.h"
#include "absl/strings/str_join.h"

namespace adsim {

namespace {

using nlohmann::json;

// First error wins; every later call becomes a no-op.
class Reader {
 public:
  bool ok() const { return status_.ok(); }
  absl::Status status() const { return status_; }

  void Fail(const std::string& path, absl::string_view message) {
    if (status_.ok()) status_ = absl::InvalidArgumentError(absl::StrCat(path, ": ", message));
  }

  // Rejects keys outside `allowed`, suggesting the nearest allowed key.
  bool Object(const json& j, const std::string& path, std::initializer_list<const char*> allowed) {
    if (!ok()) return false;
    if (!j.is_object()) {
      Fail(path.empty() ? "<root>" : path, "expected an object");
      return false;
    }
    for (const auto& [key, value] : j.items()) {
      bool known = false;
      const char* best = nullptr;
      int best_d = std::numeric_limits<int>::max();
      for (const char* a : allowed) {
        if (key == a) known = true;
        // Also compare against the stem, so "bugdet" finds "budget_usd".
        const absl::string_view full(a);
        const int d = std::min(EditDistance(key, full),
                               EditDistance(key, full.substr(0, full.find('_'))));
        if (d < best_d) {
          best_d = d;
          best = a;
        }
      }
      if (known) continue;
      std::string msg = absl::StrCat("unknown key \"", key, "\"");
      if (best != nullptr && best_d <= std::max<int>(2, static_cast<int>(key.size()) / 3)) {
        absl::StrAppend(&msg, "; did you mean \"", best, "\"?");
      }
      Fail(Join(path, key), msg);
      return false;
    }
    return true;
  }

  static std::string Join(const std::string& path, absl::string_view key) {
    return path.empty() ? std::string(key) : absl::StrCat(path, ".", key);
  }

  void Number(const json& j, const std::string& path, const char* key, double* out) {
    if (!ok() || !j.contains(key)) return;
    const json& v = j.at(key);
    if (!v.is_number() || !std::isfinite(v.get<double>())) {
      Fail(Join(path, key), "expected a finite number");
      return;
    }
    *out = v.get<double>();
  }

  template <typename Int>
  void Integer(const json& j, const std::string& path, const char* key, Int* out) {
    if (!ok() || !j.contains(key)) return;
    const json& v = j.at(key);
    if (v.is_number_integer()) {
      if constexpr (std::is_unsigned_v<Int>) {
        if (v.is_number_unsigned() || v.get<int64_t>() >= 0) {
          *out = v.get<Int>();
          return;
        }
      } else {
        *out = v.get<Int>();
        return;
      }
    }
    Fail(Join(path, key), "expected an integer");
  }

  void Bool(const json& j, const std::string& path, const char* key, bool* out) {
    if (!ok() || !j.contains(key)) return;
    if (!j.at(key).is_boolean()) {
      Fail(Join(path, key), "expected true or false");
      return;
    }
    *out = j.at(key).get<bool>();
  }

  void String(const json& j, const std::string& path, const char* key, std::string* out) {
    if (!ok() || !j.contains(key)) return;
    if (!j.at(key).is_string()) {
      Fail(Join(path, key), "expected a string");
      return;
    }
    *out = j.at(key).get<std::string>();
  }

  template <typename T>
  void Enum(const json& j, const std::string& path, const char* key, T* out,
            absl::StatusOr<T> (*parse)(absl::string_view)) {
    std::string text;
    if (!ok() || !j.contains(key)) return;
    String(j, path, key, &text);
    if (!ok()) return;
    absl::StatusOr<T> v = parse(text);
    if (!v.ok()) {
      Fail(Join(path, key), v.status().message());
      return;
    }
    *out = *v;
  }

  const json* Array(const json& j, const std::string& path, const char* key) {
    if (!ok() || !j.contains(key)) return nullptr;
    if (!j.at(key).is_array()) {
      Fail(Join(path, key), "expected an array");
      return nullptr;
    }
    return &j.at(key);
  }

  void Require(const json& j, const std::string& path, const char* key) {
    if (ok() && !j.contains(key)) Fail(Join(path, key), "required field is missing");
  }

  void Positive(const std::string& path, double v) {
    if (ok() && !(v > 0)) Fail(path, "must be > 0");
  }
  void NonNegative(const std::string& path, double v) {
    if (ok() && !(v >= 0)) Fail(path, "must be >= 0");
  }

 private:
  absl::Status status_;
};

std::string Index(const std::string& path, size_t i) { return absl::StrCat(path, "[", i, "]"); }

absl::StatusOr<ExperimentType> ParseExperiment(absl::string_view text) {
  if (text == "single" || text == "simulate") return ExperimentType::kSingle;
  if (text == "paired") return ExperimentType::kPaired;
  if (text == "split") return ExperimentType::kSplit;
  if (text == "coverage") return ExperimentType::kCoverageAnalysis;
  if (text == "compliance") return ExperimentType::kComplianceExport;
  return absl::InvalidArgumentError(absl::StrCat(
      "unknown experiment '", text, "' (single, paired, split, coverage, compliance)"));
}

absl::StatusOr<PopulationMode> ParseMode(absl::string_view text) {
  if (text == "enumeration") return PopulationMode::kEnumeration;
  if (text == "sampling") return PopulationMode::kSampling;
  return absl::InvalidArgumentError(absl::StrCat("unknown mode '", text, "'"));
}

void ReadLogNormal(Reader& r, const json& j, const std::string& path, const char* key,
                   LogNormalParams* out) {
  if (!r.ok() || !j.contains(key)) return;
  const std::string p = Reader::Join(path, key);
  if (!r.Object(j.at(key), p, {"mu", "sigma"})) return;
  r.Number(j.at(key), p, "mu", &out->mu);
  r.Number(j.at(key), p, "sigma", &out->sigma);
  r.NonNegative(p + ".sigma", out->sigma);
}

// {"gender": "F", "race": "AA"} with both required.
void ReadCell(Reader& r, const json& j, const std::string& path, Cell* cell) {
  r.Require(j, path, "gender");
  r.Require(j, path, "race");
  r.Enum(j, path, "gender", &cell->gender, &ParseGender);
  r.Enum(j, path, "race", &cell->race, &ParseRace);
}

// Either field may be omitted as a wildcard.
void ReadCellKey(Reader& r, const json& j, const std::string& path, CellKey* key) {
  if (j.contains("gender")) {
    Gender g = Gender::kUnknown;
    r.Enum(j, path, "gender", &g, &ParseGender);
    key->gender = g;
  }
  if (j.contains("race")) {
    Race race = Race::kUnknown;
    r.Enum(j, path, "race", &race, &ParseRace);
    key->race = race;
  }
}

void ReadPopulation(Reader& r, const json& j, PopulationSpec* pop) {
  const std::string path = "population";
  if (!r.Object(j, path, {"n", "mode", "cells", "activity_weight", "session_rate", "dma", "bisg",
                          "first_id"})) {
    return;
  }
  r.Require(j, path, "n");
  r.Require(j, path, "cells");
  r.Integer(j, path, "n", &pop->n);
  r.Enum(j, path, "mode", &pop->mode, &ParseMode);
  r.Integer(j, path, "first_id", &pop->first_id);
  if (const json* cells = r.Array(j, path, "cells")) {
    for (size_t i = 0; i < cells->size() && r.ok(); ++i) {
      const std::string p = Index(path + ".cells", i);
      const json& c = (*cells)[i];
      if (!r.Object(c, p, {"gender", "race", "proportion"})) return;
      CellProportion cp;
      ReadCell(r, c, p, &cp.cell);
      r.Require(c, p, "proportion");
      r.Number(c, p, "proportion", &cp.proportion);
      r.NonNegative(p + ".proportion", cp.proportion);
      pop->cells.push_back(cp);
    }
  }
  ReadLogNormal(r, j, path, "activity_weight", &pop->activity_weight);
  ReadLogNormal(r, j, path, "session_rate", &pop->session_rate);
  if (j.contains("dma")) {
    const std::string p = path + ".dma";
    const json& d = j.at("dma");
    if (r.Object(d, p, {"proxy", "dmas_per_race", "dma_count"})) {
      r.Bool(d, p, "proxy", &pop->dma.proxy);
      r.Integer(d, p, "dmas_per_race", &pop->dma.dmas_per_race);
      r.Integer(d, p, "dma_count", &pop->dma.dma_count);
    }
  }
  if (j.contains("bisg")) {
    const std::string p = path + ".bisg";
    const json& b = j.at("bisg");
    if (!r.Object(b, p, {"threshold", "confusion"})) return;
    double threshold = 0.5;
    r.Number(b, p, "threshold", &threshold);
    std::array<BisgConfusionModel::Row, kRaceGroups> rows{};
    for (int i = 0; i < kRaceGroups; ++i) rows[i][i] = 1.0;
    if (const json* m = r.Array(b, p, "confusion")) {
      if (m->size() != kRaceGroups) {
        r.Fail(p + ".confusion", "expected 4 rows (AA, H, W, O)");
        return;
      }
      for (int i = 0; i < kRaceGroups && r.ok(); ++i) {
        const json& row = (*m)[i];
        if (!row.is_array() || row.size() != kRaceGroups) {
          r.Fail(Index(p + ".confusion", i), "expected 4 numbers");
          return;
        }
        for (int k = 0; k < kRaceGroups; ++k) {
          if (!row[k].is_number()) {
            r.Fail(Index(p + ".confusion", i), "expected 4 numbers");
            return;
          }
          rows[i][k] = row[k].get<double>();
        }
      }
    }
    if (!r.ok()) return;
    absl::StatusOr<BisgConfusionModel> model = BisgConfusionModel::Create(rows, threshold);
    if (!model.ok()) {
      r.Fail(p, model.status().message());
      return;
    }
    pop->bisg = *model;
  }
  if (r.ok()) {
    if (absl::Status s = ValidatePopulationSpec(*pop); !s.ok()) r.Fail(path, s.message());
  }
}

void ReadAudience(Reader& r, const json& j, AudienceSpec* a) {
  const std::string path = "audience";
  if (!r.Object(j, path, {"partition_size", "balance", "match_rates"})) return;
  r.Integer(j, path, "partition_size", &a->partition_size);
  r.NonNegative(path + ".partition_size", static_cast<double>(a->partition_size));
  if (const json* bal = r.Array(j, path, "balance")) {
    for (size_t i = 0; i < bal->size() && r.ok(); ++i) {
      const std::string p = Index(path + ".balance", i);
      if (!r.Object((*bal)[i], p, {"gender", "race", "proportion"})) return;
      BalanceTarget t;
      ReadCellKey(r, (*bal)[i], p, &t.key);
      r.Require((*bal)[i], p, "proportion");
      r.Number((*bal)[i], p, "proportion", &t.proportion);
      r.NonNegative(p + ".proportion", t.proportion);
      a->balance.push_back(t);
    }
  }
  if (j.contains("match_rates")) {
    const std::string p = path + ".match_rates";
    const json& m = j.at("match_rates");
    if (!r.Object(m, p, {"default", "by_race", "by_gender", "by_cell"})) return;
    MatchRates rates;
    if (m.contains("default")) {
      double d = 1.0;
      r.Number(m, p, "default", &d);
      rates.default_rate = d;
    }
    auto rate_ok = [&](const std::string& where, double v) {
      if (r.ok() && !(v >= 0 && v <= 1)) r.Fail(where, "must be in [0, 1]");
    };
    if (rates.default_rate) rate_ok(p + ".default", *rates.default_rate);
    if (m.contains("by_race")) {
      if (!r.Object(m.at("by_race"), p + ".by_race", {"AA", "H", "W", "O"})) return;
      for (const auto& [k, v] : m.at("by_race").items()) {
        double x = 0;
        r.Number(m.at("by_race"), p + ".by_race", k.c_str(), &x);
        rate_ok(p + ".by_race." + k, x);
        rates.by_race[*ParseRace(k)] = x;
      }
    }
    if (m.contains("by_gender")) {
      if (!r.Object(m.at("by_gender"), p + ".by_gender", {"M", "F"})) return;
      for (const auto& [k, v] : m.at("by_gender").items()) {
        double x = 0;
        r.Number(m.at("by_gender"), p + ".by_gender", k.c_str(), &x);
        rate_ok(p + ".by_gender." + k, x);
        rates.by_gender[*ParseGender(k)] = x;
      }
    }
    if (const json* cells = r.Array(m, p, "by_cell")) {
      for (size_t i = 0; i < cells->size() && r.ok(); ++i) {
        const std::string q = Index(p + ".by_cell", i);
        if (!r.Object((*cells)[i], q, {"gender", "race", "rate"})) return;
        Cell cell;
        double x = 0;
        ReadCell(r, (*cells)[i], q, &cell);
        r.Require((*cells)[i], q, "rate");
        r.Number((*cells)[i], q, "rate", &x);
        rate_ok(q + ".rate", x);
        rates.by_cell[cell] = x;
      }
    }
    a->match_rates = rates;
  }
}

void ReadCampaign(Reader& r, const json& j, CampaignConfig* c) {
  const std::string path = "campaign";
  if (!r.Object(j, path, {"budget_usd", "duration_hours", "base_bid_usd", "quality", "base_ear"})) {
    return;
  }
  double budget = c->budget.usd();
  r.Number(j, path, "budget_usd", &budget);
  r.Positive(path + ".budget_usd", budget);
  c->budget = Micros::FromUsd(budget);
  r.Number(j, path, "duration_hours", &c->duration_hours);
  r.Positive(path + ".duration_hours", c->duration_hours);
  r.Number(j, path, "base_bid_usd", &c->base_bid);
  r.Positive(path + ".base_bid_usd", c->base_bid);
  r.Number(j, path, "quality", &c->quality);
  r.NonNegative(path + ".quality", c->quality);
  r.Number(j, path, "base_ear", &c->base_ear);
  if (r.ok() && !(c->base_ear > 0 && c->base_ear <= 1)) r.Fail(path + ".base_ear", "must be in (0, 1]");
}

void ReadCreatives(Reader& r, const json& j, std::vector<CreativeSpec>* out) {
  const std::string path = "creatives";
  if (!j.is_array() || j.empty()) {
    r.Fail(path, "expected a nonempty array");
    return;
  }
  std::set<std::string> ids;
  for (size_t i = 0; i < j.size() && r.ok(); ++i) {
    const std::string p = Index(path, i);
    const json& c = j[i];
    if (!r.Object(c, p, {"id", "category", "affinity"})) return;
    CreativeSpec spec;
    r.Require(c, p, "id");
    r.String(c, p, "id", &spec.id);
    if (r.ok() && spec.id.empty()) r.Fail(p + ".id", "must not be empty");
    if (r.ok() && !ids.insert(spec.id).second) r.Fail(p + ".id", "duplicate creative id");
    r.Enum(c, p, "category", &spec.category, &ParseCategory);
    if (const json* aff = r.Array(c, p, "affinity")) {
      for (size_t k = 0; k < aff->size() && r.ok(); ++k) {
        const std::string q = Index(p + ".affinity", k);
        if (!r.Object((*aff)[k], q, {"gender", "race", "value"})) return;
        Cell cell;
        double v = 1.0;
        ReadCell(r, (*aff)[k], q, &cell);
        r.Require((*aff)[k], q, "value");
        r.Number((*aff)[k], q, "value", &v);
        r.Positive(q + ".value", v);
        spec.affinity[cell] = v;
      }
    }
    out->push_back(std::move(spec));
  }
}

void ReadAuction(Reader& r, const json& j, AuctionParams* a) {
  const std::string path = "auction";
  if (!r.Object(j, path, {"ear_floor", "price_cap_usd", "decay", "pacing_time_constant_hours",
                          "background"})) {
    return;
  }
  r.Number(j, path, "ear_floor", &a->ear_floor);
  double cap = a->price_cap.usd();
  r.Number(j, path, "price_cap_usd", &cap);
  a->price_cap = Micros::FromUsd(cap);
  r.Number(j, path, "decay", &a->decay);
  r.Number(j, path, "pacing_time_constant_hours", &a->pacing_time_constant_hours);
  if (j.contains("background")) {
    const std::string p = path + ".background";
    const json& b = j.at("background");
    if (!r.Object(b, p, {"median", "sigma", "by_cell"})) return;
    r.Number(b, p, "median", &a->background.fallback.median);
    r.Number(b, p, "sigma", &a->background.fallback.sigma);
    if (const json* cells = r.Array(b, p, "by_cell")) {
      for (size_t i = 0; i < cells->size() && r.ok(); ++i) {
        const std::string q = Index(p + ".by_cell", i);
        if (!r.Object((*cells)[i], q, {"gender", "race", "median", "sigma"})) return;
        Cell cell;
        BackgroundParams bp = a->background.fallback;
        ReadCell(r, (*cells)[i], q, &cell);
        r.Number((*cells)[i], q, "median", &bp.median);
        r.Number((*cells)[i], q, "sigma", &bp.sigma);
        a->background.by_cell[cell] = bp;
      }
    }
  }
  if (r.ok()) {
    if (absl::Status s = ValidateAuctionParams(*a); !s.ok()) r.Fail(path, s.message());
  }
}

void ReadController(Reader& r, const json& j, VrsControllerConfig* c) {
  const std::string path = "controller";
  if (!r.Object(j, path, {"epoch_k", "epsilon", "noise", "step_eta", "m_min", "m_max", "deadband",
                          "target_housing", "target_employment", "target_credit",
                          "eligible_sample_size"})) {
    return;
  }
  r.Integer(j, path, "epoch_k", &c->epoch_k);
  r.Number(j, path, "epsilon", &c->epsilon);
  r.Bool(j, path, "noise", &c->noise);
  r.Number(j, path, "step_eta", &c->step_eta);
  r.Number(j, path, "m_min", &c->m_min);
  r.Number(j, path, "m_max", &c->m_max);
  r.Number(j, path, "deadband", &c->deadband);
  r.Number(j, path, "target_housing", &c->target_housing);
  r.Number(j, path, "target_employment", &c->target_employment);
  r.Number(j, path, "target_credit", &c->target_credit);
  r.Integer(j, path, "eligible_sample_size", &c->eligible_sample_size);
  if (r.ok()) {
    if (absl::Status s = ValidateControllerConfig(*c); !s.ok()) r.Fail(path, s.message());
  }
}

void ReadPaired(Reader& r, const json& j, PairedSpec* p) {
  const std::string path = "paired";
  if (!r.Object(j, path, {"attributes", "vrs_category", "control_category"})) return;
  if (const json* attrs = r.Array(j, path, "attributes")) {
    p->attributes.clear();
    for (size_t i = 0; i < attrs->size() && r.ok(); ++i) {
      if (!(*attrs)[i].is_string()) {
        r.Fail(Index(path + ".attributes", i), "expected \"gender\" or \"race\"");
        return;
      }
      absl::StatusOr<Attribute> a = ParseAttribute((*attrs)[i].get<std::string>());
      if (!a.ok()) {
        r.Fail(Index(path + ".attributes", i), a.status().message());
        return;
      }
      p->attributes.push_back(*a);
    }
    if (r.ok() && p->attributes.empty()) r.Fail(path + ".attributes", "must not be empty");
  }
  r.Enum(j, path, "vrs_category", &p->vrs_category, &ParseCategory);
  r.Enum(j, path, "control_category", &p->control_category, &ParseCategory);
}

void ReadSplit(Reader& r, const json& j, SplitSpec* s) {
  const std::string path = "split";
  if (!r.Object(j, path, {"cells", "vrs_category"})) return;
  if (const json* cells = r.Array(j, path, "cells")) {
    s->cells.clear();
    for (size_t i = 0; i < cells->size() && r.ok(); ++i) {
      const std::string p = Index(path + ".cells", i);
      if (!r.Object((*cells)[i], p, {"gender", "race"})) return;
      CellKey key;
      ReadCellKey(r, (*cells)[i], p, &key);
      s->cells.push_back(key);
    }
    if (r.ok() && s->cells.empty()) r.Fail(path + ".cells", "must not be empty");
  }
  r.Enum(j, path, "vrs_category", &s->vrs_category, &ParseCategory);
}

void ReadCoverage(Reader& r, const json& j, const std::string& base_dir, CoverageSpec* c) {
  const std::string path = "coverage";
  if (!r.Object(j, path, {"ad_stats_csv", "n", "alpha", "x_min", "x_max",
                          "cost_per_impression_usd", "jitter_sigma", "random_trials"})) {
    return;
  }
  r.String(j, path, "ad_stats_csv", &c->ad_stats_csv);
  if (!c->ad_stats_csv.empty() && std::filesystem::path(c->ad_stats_csv).is_relative()) {
    c->ad_stats_csv = (std::filesystem::path(base_dir) / c->ad_stats_csv).string();
  }
  r.Integer(j, path, "n", &c->powerlaw.n);
  r.Number(j, path, "alpha", &c->powerlaw.alpha);
  r.Integer(j, path, "x_min", &c->powerlaw.x_min);
  r.Integer(j, path, "x_max", &c->powerlaw.x_max);
  r.Number(j, path, "cost_per_impression_usd", &c->powerlaw.cost_per_impression_usd);
  r.Number(j, path, "jitter_sigma", &c->powerlaw.jitter_sigma);
  r.Integer(j, path, "random_trials", &c->random_trials);
  if (r.ok() && c->powerlaw.n < 1) r.Fail(path + ".n", "must be at least 1");
  if (r.ok() && !(c->powerlaw.alpha > 1)) r.Fail(path + ".alpha", "must be > 1");
  if (r.ok() && c->powerlaw.x_min < kAdStatFloor) r.Fail(path + ".x_min", "must be at least 300");
  if (r.ok() && c->random_trials < 1) r.Fail(path + ".random_trials", "must be at least 1");
}

void ReadTargets(Reader& r, const json& j, CoverageTargets* out) {
  const std::string path = "coverage_targets";
  if (!j.is_array() || j.empty()) {
    r.Fail(path, "expected a nonempty array");
    return;
  }
  out->clear();
  for (size_t i = 0; i < j.size() && r.ok(); ++i) {
    const std::string p = Index(path, i);
    if (!r.Object(j[i], p, {"attribute", "threshold", "floor", "target"})) return;
    CoverageCell cell;
    double target = 0.0;
    for (const char* k : {"attribute", "threshold", "floor", "target"}) r.Require(j[i], p, k);
    r.Enum(j[i], p, "attribute", &cell.attribute, &ParseAttribute);
    r.Number(j[i], p, "threshold", &cell.threshold);
    r.Integer(j[i], p, "floor", &cell.floor);
    r.Number(j[i], p, "target", &target);
    if (r.ok() && !(target > 0 && target <= 1)) r.Fail(p + ".target", "must be in (0, 1]");
    if (r.ok() && !(cell.threshold > 0 && cell.threshold < 1)) {
      r.Fail(p + ".threshold", "must be in (0, 1)");
    }
    cell.target_permille = static_cast<int>(std::lround(target * 1000));
    out->push_back(cell);
  }
}

}  // namespace

absl::string_view Label(ExperimentType type) {
  switch (type) {
    case ExperimentType::kSingle:
      return "single";
    case ExperimentType::kPaired:
      return "paired";
    case ExperimentType::kSplit:
      return "split";
    case ExperimentType::kCoverageAnalysis:
      return "coverage";
    case ExperimentType::kComplianceExport:
      return "compliance";
  }
  return "single";
}

int EditDistance(absl::string_view a, absl::string_view b) {
  std::vector<int> prev(b.size() + 1), cur(b.size() + 1);
  for (size_t k = 0; k <= b.size(); ++k) prev[k] = static_cast<int>(k);
  for (size_t i = 1; i <= a.size(); ++i) {
    cur[0] = static_cast<int>(i);
    for (size_t k = 1; k <= b.size(); ++k) {
      cur[k] = std::min({prev[k] + 1, cur[k - 1] + 1, prev[k - 1] + (a[i - 1] != b[k - 1])});
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

std::string ConfigHash(const nlohmann::json& doc) { return HashedAdId(doc.dump()); }

absl::StatusOr<Scenario> ParseScenario(const nlohmann::json& doc, const std::string& base_dir) {
  Reader r;
  Scenario s;
  if (!r.Object(doc, "", {"name", "experiment", "seed", "replications", "population", "audience",
                          "campaign", "creatives", "auction", "controller", "paired", "split",
                          "coverage", "compliance", "coverage_targets"})) {
    return r.status();
  }
  r.Require(doc, "", "experiment");
  r.String(doc, "", "name", &s.name);
  r.Enum(doc, "", "experiment", &s.experiment, &ParseExperiment);
  r.Integer(doc, "", "seed", &s.seed);
  r.Integer(doc, "", "replications", &s.replications);
  if (r.ok() && s.replications < 1) r.Fail("replications", "must be at least 1");

  const bool needs_world = s.experiment != ExperimentType::kCoverageAnalysis;
  if (needs_world) {
    r.Require(doc, "", "population");
    r.Require(doc, "", "creatives");
  }
  if (r.ok() && doc.contains("population")) ReadPopulation(r, doc.at("population"), &s.population);
  if (r.ok() && doc.contains("audience")) ReadAudience(r, doc.at("audience"), &s.audience);
  if (r.ok() && doc.contains("campaign")) ReadCampaign(r, doc.at("campaign"), &s.campaign);
  if (r.ok() && doc.contains("creatives")) ReadCreatives(r, doc.at("creatives"), &s.creatives);
  if (r.ok() && doc.contains("auction")) ReadAuction(r, doc.at("auction"), &s.auction);
  if (r.ok() && doc.contains("controller")) ReadController(r, doc.at("controller"), &s.controller);
  if (r.ok() && doc.contains("paired")) ReadPaired(r, doc.at("paired"), &s.paired);
  if (r.ok() && doc.contains("split")) ReadSplit(r, doc.at("split"), &s.split);
  if (r.ok() && doc.contains("coverage")) ReadCoverage(r, doc.at("coverage"), base_dir, &s.coverage);
  if (r.ok() && doc.contains("compliance")) {
    const json& c = doc.at("compliance");
    if (r.Object(c, "compliance", {"epsilon_report", "delta"})) {
      r.Number(c, "compliance", "epsilon_report", &s.compliance.epsilon_report);
      r.Positive("compliance.epsilon_report", s.compliance.epsilon_report);
      r.Number(c, "compliance", "delta", &s.compliance.delta);
      if (r.ok() && !(s.compliance.delta > 0 && s.compliance.delta < 1)) {
        r.Fail("compliance.delta", "must be in (0, 1)");
      }
    }
  }
  if (r.ok() && doc.contains("coverage_targets")) {
    ReadTargets(r, doc.at("coverage_targets"), &s.coverage_targets);
  }
  if (!r.ok()) return r.status();

  if (s.audience.balance.empty()) {
    for (const CellProportion& c : s.population.cells) {
      s.audience.balance.push_back({{c.cell.gender, c.cell.race}, c.proportion});
    }
  }
  if (s.split.cells.empty()) {
    for (Gender g : {Gender::kMale, Gender::kFemale}) {
      for (Race race : {Race::kAfricanAmerican, Race::kWhite}) s.split.cells.push_back({g, race});
    }
  }
  s.config_hash = ConfigHash(doc);
  return s;
}

absl::StatusOr<Scenario> ParseScenarioFile(const std::string& path) {
  std::ifstream in(path);
  if (!in) return absl::NotFoundError(absl::StrCat("cannot open scenario file ", path));
  json doc = json::parse(in, nullptr, /*allow_exceptions=*/false, /*ignore_comments=*/true);
  if (doc.is_discarded()) {
    return absl::InvalidArgumentError(absl::StrCat(path, ": not valid JSON"));
  }
  const std::string dir = std::filesystem::path(path).parent_path().string();
  return ParseScenario(doc, dir.empty() ? "." : dir);
}

}  // namespace adsim
