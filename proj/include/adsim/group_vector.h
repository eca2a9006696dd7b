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

#ifndef ADSIM_GROUP_VECTOR_H_
#define ADSIM_GROUP_VECTOR_H_

#include <array>
#include <cmath>
#include <initializer_list>

#include "adsim/demographics.h"

namespace adsim {

// One value per group of an attribute's settlement partition: {M, F} for
// gender, {AA, H, W, O} for race. Used for counts, ratios and multipliers.
struct GroupVector {
  Attribute attribute = Attribute::kGender;
  std::array<double, kRaceGroups> values{};

  GroupVector() = default;
  explicit GroupVector(Attribute a, double fill = 0.0) : attribute(a) {
    for (int g = 0; g < size(); ++g) values[g] = fill;
  }
  GroupVector(Attribute a, std::initializer_list<double> v) : attribute(a) {
    int g = 0;
    for (double x : v) values[g++] = x;
  }

  int size() const { return GroupCount(attribute); }
  double& operator[](int g) { return values[g]; }
  double operator[](int g) const { return values[g]; }

  double Sum() const {
    double s = 0.0;
    for (int g = 0; g < size(); ++g) s += values[g];
    return s;
  }

  // Scaled to sum to 1. An all-zero vector is returned unchanged.
  GroupVector Normalized() const {
    GroupVector out = *this;
    const double s = Sum();
    if (s > 0) {
      for (int g = 0; g < size(); ++g) out.values[g] /= s;
    }
    return out;
  }

  friend bool operator==(const GroupVector& a, const GroupVector& b) {
    if (a.attribute != b.attribute) return false;
    for (int g = 0; g < a.size(); ++g) {
      if (a.values[g] != b.values[g]) return false;
    }
    return true;
  }
};

// Half the L1 distance. Both vectors must share the attribute.
inline double HalfL1(const GroupVector& a, const GroupVector& b) {
  double s = 0.0;
  for (int g = 0; g < a.size(); ++g) s += std::abs(a[g] - b[g]);
  return 0.5 * s;
}

}  // namespace adsim

#endif  // ADSIM_GROUP_VECTOR_H_
