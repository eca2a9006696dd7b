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

#include "adsim/random.h"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <vector>

#include "gtest/gtest.h"

namespace adsim {
namespace {

TEST(RandomTest, SameSeedSameStream) {
  Rng a(42), b(42);
  for (int i = 0; i < 1000; ++i) ASSERT_EQ(a.NextU64(), b.NextU64());
}

TEST(RandomTest, DeriveSeedSeparatesStreams) {
  EXPECT_NE(DeriveSeed(1, {1, 0}), DeriveSeed(1, {1, 1}));
  EXPECT_NE(DeriveSeed(1, {1, 0}), DeriveSeed(2, {1, 0}));
  EXPECT_NE(DeriveSeed(1, {0, 1}), DeriveSeed(1, {1, 0}));
  EXPECT_EQ(DeriveSeed(7, {3, 4}), DeriveSeed(7, {3, 4}));
}

TEST(RandomTest, Uniform01IsOpenInterval) {
  Rng rng(3);
  double sum = 0.0;
  for (int i = 0; i < 200000; ++i) {
    const double u = rng.Uniform01();
    ASSERT_GT(u, 0.0);
    ASSERT_LT(u, 1.0);
    sum += u;
  }
  EXPECT_NEAR(sum / 200000, 0.5, 0.005);
}

TEST(RandomTest, UniformIntCoversRangeEvenly) {
  Rng rng(5);
  std::array<int, 7> hist{};
  const int n = 70000;
  for (int i = 0; i < n; ++i) {
    const uint64_t v = rng.UniformInt(7);
    ASSERT_LT(v, 7u);
    ++hist[v];
  }
  // 5 sigma of a binomial(70000, 1/7).
  for (int c : hist) EXPECT_NEAR(c, n / 7.0, 5 * std::sqrt(n * (1.0 / 7) * (6.0 / 7)));
}

TEST(RandomTest, LaplaceMomentsMatch) {
  Rng rng(11);
  const int n = 200000;
  const double b = 2.0;
  double sum = 0.0, abs_sum = 0.0;
  for (int i = 0; i < n; ++i) {
    const double x = rng.Laplace(b);
    sum += x;
    abs_sum += std::abs(x);
  }
  // Var = 2b^2, so the sd of the mean is 2 * sqrt(2) / sqrt(n).
  EXPECT_NEAR(sum / n, 0.0, 5 * std::sqrt(2.0) * b / std::sqrt(n));
  EXPECT_NEAR(abs_sum / n, b, 0.02);
}

TEST(RandomTest, ExponentialAndNormalMoments) {
  Rng rng(13);
  const int n = 200000;
  double e = 0.0, z = 0.0, z2 = 0.0;
  for (int i = 0; i < n; ++i) {
    e += rng.Exponential(4.0);
    const double x = rng.Normal();
    z += x;
    z2 += x * x;
  }
  EXPECT_NEAR(e / n, 0.25, 0.003);
  EXPECT_NEAR(z / n, 0.0, 0.012);
  EXPECT_NEAR(z2 / n, 1.0, 0.015);
}

TEST(RandomTest, LogNormalWithZeroSigmaIsConstant) {
  Rng rng(1);
  EXPECT_DOUBLE_EQ(rng.LogNormal(std::log(3.0), 0.0), 3.0);
}

TEST(RandomTest, ShuffleIsAPermutation) {
  Rng rng(17);
  std::vector<int> v(50);
  std::iota(v.begin(), v.end(), 0);
  rng.Shuffle(std::span<int>(v));
  std::vector<int> sorted = v;
  std::sort(sorted.begin(), sorted.end());
  for (int i = 0; i < 50; ++i) EXPECT_EQ(sorted[i], i);
  EXPECT_FALSE(std::is_sorted(v.begin(), v.end()));
}

}  // namespace
}  // namespace adsim
