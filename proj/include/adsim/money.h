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

#ifndef ADSIM_MONEY_H_
#define ADSIM_MONEY_H_

#include <cmath>
#include <compare>
#include <cstdint>
#include <string>

namespace adsim {

// Integer micro-dollars. Budgets, spend and prices are all held in this
// unit so that conservation checks are exact.
class Micros {
 public:
  constexpr Micros() = default;
  constexpr explicit Micros(int64_t value) : value_(value) {}

  static Micros FromUsd(double usd) {
    return Micros(static_cast<int64_t>(std::llround(usd * 1e6)));
  }

  constexpr int64_t value() const { return value_; }
  double usd() const { return static_cast<double>(value_) * 1e-6; }

  constexpr Micros& operator+=(Micros o) {
    value_ += o.value_;
    return *this;
  }
  constexpr Micros& operator-=(Micros o) {
    value_ -= o.value_;
    return *this;
  }
  friend constexpr Micros operator+(Micros a, Micros b) { return Micros(a.value_ + b.value_); }
  friend constexpr Micros operator-(Micros a, Micros b) { return Micros(a.value_ - b.value_); }
  friend constexpr auto operator<=>(Micros a, Micros b) = default;

 private:
  int64_t value_ = 0;
};

// Decimal USD with six fractional digits, e.g. "1.500000".
std::string FormatUsd(Micros amount);

}  // namespace adsim

#endif  // ADSIM_MONEY_H_
