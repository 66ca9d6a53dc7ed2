// Copyright 2026 The QHM Lab Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//    http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef QHM_SUMMATION_HPP
#define QHM_SUMMATION_HPP

#include <cmath>

namespace qhm {

// Neumaier's variant of Kahan summation. Handles terms larger than the
// running sum, which matters for the A_K/B_K sums where the first epoch
// dominates.
class CompensatedSum {
 public:
  void add(double term) noexcept {
    const double t = sum_ + term;
    if (std::fabs(sum_) >= std::fabs(term)) {
      carry_ += (sum_ - t) + term;
    } else {
      carry_ += (term - t) + sum_;
    }
    sum_ = t;
  }

  CompensatedSum& operator+=(double term) noexcept {
    add(term);
    return *this;
  }

  double value() const noexcept { return sum_ + carry_; }

 private:
  double sum_ = 0.0;
  double carry_ = 0.0;
};

}  // namespace qhm

#endif  // QHM_SUMMATION_HPP
