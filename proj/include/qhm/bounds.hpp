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

#ifndef QHM_BOUNDS_HPP
#define QHM_BOUNDS_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "qhm/schedules.hpp"

namespace qhm {

// Exact sums of the momentum-decay rate bound (Theorem 1 family):
//   A_K = 1 / sum alpha_k
//   B_K = (sum alpha_k^2 / b_k) / sum alpha_k
//   C_K = (sum gamma_k beta_k) / sum alpha_k
struct Thm1Sums {
  double A = 0.0;
  double B = 0.0;
  double C = 0.0;
};

// Exact sums of the increasing-momentum rate bound (Theorem 2 family):
//   A_K, B'_K = (sum (1-beta_k)/b_k) / sum alpha_k,
//   C'_K = (sum alpha_k^2) / sum alpha_k, D'_K = (sum alpha_k^2/(1-beta_k)) / sum alpha_k
struct Thm2Sums {
  double A = 0.0;
  double B = 0.0;
  double C = 0.0;
  double D = 0.0;
};

/// Compensated summation over the whole plan. Throws Error(numeric) when
/// sum alpha_k == 0.
Thm1Sums exact_sums_thm1(const StepPlan& plan);

/// Throws Error(bound_violation) naming the first k with
/// beta_k (alpha_k/2 + 1) > 1.
Thm2Sums exact_sums_thm2(const StepPlan& plan);

struct Thm1Constants {
  double f0_minus_fstar = 0.0;
  double L = 0.0;
  double sigma2 = 0.0;
  double G2 = 0.0;
  double gb_bar = 0.0;     // max_k gamma_k beta_k
  double alpha_max = 0.0;  // max_k alpha_k
};

/// [2 df A + L sigma^2 B + 2 a (1 + a L) G^2 C] / ((1 - gb_bar)(2 - a L)).
/// Throws Error(range) unless alpha_max L < 2 and gb_bar < 1.
double thm1_rhs(const Thm1Constants& c, const Thm1Sums& s);

struct Thm2Constants {
  double f0_minus_fstar = 0.0;
  double sigma2 = 0.0;
  double L = 0.0;
  double G = 0.0;
};

/// 2 df A + 4 sigma^2 B' + 5 L^2 G^2 C' + 2 L^2 G^2 D'.
double thm2_rhs(const Thm2Constants& c, const Thm2Sums& s);

/// Which closed forms to return from the corollary tables.
///
/// `as_printed` reproduces the published tables verbatim. A few printed
/// entries do not bound the exact sums they are meant to bound (dropped
/// constant factors in their derivations); `derived` replaces exactly those
/// entries with the value their own derivation yields:
///   - cosine LR, C_K: factor 2 from sum alpha_k >= (alpha_max+alpha_min) K / 2;
///   - decaying-sq LR & constant beta & constant BS, B'_K: factor 1/(2 alpha_max);
///   - decaying-sq LR & constant beta, D'_K: C'_K bound / (1 - beta_max);
///   - decaying LR & increasing beta, D'_K: sum (m+1)^{-5/4} <= 5, not 2.
enum class BoundForm { derived, as_printed };

/// Scheduler parameters the closed forms read. T0 is ceil(n / b'_0).
struct CorollaryParams {
  double alpha_max = 0.0;
  double alpha_min = 0.0;
  double p = 1.0;
  double b = 1.0;        // constant BS
  double b0 = 1.0;       // exponential BS
  double delta = 2.0;
  double E_batch = 1.0;
  double T0 = 1.0;
  double beta_max = 0.0;
  double beta_min = 0.0;
  double gamma_max = 0.0;
  double lambda = 1.0;   // gamma step ratio (1 for constant gamma)
  double zeta = 1.0;     // beta step ratio (1 for constant beta)
  double E_momentum = 1.0;
};

CorollaryParams corollary_params(const StepPlan& plan);

struct Corollary1Bounds {
  double A = 0.0;
  double B = 0.0;
  std::optional<double> C;  // needs lambda zeta < 1
  std::string rate;
};

/// Closed-form upper bounds of A_K, B_K, C_K.
/// lr in {constant, decaying_sq_lr, cosine_lr, polynomial_lr};
/// bs in {constant, exponential_bs}. Anything else throws Error(validation)
/// with "not covered by Corollary 1".
Corollary1Bounds corollary1_upper(Kind lr, Kind bs, const CorollaryParams& p, std::int64_t K,
                                  BoundForm form = BoundForm::derived);

struct Corollary2Bounds {
  double A = 0.0;
  double B = 0.0;
  double C = 0.0;
  double D = 0.0;
  bool diverges = false;  // the bound on the full RHS grows with K
  std::string rate;
};

/// Closed-form upper bounds of A'_K, B'_K, C'_K, D'_K for
/// (decaying_sq_lr, constant beta) or (decaying_lr, increasing_beta), with
/// constant or exponential BS. Anything else throws Error(validation).
Corollary2Bounds corollary2_upper(Kind lr, Kind beta, Kind bs, const CorollaryParams& p,
                                  std::int64_t K, BoundForm form = BoundForm::derived);

/// True when the plan's (lr, bs, beta, gamma) kinds are covered by the
/// respective corollary.
bool corollary1_covers(const ScheduleSet& s);
bool corollary2_covers(const ScheduleSet& s);

/// Relative slack for domination checks.
inline constexpr double kDominationSlack = 1e-12;

inline bool dominated(double exact, double upper) {
  return exact <= upper * (1.0 + kDominationSlack);
}

/// Problem constants for evaluating the theorem right-hand sides.
struct RhsInputs {
  double f0_minus_fstar = 0.0;
  std::optional<double> L;
  std::optional<double> sigma2;
  std::optional<double> G;
};

struct BoundReport {
  std::int64_t K = 0;
  std::int64_t M = 0;
  std::int64_t n = 0;
  std::int64_t T0 = 0;
  AsymptoticReport asymptotic;

  Thm1Sums thm1;
  double gb_bar = 0.0;
  std::optional<Corollary1Bounds> cor1;
  std::string cor1_note;
  std::optional<double> thm1_rhs;
  std::string thm1_rhs_note;

  bool thm2_condition = false;
  std::optional<std::int64_t> thm2_first_violation;
  std::optional<Thm2Sums> thm2;
  std::optional<Corollary2Bounds> cor2;
  std::string cor2_note;
  std::optional<double> thm2_rhs;
  std::string thm2_rhs_note;

  std::optional<double> empirical_min_grad_sq;

  /// Human-readable list of failed checks; empty iff every applicable
  /// domination holds.
  std::vector<std::string> failures;

  bool all_dominated() const { return failures.empty(); }

  /// JSON document; `n/a` strings mark entries outside corollary coverage.
  std::string to_json(int indent = 2) const;
};

/// Evaluates sums, validators, corollary bounds and (when constants are
/// given) theorem right-hand sides for a plan.
BoundReport build_bound_report(const StepPlan& plan, const std::optional<RhsInputs>& rhs = {});

}  // namespace qhm

#endif  // QHM_BOUNDS_HPP
