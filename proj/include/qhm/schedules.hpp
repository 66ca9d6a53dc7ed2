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

#ifndef QHM_SCHEDULES_HPP
#define QHM_SCHEDULES_HPP

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace qhm {

/// Which hyperparameter a schedule drives.
enum class Target { batch, lr, beta, gamma };

/// Epoch-indexed scheduler families.
///
///   constant          b'_m = b | alpha_max | beta_max | gamma_max
///   exponential_bs    b'_m = b0 * delta^floor(m/E)
///   decaying_sq_lr    a'_m = alpha_max / sqrt(m+1)
///   decaying_lr       a'_m = alpha_max / (m+1)
///   cosine_lr         a'_m = alpha_min + (alpha_max-alpha_min)/2 (1 + cos(m pi/(M-1)))
///   polynomial_lr     a'_m = alpha_min + (alpha_max-alpha_min) (1 - m/M)^p
///   step_decay        beta'_m = beta_max zeta^floor(m/E), gamma'_m = gamma_max lambda^floor(m/E)
///   increasing_beta   beta'_m = 1 - (1-beta_min)/(m+1)^(3/4)
///   hybrid            cosine/polynomial over `horizon` epochs, then decaying_sq_lr
enum class Kind {
  constant,
  exponential_bs,
  decaying_sq_lr,
  decaying_lr,
  cosine_lr,
  polynomial_lr,
  step_decay,
  increasing_beta,
  hybrid,
};

std::string_view to_string(Target t) noexcept;
std::string_view to_string(Kind k) noexcept;
std::optional<Target> parse_target(std::string_view s) noexcept;
std::optional<Kind> parse_kind(std::string_view s) noexcept;

/// Declarative description of one scheduler.
///
/// Parameter names: b, b0, delta, E, alpha_max, alpha_min, p, beta_max,
/// beta_min, gamma_max, lambda, zeta, horizon. `hybrid_inner` selects the
/// head schedule of a hybrid LR (cosine_lr or polynomial_lr).
struct ScheduleSpec {
  Target target = Target::lr;
  Kind kind = Kind::constant;
  std::map<std::string, double> params;
  Kind hybrid_inner = Kind::cosine_lr;

  double param(const std::string& name) const;
  double param_or(const std::string& name, double fallback) const;
  bool has(const std::string& name) const { return params.count(name) != 0; }

  bool operator==(const ScheduleSpec&) const = default;
};

ScheduleSpec make_schedule(Target target, Kind kind,
                           std::map<std::string, double> params);

/// Throws Error(validation) when parameters are missing, out of range, or the
/// kind does not apply to the target.
void validate(const ScheduleSpec& spec);

/// Non-fatal observations about a valid spec (e.g. a step-decay product
/// lambda*zeta >= 1, which voids the momentum term of the rate bounds).
std::vector<std::string> advisories(const ScheduleSpec& spec);

/// Closed-form value of the schedule at epoch m of M. Batch schedules return
/// the unclamped batch size as a real number (integral-valued).
/// Throws Error(range) unless 0 <= m < M.
double eval_epoch(const ScheduleSpec& spec, std::int64_t m, std::int64_t M);

/// One spec per target.
struct ScheduleSet {
  ScheduleSpec batch;
  ScheduleSpec lr;
  ScheduleSpec beta;
  ScheduleSpec gamma;

  bool operator==(const ScheduleSet&) const = default;
};

/// Per-step hyperparameters expanded from epoch-indexed schedules.
/// Immutable once built by `expand`.
struct StepPlan {
  std::vector<double> alpha;
  std::vector<double> beta;
  std::vector<double> gamma;
  std::vector<std::int64_t> batch;
  std::vector<std::int64_t> epoch_of_step;
  std::vector<std::int64_t> T;  // steps per epoch, ceil(n / b'_m)
  std::int64_t K = 0;
  std::int64_t M = 0;
  std::int64_t n = 0;
  ScheduleSet specs;
  std::vector<std::string> warnings;

  /// Index of the first step of epoch m.
  std::int64_t epoch_start(std::int64_t m) const;

  bool operator==(const StepPlan&) const = default;
};

/// Expands the schedules over M epochs of an n-sample dataset. Batch sizes
/// above n are clamped to n and recorded in `warnings`.
StepPlan expand(const ScheduleSet& specs, std::int64_t n, std::int64_t M);

enum class Verdict { holds, fails, undetermined };
std::string_view to_string(Verdict v) noexcept;

struct AsymptoticReport {
  Verdict thm1 = Verdict::undetermined;
  Verdict thm2 = Verdict::undetermined;
  std::vector<std::string> reasons;
};

/// Table-driven classification of the step-decay (Theorem 1) and
/// increasing-momentum (Theorem 2) summability conditions, reading each
/// schedule as an infinite sequence. Never estimates limits numerically.
AsymptoticReport validate_asymptotic(const ScheduleSet& specs);

/// First step k with beta_k (alpha_k / 2 + 1) > 1, if any.
std::optional<std::int64_t> first_thm2_violation(const StepPlan& plan);

inline bool validate_thm2_condition(const StepPlan& plan) {
  return !first_thm2_violation(plan).has_value();
}

}  // namespace qhm

#endif  // QHM_SCHEDULES_HPP
