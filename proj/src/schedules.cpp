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

#include "qhm/schedules.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <set>
#include <sstream>

#include "qhm/error.hpp"

namespace qhm {

namespace {

constexpr double kMaxBatch = 9007199254740992.0;  // 2^53
constexpr std::int64_t kMaxSteps = 2'000'000'000;

struct KindName {
  Kind kind;
  std::string_view name;
};

constexpr KindName kKindNames[] = {
    {Kind::constant, "constant"},
    {Kind::exponential_bs, "exponential_bs"},
    {Kind::decaying_sq_lr, "decaying_sq_lr"},
    {Kind::decaying_lr, "decaying_lr"},
    {Kind::cosine_lr, "cosine_lr"},
    {Kind::polynomial_lr, "polynomial_lr"},
    {Kind::step_decay, "step_decay"},
    {Kind::increasing_beta, "increasing_beta"},
    {Kind::hybrid, "hybrid"},
};

[[noreturn]] void invalid(const ScheduleSpec& spec, const std::string& msg) {
  std::ostringstream os;
  os << to_string(spec.target) << " schedule '" << to_string(spec.kind)
     << "': " << msg;
  throw Error(ErrorKind::validation, os.str());
}

bool is_integer(double v) { return std::isfinite(v) && std::floor(v) == v; }

// Parameters each (target, kind) pair accepts. Empty optional: pair invalid.
std::optional<std::set<std::string>> allowed_params(Target t, Kind k) {
  using S = std::set<std::string>;
  switch (t) {
    case Target::batch:
      if (k == Kind::constant) return S{"b"};
      if (k == Kind::exponential_bs) return S{"b0", "delta", "E"};
      return std::nullopt;
    case Target::lr:
      switch (k) {
        case Kind::constant:
        case Kind::decaying_sq_lr:
        case Kind::decaying_lr:
          return S{"alpha_max"};
        case Kind::cosine_lr:
          return S{"alpha_max", "alpha_min"};
        case Kind::polynomial_lr:
          return S{"alpha_max", "alpha_min", "p"};
        case Kind::hybrid:
          return S{"alpha_max", "alpha_min", "p", "horizon"};
        default:
          return std::nullopt;
      }
    case Target::beta:
      if (k == Kind::constant) return S{"beta_max"};
      if (k == Kind::step_decay) return S{"beta_max", "zeta", "E"};
      if (k == Kind::increasing_beta) return S{"beta_min"};
      return std::nullopt;
    case Target::gamma:
      if (k == Kind::constant) return S{"gamma_max"};
      if (k == Kind::step_decay) return S{"gamma_max", "lambda", "E"};
      return std::nullopt;
  }
  return std::nullopt;
}

double lr_head(const ScheduleSpec& spec, Kind kind, std::int64_t m,
               std::int64_t M) {
  const double hi = spec.param("alpha_max");
  const double lo = spec.param_or("alpha_min", 0.0);
  if (kind == Kind::cosine_lr) {
    if (M == 1) return hi;
    const double phase = static_cast<double>(m) * std::numbers::pi /
                         static_cast<double>(M - 1);
    return lo + (hi - lo) / 2.0 * (1.0 + std::cos(phase));
  }
  const double p = spec.param("p");
  const double frac = 1.0 - static_cast<double>(m) / static_cast<double>(M);
  return lo + (hi - lo) * std::pow(frac, p);
}

double step_power(double ratio, std::int64_t m, double E) {
  const auto j = static_cast<double>(m / static_cast<std::int64_t>(E));
  return std::pow(ratio, j);
}

}  // namespace

std::string_view to_string(Target t) noexcept {
  switch (t) {
    case Target::batch: return "batch";
    case Target::lr: return "lr";
    case Target::beta: return "beta";
    case Target::gamma: return "gamma";
  }
  return "?";
}

std::string_view to_string(Kind k) noexcept {
  for (const auto& kn : kKindNames) {
    if (kn.kind == k) return kn.name;
  }
  return "?";
}

std::string_view to_string(Verdict v) noexcept {
  switch (v) {
    case Verdict::holds: return "holds";
    case Verdict::fails: return "fails";
    case Verdict::undetermined: return "undetermined";
  }
  return "?";
}

std::optional<Target> parse_target(std::string_view s) noexcept {
  if (s == "batch") return Target::batch;
  if (s == "lr") return Target::lr;
  if (s == "beta") return Target::beta;
  if (s == "gamma") return Target::gamma;
  return std::nullopt;
}

std::optional<Kind> parse_kind(std::string_view s) noexcept {
  for (const auto& kn : kKindNames) {
    if (kn.name == s) return kn.kind;
  }
  return std::nullopt;
}

double ScheduleSpec::param(const std::string& name) const {
  auto it = params.find(name);
  if (it == params.end()) invalid(*this, "missing parameter '" + name + "'");
  return it->second;
}

double ScheduleSpec::param_or(const std::string& name, double fallback) const {
  auto it = params.find(name);
  return it == params.end() ? fallback : it->second;
}

ScheduleSpec make_schedule(Target target, Kind kind,
                           std::map<std::string, double> params) {
  ScheduleSpec s;
  s.target = target;
  s.kind = kind;
  s.params = std::move(params);
  return s;
}

void validate(const ScheduleSpec& spec) {
  const auto allowed = allowed_params(spec.target, spec.kind);
  if (!allowed) invalid(spec, "kind does not apply to this target");
  for (const auto& [name, value] : spec.params) {
    if (allowed->count(name) == 0) invalid(spec, "unknown parameter '" + name + "'");
    if (!std::isfinite(value)) invalid(spec, "parameter '" + name + "' is not finite");
  }

  auto positive_int = [&](const char* name) {
    const double v = spec.param(name);
    if (!is_integer(v) || v < 1) invalid(spec, std::string(name) + " must be an integer >= 1");
  };
  auto unit_open = [&](const char* name) {
    const double v = spec.param(name);
    if (!(v >= 0.0 && v < 1.0)) invalid(spec, std::string(name) + " must lie in [0, 1)");
  };

  switch (spec.kind) {
    case Kind::constant:
      switch (spec.target) {
        case Target::batch: positive_int("b"); break;
        case Target::lr:
          if (!(spec.param("alpha_max") > 0.0)) invalid(spec, "alpha_max must be > 0");
          break;
        case Target::beta: unit_open("beta_max"); break;
        case Target::gamma: {
          const double g = spec.param("gamma_max");
          if (!(g >= 0.0 && g <= 1.0)) invalid(spec, "gamma_max must lie in [0, 1]");
          break;
        }
      }
      break;
    case Kind::exponential_bs:
      positive_int("b0");
      positive_int("E");
      if (!(spec.param("delta") > 1.0)) invalid(spec, "delta must be > 1");
      break;
    case Kind::decaying_sq_lr:
    case Kind::decaying_lr:
      if (!(spec.param("alpha_max") > 0.0)) invalid(spec, "alpha_max must be > 0");
      break;
    case Kind::cosine_lr:
    case Kind::polynomial_lr:
    case Kind::hybrid: {
      const Kind head = spec.kind == Kind::hybrid ? spec.hybrid_inner : spec.kind;
      if (spec.kind == Kind::hybrid) {
        if (head != Kind::cosine_lr && head != Kind::polynomial_lr)
          invalid(spec, "hybrid head must be cosine_lr or polynomial_lr");
        positive_int("horizon");
      }
      const double hi = spec.param("alpha_max");
      const double lo = spec.param_or("alpha_min", 0.0);
      if (!(hi > 0.0)) invalid(spec, "alpha_max must be > 0");
      if (!(lo >= 0.0 && lo <= hi)) invalid(spec, "need 0 <= alpha_min <= alpha_max");
      if (head == Kind::polynomial_lr && !(spec.param("p") > 0.0))
        invalid(spec, "p must be > 0");
      break;
    }
    case Kind::step_decay:
      positive_int("E");
      if (spec.target == Target::beta) {
        unit_open("beta_max");
        if (!(spec.param("zeta") > 0.0)) invalid(spec, "zeta must be > 0");
      } else {
        const double g = spec.param("gamma_max");
        if (!(g >= 0.0 && g <= 1.0)) invalid(spec, "gamma_max must lie in [0, 1]");
        if (!(spec.param("lambda") > 0.0)) invalid(spec, "lambda must be > 0");
      }
      break;
    case Kind::increasing_beta:
      unit_open("beta_min");
      break;
  }
}

std::vector<std::string> advisories(const ScheduleSpec& spec) {
  std::vector<std::string> out;
  if (spec.kind == Kind::step_decay) {
    const double r = spec.target == Target::beta ? spec.param("zeta") : spec.param("lambda");
    if (r >= 1.0) {
      std::ostringstream os;
      os << to_string(spec.target) << " step_decay ratio " << r
         << " >= 1: the schedule does not decay";
      out.push_back(os.str());
    }
  }
  return out;
}

double eval_epoch(const ScheduleSpec& spec, std::int64_t m, std::int64_t M) {
  validate(spec);
  if (M < 1 || m < 0 || m >= M) {
    std::ostringstream os;
    os << "epoch " << m << " outside [0, " << M << ")";
    throw Error(ErrorKind::range, os.str());
  }
  const double mp1 = static_cast<double>(m) + 1.0;
  switch (spec.kind) {
    case Kind::constant:
      switch (spec.target) {
        case Target::batch: return spec.param("b");
        case Target::lr: return spec.param("alpha_max");
        case Target::beta: return spec.param("beta_max");
        case Target::gamma: return spec.param("gamma_max");
      }
      break;
    case Kind::exponential_bs: {
      const double b0 = spec.param("b0");
      const double delta = spec.param("delta");
      const auto j = m / static_cast<std::int64_t>(spec.param("E"));
      double b = b0;
      if (is_integer(delta)) {
        // Exact integer growth, saturating.
        for (std::int64_t i = 0; i < j && b < kMaxBatch; ++i) b *= delta;
      } else {
        b = std::floor(b0 * std::pow(delta, static_cast<double>(j)));
      }
      return std::min(b, kMaxBatch);
    }
    case Kind::decaying_sq_lr:
      return spec.param("alpha_max") / std::sqrt(mp1);
    case Kind::decaying_lr:
      return spec.param("alpha_max") / mp1;
    case Kind::cosine_lr:
    case Kind::polynomial_lr:
      return lr_head(spec, spec.kind, m, M);
    case Kind::hybrid: {
      const auto horizon = static_cast<std::int64_t>(spec.param("horizon"));
      if (m < horizon) return lr_head(spec, spec.hybrid_inner, m, horizon);
      return spec.param("alpha_max") / std::sqrt(mp1);
    }
    case Kind::step_decay: {
      const double E = spec.param("E");
      if (spec.target == Target::beta)
        return spec.param("beta_max") * step_power(spec.param("zeta"), m, E);
      return spec.param("gamma_max") * step_power(spec.param("lambda"), m, E);
    }
    case Kind::increasing_beta:
      return 1.0 - (1.0 - spec.param("beta_min")) / std::pow(mp1, 0.75);
  }
  throw Error(ErrorKind::validation, "unhandled schedule kind");
}

std::int64_t StepPlan::epoch_start(std::int64_t m) const {
  if (m < 0 || m > M) throw Error(ErrorKind::range, "epoch index out of range");
  std::int64_t s = 0;
  for (std::int64_t i = 0; i < m; ++i) s += T[static_cast<std::size_t>(i)];
  return s;
}

StepPlan expand(const ScheduleSet& specs, std::int64_t n, std::int64_t M) {
  if (n < 1) throw Error(ErrorKind::invalid_argument, "dataset size n must be >= 1");
  if (M < 1) throw Error(ErrorKind::invalid_argument, "epoch count M must be >= 1");
  const std::pair<Target, const ScheduleSpec*> slots[] = {
      {Target::batch, &specs.batch},
      {Target::lr, &specs.lr},
      {Target::beta, &specs.beta},
      {Target::gamma, &specs.gamma}};
  for (const auto& [t, s] : slots) {
    if (s->target != t) {
      throw Error(ErrorKind::validation,
                  std::string("schedule in the ") + std::string(to_string(t)) +
                      " slot targets " + std::string(to_string(s->target)));
    }
    validate(*s);
  }

  StepPlan plan;
  plan.n = n;
  plan.M = M;
  plan.specs = specs;
  for (const auto& [t, s] : slots) {
    for (auto& w : advisories(*s)) plan.warnings.push_back(std::move(w));
  }

  plan.T.reserve(static_cast<std::size_t>(M));
  std::int64_t first_clamped = -1;
  std::int64_t clamped_epochs = 0;
  for (std::int64_t m = 0; m < M; ++m) {
    double b_real = eval_epoch(specs.batch, m, M);
    if (b_real > static_cast<double>(n)) {
      if (first_clamped < 0) first_clamped = m;
      ++clamped_epochs;
      b_real = static_cast<double>(n);
    }
    const auto b = static_cast<std::int64_t>(b_real);
    const double a = eval_epoch(specs.lr, m, M);
    const double be = eval_epoch(specs.beta, m, M);
    const double ga = eval_epoch(specs.gamma, m, M);
    auto out_of_range = [&](const char* what, double v) {
      std::ostringstream os;
      os << what << " = " << v << " at epoch " << m << " is outside its range";
      throw Error(ErrorKind::range, os.str());
    };
    if (!(std::isfinite(a) && a >= 0.0)) out_of_range("alpha", a);
    if (!(be >= 0.0 && be < 1.0)) out_of_range("beta", be);
    if (!(ga >= 0.0 && ga <= 1.0)) out_of_range("gamma", ga);

    const std::int64_t T = (n + b - 1) / b;
    plan.T.push_back(T);
    if (plan.K + T > kMaxSteps) throw Error(ErrorKind::range, "plan exceeds the maximum step count");
    plan.K += T;
    for (std::int64_t t = 0; t < T; ++t) {
      plan.alpha.push_back(a);
      plan.beta.push_back(be);
      plan.gamma.push_back(ga);
      plan.batch.push_back(b);
      plan.epoch_of_step.push_back(m);
    }
  }
  if (first_clamped >= 0) {
    std::ostringstream os;
    os << "batch size exceeded n = " << n << " from epoch " << first_clamped
       << " on (" << clamped_epochs << " epochs); clamped to n";
    plan.warnings.push_back(os.str());
  }
  return plan;
}

namespace {

enum class Tri { yes, no, unknown };

Tri and_all(std::initializer_list<Tri> xs) {
  bool unknown = false;
  for (Tri x : xs) {
    if (x == Tri::no) return Tri::no;
    if (x == Tri::unknown) unknown = true;
  }
  return unknown ? Tri::unknown : Tri::yes;
}

Verdict to_verdict(Tri t) {
  switch (t) {
    case Tri::yes: return Verdict::holds;
    case Tri::no: return Verdict::fails;
    default: return Verdict::undetermined;
  }
}

// Sum of alpha_k diverges.
Tri lr_sum_diverges(const ScheduleSpec& lr, std::vector<std::string>& why) {
  switch (lr.kind) {
    case Kind::constant:
    case Kind::decaying_sq_lr:
    case Kind::decaying_lr:
    case Kind::hybrid:
      return Tri::yes;
    default:
      why.push_back(std::string(to_string(lr.kind)) +
                    " is only defined up to its horizon M; use the hybrid kind for an infinite sequence");
      return Tri::unknown;
  }
}

// Sum of alpha_k^2 converges.
Tri lr_square_summable(const ScheduleSpec& lr) {
  switch (lr.kind) {
    case Kind::decaying_lr: return Tri::yes;
    case Kind::constant:
    case Kind::decaying_sq_lr:
    case Kind::hybrid:
      return Tri::no;
    default:
      return Tri::unknown;
  }
}

bool is_zero_weight(const ScheduleSpec& s) {
  if (s.target == Target::beta && (s.kind == Kind::constant || s.kind == Kind::step_decay))
    return s.param("beta_max") == 0.0;
  if (s.target == Target::gamma) return s.param("gamma_max") == 0.0;
  return false;
}

// Sum of gamma_k beta_k converges.
Tri momentum_product_summable(const ScheduleSpec& beta, const ScheduleSpec& gamma,
                              std::vector<std::string>& why) {
  if (is_zero_weight(beta) || is_zero_weight(gamma)) return Tri::yes;
  auto ratio = [](const ScheduleSpec& s) {
    return s.target == Target::beta ? s.param("zeta") : s.param("lambda");
  };
  const bool beta_decays = beta.kind == Kind::step_decay && ratio(beta) < 1.0;
  const bool gamma_decays = gamma.kind == Kind::step_decay && ratio(gamma) < 1.0;
  if (beta_decays || gamma_decays) return Tri::yes;
  const bool beta_grows = beta.kind == Kind::step_decay && ratio(beta) > 1.0;
  const bool gamma_grows = gamma.kind == Kind::step_decay && ratio(gamma) > 1.0;
  if (beta_grows || gamma_grows) {
    why.push_back("step_decay ratio > 1 leaves the admissible momentum range eventually");
    return Tri::unknown;
  }
  why.push_back("gamma_k beta_k is bounded away from 0, so its sum diverges");
  return Tri::no;
}

}  // namespace

AsymptoticReport validate_asymptotic(const ScheduleSet& specs) {
  validate(specs.batch);
  validate(specs.lr);
  validate(specs.beta);
  validate(specs.gamma);

  AsymptoticReport r;
  const bool exp_bs = specs.batch.kind == Kind::exponential_bs;

  // Theorem 1(ii).
  {
    std::vector<std::string> why;
    const Tri c1 = lr_sum_diverges(specs.lr, why);
    const Tri c2 = momentum_product_summable(specs.beta, specs.gamma, why);
    Tri c3 = Tri::yes;
    if (!exp_bs) {
      c3 = lr_square_summable(specs.lr);
      if (c3 == Tri::no) why.push_back("constant batch and non-square-summable lr: sum alpha_k^2/b_k diverges");
    }
    r.thm1 = to_verdict(and_all({c1, c2, c3}));
    for (auto& w : why) r.reasons.push_back("thm1: " + w);
  }

  // Theorem 2(ii).
  {
    std::vector<std::string> why;
    const Tri c1 = lr_sum_diverges(specs.lr, why);
    Tri c2 = Tri::unknown;
    if (specs.beta.kind == Kind::increasing_beta) {
      // alpha'_m^2 (m+1)^{3/4}: summable only for the 1/(m+1) decay.
      if (specs.lr.kind == Kind::decaying_lr) {
        c2 = Tri::yes;
      } else if (specs.lr.kind == Kind::constant || specs.lr.kind == Kind::decaying_sq_lr ||
                 specs.lr.kind == Kind::hybrid) {
        c2 = Tri::no;
        why.push_back("sum alpha_k^2/(1-beta_k) diverges under increasing beta with this lr");
      }
    } else {
      // 1 - beta_k stays in [1 - beta_max, 1].
      c2 = lr_square_summable(specs.lr);
      if (c2 == Tri::no) why.push_back("sum alpha_k^2/(1-beta_k) diverges");
    }
    Tri c3 = Tri::yes;
    if (!exp_bs) {
      c3 = Tri::no;
      why.push_back("constant batch: sum (1-beta_k)/b_k diverges (1-beta_k is not summable for any beta schedule)");
    }
    r.thm2 = to_verdict(and_all({c1, c2, c3}));
    for (auto& w : why) r.reasons.push_back("thm2: " + w);
    r.reasons.push_back("thm2: also requires beta_k (alpha_k/2 + 1) <= 1 for every step (plan-level check)");
  }
  return r;
}

std::optional<std::int64_t> first_thm2_violation(const StepPlan& plan) {
  for (std::size_t k = 0; k < plan.alpha.size(); ++k) {
    if (plan.beta[k] * (plan.alpha[k] / 2.0 + 1.0) > 1.0) return static_cast<std::int64_t>(k);
  }
  return std::nullopt;
}

}  // namespace qhm
