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

#include "qhm/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <json.hpp>

#include "qhm/error.hpp"
#include "qhm/summation.hpp"

namespace qhm {

namespace {

double sum_alpha(const StepPlan& plan) {
  CompensatedSum s;
  for (double a : plan.alpha) s += a;
  const double total = s.value();
  if (!(total > 0.0)) throw Error(ErrorKind::numeric, "sum of learning rates is zero");
  return total;
}

double sqrt_term(std::int64_t K) { return std::sqrt(static_cast<double>(K) + 1.0) - 1.0; }
double log_term(std::int64_t K) { return std::log(static_cast<double>(K) + 1.0); }

bool is_cor1_lr(Kind k) {
  return k == Kind::constant || k == Kind::decaying_sq_lr || k == Kind::cosine_lr ||
         k == Kind::polynomial_lr;
}

bool is_bs(Kind k) { return k == Kind::constant || k == Kind::exponential_bs; }

enum class Cor2Case { decaying_sq_constant_beta, decaying_increasing_beta };

std::optional<Cor2Case> cor2_case(Kind lr, Kind beta) {
  if (lr == Kind::decaying_sq_lr && beta == Kind::constant) return Cor2Case::decaying_sq_constant_beta;
  if (lr == Kind::decaying_lr && beta == Kind::increasing_beta) return Cor2Case::decaying_increasing_beta;
  return std::nullopt;
}

std::string cor1_combo_name(Kind lr, Kind bs) {
  return std::string(to_string(lr)) + "+" + std::string(to_string(bs));
}

}  // namespace

Thm1Sums exact_sums_thm1(const StepPlan& plan) {
  if (plan.K < 1) throw Error(ErrorKind::invalid_argument, "plan has no steps");
  const double total = sum_alpha(plan);
  CompensatedSum noise;
  CompensatedSum momentum;
  for (std::size_t k = 0; k < plan.alpha.size(); ++k) {
    noise += plan.alpha[k] * plan.alpha[k] / static_cast<double>(plan.batch[k]);
    momentum += plan.gamma[k] * plan.beta[k];
  }
  return {1.0 / total, noise.value() / total, momentum.value() / total};
}

Thm2Sums exact_sums_thm2(const StepPlan& plan) {
  if (plan.K < 1) throw Error(ErrorKind::invalid_argument, "plan has no steps");
  if (auto k = first_thm2_violation(plan)) {
    const auto i = static_cast<std::size_t>(*k);
    std::ostringstream os;
    os << "beta_k (alpha_k/2 + 1) <= 1 violated first at step k = " << *k << " (epoch "
       << plan.epoch_of_step[i] << ", alpha = " << plan.alpha[i] << ", beta = " << plan.beta[i]
       << ")";
    throw Error(ErrorKind::bound_violation, os.str());
  }
  const double total = sum_alpha(plan);
  CompensatedSum b;
  CompensatedSum c;
  CompensatedSum d;
  for (std::size_t k = 0; k < plan.alpha.size(); ++k) {
    const double a2 = plan.alpha[k] * plan.alpha[k];
    const double one_minus_beta = 1.0 - plan.beta[k];
    b += one_minus_beta / static_cast<double>(plan.batch[k]);
    c += a2;
    d += a2 / one_minus_beta;
  }
  return {1.0 / total, b.value() / total, c.value() / total, d.value() / total};
}

double thm1_rhs(const Thm1Constants& c, const Thm1Sums& s) {
  const double aL = c.alpha_max * c.L;
  if (!(aL < 2.0)) {
    std::ostringstream os;
    os << "alpha_max * L = " << aL << " must be < 2";
    throw Error(ErrorKind::range, os.str());
  }
  if (!(c.gb_bar >= 0.0 && c.gb_bar < 1.0))
    throw Error(ErrorKind::range, "sup gamma_k beta_k must lie in [0, 1)");
  const double denom = (1.0 - c.gb_bar) * (2.0 - aL);
  return (2.0 * c.f0_minus_fstar * s.A + c.L * c.sigma2 * s.B +
          2.0 * c.alpha_max * (1.0 + aL) * c.G2 * s.C) /
         denom;
}

double thm2_rhs(const Thm2Constants& c, const Thm2Sums& s) {
  const double lg = c.L * c.L * c.G * c.G;
  return 2.0 * c.f0_minus_fstar * s.A + 4.0 * c.sigma2 * s.B + 5.0 * lg * s.C +
         2.0 * lg * s.D;
}

CorollaryParams corollary_params(const StepPlan& plan) {
  const ScheduleSet& s = plan.specs;
  CorollaryParams p;
  p.alpha_max = s.lr.param("alpha_max");
  p.alpha_min = s.lr.param_or("alpha_min", 0.0);
  p.p = s.lr.param_or("p", 1.0);
  if (s.batch.kind == Kind::constant) {
    p.b = s.batch.param("b");
  } else {
    p.b0 = s.batch.param("b0");
    p.delta = s.batch.param("delta");
    p.E_batch = s.batch.param("E");
  }
  p.T0 = plan.T.empty() ? 1.0 : static_cast<double>(plan.T.front());

  std::optional<double> e_beta;
  std::optional<double> e_gamma;
  if (s.beta.kind == Kind::increasing_beta) {
    p.beta_min = s.beta.param("beta_min");
  } else {
    p.beta_max = s.beta.param("beta_max");
    if (s.beta.kind == Kind::step_decay) {
      p.zeta = s.beta.param("zeta");
      e_beta = s.beta.param("E");
    }
  }
  p.gamma_max = s.gamma.param("gamma_max");
  if (s.gamma.kind == Kind::step_decay) {
    p.lambda = s.gamma.param("lambda");
    e_gamma = s.gamma.param("E");
  }
  // floor(m/E*) <= floor(m/E) for both decays, so the larger E is valid when
  // each ratio is <= 1.
  if (e_beta && e_gamma) {
    p.E_momentum = std::max(*e_beta, *e_gamma);
    if (*e_beta != *e_gamma && (p.lambda > 1.0 || p.zeta > 1.0)) p.E_momentum = -1.0;
  } else {
    p.E_momentum = e_beta.value_or(e_gamma.value_or(1.0));
  }
  return p;
}

bool corollary1_covers(const ScheduleSet& s) {
  return is_cor1_lr(s.lr.kind) && is_bs(s.batch.kind);
}

bool corollary2_covers(const ScheduleSet& s) {
  return cor2_case(s.lr.kind, s.beta.kind).has_value() && is_bs(s.batch.kind);
}

Corollary1Bounds corollary1_upper(Kind lr, Kind bs, const CorollaryParams& p, std::int64_t K,
                                  BoundForm form) {
  if (!is_cor1_lr(lr) || !is_bs(bs))
    throw Error(ErrorKind::validation,
                "combination " + cor1_combo_name(lr, bs) + " is not covered by Corollary 1");
  if (K < 1) throw Error(ErrorKind::invalid_argument, "K must be >= 1");
  const double Kd = static_cast<double>(K);
  const double a = p.alpha_max;
  const double lo = p.alpha_min;
  const double pp = p.p;
  const double sq = sqrt_term(K);
  const bool exp_bs = bs == Kind::exponential_bs;
  // sum_k 1/b_k <= T0 E delta / (b0 (delta - 1)) under exponential BS.
  const double inv_b_sum = p.T0 * p.E_batch * p.delta / (p.b0 * (p.delta - 1.0));

  Corollary1Bounds r;
  switch (lr) {
    case Kind::constant:
      r.A = 1.0 / (a * Kd);
      r.B = exp_bs ? a * inv_b_sum / Kd : a / p.b;
      break;
    case Kind::decaying_sq_lr:
      r.A = 1.0 / (2.0 * a * sq);
      r.B = exp_bs ? a * inv_b_sum / (2.0 * sq)
                   : a * p.T0 * (1.0 + std::log(Kd + 1.0)) / (2.0 * p.b * sq);
      break;
    case Kind::cosine_lr:
      r.A = 2.0 / ((lo + a) * Kd);
      r.B = exp_bs ? 2.0 * a * a * inv_b_sum / ((a + lo) * Kd)
                   : (a + lo) / p.b + p.T0 * (a - lo) * (a - lo) / (2.0 * p.b * (a + lo) * Kd);
      break;
    case Kind::polynomial_lr: {
      const double head = a + pp * lo;
      r.A = (pp + 1.0) / (head * Kd);
      r.B = exp_bs ? a * a * (pp + 1.0) * inv_b_sum / (head * Kd)
                   : ((pp + 1.0) * a * a + 2.0 * pp * a * lo + 2.0 * pp * pp * lo * lo) /
                             (p.b * (2.0 * pp + 1.0) * head) +
                         (pp + 1.0) * (a * a - lo * lo) * p.T0 / (head * Kd);
      break;
    }
    default:
      break;
  }

  const double gb = p.gamma_max * p.beta_max;
  const double ratio = p.lambda * p.zeta;
  if (gb == 0.0) {
    r.C = 0.0;
  } else if (ratio < 1.0 && p.E_momentum > 0.0) {
    // sum_k gamma_k beta_k <= gamma_max beta_max T0 E / (1 - lambda zeta).
    const double q = gb * p.T0 * p.E_momentum / (1.0 - ratio);
    switch (lr) {
      case Kind::constant: r.C = q / (a * Kd); break;
      case Kind::decaying_sq_lr: r.C = q / (2.0 * a * sq); break;
      case Kind::cosine_lr:
        r.C = (form == BoundForm::derived ? 2.0 : 1.0) * q / ((a + lo) * Kd);
        break;
      case Kind::polynomial_lr: r.C = (pp + 1.0) * q / ((a + pp * lo) * Kd); break;
      default: break;
    }
  }

  if (lr == Kind::decaying_sq_lr) {
    r.rate = exp_bs ? "O(1/sqrt(K))" : "O(log(K)/sqrt(K))";
  } else {
    r.rate = exp_bs ? "O(1/K)" : "O(1/K + sigma^2/b)";
  }
  return r;
}

Corollary2Bounds corollary2_upper(Kind lr, Kind beta, Kind bs, const CorollaryParams& p,
                                  std::int64_t K, BoundForm form) {
  const auto which = cor2_case(lr, beta);
  if (!which || !is_bs(bs)) {
    throw Error(ErrorKind::validation,
                "combination " + std::string(to_string(lr)) + "+" + std::string(to_string(beta)) +
                    "+" + std::string(to_string(bs)) + " is not covered by Corollary 2");
  }
  if (K < 1) throw Error(ErrorKind::invalid_argument, "K must be >= 1");
  const double Kd = static_cast<double>(K);
  const double a = p.alpha_max;
  const double sq = sqrt_term(K);
  const double lg = log_term(K);
  const bool exp_bs = bs == Kind::exponential_bs;
  const double inv_b_sum = p.T0 * p.E_batch * p.delta / (p.b0 * (p.delta - 1.0));
  const bool derived = form == BoundForm::derived;

  Corollary2Bounds r;
  if (*which == Cor2Case::decaying_sq_constant_beta) {
    const double omb = 1.0 - p.beta_max;
    r.A = 1.0 / (2.0 * a * sq);
    if (exp_bs) {
      r.B = omb * inv_b_sum / (2.0 * a * sq);
    } else {
      r.B = Kd * omb / (p.b * sq);
      if (derived) r.B /= 2.0 * a;
    }
    r.C = a * p.T0 * (1.0 + std::log(Kd + 1.0)) / (2.0 * sq);
    r.D = derived ? r.C / omb : a / (omb * sq);
    r.diverges = !exp_bs;
    r.rate = exp_bs ? "O(log(K)/sqrt(K))" : "O(sqrt(K)): bound diverges";
  } else {
    const double omb = 1.0 - p.beta_min;
    r.A = 1.0 / (a * lg);
    r.B = exp_bs ? inv_b_sum / (a * lg)
                 : p.T0 * (1.0 + 4.0 * omb * std::pow(Kd + 1.0, 0.25)) / (p.b * a * lg);
    r.C = 2.0 * a * p.T0 / lg;
    r.D = (derived ? 5.0 : 2.0) * a * p.T0 / (omb * lg);
    // B' grows like K^{1/4} / log K under constant BS.
    r.diverges = !exp_bs;
    r.rate = exp_bs ? "O(1/log(K))" : "O(K^(1/4)/log(K)): bound diverges";
  }
  return r;
}

BoundReport build_bound_report(const StepPlan& plan, const std::optional<RhsInputs>& rhs) {
  BoundReport r;
  r.K = plan.K;
  r.M = plan.M;
  r.n = plan.n;
  r.T0 = plan.T.empty() ? 0 : plan.T.front();
  r.asymptotic = validate_asymptotic(plan.specs);

  r.thm1 = exact_sums_thm1(plan);
  double alpha_max = 0.0;
  for (std::size_t k = 0; k < plan.alpha.size(); ++k) {
    r.gb_bar = std::max(r.gb_bar, plan.gamma[k] * plan.beta[k]);
    alpha_max = std::max(alpha_max, plan.alpha[k]);
  }
  const ScheduleSet& s = plan.specs;
  const auto params = corollary_params(plan);

  auto check = [&](const char* label, double exact, double upper) {
    if (!dominated(exact, upper)) {
      std::ostringstream os;
      os.precision(17);
      os << label << ": exact " << exact << " exceeds closed form " << upper;
      r.failures.push_back(os.str());
    }
  };

  if (corollary1_covers(s)) {
    r.cor1 = corollary1_upper(s.lr.kind, s.batch.kind, params, plan.K);
    check("corollary1 A_K", r.thm1.A, r.cor1->A);
    check("corollary1 B_K", r.thm1.B, r.cor1->B);
    if (r.cor1->C) {
      check("corollary1 C_K", r.thm1.C, *r.cor1->C);
    } else {
      r.cor1_note = "C_K bound needs geometric momentum decay with lambda*zeta < 1";
    }
  } else {
    r.cor1_note = "n/a: " + cor1_combo_name(s.lr.kind, s.batch.kind) +
                  " is not covered by Corollary 1";
  }

  if (rhs) {
    if (!rhs->L || !rhs->sigma2) {
      r.thm1_rhs_note = "n/a: problem does not declare L and sigma^2";
    } else if (r.thm1.C > 0.0 && !rhs->G) {
      r.thm1_rhs_note = "n/a: momentum term needs a gradient bound G";
    } else if (!(alpha_max * *rhs->L < 2.0)) {
      r.thm1_rhs_note = "n/a: alpha_max * L >= 2";
    } else {
      const double G = rhs->G.value_or(0.0);
      r.thm1_rhs = thm1_rhs({rhs->f0_minus_fstar, *rhs->L, *rhs->sigma2, G * G, r.gb_bar, alpha_max},
                            r.thm1);
    }
  } else {
    r.thm1_rhs_note = "n/a: no problem constants";
  }

  r.thm2_first_violation = first_thm2_violation(plan);
  r.thm2_condition = !r.thm2_first_violation.has_value();
  const bool cor2 = corollary2_covers(s);
  if (r.thm2_condition) {
    r.thm2 = exact_sums_thm2(plan);
    if (cor2) {
      r.cor2 = corollary2_upper(s.lr.kind, s.beta.kind, s.batch.kind, params, plan.K);
      check("corollary2 A'_K", r.thm2->A, r.cor2->A);
      check("corollary2 B'_K", r.thm2->B, r.cor2->B);
      check("corollary2 C'_K", r.thm2->C, r.cor2->C);
      check("corollary2 D'_K", r.thm2->D, r.cor2->D);
    } else {
      r.cor2_note = "n/a: combination not covered by Corollary 2";
    }
    if (rhs && rhs->L && rhs->sigma2 && rhs->G) {
      r.thm2_rhs = thm2_rhs({rhs->f0_minus_fstar, *rhs->sigma2, *rhs->L, *rhs->G}, *r.thm2);
    } else {
      r.thm2_rhs_note = "n/a: needs L, sigma^2 and G";
    }
  } else {
    const auto k = static_cast<std::size_t>(*r.thm2_first_violation);
    std::ostringstream os;
    os.precision(17);
    os << "beta_k (alpha_k/2 + 1) <= 1 violated first at step k = " << k << " (epoch "
       << plan.epoch_of_step[k] << ", alpha = " << plan.alpha[k] << ", beta = " << plan.beta[k]
       << ")";
    r.cor2_note = os.str();
    r.thm2_rhs_note = "n/a: step condition violated";
    if (cor2) r.failures.push_back("theorem 2 condition: " + os.str());
  }
  return r;
}

std::string BoundReport::to_json(int indent) const {
  using nlohmann::json;
  auto opt = [](const std::optional<double>& v, const std::string& note) -> json {
    if (v) return *v;
    return note.empty() ? json("n/a") : json(note);
  };

  json j;
  j["plan"] = {{"K", K}, {"M", M}, {"n", n}, {"T0", T0}};
  j["asymptotic"] = {{"thm1", std::string(to_string(asymptotic.thm1))},
                     {"thm2", std::string(to_string(asymptotic.thm2))},
                     {"reasons", asymptotic.reasons}};

  json t1;
  t1["sums"] = {{"A_K", thm1.A}, {"B_K", thm1.B}, {"C_K", thm1.C}};
  t1["gb_bar"] = gb_bar;
  if (cor1) {
    json c = {{"A_up", cor1->A}, {"B_up", cor1->B}, {"rate", cor1->rate}};
    c["C_up"] = opt(cor1->C, cor1_note);
    c["dominated"] = {{"A", dominated(thm1.A, cor1->A)},
                      {"B", dominated(thm1.B, cor1->B)},
                      {"C", cor1->C ? json(dominated(thm1.C, *cor1->C)) : json("n/a")}};
    t1["corollary1"] = c;
  } else {
    t1["corollary1"] = cor1_note;
  }
  t1["rhs"] = opt(thm1_rhs, thm1_rhs_note);
  j["thm1"] = t1;

  json t2;
  t2["condition_holds"] = thm2_condition;
  t2["first_violation_step"] = thm2_first_violation ? json(*thm2_first_violation) : json(nullptr);
  if (thm2) {
    t2["sums"] = {{"A_K", thm2->A}, {"B_K", thm2->B}, {"C_K", thm2->C}, {"D_K", thm2->D}};
  } else {
    t2["sums"] = "n/a";
  }
  if (cor2 && thm2) {
    t2["corollary2"] = {{"A_up", cor2->A},
                        {"B_up", cor2->B},
                        {"C_up", cor2->C},
                        {"D_up", cor2->D},
                        {"diverges", cor2->diverges},
                        {"rate", cor2->rate},
                        {"dominated",
                         {{"A", dominated(thm2->A, cor2->A)},
                          {"B", dominated(thm2->B, cor2->B)},
                          {"C", dominated(thm2->C, cor2->C)},
                          {"D", dominated(thm2->D, cor2->D)}}}};
  } else {
    t2["corollary2"] = cor2_note.empty() ? "n/a" : cor2_note;
  }
  t2["rhs"] = opt(thm2_rhs, thm2_rhs_note);
  j["thm2"] = t2;

  j["empirical_min_grad_sq"] = empirical_min_grad_sq ? json(*empirical_min_grad_sq) : json(nullptr);
  j["failures"] = failures;
  j["all_dominated"] = all_dominated();
  return j.dump(indent);
}

}  // namespace qhm
