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

#include <gtest/gtest.h>

#include <cmath>
#include <string>

#include "json.hpp"
#include "qhm/bounds.hpp"
#include "qhm/error.hpp"

namespace qhm {
namespace {

ScheduleSpec lr_spec(Kind k) {
  switch (k) {
    case Kind::cosine_lr:
      return make_schedule(Target::lr, k, {{"alpha_max", 0.1}, {"alpha_min", 0.01}});
    case Kind::polynomial_lr:
      return make_schedule(Target::lr, k, {{"alpha_max", 0.1}, {"alpha_min", 0.01}, {"p", 2}});
    default:
      return make_schedule(Target::lr, k, {{"alpha_max", 0.1}});
  }
}

// n = 1024 with b = 103 gives exactly ten steps per epoch.
StepPlan plan_for(Kind lr, Kind bs, std::int64_t M, bool momentum = true) {
  ScheduleSet s;
  s.batch = bs == Kind::constant
                ? make_schedule(Target::batch, bs, {{"b", 103}})
                : make_schedule(Target::batch, bs, {{"b0", 103}, {"delta", 2}, {"E", std::max<std::int64_t>(1, M / 4)}});
  s.lr = lr_spec(lr);
  const double E = static_cast<double>(std::max<std::int64_t>(1, M / 10));
  s.beta = momentum ? make_schedule(Target::beta, Kind::step_decay, {{"beta_max", 0.9}, {"zeta", 0.5}, {"E", E}})
                    : make_schedule(Target::beta, Kind::constant, {{"beta_max", 0.0}});
  s.gamma = make_schedule(Target::gamma, Kind::step_decay, {{"gamma_max", 0.7}, {"lambda", 0.5}, {"E", E}});
  return expand(s, 1024, M);
}

// Independent long-double loops over the per-step plan.
struct Brute {
  long double A, B, C, Bp, Cp, Dp;
};

Brute brute(const StepPlan& p) {
  long double sa = 0, sa2b = 0, sgb = 0, somb = 0, sa2 = 0, sa2omb = 0;
  for (std::int64_t k = 0; k < p.K; ++k) {
    const long double a = p.alpha[k], b = p.batch[k], be = p.beta[k], g = p.gamma[k];
    sa += a;
    sa2b += a * a / b;
    sgb += g * be;
    somb += (1 - be) / b;
    sa2 += a * a;
    sa2omb += a * a / (1 - be);
  }
  return {1 / sa, sa2b / sa, sgb / sa, somb / sa, sa2 / sa, sa2omb / sa};
}

void expect_rel(double got, long double want, double tol = 1e-12) {
  EXPECT_LE(std::abs(static_cast<long double>(got) - want), tol * std::abs(want)) << got << " vs " << static_cast<double>(want);
}

TEST(ExactSums, MatchBruteForce) {
  for (Kind lr : {Kind::constant, Kind::decaying_sq_lr, Kind::cosine_lr, Kind::polynomial_lr}) {
    for (Kind bs : {Kind::constant, Kind::exponential_bs}) {
      const auto plan = plan_for(lr, bs, 40);
      const auto s1 = exact_sums_thm1(plan);
      const auto s2 = exact_sums_thm2(plan);
      const Brute o = brute(plan);
      expect_rel(s1.A, o.A);
      expect_rel(s1.B, o.B);
      expect_rel(s1.C, o.C);
      expect_rel(s2.A, o.A);
      expect_rel(s2.B, o.Bp);
      expect_rel(s2.C, o.Cp);
      expect_rel(s2.D, o.Dp);
    }
  }
}

TEST(ExactSums, Thm2SumsRefuseViolatingPlans) {
  ScheduleSet s;
  s.batch = make_schedule(Target::batch, Kind::constant, {{"b", 4}});
  s.lr = make_schedule(Target::lr, Kind::constant, {{"alpha_max", 0.5}});
  s.beta = make_schedule(Target::beta, Kind::constant, {{"beta_max", 0.9}});
  s.gamma = make_schedule(Target::gamma, Kind::constant, {{"gamma_max", 1.0}});
  try {
    exact_sums_thm2(expand(s, 16, 3));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::bound_violation);
    EXPECT_NE(std::string(e.what()).find("k = 0"), std::string::npos) << e.what();
  }
}

TEST(Corollary1, ConstantCaseIsTight) {
  const auto plan = plan_for(Kind::constant, Kind::constant, 30);
  const auto s = exact_sums_thm1(plan);
  const auto up = corollary1_upper(Kind::constant, Kind::constant, corollary_params(plan), plan.K);
  EXPECT_NEAR(s.A, 1.0 / (0.1 * 300), 1e-15);
  EXPECT_NEAR(up.A, s.A, 1e-15);
  EXPECT_DOUBLE_EQ(up.B, 0.1 / 103);  // the noise floor alpha / b
  EXPECT_NEAR(s.B, up.B, 1e-15);
  ASSERT_TRUE(up.C.has_value());
  EXPECT_LE(s.C, *up.C);
}

TEST(Corollary1, DominationAcrossCombos) {
  for (Kind lr : {Kind::constant, Kind::decaying_sq_lr, Kind::cosine_lr, Kind::polynomial_lr}) {
    for (Kind bs : {Kind::constant, Kind::exponential_bs}) {
      for (std::int64_t M : {4, 10, 100}) {
        const auto plan = plan_for(lr, bs, M);
        const auto s = exact_sums_thm1(plan);
        const auto up = corollary1_upper(lr, bs, corollary_params(plan), plan.K);
        const std::string ctx = std::string(to_string(lr)) + "/" + std::string(to_string(bs)) +
                                " M=" + std::to_string(M);
        EXPECT_TRUE(dominated(s.A, up.A)) << ctx;
        EXPECT_TRUE(dominated(s.B, up.B)) << ctx;
        ASSERT_TRUE(up.C.has_value());
        EXPECT_TRUE(dominated(s.C, *up.C)) << ctx;
      }
    }
  }
}

TEST(Corollary1, PrintedCosineMomentumTermIsTooSmall) {
  const auto plan = plan_for(Kind::cosine_lr, Kind::constant, 100);
  const auto params = corollary_params(plan);
  const auto s = exact_sums_thm1(plan);
  const auto printed = corollary1_upper(Kind::cosine_lr, Kind::constant, params, plan.K, BoundForm::as_printed);
  const auto derived = corollary1_upper(Kind::cosine_lr, Kind::constant, params, plan.K);
  EXPECT_FALSE(dominated(s.C, *printed.C));
  EXPECT_TRUE(dominated(s.C, *derived.C));
  EXPECT_DOUBLE_EQ(*derived.C, 2 * *printed.C);
  EXPECT_EQ(printed.A, derived.A);
  EXPECT_EQ(printed.B, derived.B);
}

TEST(Corollary1, NoMomentumGivesZeroC) {
  const auto plan = plan_for(Kind::constant, Kind::constant, 5, false);
  const auto up = corollary1_upper(Kind::constant, Kind::constant, corollary_params(plan), plan.K);
  EXPECT_EQ(up.C, 0.0);
  EXPECT_EQ(exact_sums_thm1(plan).C, 0.0);
}

StepPlan cor2_plan(Kind lr, Kind beta, Kind bs, std::int64_t M) {
  ScheduleSet s;
  s.batch = bs == Kind::constant
                ? make_schedule(Target::batch, bs, {{"b", 103}})
                : make_schedule(Target::batch, bs, {{"b0", 103}, {"delta", 2}, {"E", std::max<std::int64_t>(1, M / 4)}});
  s.lr = lr_spec(lr);
  s.beta = beta == Kind::constant ? make_schedule(Target::beta, beta, {{"beta_max", 0.9}})
                                  : make_schedule(Target::beta, beta, {{"beta_min", 0.5}});
  s.gamma = make_schedule(Target::gamma, Kind::constant, {{"gamma_max", 1.0}});
  return expand(s, 1024, M);
}

TEST(Corollary2, DominationAcrossCombos) {
  const std::pair<Kind, Kind> combos[] = {{Kind::decaying_sq_lr, Kind::constant},
                                          {Kind::decaying_lr, Kind::increasing_beta}};
  for (const auto& [lr, beta] : combos) {
    for (Kind bs : {Kind::constant, Kind::exponential_bs}) {
      for (std::int64_t M : {4, 10, 100}) {
        const auto plan = cor2_plan(lr, beta, bs, M);
        ASSERT_TRUE(validate_thm2_condition(plan));
        const auto s = exact_sums_thm2(plan);
        const auto up = corollary2_upper(lr, beta, bs, corollary_params(plan), plan.K);
        const std::string ctx = std::string(to_string(lr)) + "/" + std::string(to_string(bs)) +
                                " M=" + std::to_string(M);
        EXPECT_TRUE(dominated(s.A, up.A)) << ctx;
        EXPECT_TRUE(dominated(s.B, up.B)) << ctx;
        EXPECT_TRUE(dominated(s.C, up.C)) << ctx;
        EXPECT_TRUE(dominated(s.D, up.D)) << ctx;
        EXPECT_EQ(up.diverges, bs == Kind::constant) << ctx;
      }
    }
  }
}

TEST(Corollary2, PrintedDecayingSquaredTermsAreTooSmall) {
  const auto plan = cor2_plan(Kind::decaying_sq_lr, Kind::constant, Kind::constant, 100);
  const auto s = exact_sums_thm2(plan);
  const auto printed = corollary2_upper(Kind::decaying_sq_lr, Kind::constant, Kind::constant,
                                        corollary_params(plan), plan.K, BoundForm::as_printed);
  EXPECT_FALSE(dominated(s.B, printed.B));
  EXPECT_FALSE(dominated(s.D, printed.D));
}

TEST(Corollary2, UncoveredCombinationThrows) {
  const auto plan = cor2_plan(Kind::decaying_sq_lr, Kind::constant, Kind::constant, 4);
  EXPECT_THROW(corollary2_upper(Kind::constant, Kind::constant, Kind::constant, corollary_params(plan), 10),
               Error);
}

TEST(Thm1Rhs, HandEvaluation) {
  // [2 * 3 * 0.5 + 2 * 1.5 * 0.25 + 2 * 0.1 * (1 + 0.2) * 4 * 0.125] / ((1 - 0.5) (2 - 0.2))
  const double rhs = thm1_rhs({3.0, 2.0, 1.5, 4.0, 0.5, 0.1}, {0.5, 0.25, 0.125});
  EXPECT_NEAR(rhs, (3.0 + 0.75 + 0.12) / 0.9, 1e-15);
  EXPECT_THROW(thm1_rhs({3.0, 20.0, 1.5, 4.0, 0.5, 0.1}, {0.5, 0.25, 0.125}), Error);
  EXPECT_THROW(thm1_rhs({3.0, 2.0, 1.5, 4.0, 1.0, 0.1}, {0.5, 0.25, 0.125}), Error);
  // 2 * 3 * 0.5 + 4 * 1.5 * 0.25 + 5 * 4 * 0.125 + 2 * 4 * 0.0625
  EXPECT_NEAR(thm2_rhs({3.0, 1.5, 1.0, 2.0}, {0.5, 0.25, 0.125, 0.0625}), 3 + 1.5 + 2.5 + 0.5, 1e-15);
}

TEST(BoundReport, ConstantCaseReportsNoiseFloor) {
  const auto plan = plan_for(Kind::constant, Kind::constant, 10);
  const auto r = build_bound_report(plan, RhsInputs{1.0, 2.0, 0.5, 1.0});
  EXPECT_TRUE(r.all_dominated());
  ASSERT_TRUE(r.cor1.has_value());
  EXPECT_DOUBLE_EQ(r.cor1->B, 0.1 / 103);
  ASSERT_TRUE(r.thm1_rhs.has_value());
  const auto j = nlohmann::json::parse(r.to_json());
  EXPECT_EQ(j["thm1"]["corollary1"]["B_up"].get<double>(), 0.1 / 103);
  EXPECT_TRUE(j["all_dominated"].get<bool>());
}

TEST(BoundReport, UncoveredCombosAreMarkedNotApplicable) {
  const auto plan = plan_for(Kind::decaying_lr, Kind::constant, 10);
  const auto r = build_bound_report(plan);
  EXPECT_TRUE(r.all_dominated());
  EXPECT_FALSE(r.cor1.has_value());
  const auto j = nlohmann::json::parse(r.to_json());
  EXPECT_EQ(j["thm1"]["corollary1"].get<std::string>().rfind("n/a", 0), 0u);
  EXPECT_EQ(j["thm2"]["corollary2"].get<std::string>().rfind("n/a", 0), 0u);
}

TEST(BoundReport, Thm2ConditionFailureNamesTheStep) {
  ScheduleSet s;
  s.batch = make_schedule(Target::batch, Kind::constant, {{"b", 103}});
  s.lr = make_schedule(Target::lr, Kind::decaying_sq_lr, {{"alpha_max", 0.5}});
  s.beta = make_schedule(Target::beta, Kind::constant, {{"beta_max", 0.9}});
  s.gamma = make_schedule(Target::gamma, Kind::constant, {{"gamma_max", 1.0}});
  const auto r = build_bound_report(expand(s, 1024, 5));
  EXPECT_FALSE(r.all_dominated());
  ASSERT_EQ(r.thm2_first_violation, 0);
  ASSERT_FALSE(r.failures.empty());
  EXPECT_NE(r.failures[0].find("k = 0"), std::string::npos);
}

}  // namespace
}  // namespace qhm
