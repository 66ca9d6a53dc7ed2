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
#include <limits>
#include <vector>

#include "qhm/error.hpp"
#include "qhm/optim.hpp"
#include "qhm/rng.hpp"

namespace qhm {
namespace {

TEST(Qhm, TwoHandComputedSteps) {
  QhmState s = QhmState::at({1.0, -2.0});
  const StepHyper h{0.1, 0.5, 0.25};
  const std::vector<double> g1{2.0, 4.0};
  const std::vector<double> g2{-1.0, 0.0};
  qhm_update(s, g1, h);
  EXPECT_NEAR(s.x[0], 0.825, 1e-15);
  EXPECT_NEAR(s.x[1], -2.35, 1e-15);
  EXPECT_NEAR(s.buffer[1], 2.0, 1e-15);
  const auto diag = qhm_update(s, g2, h);
  EXPECT_NEAR(s.x[0], 0.9, 1e-15);
  EXPECT_NEAR(s.x[1], -2.375, 1e-15);
  EXPECT_NEAR(diag.m_norm, std::hypot(0.75, 0.25), 1e-15);
  EXPECT_NEAR(diag.d_norm, 1.0, 1e-15);
  EXPECT_EQ(s.k, 2);
}

TEST(Qhm, PureStepMatchesInPlaceUpdate) {
  const QhmState s0 = QhmState::at({0.5, 0.25, -1.0});
  const std::vector<double> g{0.1, -0.2, 0.3};
  const auto r = qhm_step(s0, g, {0.05, 0.9, 0.7});
  QhmState s1 = s0;
  qhm_update(s1, g, {0.05, 0.9, 0.7});
  EXPECT_EQ(r.state, s1);
  EXPECT_EQ(s0.k, 0);  // input untouched
}

TEST(Qhm, ReductionsAreBitExact) {
  Rng rng(42);
  QhmState q0 = QhmState::at({1.0, 2.0, 3.0, -4.0});
  QhmState q1 = q0, sgd = q0, nshb = q0;
  for (int k = 0; k < 1000; ++k) {
    std::vector<double> g(4);
    for (double& e : g) e = rng.normal();
    const double alpha = 0.01 + 0.001 * (k % 7), beta = 0.5 + 0.04 * (k % 11);
    qhm_update(q0, g, {alpha, beta, 0.0});
    sgd_update(sgd, g, alpha);
    qhm_update(q1, g, {alpha, beta, 1.0});
    nshb_update(nshb, g, alpha, beta);
    ASSERT_EQ(q0.x, sgd.x) << "step " << k;
    ASSERT_EQ(q1.x, nshb.x) << "step " << k;
    ASSERT_EQ(q1.buffer, nshb.buffer) << "step " << k;
  }
}

TEST(Qhm, CombinedMomentumMatchesTwoStageForm) {
  Rng rng(7);
  std::vector<double> g(5), d(5);
  for (int trial = 0; trial < 100; ++trial) {
    for (double& e : g) e = rng.normal();
    for (double& e : d) e = rng.normal();
    const double beta = rng.uniform01() * 0.99, gamma = rng.uniform01();
    const auto m = combined_momentum(g, d, beta, gamma);
    for (std::size_t i = 0; i < g.size(); ++i) {
      const double dk = (1 - beta) * g[i] + beta * d[i];
      const double two_stage = (1 - gamma) * g[i] + gamma * dk;
      EXPECT_NEAR(m[i], two_stage, 1e-14 * (1 + std::abs(two_stage)));
    }
  }
}

TEST(Qhm, NonFiniteGradientLeavesStateUntouched) {
  QhmState s = QhmState::at({1.0, 1.0});
  qhm_update(s, std::vector<double>{0.5, 0.5}, {0.1, 0.9, 0.7});
  const QhmState before = s;
  const std::vector<double> bad{std::numeric_limits<double>::quiet_NaN(), 0.0};
  for (int variant = 0; variant < 4; ++variant) {
    try {
      switch (variant) {
        case 0: qhm_update(s, bad, {0.1, 0.9, 0.7}); break;
        case 1: nshb_update(s, bad, 0.1, 0.9); break;
        case 2: shb_update(s, bad, 0.1, 0.9); break;
        default: sgd_update(s, bad, 0.1); break;
      }
      FAIL() << "variant " << variant;
    } catch (const Error& e) {
      EXPECT_EQ(e.kind(), ErrorKind::numeric);
    }
    EXPECT_EQ(s, before);
  }
}

TEST(Qhm, DimensionMismatchIsRejected) {
  QhmState s = QhmState::at({1.0, 1.0});
  try {
    qhm_update(s, std::vector<double>{1.0}, {0.1, 0.5, 0.5});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::invalid_argument);
  }
}

TEST(HeavyBall, ShbRecurrence) {
  QhmState s = QhmState::at({0.0});
  shb_update(s, std::vector<double>{1.0}, 0.5, 2.0);  // m = 1
  shb_update(s, std::vector<double>{1.0}, 0.5, 2.0);  // m = 1 + 2 = 3
  EXPECT_DOUBLE_EQ(s.buffer[0], 3.0);
  EXPECT_DOUBLE_EQ(s.x[0], -2.0);
}

TEST(HeavyBall, ConversionRoundTrip) {
  for (double beta : {0.0, 0.1, 0.5, 0.9, 0.99}) {
    for (double alpha : {1e-3, 0.1, 1.0}) {
      const auto shb = shb_from_nshb({alpha, beta});
      const auto back = nshb_from_shb(shb);
      EXPECT_NEAR(back.alpha, alpha, 1e-15 * alpha);
      EXPECT_NEAR(back.beta, beta, 1e-15);
    }
  }
  EXPECT_DOUBLE_EQ(shb_from_nshb({0.1, 0.5}).beta, 1.0);
  EXPECT_DOUBLE_EQ(shb_from_nshb({0.1, 0.5}).alpha, 0.05);
  EXPECT_THROW(shb_from_nshb({0.1, 1.0}), Error);
  EXPECT_THROW(nshb_from_shb({0.1, -0.5}), Error);
}

// Runs NSHB(alpha, beta) and SHB(alpha_s, beta_s) on f(x) = |x|^2 / 2 with a
// shared additive noise stream and returns max_k | |x_nshb| - |x_shb| | / |x_nshb|.
double trajectory_gap(double alpha, double beta, double alpha_s, double beta_s) {
  Rng noise(3);
  QhmState a = QhmState::at({1.0, -1.0, 0.5});
  QhmState b = a;
  double worst = 0.0;
  for (int k = 0; k < 1000; ++k) {
    std::vector<double> ga(3), gb(3);
    for (int i = 0; i < 3; ++i) {
      const double xi = 0.1 * noise.normal();
      ga[i] = a.x[i] + xi;
      gb[i] = b.x[i] + xi;
    }
    nshb_update(a, ga, alpha, beta);
    shb_update(b, gb, alpha_s, beta_s);
    const double na = norm2(a.x), nb = norm2(b.x);
    worst = std::max(worst, std::abs(na - nb) / na);
  }
  return worst;
}

TEST(HeavyBall, SameBetaRescaledStepGivesSameTrajectory) {
  // m_nshb = (1 - beta) m_shb when both start at zero, so SHB with
  // (alpha (1 - beta), beta) retraces NSHB(alpha, beta).
  EXPECT_LT(trajectory_gap(0.1, 0.9, 0.1 * (1 - 0.9), 0.9), 1e-10);
}

TEST(HeavyBall, MomentumRemapOfConversionChangesTrajectory) {
  // shb_from_nshb also remaps beta to beta / (1 - beta); the runs then differ.
  const auto shb = shb_from_nshb({0.1, 0.3});
  EXPECT_GT(trajectory_gap(0.1, 0.3, shb.alpha, shb.beta), 1e-3);
}

}  // namespace
}  // namespace qhm
