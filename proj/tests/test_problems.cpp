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
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "qhm/error.hpp"
#include "qhm/optim.hpp"
#include "qhm/problems.hpp"
#include "qhm/rng.hpp"

namespace qhm {
namespace {

std::vector<double> random_point(Rng& rng, std::size_t dim, double scale) {
  std::vector<double> x(dim);
  for (double& e : x) e = scale * rng.normal();
  return x;
}

// Central differences with a per-coordinate step.
std::vector<double> fd_grad(const FiniteSumProblem& p, std::vector<double> x) {
  std::vector<double> g(x.size());
  for (std::size_t j = 0; j < x.size(); ++j) {
    const double h = 1e-5 * std::max(1.0, std::abs(x[j]));
    const double keep = x[j];
    x[j] = keep + h;
    const double up = p.loss(x);
    x[j] = keep - h;
    const double down = p.loss(x);
    x[j] = keep;
    g[j] = (up - down) / (2 * h);
  }
  return g;
}

double dist(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

TEST(Rng, MersenneTwisterReferenceValue) {
  Rng rng(5489);
  std::uint64_t v = 0;
  for (int i = 0; i < 10000; ++i) v = rng.next_u64();
  EXPECT_EQ(v, 9981545732273789042ull);
}

TEST(Rng, UniformIndexIsUnbiased) {
  Rng rng(11);
  const int n = 10, draws = 100000;
  std::vector<int> counts(n, 0);
  for (int i = 0; i < draws; ++i) {
    const auto k = rng.uniform_index(n);
    ASSERT_LT(k, static_cast<std::uint64_t>(n));
    ++counts[k];
  }
  const double expect = draws / static_cast<double>(n);
  const double sd = std::sqrt(expect * (1 - 1.0 / n));
  for (int c : counts) EXPECT_LT(std::abs(c - expect), 5 * sd);
}

// Four centres at the corners of a 2 x 4 box; everything by hand.
TEST(NoisyQuadratic, FourCentreOracle) {
  NoisyQuadratic q({1.0, 3.0}, {{0, 0}, {2, 0}, {0, 4}, {2, 4}});
  EXPECT_EQ(q.minimizer(), (std::vector<double>{1.0, 2.0}));
  const auto k = q.constants();
  EXPECT_DOUBLE_EQ(*k.L, 3.0);
  EXPECT_DOUBLE_EQ(*k.f_star, 6.5);   // 0.5 (1 * 1 + 3 * 4)
  EXPECT_DOUBLE_EQ(*k.sigma2, 37.0);  // |(1 * 1, 3 * 2)|^2
  EXPECT_FALSE(k.G.has_value());
  EXPECT_DOUBLE_EQ(q.loss(std::vector<double>{1.0, 2.0}), 6.5);
  const auto g = q.full_grad(std::vector<double>{0.0, 0.0});
  EXPECT_DOUBLE_EQ(g[0], -1.0);
  EXPECT_DOUBLE_EQ(g[1], -6.0);
  EXPECT_EQ(q.component_grad(3, std::vector<double>{0.0, 0.0}), (std::vector<double>{-2.0, -12.0}));
}

TEST(Problems, FullGradientMatchesFiniteDifferences) {
  const std::vector<std::unique_ptr<FiniteSumProblem>> problems = [] {
    std::vector<std::unique_ptr<FiniteSumProblem>> v;
    v.push_back(make_noisy_quadratic(6, 64, 1, 10.0));
    v.push_back(make_sigmoid_sum(6, 64, 2));
    v.push_back(make_logistic(6, 64, 3));
    return v;
  }();
  Rng rng(99);
  for (const auto& p : problems) {
    for (int trial = 0; trial < 20; ++trial) {
      const auto x = random_point(rng, p->dim(), 2.0);
      const auto g = p->full_grad(x);
      EXPECT_LE(dist(fd_grad(*p, x), g), 1e-5 * std::max(1.0, norm2(g))) << p->name();
    }
  }
}

TEST(Problems, GeneratorsAreDeterministic) {
  const auto a = make_sigmoid_sum(4, 16, 5);
  const auto b = make_sigmoid_sum(4, 16, 5);
  const auto c = make_sigmoid_sum(4, 16, 6);
  const std::vector<double> x{0.1, 0.2, 0.3, 0.4};
  EXPECT_EQ(a->full_grad(x), b->full_grad(x));
  EXPECT_NE(a->full_grad(x), c->full_grad(x));
}

TEST(Problems, QuadraticSpectrum) {
  const auto q = make_noisy_quadratic(5, 8, 1, 9.0);
  EXPECT_EQ(q->diag(), (std::vector<double>{1.0, 3.0, 5.0, 7.0, 9.0}));
  EXPECT_EQ(make_noisy_quadratic(1, 8, 1, 4.0)->diag(), (std::vector<double>{4.0}));
  EXPECT_THROW(make_noisy_quadratic(3, 1, 1, 4.0), Error);
}

TEST(SigmoidSum, ComponentGradientsRespectG) {
  const auto p = make_sigmoid_sum(8, 200, 4);
  const double G = *p->constants().G;
  Rng rng(1);
  for (int trial = 0; trial < 50; ++trial) {
    const auto x = random_point(rng, 8, 3.0);
    for (std::size_t i = 0; i < p->n(); ++i) EXPECT_LE(norm2(p->component_grad(i, x)), G + 1e-15);
  }
}

TEST(SigmoidSum, SmoothnessBoundHoldsAlongRandomSegments) {
  const auto p = make_sigmoid_sum(5, 100, 8);
  const double L = *p->constants().L;
  Rng rng(2);
  for (int trial = 0; trial < 200; ++trial) {
    const auto x = random_point(rng, 5, 2.0);
    const auto y = random_point(rng, 5, 2.0);
    EXPECT_LE(dist(p->full_grad(x), p->full_grad(y)), L * dist(x, y) * (1 + 1e-12));
  }
}

TEST(Logistic, SeparableDataAndConstants) {
  const auto p = make_logistic(4, 128, 9, 0.2);
  double max_sq = 0;
  for (const auto& z : p->features()) max_sq = std::max(max_sq, z[0] * z[0] + z[1] * z[1] + z[2] * z[2] + z[3] * z[3]);
  const auto k = p->constants();
  EXPECT_NEAR(*k.L, max_sq / 4, 1e-12 * max_sq);
  EXPECT_NEAR(*k.G, std::sqrt(max_sq), 1e-12);
  EXPECT_FALSE(k.f_star.has_value());
  for (int y : p->labels()) EXPECT_TRUE(y == 1 || y == -1);
  EXPECT_NEAR(p->loss(std::vector<double>(4, 0.0)), std::log(2.0), 1e-15);
}

TEST(Sampler, SameSeedSameStream) {
  BatchSampler a(17, 1000), b(17, 1000), c(18, 1000);
  bool differs = false;
  for (int i = 0; i < 100; ++i) {
    const auto x = a.draw();
    EXPECT_EQ(x, b.draw());
    differs = differs || x != c.draw();
  }
  EXPECT_TRUE(differs);
}

TEST(Sampler, BatchGradientIsMeanOfDrawnComponents) {
  const auto p = make_noisy_quadratic(3, 50, 2, 3.0);
  const std::vector<double> x{0.3, -0.1, 2.0};
  BatchSampler s(5, 50), replay(5, 50);
  const auto g = sample_batch_grad(*p, s, x, 7);
  std::vector<double> oracle(3, 0.0);
  for (int j = 0; j < 7; ++j) {
    const auto gi = p->component_grad(replay.draw(), x);
    for (int d = 0; d < 3; ++d) oracle[d] += gi[d] / 7;
  }
  EXPECT_LE(dist(g, oracle), 1e-14);
  EXPECT_THROW(sample_batch_grad(*p, s, x, 0), Error);
}

// Monte Carlo check of E g_b = grad f and E|g_b - grad f|^2 = sigma^2 / b
// (the quadratic's sigma^2 is exact and independent of x).
TEST(Sampler, QuadraticEstimatorMoments) {
  const auto p = make_noisy_quadratic(4, 256, 3, 4.0);
  const double sigma2 = *p->constants().sigma2;
  const std::vector<double> x{1.0, -1.0, 0.5, 0.0};
  const auto full = p->full_grad(x);
  BatchSampler s(21, p->n());
  for (std::size_t b : {1u, 8u}) {
    const int draws = 20000;
    double msq = 0;
    for (int t = 0; t < draws; ++t) {
      const auto g = sample_batch_grad(*p, s, x, b);
      const double d = dist(g, full);
      msq += d * d;
    }
    msq /= draws;
    EXPECT_NEAR(msq, sigma2 / b, 0.05 * sigma2 / b) << "b = " << b;
  }
}

TEST(Problems, ExportCsvHasOneRowPerComponent) {
  const auto path = (std::filesystem::temp_directory_path() / "qhm_export_test.csv").string();
  make_logistic(3, 20, 1)->export_csv(path);
  std::ifstream in(path);
  int lines = 0;
  for (std::string line; std::getline(in, line);) ++lines;
  EXPECT_EQ(lines, 21);
  std::filesystem::remove(path);
}

}  // namespace
}  // namespace qhm
