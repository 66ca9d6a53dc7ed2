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

#ifndef QHM_PROBLEMS_HPP
#define QHM_PROBLEMS_HPP

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "qhm/rng.hpp"

namespace qhm {

/// Analytic constants a problem can certify. Absent means "no global bound".
struct ProblemConstants {
  std::optional<double> L;       // smoothness of f
  std::optional<double> G;       // sup over i, x of |grad f_i(x)|
  std::optional<double> sigma2;  // sup over x of E|grad f_xi(x) - grad f(x)|^2
  std::optional<double> f_star;  // lower bound on f
};

/// f(x) = (1/n) sum_i f_i(x) with per-component gradient access.
/// Implementations are immutable after construction and safe to share.
class FiniteSumProblem {
 public:
  virtual ~FiniteSumProblem() = default;

  virtual std::string name() const = 0;
  virtual std::size_t n() const = 0;
  virtual std::size_t dim() const = 0;

  virtual double component_loss(std::size_t i, std::span<const double> x) const = 0;

  /// Adds scale * grad f_i(x) into `out`.
  virtual void accumulate_component_grad(std::size_t i, std::span<const double> x,
                                         double scale, std::span<double> out) const = 0;

  virtual ProblemConstants constants() const = 0;

  /// Writes the generating data as CSV (one row per component).
  virtual void export_csv(const std::string& path) const = 0;

  std::vector<double> component_grad(std::size_t i, std::span<const double> x) const;
  double loss(std::span<const double> x) const;
  std::vector<double> full_grad(std::span<const double> x) const;
};

/// i.i.d. uniform index draws with replacement over [0, n).
class BatchSampler {
 public:
  BatchSampler(std::uint64_t seed, std::size_t n);

  std::size_t draw() { return static_cast<std::size_t>(rng_.uniform_index(n_)); }
  std::size_t n() const { return n_; }
  std::uint64_t seed() const { return seed_; }

 private:
  std::uint64_t seed_;
  std::size_t n_;
  Rng rng_;
};

/// (1/b) sum_{j<b} grad f_{xi_j}(x), consuming exactly b sampler draws.
/// Throws Error(invalid_argument) when b == 0.
std::vector<double> sample_batch_grad(const FiniteSumProblem& p, BatchSampler& s,
                                      std::span<const double> x, std::size_t b);

/// f_i(x) = 1/2 (x - c_i)^T A (x - c_i), A diagonal.
class NoisyQuadratic final : public FiniteSumProblem {
 public:
  NoisyQuadratic(std::vector<double> diag, std::vector<std::vector<double>> centers);

  std::string name() const override { return "quadratic"; }
  std::size_t n() const override { return centers_.size(); }
  std::size_t dim() const override { return diag_.size(); }
  double component_loss(std::size_t i, std::span<const double> x) const override;
  void accumulate_component_grad(std::size_t i, std::span<const double> x, double scale,
                                 std::span<double> out) const override;
  ProblemConstants constants() const override;
  void export_csv(const std::string& path) const override;

  const std::vector<double>& diag() const { return diag_; }
  const std::vector<double>& minimizer() const { return mean_; }

 private:
  std::vector<double> diag_;
  std::vector<std::vector<double>> centers_;
  std::vector<double> mean_;
  double sigma2_ = 0.0;
  double f_star_ = 0.0;
};

/// f_i(x) = s(a_i^T x - t_i), s the logistic sigmoid. Nonconvex, non-negative,
/// and globally gradient-bounded: |grad f_i| <= |a_i| / 4.
class SigmoidSum final : public FiniteSumProblem {
 public:
  SigmoidSum(std::vector<std::vector<double>> directions, std::vector<double> offsets);

  std::string name() const override { return "sigmoid_sum"; }
  std::size_t n() const override { return a_.size(); }
  std::size_t dim() const override { return dim_; }
  double component_loss(std::size_t i, std::span<const double> x) const override;
  void accumulate_component_grad(std::size_t i, std::span<const double> x, double scale,
                                 std::span<double> out) const override;
  ProblemConstants constants() const override;
  void export_csv(const std::string& path) const override;

  /// sup |s''| = 1/(6 sqrt 3).
  static double max_second_derivative();

 private:
  std::size_t dim_ = 0;
  std::vector<std::vector<double>> a_;
  std::vector<double> t_;
  double max_norm_ = 0.0;
};

/// f_i(x) = log(1 + exp(-y_i z_i^T x)), y_i in {-1, +1}.
class Logistic final : public FiniteSumProblem {
 public:
  Logistic(std::vector<std::vector<double>> features, std::vector<int> labels);

  std::string name() const override { return "logistic"; }
  std::size_t n() const override { return z_.size(); }
  std::size_t dim() const override { return dim_; }
  double component_loss(std::size_t i, std::span<const double> x) const override;
  void accumulate_component_grad(std::size_t i, std::span<const double> x, double scale,
                                 std::span<double> out) const override;
  ProblemConstants constants() const override;
  void export_csv(const std::string& path) const override;

  const std::vector<std::vector<double>>& features() const { return z_; }
  const std::vector<int>& labels() const { return y_; }

 private:
  std::size_t dim_ = 0;
  std::vector<std::vector<double>> z_;
  std::vector<int> y_;
  double max_norm_ = 0.0;
};

/// Diagonal spectrum spread evenly over [1, kappa] (a single coordinate gets
/// kappa), centers c_i ~ N(0, spread^2 I).
std::unique_ptr<NoisyQuadratic> make_noisy_quadratic(std::size_t dim, std::size_t n,
                                                     std::uint64_t seed, double kappa,
                                                     double spread = 1.0);

/// Directions a_i ~ N(0, I / dim), offsets t_i ~ N(0, 1).
std::unique_ptr<SigmoidSum> make_sigmoid_sum(std::size_t dim, std::size_t n,
                                             std::uint64_t seed);

/// Separable data: a hidden unit normal w, features z_i ~ N(0, I) shifted
/// along w so that |w^T z_i| >= margin, labels y_i = sign(w^T z_i).
std::unique_ptr<Logistic> make_logistic(std::size_t dim, std::size_t n, std::uint64_t seed,
                                        double margin = 0.1);

}  // namespace qhm

#endif  // QHM_PROBLEMS_HPP
