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

#include "qhm/problems.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "qhm/error.hpp"
#include "qhm/summation.hpp"

namespace qhm {

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

// log(1 + exp(-t)) without overflow.
double softplus_neg(double t) {
  if (t > 0.0) return std::log1p(std::exp(-t));
  return -t + std::log1p(std::exp(t));
}

void check_x(const FiniteSumProblem& p, std::span<const double> x) {
  if (x.size() != p.dim()) {
    std::ostringstream os;
    os << p.name() << ": point has dimension " << x.size() << ", expected " << p.dim();
    throw Error(ErrorKind::invalid_argument, os.str());
  }
}

std::ofstream open_csv(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::io, "cannot open '" + path + "' for writing");
  out << std::setprecision(17);
  return out;
}

void require_rows(const std::vector<std::vector<double>>& rows, std::size_t dim,
                  const char* what) {
  if (rows.empty()) throw Error(ErrorKind::invalid_argument, std::string(what) + ": need n >= 1");
  for (const auto& r : rows) {
    if (r.size() != dim)
      throw Error(ErrorKind::invalid_argument, std::string(what) + ": ragged data rows");
  }
}

}  // namespace

std::vector<double> FiniteSumProblem::component_grad(std::size_t i,
                                                     std::span<const double> x) const {
  check_x(*this, x);
  std::vector<double> g(dim(), 0.0);
  accumulate_component_grad(i, x, 1.0, g);
  return g;
}

double FiniteSumProblem::loss(std::span<const double> x) const {
  check_x(*this, x);
  CompensatedSum s;
  for (std::size_t i = 0; i < n(); ++i) s += component_loss(i, x);
  return s.value() / static_cast<double>(n());
}

std::vector<double> FiniteSumProblem::full_grad(std::span<const double> x) const {
  check_x(*this, x);
  std::vector<double> g(dim(), 0.0);
  const double w = 1.0 / static_cast<double>(n());
  for (std::size_t i = 0; i < n(); ++i) accumulate_component_grad(i, x, w, g);
  return g;
}

BatchSampler::BatchSampler(std::uint64_t seed, std::size_t n) : seed_(seed), n_(n), rng_(seed) {
  if (n == 0) throw Error(ErrorKind::invalid_argument, "sampler population must be >= 1");
}

std::vector<double> sample_batch_grad(const FiniteSumProblem& p, BatchSampler& s,
                                      std::span<const double> x, std::size_t b) {
  if (b == 0) throw Error(ErrorKind::invalid_argument, "batch size must be >= 1");
  if (s.n() != p.n()) throw Error(ErrorKind::invalid_argument, "sampler and problem sizes differ");
  check_x(p, x);
  std::vector<double> g(p.dim(), 0.0);
  for (std::size_t j = 0; j < b; ++j) p.accumulate_component_grad(s.draw(), x, 1.0, g);
  const double inv_b = 1.0 / static_cast<double>(b);
  for (double& v : g) v *= inv_b;
  return g;
}

// ---------------------------------------------------------------------------
// Noisy quadratic

NoisyQuadratic::NoisyQuadratic(std::vector<double> diag,
                               std::vector<std::vector<double>> centers)
    : diag_(std::move(diag)), centers_(std::move(centers)) {
  if (diag_.empty()) throw Error(ErrorKind::invalid_argument, "quadratic: dim must be >= 1");
  for (double a : diag_) {
    if (!(a > 0.0) || !std::isfinite(a))
      throw Error(ErrorKind::invalid_argument, "quadratic: curvature must be positive");
  }
  require_rows(centers_, diag_.size(), "quadratic");
  const std::size_t d = diag_.size();
  mean_.assign(d, 0.0);
  for (std::size_t j = 0; j < d; ++j) {
    CompensatedSum s;
    for (const auto& c : centers_) s += c[j];
    mean_[j] = s.value() / static_cast<double>(centers_.size());
  }
  // grad f_i(x) - grad f(x) = A (mean - c_i), independent of x.
  CompensatedSum var;
  CompensatedSum fmin;
  for (const auto& c : centers_) {
    double sq = 0.0;
    double q = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      const double r = mean_[j] - c[j];
      sq += diag_[j] * diag_[j] * r * r;
      q += diag_[j] * r * r;
    }
    var += sq;
    fmin += 0.5 * q;
  }
  sigma2_ = var.value() / static_cast<double>(centers_.size());
  f_star_ = fmin.value() / static_cast<double>(centers_.size());
}

double NoisyQuadratic::component_loss(std::size_t i, std::span<const double> x) const {
  const auto& c = centers_[i];
  double q = 0.0;
  for (std::size_t j = 0; j < diag_.size(); ++j) {
    const double r = x[j] - c[j];
    q += diag_[j] * r * r;
  }
  return 0.5 * q;
}

void NoisyQuadratic::accumulate_component_grad(std::size_t i, std::span<const double> x,
                                               double scale, std::span<double> out) const {
  const auto& c = centers_[i];
  for (std::size_t j = 0; j < diag_.size(); ++j) out[j] += scale * diag_[j] * (x[j] - c[j]);
}

ProblemConstants NoisyQuadratic::constants() const {
  ProblemConstants k;
  k.L = *std::max_element(diag_.begin(), diag_.end());
  k.sigma2 = sigma2_;
  k.f_star = f_star_;
  return k;
}

void NoisyQuadratic::export_csv(const std::string& path) const {
  auto out = open_csv(path);
  out << "i";
  for (std::size_t j = 0; j < dim(); ++j) out << ",a" << j;
  for (std::size_t j = 0; j < dim(); ++j) out << ",c" << j;
  out << "\n";
  for (std::size_t i = 0; i < n(); ++i) {
    out << i;
    for (double a : diag_) out << "," << a;
    for (double c : centers_[i]) out << "," << c;
    out << "\n";
  }
}

std::unique_ptr<NoisyQuadratic> make_noisy_quadratic(std::size_t dim, std::size_t n,
                                                     std::uint64_t seed, double kappa,
                                                     double spread) {
  if (dim < 1) throw Error(ErrorKind::invalid_argument, "quadratic: dim must be >= 1");
  if (n < 2) throw Error(ErrorKind::invalid_argument, "quadratic: n must be >= 2");
  if (!(kappa >= 1.0) || !std::isfinite(kappa))
    throw Error(ErrorKind::invalid_argument, "quadratic: kappa must be >= 1");
  if (!(spread >= 0.0) || !std::isfinite(spread))
    throw Error(ErrorKind::invalid_argument, "quadratic: spread must be >= 0");
  std::vector<double> diag(dim);
  if (dim == 1) {
    diag[0] = kappa;
  } else {
    for (std::size_t j = 0; j < dim; ++j)
      diag[j] = 1.0 + (kappa - 1.0) * static_cast<double>(j) / static_cast<double>(dim - 1);
  }
  Rng rng(seed);
  std::vector<std::vector<double>> centers(n, std::vector<double>(dim));
  for (auto& c : centers) {
    for (double& v : c) v = spread * rng.normal();
  }
  return std::make_unique<NoisyQuadratic>(std::move(diag), std::move(centers));
}

// ---------------------------------------------------------------------------
// Sigmoid sum

SigmoidSum::SigmoidSum(std::vector<std::vector<double>> directions, std::vector<double> offsets)
    : a_(std::move(directions)), t_(std::move(offsets)) {
  if (a_.empty()) throw Error(ErrorKind::invalid_argument, "sigmoid_sum: need n >= 1");
  dim_ = a_.front().size();
  if (dim_ == 0) throw Error(ErrorKind::invalid_argument, "sigmoid_sum: dim must be >= 1");
  require_rows(a_, dim_, "sigmoid_sum");
  if (t_.size() != a_.size())
    throw Error(ErrorKind::invalid_argument, "sigmoid_sum: offsets and directions differ in count");
  for (const auto& a : a_) max_norm_ = std::max(max_norm_, std::sqrt(dot(a, a)));
}

double SigmoidSum::max_second_derivative() { return 1.0 / (6.0 * std::sqrt(3.0)); }

double SigmoidSum::component_loss(std::size_t i, std::span<const double> x) const {
  return sigmoid(dot(a_[i], x) - t_[i]);
}

void SigmoidSum::accumulate_component_grad(std::size_t i, std::span<const double> x,
                                           double scale, std::span<double> out) const {
  const double s = sigmoid(dot(a_[i], x) - t_[i]);
  const double w = scale * s * (1.0 - s);
  const auto& a = a_[i];
  for (std::size_t j = 0; j < dim_; ++j) out[j] += w * a[j];
}

ProblemConstants SigmoidSum::constants() const {
  ProblemConstants k;
  k.G = max_norm_ / 4.0;
  k.L = max_second_derivative() * max_norm_ * max_norm_;
  // Variance is at most the second moment, E|grad f_xi|^2 <= mean |a_i|^2 / 16.
  CompensatedSum sq;
  for (const auto& a : a_) sq += dot(a, a);
  k.sigma2 = sq.value() / static_cast<double>(a_.size()) / 16.0;
  k.f_star = 0.0;
  return k;
}

void SigmoidSum::export_csv(const std::string& path) const {
  auto out = open_csv(path);
  out << "i,t";
  for (std::size_t j = 0; j < dim_; ++j) out << ",a" << j;
  out << "\n";
  for (std::size_t i = 0; i < a_.size(); ++i) {
    out << i << "," << t_[i];
    for (double v : a_[i]) out << "," << v;
    out << "\n";
  }
}

std::unique_ptr<SigmoidSum> make_sigmoid_sum(std::size_t dim, std::size_t n, std::uint64_t seed) {
  if (dim < 1) throw Error(ErrorKind::invalid_argument, "sigmoid_sum: dim must be >= 1");
  if (n < 1) throw Error(ErrorKind::invalid_argument, "sigmoid_sum: n must be >= 1");
  Rng rng(seed);
  const double scale = 1.0 / std::sqrt(static_cast<double>(dim));
  std::vector<std::vector<double>> a(n, std::vector<double>(dim));
  std::vector<double> t(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (double& v : a[i]) v = scale * rng.normal();
    t[i] = rng.normal();
  }
  return std::make_unique<SigmoidSum>(std::move(a), std::move(t));
}

// ---------------------------------------------------------------------------
// Logistic regression

Logistic::Logistic(std::vector<std::vector<double>> features, std::vector<int> labels)
    : z_(std::move(features)), y_(std::move(labels)) {
  if (z_.empty()) throw Error(ErrorKind::invalid_argument, "logistic: need n >= 1");
  dim_ = z_.front().size();
  if (dim_ == 0) throw Error(ErrorKind::invalid_argument, "logistic: dim must be >= 1");
  require_rows(z_, dim_, "logistic");
  if (y_.size() != z_.size())
    throw Error(ErrorKind::invalid_argument, "logistic: labels and features differ in count");
  for (int y : y_) {
    if (y != 1 && y != -1) throw Error(ErrorKind::invalid_argument, "logistic: labels must be +-1");
  }
  for (const auto& z : z_) max_norm_ = std::max(max_norm_, std::sqrt(dot(z, z)));
}

double Logistic::component_loss(std::size_t i, std::span<const double> x) const {
  return softplus_neg(static_cast<double>(y_[i]) * dot(z_[i], x));
}

void Logistic::accumulate_component_grad(std::size_t i, std::span<const double> x, double scale,
                                         std::span<double> out) const {
  const double y = static_cast<double>(y_[i]);
  const double w = -scale * y * sigmoid(-y * dot(z_[i], x));
  const auto& z = z_[i];
  for (std::size_t j = 0; j < dim_; ++j) out[j] += w * z[j];
}

ProblemConstants Logistic::constants() const {
  ProblemConstants k;
  k.G = max_norm_;
  k.L = max_norm_ * max_norm_ / 4.0;
  CompensatedSum sq;
  for (const auto& z : z_) sq += dot(z, z);
  k.sigma2 = sq.value() / static_cast<double>(z_.size());
  return k;
}

void Logistic::export_csv(const std::string& path) const {
  auto out = open_csv(path);
  out << "i,y";
  for (std::size_t j = 0; j < dim_; ++j) out << ",z" << j;
  out << "\n";
  for (std::size_t i = 0; i < z_.size(); ++i) {
    out << i << "," << y_[i];
    for (double v : z_[i]) out << "," << v;
    out << "\n";
  }
}

std::unique_ptr<Logistic> make_logistic(std::size_t dim, std::size_t n, std::uint64_t seed,
                                        double margin) {
  if (dim < 1) throw Error(ErrorKind::invalid_argument, "logistic: dim must be >= 1");
  if (n < 1) throw Error(ErrorKind::invalid_argument, "logistic: n must be >= 1");
  if (!(margin >= 0.0)) throw Error(ErrorKind::invalid_argument, "logistic: margin must be >= 0");
  Rng rng(seed);
  std::vector<double> w(dim);
  for (double& v : w) v = rng.normal();
  const double wn = std::sqrt(dot(w, w));
  for (double& v : w) v /= wn;

  std::vector<std::vector<double>> z(n, std::vector<double>(dim));
  std::vector<int> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (double& v : z[i]) v = rng.normal();
    const double s = dot(w, z[i]);
    const double target = s >= 0.0 ? std::max(s, margin) : std::min(s, -margin);
    for (std::size_t j = 0; j < dim; ++j) z[i][j] += (target - s) * w[j];
    y[i] = target >= 0.0 ? 1 : -1;
  }
  return std::make_unique<Logistic>(std::move(z), std::move(y));
}

}  // namespace qhm
