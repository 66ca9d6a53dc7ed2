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

#ifndef QHM_OPTIM_HPP
#define QHM_OPTIM_HPP

#include <cstdint>
#include <span>
#include <vector>

namespace qhm {

/// Optimizer iterate. `buffer` holds the previous momentum vector: d_{k-1}
/// for QHM, m_{k-1} for the heavy-ball variants. Starts at zero.
struct QhmState {
  std::vector<double> x;
  std::vector<double> buffer;
  std::int64_t k = 0;

  static QhmState at(std::vector<double> x0);

  bool operator==(const QhmState&) const = default;
};

/// Per-step QHM hyperparameters: alpha >= 0, beta in [0,1), gamma in [0,1].
struct StepHyper {
  double alpha = 0.0;
  double beta = 0.0;
  double gamma = 0.0;
};

struct StepDiagnostics {
  double m_norm = 0.0;  // norm of the search direction m_k
  double d_norm = 0.0;  // norm of the new buffer
};

// In-place updates. All of them throw Error(numeric) on a non-finite gradient
// component and Error(invalid_argument) on a dimension mismatch; the state is
// left untouched in both cases.

/// Mini-batch QHM:
///   d_k     = (1 - beta) g + beta d_{k-1}
///   m_k     = (1 - gamma) g + gamma d_k
///   x_{k+1} = x_k - alpha m_k
StepDiagnostics qhm_update(QhmState& s, std::span<const double> g, const StepHyper& h);

/// Normalized heavy ball: m_k = (1 - beta) g + beta m_{k-1}; x -= alpha m_k.
StepDiagnostics nshb_update(QhmState& s, std::span<const double> g, double alpha, double beta);

/// Heavy ball: m_k = g + beta m_{k-1}; x -= alpha m_k. beta may exceed 1.
StepDiagnostics shb_update(QhmState& s, std::span<const double> g, double alpha, double beta);

/// Plain SGD: x -= alpha g. The buffer is left untouched.
StepDiagnostics sgd_update(QhmState& s, std::span<const double> g, double alpha);

/// Value-semantics wrappers: state in, state out.
struct StepResult {
  QhmState state;
  StepDiagnostics diag;
};

StepResult qhm_step(const QhmState& s, std::span<const double> g, const StepHyper& h);
StepResult nshb_step(const QhmState& s, std::span<const double> g, double alpha, double beta);
StepResult shb_step(const QhmState& s, std::span<const double> g, double alpha, double beta);
StepResult sgd_step(const QhmState& s, std::span<const double> g, double alpha);

/// Collapsed QHM direction (1 - gamma beta) g + gamma beta d_prev, which
/// equals the two-stage m_k when d_prev is the buffer before the step.
std::vector<double> combined_momentum(std::span<const double> g,
                                      std::span<const double> d_prev, double beta,
                                      double gamma);

struct HeavyBallHyper {
  double alpha = 0.0;
  double beta = 0.0;
};

/// (alpha_nshb, beta_nshb) -> (alpha_nshb (1 - beta_nshb), beta_nshb / (1 - beta_nshb)).
/// Throws Error(range) unless beta_nshb in [0, 1).
HeavyBallHyper shb_from_nshb(HeavyBallHyper nshb);

/// (alpha_shb, beta_shb) -> (alpha_shb (1 + beta_shb), beta_shb / (1 + beta_shb)).
/// Throws Error(range) unless beta_shb >= 0.
HeavyBallHyper nshb_from_shb(HeavyBallHyper shb);

double norm2(std::span<const double> v);

}  // namespace qhm

#endif  // QHM_OPTIM_HPP
