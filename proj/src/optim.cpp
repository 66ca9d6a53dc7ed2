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

#include "qhm/optim.hpp"

#include <cmath>
#include <sstream>

#include "qhm/error.hpp"

namespace qhm {

namespace {

void check_gradient(const QhmState& s, std::span<const double> g) {
  if (g.size() != s.x.size() || s.buffer.size() != s.x.size()) {
    std::ostringstream os;
    os << "gradient has dimension " << g.size() << ", state has " << s.x.size();
    throw Error(ErrorKind::invalid_argument, os.str());
  }
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (!std::isfinite(g[i])) {
      std::ostringstream os;
      os << "non-finite gradient component " << i << " (" << g[i] << ") at step " << s.k;
      throw Error(ErrorKind::numeric, os.str());
    }
  }
}

}  // namespace

QhmState QhmState::at(std::vector<double> x0) {
  QhmState s;
  s.buffer.assign(x0.size(), 0.0);
  s.x = std::move(x0);
  return s;
}

double norm2(std::span<const double> v) {
  double acc = 0.0;
  for (double e : v) acc += e * e;
  return std::sqrt(acc);
}

StepDiagnostics qhm_update(QhmState& s, std::span<const double> g, const StepHyper& h) {
  check_gradient(s, g);
  double m_sq = 0.0;
  double d_sq = 0.0;
  // Two stages, same operation order as nshb_update so gamma = 1 is bit-exact.
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double d = (1.0 - h.beta) * g[i] + h.beta * s.buffer[i];
    const double m = (1.0 - h.gamma) * g[i] + h.gamma * d;
    s.buffer[i] = d;
    s.x[i] = s.x[i] - h.alpha * m;
    m_sq += m * m;
    d_sq += d * d;
  }
  ++s.k;
  return {std::sqrt(m_sq), std::sqrt(d_sq)};
}

StepDiagnostics nshb_update(QhmState& s, std::span<const double> g, double alpha, double beta) {
  check_gradient(s, g);
  double m_sq = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double m = (1.0 - beta) * g[i] + beta * s.buffer[i];
    s.buffer[i] = m;
    s.x[i] = s.x[i] - alpha * m;
    m_sq += m * m;
  }
  ++s.k;
  const double n = std::sqrt(m_sq);
  return {n, n};
}

StepDiagnostics shb_update(QhmState& s, std::span<const double> g, double alpha, double beta) {
  check_gradient(s, g);
  double m_sq = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double m = g[i] + beta * s.buffer[i];
    s.buffer[i] = m;
    s.x[i] = s.x[i] - alpha * m;
    m_sq += m * m;
  }
  ++s.k;
  const double n = std::sqrt(m_sq);
  return {n, n};
}

StepDiagnostics sgd_update(QhmState& s, std::span<const double> g, double alpha) {
  check_gradient(s, g);
  for (std::size_t i = 0; i < g.size(); ++i) s.x[i] = s.x[i] - alpha * g[i];
  ++s.k;
  const double n = norm2(g);
  return {n, norm2(s.buffer)};
}

StepResult qhm_step(const QhmState& s, std::span<const double> g, const StepHyper& h) {
  StepResult r{s, {}};
  r.diag = qhm_update(r.state, g, h);
  return r;
}

StepResult nshb_step(const QhmState& s, std::span<const double> g, double alpha, double beta) {
  StepResult r{s, {}};
  r.diag = nshb_update(r.state, g, alpha, beta);
  return r;
}

StepResult shb_step(const QhmState& s, std::span<const double> g, double alpha, double beta) {
  StepResult r{s, {}};
  r.diag = shb_update(r.state, g, alpha, beta);
  return r;
}

StepResult sgd_step(const QhmState& s, std::span<const double> g, double alpha) {
  StepResult r{s, {}};
  r.diag = sgd_update(r.state, g, alpha);
  return r;
}

std::vector<double> combined_momentum(std::span<const double> g,
                                      std::span<const double> d_prev, double beta,
                                      double gamma) {
  if (g.size() != d_prev.size())
    throw Error(ErrorKind::invalid_argument, "gradient and buffer dimensions differ");
  const double gb = gamma * beta;
  std::vector<double> out(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) out[i] = (1.0 - gb) * g[i] + gb * d_prev[i];
  return out;
}

HeavyBallHyper shb_from_nshb(HeavyBallHyper nshb) {
  if (!(nshb.beta >= 0.0 && nshb.beta < 1.0))
    throw Error(ErrorKind::range, "NSHB momentum must lie in [0, 1)");
  return {nshb.alpha * (1.0 - nshb.beta), nshb.beta / (1.0 - nshb.beta)};
}

HeavyBallHyper nshb_from_shb(HeavyBallHyper shb) {
  if (!(shb.beta >= 0.0) || !std::isfinite(shb.beta))
    throw Error(ErrorKind::range, "SHB momentum must be finite and >= 0");
  return {shb.alpha * (1.0 + shb.beta), shb.beta / (1.0 + shb.beta)};
}

}  // namespace qhm
