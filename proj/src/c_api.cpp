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

#include "qhm/qhm.h"

#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <memory>
#include <sstream>
#include <string>

#include "qhm/config.hpp"
#include "qhm/error.hpp"
#include "qhm/harness.hpp"
#include "qhm/optim.hpp"

struct qhm_config {
  qhm::RunConfig cfg;
};

struct qhm_plan {
  qhm::StepPlan plan;
};

struct qhm_problem {
  std::unique_ptr<qhm::FiniteSumProblem> p;
};

struct qhm_optimizer {
  qhm::OptimizerKind kind;
  qhm::QhmState state;
};

namespace {

thread_local std::string last_error;

qhm_status status_of(qhm::ErrorKind k) {
  switch (k) {
    case qhm::ErrorKind::invalid_argument: return QHM_ERR_INVALID_ARGUMENT;
    case qhm::ErrorKind::range: return QHM_ERR_RANGE;
    case qhm::ErrorKind::validation: return QHM_ERR_VALIDATION;
    case qhm::ErrorKind::config: return QHM_ERR_CONFIG;
    case qhm::ErrorKind::numeric: return QHM_ERR_NUMERIC;
    case qhm::ErrorKind::diverged: return QHM_ERR_DIVERGED;
    case qhm::ErrorKind::bound_violation: return QHM_ERR_BOUND_VIOLATION;
    case qhm::ErrorKind::io: return QHM_ERR_IO;
  }
  return QHM_ERR_INTERNAL;
}

// Runs `body`, translating exceptions into status codes.
template <class F>
qhm_status guard(F&& body) {
  try {
    last_error.clear();
    return body();
  } catch (const qhm::Error& e) {
    last_error = e.what();
    return status_of(e.kind());
  } catch (const std::exception& e) {
    last_error = e.what();
    return QHM_ERR_INTERNAL;
  } catch (...) {
    last_error = "unknown exception";
    return QHM_ERR_INTERNAL;
  }
}

qhm_status null_arg(const char* what) {
  last_error = std::string("null argument: ") + what;
  return QHM_ERR_INVALID_ARGUMENT;
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

// Adapts a C log callback to the harness' ostream hook.
class CallbackBuf : public std::stringbuf {
 public:
  CallbackBuf(qhm_log_fn fn, void* user) : fn_(fn), user_(user) {}

 protected:
  int sync() override {
    std::string s = str();
    std::size_t start = 0;
    for (std::size_t nl; (nl = s.find('\n', start)) != std::string::npos; start = nl + 1)
      fn_(s.substr(start, nl - start).c_str(), user_);
    str(s.substr(start));
    return 0;
  }

 private:
  qhm_log_fn fn_;
  void* user_;
};

std::optional<qhm::OptimizerKind> parse_optimizer(const char* s) {
  const std::string k = s;
  if (k == "qhm") return qhm::OptimizerKind::qhm;
  if (k == "nshb") return qhm::OptimizerKind::nshb;
  if (k == "shb") return qhm::OptimizerKind::shb;
  if (k == "sgd") return qhm::OptimizerKind::sgd;
  return std::nullopt;
}

}  // namespace

extern "C" {

const char* qhm_version(void) { return "0.1.0"; }

const char* qhm_status_name(qhm_status s) {
  switch (s) {
    case QHM_OK: return "ok";
    case QHM_ERR_INVALID_ARGUMENT: return "invalid_argument";
    case QHM_ERR_RANGE: return "range";
    case QHM_ERR_VALIDATION: return "validation";
    case QHM_ERR_CONFIG: return "config";
    case QHM_ERR_NUMERIC: return "numeric";
    case QHM_ERR_DIVERGED: return "diverged";
    case QHM_ERR_BOUND_VIOLATION: return "bound_violation";
    case QHM_ERR_IO: return "io";
    case QHM_ERR_INTERNAL: return "internal";
  }
  return "unknown";
}

const char* qhm_last_error(void) { return last_error.c_str(); }

void qhm_string_free(char* s) { std::free(s); }

qhm_status qhm_config_parse(const char* json_text, qhm_config** out) {
  if (!json_text) return null_arg("json_text");
  if (!out) return null_arg("out");
  return guard([&] {
    *out = new qhm_config{qhm::parse_config_text(json_text)};
    return QHM_OK;
  });
}

qhm_status qhm_config_load(const char* path, qhm_config** out) {
  if (!path) return null_arg("path");
  if (!out) return null_arg("out");
  return guard([&] {
    *out = new qhm_config{qhm::load_config(path)};
    return QHM_OK;
  });
}

void qhm_config_free(qhm_config* c) { delete c; }

qhm_status qhm_config_set_seeds(qhm_config* c, const uint64_t* seeds, size_t count) {
  if (!c) return null_arg("config");
  if (count == 0 || !seeds) {
    last_error = "seeds must be non-empty";
    return QHM_ERR_CONFIG;
  }
  return guard([&] {
    // Round-trip through the parser so duplicate checks stay in one place.
    auto j = qhm::to_json(c->cfg);
    j["seeds"] = std::vector<std::uint64_t>(seeds, seeds + count);
    c->cfg = qhm::parse_config(j);
    return QHM_OK;
  });
}

qhm_status qhm_config_set_output_dir(qhm_config* c, const char* dir) {
  if (!c) return null_arg("config");
  if (!dir || !*dir) return null_arg("dir");
  return guard([&] {
    c->cfg.output_dir = dir;
    return QHM_OK;
  });
}

qhm_status qhm_config_hash(const qhm_config* c, char** out_hex) {
  if (!c) return null_arg("config");
  if (!out_hex) return null_arg("out_hex");
  return guard([&] {
    *out_hex = dup_string(qhm::config_hash(c->cfg));
    return QHM_OK;
  });
}

qhm_status qhm_config_to_json(const qhm_config* c, char** out_json) {
  if (!c) return null_arg("config");
  if (!out_json) return null_arg("out_json");
  return guard([&] {
    *out_json = dup_string(qhm::to_json(c->cfg).dump(2));
    return QHM_OK;
  });
}

qhm_status qhm_run(const qhm_config* c, qhm_log_fn log, void* user, char** out_summary_json) {
  if (!c) return null_arg("config");
  return guard([&] {
    qhm::RunOptions opts;
    std::unique_ptr<CallbackBuf> buf;
    std::unique_ptr<std::ostream> os;
    if (log) {
      buf = std::make_unique<CallbackBuf>(log, user);
      os = std::make_unique<std::ostream>(buf.get());
      opts.log = os.get();
    }
    const auto r = qhm::run(c->cfg, opts);
    if (os) os->flush();
    if (out_summary_json) *out_summary_json = dup_string(r.summary.dump(2));
    if (r.diverged) {
      last_error = "run diverged";
      for (const auto& s : r.seeds)
        if (s.diverged) last_error += "; seed " + std::to_string(s.seed) + ": " + s.divergence_reason;
      return QHM_ERR_DIVERGED;
    }
    return QHM_OK;
  });
}

qhm_status qhm_bounds(const qhm_config* c, const char* out_dir, char** out_report_json) {
  if (!c) return null_arg("config");
  return guard([&] {
    std::string note;
    const auto report = qhm::bounds_report(c->cfg, &note);
    auto j = nlohmann::json::parse(report.to_json());
    j["config_hash"] = qhm::config_hash(c->cfg);
    if (!note.empty()) j["note"] = note;
    const std::string text = j.dump(2);
    if (out_dir) {
      std::error_code ec;
      std::filesystem::create_directories(out_dir, ec);
      const auto path = (std::filesystem::path(out_dir) / "bounds.json").string();
      std::ofstream f(path, std::ios::binary | std::ios::trunc);
      if (!f) throw qhm::Error(qhm::ErrorKind::io, "cannot write '" + path + "'");
      f << text << '\n';
    }
    if (out_report_json) *out_report_json = dup_string(text);
    if (!report.all_dominated()) {
      last_error = "bound domination failed";
      for (const auto& f : report.failures) last_error += "; " + f;
      return QHM_ERR_BOUND_VIOLATION;
    }
    return QHM_OK;
  });
}

qhm_status qhm_sweep(const char* base_json, const char* grid_json, const char* out_dir,
                     const uint64_t* seeds, size_t count, qhm_log_fn log, void* user,
                     char** out_leaderboard_json) {
  if (!base_json) return null_arg("base_json");
  if (!grid_json) return null_arg("grid_json");
  if (!out_dir) return null_arg("out_dir");
  return guard([&] {
    nlohmann::json base, grid;
    try {
      base = nlohmann::json::parse(base_json);
      grid = nlohmann::json::parse(grid_json);
    } catch (const nlohmann::json::parse_error& e) {
      throw qhm::Error(qhm::ErrorKind::config, std::string("sweep input is not valid JSON: ") + e.what());
    }
    if (count > 0) {
      if (!seeds) throw qhm::Error(qhm::ErrorKind::invalid_argument, "null seeds");
      if (!base.is_object()) throw qhm::Error(qhm::ErrorKind::config, "base config must be an object");
      base["seeds"] = std::vector<std::uint64_t>(seeds, seeds + count);
    }
    qhm::RunOptions opts;
    std::unique_ptr<CallbackBuf> buf;
    std::unique_ptr<std::ostream> os;
    if (log) {
      buf = std::make_unique<CallbackBuf>(log, user);
      os = std::make_unique<std::ostream>(buf.get());
      opts.log = os.get();
    }
    const auto r = qhm::sweep(base, grid, out_dir, opts);
    if (os) os->flush();
    if (out_leaderboard_json) *out_leaderboard_json = dup_string(r.to_json().dump(2));
    return QHM_OK;
  });
}

qhm_status qhm_convert_nshb_to_shb(double alpha, double beta, double* alpha_out,
                                   double* beta_out) {
  if (!alpha_out || !beta_out) return null_arg("output");
  return guard([&] {
    const auto h = qhm::shb_from_nshb({alpha, beta});
    *alpha_out = h.alpha;
    *beta_out = h.beta;
    return QHM_OK;
  });
}

qhm_status qhm_convert_shb_to_nshb(double alpha, double beta, double* alpha_out,
                                   double* beta_out) {
  if (!alpha_out || !beta_out) return null_arg("output");
  return guard([&] {
    const auto h = qhm::nshb_from_shb({alpha, beta});
    *alpha_out = h.alpha;
    *beta_out = h.beta;
    return QHM_OK;
  });
}

qhm_status qhm_plan_create(const qhm_config* c, qhm_plan** out) {
  if (!c) return null_arg("config");
  if (!out) return null_arg("out");
  return guard([&] {
    *out = new qhm_plan{
        qhm::expand(qhm::effective_schedules(c->cfg), c->cfg.problem.n, c->cfg.epochs)};
    return QHM_OK;
  });
}

void qhm_plan_free(qhm_plan* p) { delete p; }

int64_t qhm_plan_steps(const qhm_plan* p) { return p ? p->plan.K : -1; }

int64_t qhm_plan_epochs(const qhm_plan* p) { return p ? p->plan.M : -1; }

qhm_status qhm_plan_step(const qhm_plan* p, int64_t k, double* alpha, double* beta,
                         double* gamma, int64_t* batch) {
  if (!p) return null_arg("plan");
  if (k < 0 || k >= p->plan.K) {
    last_error = "step index " + std::to_string(k) + " outside [0, " + std::to_string(p->plan.K) + ")";
    return QHM_ERR_RANGE;
  }
  const auto i = static_cast<std::size_t>(k);
  if (alpha) *alpha = p->plan.alpha[i];
  if (beta) *beta = p->plan.beta[i];
  if (gamma) *gamma = p->plan.gamma[i];
  if (batch) *batch = p->plan.batch[i];
  return QHM_OK;
}

qhm_status qhm_problem_create(const qhm_config* c, qhm_problem** out) {
  if (!c) return null_arg("config");
  if (!out) return null_arg("out");
  return guard([&] {
    *out = new qhm_problem{qhm::make_problem(c->cfg.problem)};
    return QHM_OK;
  });
}

void qhm_problem_free(qhm_problem* p) { delete p; }

size_t qhm_problem_dim(const qhm_problem* p) { return p ? p->p->dim() : 0; }

size_t qhm_problem_n(const qhm_problem* p) { return p ? p->p->n() : 0; }

qhm_status qhm_problem_loss(const qhm_problem* p, const double* x, size_t dim, double* out) {
  if (!p) return null_arg("problem");
  if (!x || !out) return null_arg("x/out");
  if (dim != p->p->dim()) {
    last_error = "dimension mismatch";
    return QHM_ERR_INVALID_ARGUMENT;
  }
  return guard([&] {
    *out = p->p->loss({x, dim});
    return QHM_OK;
  });
}

qhm_status qhm_problem_full_grad(const qhm_problem* p, const double* x, size_t dim, double* out) {
  if (!p) return null_arg("problem");
  if (!x || !out) return null_arg("x/out");
  if (dim != p->p->dim()) {
    last_error = "dimension mismatch";
    return QHM_ERR_INVALID_ARGUMENT;
  }
  return guard([&] {
    const auto g = p->p->full_grad({x, dim});
    std::memcpy(out, g.data(), dim * sizeof(double));
    return QHM_OK;
  });
}

qhm_status qhm_optimizer_create(const char* kind, const double* x0, size_t dim,
                                qhm_optimizer** out) {
  if (!kind) return null_arg("kind");
  if (!x0 && dim > 0) return null_arg("x0");
  if (!out) return null_arg("out");
  const auto k = parse_optimizer(kind);
  if (!k) {
    last_error = std::string("unknown optimizer '") + kind + "'";
    return QHM_ERR_INVALID_ARGUMENT;
  }
  return guard([&] {
    *out = new qhm_optimizer{*k, qhm::QhmState::at(std::vector<double>(x0, x0 + dim))};
    return QHM_OK;
  });
}

void qhm_optimizer_free(qhm_optimizer* o) { delete o; }

qhm_status qhm_optimizer_step(qhm_optimizer* o, const double* grad, size_t dim, double alpha,
                              double beta, double gamma) {
  if (!o) return null_arg("optimizer");
  if (!grad) return null_arg("grad");
  return guard([&] {
    const std::span<const double> g(grad, dim);
    switch (o->kind) {
      case qhm::OptimizerKind::qhm: qhm::qhm_update(o->state, g, {alpha, beta, gamma}); break;
      case qhm::OptimizerKind::nshb: qhm::nshb_update(o->state, g, alpha, beta); break;
      case qhm::OptimizerKind::shb: qhm::shb_update(o->state, g, alpha, beta); break;
      case qhm::OptimizerKind::sgd: qhm::sgd_update(o->state, g, alpha); break;
    }
    return QHM_OK;
  });
}

qhm_status qhm_optimizer_position(const qhm_optimizer* o, double* x_out, size_t dim) {
  if (!o) return null_arg("optimizer");
  if (!x_out) return null_arg("x_out");
  if (dim != o->state.x.size()) {
    last_error = "dimension mismatch";
    return QHM_ERR_INVALID_ARGUMENT;
  }
  std::memcpy(x_out, o->state.x.data(), dim * sizeof(double));
  return QHM_OK;
}

int64_t qhm_optimizer_steps(const qhm_optimizer* o) { return o ? o->state.k : -1; }

}  // extern "C"
