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

#include "qhm/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <exception>
#include <filesystem>
#include <fstream>
#include <limits>
#include <ostream>
#include <thread>
#include <tuple>

#include "qhm/error.hpp"
#include "qhm/optim.hpp"

namespace qhm {

using nlohmann::json;
namespace fs = std::filesystem;

const char* const kSeedCsvHeader =
    "epoch,step,loss,full_grad_norm,min_full_grad_norm,alpha,beta,gamma,batch";
const char* const kAggregateCsvHeader =
    "epoch,step,alpha,beta,gamma,batch,n_seeds,"
    "loss_mean,loss_min,loss_max,"
    "full_grad_norm_mean,full_grad_norm_min,full_grad_norm_max,"
    "min_full_grad_norm_mean,min_full_grad_norm_min,min_full_grad_norm_max";

namespace {

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::io, "cannot write '" + path + "'");
  return out;
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir))
    throw Error(ErrorKind::io, "cannot create output directory '" + dir + "'");
}

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

bool all_finite(const std::vector<double>& v) {
  return std::all_of(v.begin(), v.end(), [](double e) { return std::isfinite(e); });
}

json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

// Sets a dotted path such as "schedules.lr.alpha_max", creating objects on
// the way. Fails if the path runs through a non-object.
void set_path(json& root, const std::string& path, const json& value) {
  json* node = &root;
  std::size_t start = 0;
  while (true) {
    const auto dot = path.find('.', start);
    const std::string key = path.substr(start, dot == std::string::npos ? dot : dot - start);
    if (key.empty()) throw Error(ErrorKind::config, "grid key '" + path + "' has an empty segment");
    if (!node->is_object())
      throw Error(ErrorKind::config, "grid key '" + path + "' does not address an object member");
    if (dot == std::string::npos) {
      (*node)[key] = value;
      return;
    }
    node = &(*node)[key];
    if (node->is_null()) *node = json::object();
    start = dot + 1;
  }
}

}  // namespace

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

SeedRecord run_seed(const FiniteSumProblem& problem, const StepPlan& plan, OptimizerKind opt,
                    const std::vector<double>& x0, std::uint64_t seed) {
  if (x0.size() != problem.dim())
    throw Error(ErrorKind::invalid_argument, "x0 dimension does not match the problem");
  if (static_cast<std::size_t>(plan.n) != problem.n())
    throw Error(ErrorKind::invalid_argument, "plan was expanded for a different n");

  SeedRecord rec;
  rec.seed = seed;
  BatchSampler sampler(seed, problem.n());
  QhmState state = QhmState::at(x0);
  double min_norm = std::numeric_limits<double>::infinity();

  for (std::int64_t m = 0; m < plan.M; ++m) {
    const std::int64_t begin = plan.epoch_start(m);
    const std::int64_t end = begin + plan.T[static_cast<std::size_t>(m)];
    for (std::int64_t k = begin; k < end && !rec.diverged; ++k) {
      const auto i = static_cast<std::size_t>(k);
      const auto g = sample_batch_grad(problem, sampler, state.x,
                                       static_cast<std::size_t>(plan.batch[i]));
      try {
        switch (opt) {
          case OptimizerKind::qhm:
            qhm_update(state, g, {plan.alpha[i], plan.beta[i], plan.gamma[i]});
            break;
          case OptimizerKind::nshb: nshb_update(state, g, plan.alpha[i], plan.beta[i]); break;
          case OptimizerKind::shb: shb_update(state, g, plan.alpha[i], plan.beta[i]); break;
          case OptimizerKind::sgd: sgd_update(state, g, plan.alpha[i]); break;
        }
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::numeric) throw;
        rec.diverged = true;
        rec.divergence_reason = e.what();
      }
      if (!rec.diverged && !all_finite(state.x)) {
        rec.diverged = true;
        rec.divergence_reason = "non-finite iterate at step " + std::to_string(k + 1);
      }
    }

    EpochRow row;
    row.epoch = m;
    row.step = state.k;
    row.loss = problem.loss(state.x);
    row.full_grad_norm = norm2(problem.full_grad(state.x));
    if (row.full_grad_norm < min_norm) min_norm = row.full_grad_norm;
    row.min_full_grad_norm = min_norm;
    const auto first = static_cast<std::size_t>(begin);
    row.alpha = plan.alpha[first];
    row.beta = plan.beta[first];
    row.gamma = plan.gamma[first];
    row.batch = plan.batch[first];
    rec.rows.push_back(row);

    if (!rec.diverged && !(std::abs(row.loss) <= kDivergenceLoss)) {
      rec.diverged = true;
      rec.divergence_reason = "loss " + format_double(row.loss) + " at epoch " + std::to_string(m);
    }
    if (rec.diverged) break;
  }
  return rec;
}

std::vector<AggregateRow> aggregate(const std::vector<SeedRecord>& seeds) {
  std::size_t epochs = 0;
  for (const auto& s : seeds) epochs = std::max(epochs, s.rows.size());
  std::vector<AggregateRow> out;
  out.reserve(epochs);
  for (std::size_t m = 0; m < epochs; ++m) {
    AggregateRow a;
    bool first = true;
    double sums[3] = {0, 0, 0};
    for (const auto& s : seeds) {
      if (m >= s.rows.size()) continue;
      const EpochRow& r = s.rows[m];
      const double v[3] = {r.loss, r.full_grad_norm, r.min_full_grad_norm};
      double* cols[3] = {a.loss, a.full_grad_norm, a.min_full_grad_norm};
      if (first) {
        a.epoch = r.epoch;
        a.step = r.step;
        a.alpha = r.alpha;
        a.beta = r.beta;
        a.gamma = r.gamma;
        a.batch = r.batch;
        for (int c = 0; c < 3; ++c) cols[c][1] = cols[c][2] = v[c];
        first = false;
      }
      for (int c = 0; c < 3; ++c) {
        sums[c] += v[c];
        cols[c][1] = std::min(cols[c][1], v[c]);
        cols[c][2] = std::max(cols[c][2], v[c]);
      }
      ++a.n_seeds;
    }
    a.loss[0] = sums[0] / static_cast<double>(a.n_seeds);
    a.full_grad_norm[0] = sums[1] / static_cast<double>(a.n_seeds);
    a.min_full_grad_norm[0] = sums[2] / static_cast<double>(a.n_seeds);
    out.push_back(a);
  }
  return out;
}

void write_seed_csv(const std::string& path, const SeedRecord& rec) {
  auto out = open_out(path);
  out << kSeedCsvHeader << '\n';
  for (const auto& r : rec.rows) {
    out << r.epoch << ',' << r.step << ',' << format_double(r.loss) << ','
        << format_double(r.full_grad_norm) << ',' << format_double(r.min_full_grad_norm) << ','
        << format_double(r.alpha) << ',' << format_double(r.beta) << ','
        << format_double(r.gamma) << ',' << r.batch << '\n';
  }
  if (!out) throw Error(ErrorKind::io, "write failed for '" + path + "'");
}

void write_aggregate_csv(const std::string& path, const std::vector<AggregateRow>& rows) {
  auto out = open_out(path);
  out << kAggregateCsvHeader << '\n';
  for (const auto& r : rows) {
    out << r.epoch << ',' << r.step << ',' << format_double(r.alpha) << ','
        << format_double(r.beta) << ',' << format_double(r.gamma) << ',' << r.batch << ','
        << r.n_seeds;
    for (const double* col : {r.loss, r.full_grad_norm, r.min_full_grad_norm})
      for (int c = 0; c < 3; ++c) out << ',' << format_double(col[c]);
    out << '\n';
  }
  if (!out) throw Error(ErrorKind::io, "write failed for '" + path + "'");
}

BoundReport bounds_report(const RunConfig& config, std::string* note) {
  const StepPlan plan = expand(effective_schedules(config), config.problem.n, config.epochs);
  if (config.optimizer == OptimizerKind::shb) {
    if (note) *note = "heavy-ball (shb) momentum is not a QHM parameterization; sums are for the "
                      "schedules read as QHM with gamma = 1";
  }
  const auto problem = make_problem(config.problem);
  const ProblemConstants pc = problem->constants();
  RhsInputs in;
  // Logistic loss is non-negative, so 0 is a valid lower bound when no
  // minimum is known.
  const double f0 = problem->loss(initial_point(config));
  in.f0_minus_fstar = f0 - pc.f_star.value_or(0.0);
  in.L = pc.L;
  in.sigma2 = pc.sigma2;
  in.G = pc.G;
  return build_bound_report(plan, in);
}

RunResult run(const RunConfig& config, const RunOptions& opts) {
  const auto t0 = std::chrono::steady_clock::now();
  RunResult res;
  res.config = config;
  res.config_hash = config_hash(config);
  res.plan = expand(effective_schedules(config), config.problem.n, config.epochs);
  const auto problem = make_problem(config.problem);
  const auto x0 = initial_point(config);

  // Seeds are independent; each worker owns its sampler and state and writes
  // into its own slot, so the reduction below sees a fixed order.
  res.seeds.resize(config.seeds.size());
  std::vector<std::exception_ptr> errors(config.seeds.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < config.seeds.size();) {
      try {
        res.seeds[i] = run_seed(*problem, res.plan, config.optimizer, x0, config.seeds[i]);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  unsigned threads = opts.threads ? opts.threads : std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, config.seeds.size()));
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);

  res.aggregate = aggregate(res.seeds);
  for (const auto& s : res.seeds) res.diverged = res.diverged || s.diverged;

  try {
    res.bounds = bounds_report(config, &res.bounds_note);
  } catch (const Error& e) {
    res.bounds_note = std::string("bound report unavailable: ") + e.what();
  }
  if (res.bounds && !res.diverged) {
    double acc = 0.0;
    for (const auto& s : res.seeds) {
      const double g = s.rows.back().min_full_grad_norm;
      acc += g * g;
    }
    res.bounds->empirical_min_grad_sq = acc / static_cast<double>(res.seeds.size());
  }

  if (opts.log) {
    for (const auto& a : res.aggregate) {
      if (a.epoch % config.log_every != 0 && a.epoch + 1 != static_cast<std::int64_t>(res.aggregate.size()))
        continue;
      *opts.log << "epoch " << a.epoch << " step " << a.step << " loss " << format_double(a.loss[0])
                << " min_grad_norm " << format_double(a.min_full_grad_norm[0]) << '\n';
    }
  }

  res.wall_time_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  json seeds = json::array();
  for (const auto& s : res.seeds) {
    json e = {{"seed", s.seed},
              {"diverged", s.diverged},
              {"epochs_completed", s.rows.size()}};
    if (s.diverged) e["divergence_reason"] = s.divergence_reason;
    if (!s.rows.empty()) {
      e["final_loss"] = number_or_null(s.rows.back().loss);
      e["final_full_grad_norm"] = number_or_null(s.rows.back().full_grad_norm);
      e["final_min_full_grad_norm"] = number_or_null(s.rows.back().min_full_grad_norm);
    }
    seeds.push_back(e);
  }
  json metrics = json::object();
  if (!res.aggregate.empty()) {
    const auto& last = res.aggregate.back();
    metrics = {{"epochs", last.epoch + 1},
               {"steps", last.step},
               {"final_loss_mean", number_or_null(last.loss[0])},
               {"final_full_grad_norm_mean", number_or_null(last.full_grad_norm[0])},
               {"final_min_full_grad_norm_mean", number_or_null(last.min_full_grad_norm[0])},
               {"final_min_full_grad_norm_min", number_or_null(last.min_full_grad_norm[1])},
               {"final_min_full_grad_norm_max", number_or_null(last.min_full_grad_norm[2])}};
  }
  json summary;
  summary["config"] = to_json(config);
  summary["config_hash"] = res.config_hash;
  summary["timestamp"] = utc_timestamp();
  summary["wall_time_seconds"] = res.wall_time_seconds;
  summary["diverged"] = res.diverged;
  summary["plan"] = {{"K", res.plan.K}, {"M", res.plan.M}, {"n", res.plan.n},
                     {"warnings", res.plan.warnings}};
  summary["seeds"] = seeds;
  summary["metrics"] = metrics;
  summary["bound_report"] = res.bounds ? json::parse(res.bounds->to_json()) : json(nullptr);
  if (!res.bounds_note.empty()) summary["bound_report_note"] = res.bounds_note;
  res.summary = summary;

  if (opts.write_files) {
    ensure_dir(config.output_dir);
    const fs::path dir(config.output_dir);
    for (const auto& s : res.seeds)
      write_seed_csv((dir / ("seed_" + std::to_string(s.seed) + ".csv")).string(), s);
    write_aggregate_csv((dir / "aggregate.csv").string(), res.aggregate);
    auto out = open_out((dir / "summary.json").string());
    out << summary.dump(2) << '\n';
  }
  return res;
}

json SweepResult::to_json() const {
  json board = json::array();
  for (std::size_t r = 0; r < leaderboard.size(); ++r) {
    const auto& c = leaderboard[r];
    json e = {{"rank", r + 1},
              {"cell", c.index},
              {"overrides", c.overrides},
              {"config_hash", c.config_hash},
              {"status", c.status},
              {"output_dir", c.output_dir}};
    e["final_min_full_grad_norm"] =
        c.final_min_full_grad_norm ? number_or_null(*c.final_min_full_grad_norm) : json(nullptr);
    e["final_loss"] = c.final_loss ? number_or_null(*c.final_loss) : json(nullptr);
    if (!c.message.empty()) e["message"] = c.message;
    board.push_back(e);
  }
  return {{"cells", leaderboard.size()}, {"leaderboard", board}};
}

SweepResult sweep(const json& base, const json& grid, const std::string& out_dir,
                  const RunOptions& opts) {
  std::vector<std::string> problems;
  if (!grid.is_object() || grid.empty()) {
    problems.push_back("grid: must be a non-empty object of dotted paths to value arrays");
  } else {
    for (const auto& [key, values] : grid.items()) {
      if (!values.is_array() || values.empty())
        problems.push_back("grid." + key + ": must be a non-empty array");
    }
  }
  if (!problems.empty()) {
    std::string what = "invalid sweep grid";
    for (const auto& p : problems) what += "\n  " + p;
    throw Error(ErrorKind::config, what, problems);
  }

  std::vector<std::string> keys;
  std::size_t cells = 1;
  for (const auto& [key, values] : grid.items()) {
    keys.push_back(key);
    cells *= values.size();
  }

  std::vector<SweepCell> done;
  for (std::size_t idx = 0; idx < cells; ++idx) {
    SweepCell cell;
    cell.index = idx;
    cell.overrides = json::object();
    json cfg = base;
    // Mixed radix: the last grid key varies fastest.
    std::size_t rest = idx;
    std::vector<std::size_t> pick(keys.size());
    for (std::size_t d = keys.size(); d-- > 0;) {
      const std::size_t len = grid.at(keys[d]).size();
      pick[d] = rest % len;
      rest /= len;
    }
    char name[32];
    std::snprintf(name, sizeof name, "cell_%04zu", idx);
    cell.output_dir = (fs::path(out_dir) / name).string();
    try {
      for (std::size_t d = 0; d < keys.size(); ++d) {
        const json& v = grid.at(keys[d])[pick[d]];
        cell.overrides[keys[d]] = v;
        set_path(cfg, keys[d], v);
      }
      cfg["output_dir"] = cell.output_dir;
      const RunConfig rc = parse_config(cfg);
      cell.config_hash = config_hash(rc);
      const RunResult r = run(rc, opts);
      const auto& last = r.aggregate.back();
      cell.final_min_full_grad_norm = last.min_full_grad_norm[0];
      cell.final_loss = last.loss[0];
      cell.status = r.diverged ? "diverged" : "ok";
    } catch (const Error& e) {
      cell.status = e.kind() == ErrorKind::config ? "config_error" : "error";
      cell.message = e.what();
    } catch (const std::exception& e) {
      cell.status = "error";
      cell.message = e.what();
    }
    if (opts.log) *opts.log << name << ' ' << cell.status << '\n';
    done.push_back(std::move(cell));
  }

  auto key_of = [](const SweepCell& c) {
    const double inf = std::numeric_limits<double>::infinity();
    auto finite_or_inf = [&](const std::optional<double>& v) {
      return v && std::isfinite(*v) ? *v : inf;
    };
    return std::make_tuple(c.status == "ok" ? 0 : 1,
                           c.status == "ok" ? finite_or_inf(c.final_min_full_grad_norm) : 0.0,
                           c.status == "ok" ? finite_or_inf(c.final_loss) : 0.0, c.config_hash,
                           c.index);
  };
  std::stable_sort(done.begin(), done.end(),
                   [&](const SweepCell& a, const SweepCell& b) { return key_of(a) < key_of(b); });

  SweepResult result;
  result.leaderboard = std::move(done);
  ensure_dir(out_dir);
  auto out = open_out((fs::path(out_dir) / "leaderboard.json").string());
  out << result.to_json().dump(2) << '\n';
  return result;
}

}  // namespace qhm
