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

#include "qhm/config.hpp"

#include <climits>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>

#include "qhm/error.hpp"

namespace qhm {

using nlohmann::json;

namespace {

// Collects every problem before throwing so the user sees all of them at once.
class Issues {
 public:
  void add(const std::string& path, const std::string& msg) { items_.push_back(path + ": " + msg); }
  bool empty() const { return items_.empty(); }

  [[noreturn]] void raise() const {
    std::string what = "invalid config";
    for (const auto& s : items_) what += "\n  " + s;
    throw Error(ErrorKind::config, what, items_);
  }

 private:
  std::vector<std::string> items_;
};

void reject_unknown(const json& obj, const std::set<std::string>& allowed, const std::string& path,
                    Issues& issues) {
  for (const auto& [key, _] : obj.items()) {
    if (allowed.count(key) == 0) issues.add(path.empty() ? key : path + "." + key, "unknown key");
  }
}

bool get_int(const json& obj, const char* key, const std::string& path, Issues& issues,
             std::int64_t& out, std::int64_t lo, std::int64_t hi = INT64_MAX) {
  if (!obj.contains(key)) return false;
  const json& v = obj.at(key);
  const std::string where = path.empty() ? std::string(key) : path + "." + key;
  if (!v.is_number_integer()) {
    issues.add(where, "must be an integer");
    return false;
  }
  if (v.is_number_unsigned() && v.get<std::uint64_t>() > static_cast<std::uint64_t>(INT64_MAX)) {
    issues.add(where, "out of range");
    return false;
  }
  const auto x = v.get<std::int64_t>();
  if (x < lo || x > hi) {
    issues.add(where, "must lie in [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
    return false;
  }
  out = x;
  return true;
}

bool get_u64(const json& v, const std::string& where, Issues& issues, std::uint64_t& out) {
  if (v.is_number_unsigned()) {
    out = v.get<std::uint64_t>();
    return true;
  }
  if (v.is_number_integer() && v.get<std::int64_t>() >= 0) {
    out = static_cast<std::uint64_t>(v.get<std::int64_t>());
    return true;
  }
  issues.add(where, "must be a non-negative 64-bit integer");
  return false;
}

bool get_real(const json& obj, const char* key, const std::string& path, Issues& issues,
              double& out) {
  if (!obj.contains(key)) return false;
  const json& v = obj.at(key);
  if (!v.is_number()) {
    issues.add(path + "." + key, "must be a number");
    return false;
  }
  out = v.get<double>();
  return true;
}

void parse_problem(const json& j, ProblemConfig& p, Issues& issues) {
  const std::string path = "problem";
  if (!j.is_object()) {
    issues.add(path, "must be an object");
    return;
  }
  if (!j.contains("name") || !j.at("name").is_string()) {
    issues.add(path + ".name", "required string (quadratic | sigmoid_sum | logistic)");
    return;
  }
  p.name = j.at("name").get<std::string>();
  std::set<std::string> allowed{"name", "dim", "n", "seed"};
  if (p.name == "quadratic") {
    allowed.insert({"kappa", "spread"});
  } else if (p.name == "logistic") {
    allowed.insert("margin");
  } else if (p.name != "sigmoid_sum") {
    issues.add(path + ".name", "unknown problem '" + p.name + "'");
    return;
  }
  reject_unknown(j, allowed, path, issues);
  get_int(j, "dim", path, issues, p.dim, 1, 1 << 20);
  get_int(j, "n", path, issues, p.n, 2, 1 << 24);
  if (j.contains("seed")) get_u64(j.at("seed"), path + ".seed", issues, p.seed);
  if (get_real(j, "kappa", path, issues, p.kappa) && !(p.kappa >= 1.0 && std::isfinite(p.kappa)))
    issues.add(path + ".kappa", "must be a finite number >= 1");
  if (get_real(j, "spread", path, issues, p.spread) &&
      !(p.spread > 0.0 && std::isfinite(p.spread)))
    issues.add(path + ".spread", "must be a finite number > 0");
  if (get_real(j, "margin", path, issues, p.margin) &&
      !(p.margin >= 0.0 && std::isfinite(p.margin)))
    issues.add(path + ".margin", "must be a finite number >= 0");
}

std::optional<ScheduleSpec> parse_schedule(const json& j, Target target, Issues& issues) {
  const std::string path = "schedules." + std::string(to_string(target));
  if (!j.is_object()) {
    issues.add(path, "must be an object");
    return std::nullopt;
  }
  if (!j.contains("kind") || !j.at("kind").is_string()) {
    issues.add(path + ".kind", "required string");
    return std::nullopt;
  }
  const auto kind = parse_kind(j.at("kind").get<std::string>());
  if (!kind) {
    issues.add(path + ".kind", "unknown kind '" + j.at("kind").get<std::string>() + "'");
    return std::nullopt;
  }
  ScheduleSpec spec;
  spec.target = target;
  spec.kind = *kind;
  bool ok = true;
  for (const auto& [key, v] : j.items()) {
    if (key == "kind") continue;
    if (key == "inner") {
      const auto inner = v.is_string() ? parse_kind(v.get<std::string>()) : std::nullopt;
      if (*kind != Kind::hybrid) {
        issues.add(path + ".inner", "only valid for kind 'hybrid'");
        ok = false;
      } else if (!inner) {
        issues.add(path + ".inner", "must name a schedule kind");
        ok = false;
      } else {
        spec.hybrid_inner = *inner;
      }
      continue;
    }
    if (!v.is_number()) {
      issues.add(path + "." + key, "must be a number");
      ok = false;
      continue;
    }
    spec.params[key] = v.get<double>();
  }
  if (!ok) return std::nullopt;
  try {
    validate(spec);
  } catch (const Error& e) {
    issues.add(path, e.what());
    return std::nullopt;
  }
  return spec;
}

json schedule_to_json(const ScheduleSpec& s) {
  json j = json::object();
  j["kind"] = std::string(to_string(s.kind));
  if (s.kind == Kind::hybrid) j["inner"] = std::string(to_string(s.hybrid_inner));
  for (const auto& [k, v] : s.params) j[k] = v;
  return j;
}

ScheduleSpec constant_spec(Target t, const char* key, double value) {
  return make_schedule(t, Kind::constant, {{key, value}});
}

}  // namespace

std::string_view to_string(OptimizerKind k) noexcept {
  switch (k) {
    case OptimizerKind::qhm: return "qhm";
    case OptimizerKind::nshb: return "nshb";
    case OptimizerKind::shb: return "shb";
    case OptimizerKind::sgd: return "sgd";
  }
  return "?";
}

RunConfig parse_config(const json& j) {
  Issues issues;
  RunConfig c;
  if (!j.is_object()) {
    issues.add("$", "config must be a JSON object");
    issues.raise();
  }
  reject_unknown(j,
                 {"problem", "optimizer", "schedules", "epochs", "seeds", "x0", "output_dir",
                  "log_every"},
                 "", issues);

  if (j.contains("problem")) {
    parse_problem(j.at("problem"), c.problem, issues);
  } else {
    issues.add("problem", "required");
  }

  bool have_optimizer = false;
  if (!j.contains("optimizer") || !j.at("optimizer").is_string()) {
    issues.add("optimizer", "required string (qhm | nshb | shb | sgd)");
  } else {
    const auto name = j.at("optimizer").get<std::string>();
    have_optimizer = true;
    if (name == "qhm") c.optimizer = OptimizerKind::qhm;
    else if (name == "nshb") c.optimizer = OptimizerKind::nshb;
    else if (name == "shb") c.optimizer = OptimizerKind::shb;
    else if (name == "sgd") c.optimizer = OptimizerKind::sgd;
    else {
      issues.add("optimizer", "unknown optimizer '" + name + "'");
      have_optimizer = false;
    }
  }

  if (!j.contains("schedules") || !j.at("schedules").is_object()) {
    issues.add("schedules", "required object with batch, lr, beta, gamma");
  } else {
    const json& s = j.at("schedules");
    reject_unknown(s, {"batch", "lr", "beta", "gamma"}, "schedules", issues);
    // Which targets the chosen optimizer reads; the rest get defaults.
    const bool needs_beta = c.optimizer != OptimizerKind::sgd;
    const bool needs_gamma = c.optimizer == OptimizerKind::qhm;
    for (Target t : {Target::batch, Target::lr, Target::beta, Target::gamma}) {
      const std::string key(to_string(t));
      ScheduleSpec* slot = t == Target::batch ? &c.schedules.batch
                           : t == Target::lr  ? &c.schedules.lr
                           : t == Target::beta ? &c.schedules.beta
                                               : &c.schedules.gamma;
      if (s.contains(key)) {
        if (auto spec = parse_schedule(s.at(key), t, issues)) *slot = *spec;
        continue;
      }
      const bool required = t == Target::batch || t == Target::lr ||
                            (t == Target::beta && needs_beta) ||
                            (t == Target::gamma && needs_gamma);
      const bool fixed = t == Target::batch || t == Target::lr;
      if (required && (have_optimizer || fixed)) {
        issues.add("schedules." + key, "required for optimizer '" +
                                           std::string(to_string(c.optimizer)) + "'");
      } else if (t == Target::beta) {
        *slot = constant_spec(t, "beta_max", 0.0);
      } else if (t == Target::gamma) {
        *slot = constant_spec(t, "gamma_max", c.optimizer == OptimizerKind::sgd ? 0.0 : 1.0);
      }
    }
  }

  if (!j.contains("epochs")) issues.add("epochs", "required");
  else get_int(j, "epochs", "", issues, c.epochs, 1, 10'000'000);

  if (!j.contains("seeds") || !j.at("seeds").is_array() || j.at("seeds").empty()) {
    issues.add("seeds", "required non-empty array of 64-bit integers");
  } else {
    std::set<std::uint64_t> seen;
    for (std::size_t i = 0; i < j.at("seeds").size(); ++i) {
      std::uint64_t s = 0;
      const std::string where = "seeds[" + std::to_string(i) + "]";
      if (!get_u64(j.at("seeds")[i], where, issues, s)) continue;
      if (!seen.insert(s).second) issues.add(where, "duplicate seed " + std::to_string(s));
      c.seeds.push_back(s);
    }
  }

  if (j.contains("x0")) {
    const json& x = j.at("x0");
    if (x.is_number()) {
      c.x0 = {x.get<double>()};
      c.x0_is_fill = true;
    } else if (x.is_array() && !x.empty()) {
      c.x0.clear();
      c.x0_is_fill = false;
      for (const auto& e : x) {
        if (!e.is_number()) {
          issues.add("x0", "array entries must be numbers");
          break;
        }
        c.x0.push_back(e.get<double>());
      }
      if (static_cast<std::int64_t>(c.x0.size()) != c.problem.dim)
        issues.add("x0", "length " + std::to_string(c.x0.size()) + " does not match problem.dim " +
                             std::to_string(c.problem.dim));
    } else {
      issues.add("x0", "must be a number or a non-empty array");
    }
    for (double v : c.x0)
      if (!std::isfinite(v)) {
        issues.add("x0", "entries must be finite");
        break;
      }
  }

  if (j.contains("output_dir")) {
    if (!j.at("output_dir").is_string() || j.at("output_dir").get<std::string>().empty())
      issues.add("output_dir", "must be a non-empty string");
    else
      c.output_dir = j.at("output_dir").get<std::string>();
  }
  get_int(j, "log_every", "", issues, c.log_every, 1);

  if (!issues.empty()) issues.raise();
  return c;
}

RunConfig parse_config_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::config, std::string("config is not valid JSON: ") + e.what(),
                {std::string("$: ") + e.what()});
  }
  return parse_config(j);
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::config, "cannot read config file '" + path + "'");
  std::ostringstream os;
  os << in.rdbuf();
  return parse_config_text(os.str());
}

json to_json(const RunConfig& c) {
  json j = json::object();
  json p = json::object();
  p["name"] = c.problem.name;
  p["dim"] = c.problem.dim;
  p["n"] = c.problem.n;
  p["seed"] = c.problem.seed;
  if (c.problem.name == "quadratic") {
    p["kappa"] = c.problem.kappa;
    p["spread"] = c.problem.spread;
  }
  if (c.problem.name == "logistic") p["margin"] = c.problem.margin;
  j["problem"] = p;
  j["optimizer"] = std::string(to_string(c.optimizer));
  j["schedules"] = {{"batch", schedule_to_json(c.schedules.batch)},
                    {"lr", schedule_to_json(c.schedules.lr)},
                    {"beta", schedule_to_json(c.schedules.beta)},
                    {"gamma", schedule_to_json(c.schedules.gamma)}};
  j["epochs"] = c.epochs;
  j["seeds"] = c.seeds;
  if (c.x0_is_fill) j["x0"] = c.x0.at(0);
  else j["x0"] = c.x0;
  j["output_dir"] = c.output_dir;
  j["log_every"] = c.log_every;
  return j;
}

std::string canonical_config(const RunConfig& c) {
  json j = to_json(c);
  j.erase("output_dir");
  j.erase("log_every");
  return j.dump();
}

std::uint64_t fnv1a64(std::string_view bytes) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char ch : bytes) {
    h ^= ch;
    h *= 0x100000001b3ull;
  }
  return h;
}

std::string config_hash(const RunConfig& c) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(fnv1a64(canonical_config(c))));
  return buf;
}

ScheduleSet effective_schedules(const RunConfig& c) {
  ScheduleSet s = c.schedules;
  switch (c.optimizer) {
    case OptimizerKind::qhm: break;
    case OptimizerKind::nshb:
    case OptimizerKind::shb: s.gamma = constant_spec(Target::gamma, "gamma_max", 1.0); break;
    case OptimizerKind::sgd:
      s.beta = constant_spec(Target::beta, "beta_max", 0.0);
      s.gamma = constant_spec(Target::gamma, "gamma_max", 0.0);
      break;
  }
  return s;
}

std::unique_ptr<FiniteSumProblem> make_problem(const ProblemConfig& p) {
  const auto dim = static_cast<std::size_t>(p.dim);
  const auto n = static_cast<std::size_t>(p.n);
  if (p.name == "quadratic") return make_noisy_quadratic(dim, n, p.seed, p.kappa, p.spread);
  if (p.name == "sigmoid_sum") return make_sigmoid_sum(dim, n, p.seed);
  if (p.name == "logistic") return make_logistic(dim, n, p.seed, p.margin);
  throw Error(ErrorKind::config, "unknown problem '" + p.name + "'");
}

std::vector<double> initial_point(const RunConfig& c) {
  if (c.x0_is_fill) return std::vector<double>(static_cast<std::size_t>(c.problem.dim), c.x0.at(0));
  return c.x0;
}

}  // namespace qhm
