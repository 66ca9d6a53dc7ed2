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

#ifndef QHM_CONFIG_HPP
#define QHM_CONFIG_HPP

#include <cstdint>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "qhm/problems.hpp"
#include "qhm/schedules.hpp"

namespace qhm {

enum class OptimizerKind { qhm, nshb, shb, sgd };

std::string_view to_string(OptimizerKind k) noexcept;

struct ProblemConfig {
  std::string name = "quadratic";  // quadratic | sigmoid_sum | logistic
  std::int64_t dim = 10;
  std::int64_t n = 1024;
  std::uint64_t seed = 0;
  double kappa = 4.0;   // quadratic only
  double spread = 1.0;  // quadratic only
  double margin = 0.1;  // logistic only
};

/// Parsed experiment description. See docs/config_schema.md.
struct RunConfig {
  ProblemConfig problem;
  OptimizerKind optimizer = OptimizerKind::qhm;
  ScheduleSet schedules;
  std::int64_t epochs = 1;
  std::vector<std::uint64_t> seeds;
  // Either a single fill value (x0.size() == 1 and x0_is_fill) or a full vector.
  std::vector<double> x0{1.0};
  bool x0_is_fill = true;
  std::string output_dir = "runs/default";
  std::int64_t log_every = 1;
};

/// Strict parse: unknown keys, wrong types and invalid schedule parameters
/// are collected and reported together as Error(config) with one detail line
/// per offending field.
RunConfig parse_config(const nlohmann::json& j);
RunConfig parse_config_text(const std::string& text);
RunConfig load_config(const std::string& path);

/// Fully populated config document (defaults made explicit, keys sorted).
nlohmann::json to_json(const RunConfig& c);

/// Canonical form used for hashing: to_json without the fields that do not
/// change results (output_dir, log_every), dumped compactly.
std::string canonical_config(const RunConfig& c);

std::uint64_t fnv1a64(std::string_view bytes) noexcept;

/// 16 lowercase hex digits of fnv1a64(canonical_config(c)).
std::string config_hash(const RunConfig& c);

/// Schedules the optimizer actually sees: sgd pins beta = gamma = 0, nshb and
/// shb pin gamma = 1.
ScheduleSet effective_schedules(const RunConfig& c);

std::unique_ptr<FiniteSumProblem> make_problem(const ProblemConfig& p);

/// x0 expanded to the problem dimension.
std::vector<double> initial_point(const RunConfig& c);

}  // namespace qhm

#endif  // QHM_CONFIG_HPP
