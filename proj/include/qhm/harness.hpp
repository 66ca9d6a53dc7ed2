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

#ifndef QHM_HARNESS_HPP
#define QHM_HARNESS_HPP

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "qhm/bounds.hpp"
#include "qhm/config.hpp"
#include "qhm/problems.hpp"
#include "qhm/schedules.hpp"

namespace qhm {

/// Halt threshold on |f(x_k)|.
inline constexpr double kDivergenceLoss = 1e12;

/// One row per epoch, evaluated at the end of the epoch. `step` counts the
/// optimizer steps taken so far.
struct EpochRow {
  std::int64_t epoch = 0;
  std::int64_t step = 0;
  double loss = 0.0;
  double full_grad_norm = 0.0;
  double min_full_grad_norm = 0.0;
  double alpha = 0.0;
  double beta = 0.0;
  double gamma = 0.0;
  std::int64_t batch = 0;
};

struct SeedRecord {
  std::uint64_t seed = 0;
  std::vector<EpochRow> rows;
  bool diverged = false;
  std::string divergence_reason;
};

struct AggregateRow {
  std::int64_t epoch = 0;
  std::int64_t step = 0;
  double alpha = 0.0;
  double beta = 0.0;
  double gamma = 0.0;
  std::int64_t batch = 0;
  std::int64_t n_seeds = 0;
  double loss[3] = {0, 0, 0};  // mean, min, max
  double full_grad_norm[3] = {0, 0, 0};
  double min_full_grad_norm[3] = {0, 0, 0};
};

extern const char* const kSeedCsvHeader;
extern const char* const kAggregateCsvHeader;

/// Round-trip text for a double: %.17g, with nan/inf
/// spelled as Python's float() accepts them.
std::string format_double(double v);

/// Trains one seed. The sampler is seeded with `seed`; the problem is shared.
SeedRecord run_seed(const FiniteSumProblem& problem, const StepPlan& plan, OptimizerKind opt,
                    const std::vector<double>& x0, std::uint64_t seed);

/// Per-epoch mean/min/max over the seeds that reached the epoch. The mean sums
/// in seed order, then divides by the count.
std::vector<AggregateRow> aggregate(const std::vector<SeedRecord>& seeds);

void write_seed_csv(const std::string& path, const SeedRecord& rec);
void write_aggregate_csv(const std::string& path, const std::vector<AggregateRow>& rows);

struct RunOptions {
  bool write_files = true;
  std::ostream* log = nullptr;  // progress lines every log_every epochs
  unsigned threads = 0;         // 0 = hardware concurrency
};

struct RunResult {
  RunConfig config;
  std::string config_hash;
  StepPlan plan;
  std::vector<SeedRecord> seeds;
  std::vector<AggregateRow> aggregate;
  bool diverged = false;
  std::optional<BoundReport> bounds;
  std::string bounds_note;
  double wall_time_seconds = 0.0;
  nlohmann::json summary;
};

/// Trains every seed (in parallel), then writes seed_<seed>.csv,
/// aggregate.csv and summary.json under config.output_dir. Divergence is
/// reported through RunResult::diverged, not thrown.
RunResult run(const RunConfig& config, const RunOptions& opts = {});

/// Bound report for the config's plan, with problem constants and
/// f(x0) - f_star filled in when the problem certifies them. No training.
BoundReport bounds_report(const RunConfig& config, std::string* note = nullptr);

struct SweepCell {
  std::size_t index = 0;
  nlohmann::json overrides;
  std::string config_hash;
  std::string status;  // ok | diverged | config_error | error
  std::string message;
  std::optional<double> final_min_full_grad_norm;  // seed mean, last row
  std::optional<double> final_loss;
  std::string output_dir;
};

struct SweepResult {
  std::vector<SweepCell> leaderboard;  // ranked
  nlohmann::json to_json() const;
};

/// Cartesian product over `grid`, an object mapping dotted config paths
/// (e.g. "schedules.lr.alpha_max") to non-empty value arrays. Cells run one
/// after another under out_dir/cell_<index>; a failing cell is recorded and
/// the sweep carries on. Writes out_dir/leaderboard.json.
///
/// Ranking: ok cells by final min grad norm, then final loss, then config
/// hash; diverged and failed cells follow, ordered by hash then index.
SweepResult sweep(const nlohmann::json& base, const nlohmann::json& grid,
                  const std::string& out_dir, const RunOptions& opts = {});

}  // namespace qhm

#endif  // QHM_HARNESS_HPP
