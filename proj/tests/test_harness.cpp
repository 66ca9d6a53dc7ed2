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
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <set>
#include <string>

#include "qhm/error.hpp"
#include "qhm/harness.hpp"

namespace qhm {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("qhm_harness_" + name);
  fs::remove_all(dir);
  return dir;
}

json small_config(const fs::path& out) {
  json j = json::parse(R"({
    "problem": {"name": "quadratic", "dim": 3, "n": 64, "seed": 4, "kappa": 3.0},
    "optimizer": "qhm",
    "schedules": {
      "batch": {"kind": "exponential_bs", "b0": 4, "delta": 2, "E": 3},
      "lr": {"kind": "constant", "alpha_max": 0.1},
      "beta": {"kind": "step_decay", "beta_max": 0.9, "zeta": 0.5, "E": 3},
      "gamma": {"kind": "constant", "gamma_max": 0.7}
    },
    "epochs": 8,
    "seeds": [3, 1, 2],
    "x0": 2.0
  })");
  j["output_dir"] = out.string();
  return j;
}

json sgd_quadratic(double alpha, const fs::path& out) {
  json j = json::parse(R"({
    "problem": {"name": "quadratic", "dim": 5, "n": 256, "seed": 1, "kappa": 1.0},
    "optimizer": "sgd",
    "schedules": {"batch": {"kind": "constant", "b": 16}, "lr": {"kind": "constant", "alpha_max": 0.5}},
    "epochs": 10,
    "seeds": [0, 1],
    "x0": 3.0
  })");
  j["schedules"]["lr"]["alpha_max"] = alpha;
  j["output_dir"] = out.string();
  return j;
}

std::vector<std::vector<std::string>> read_csv(const fs::path& p) {
  std::vector<std::vector<std::string>> rows;
  std::ifstream in(p);
  for (std::string line; std::getline(in, line);) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    for (std::string c; std::getline(ss, c, ',');) cells.push_back(c);
    rows.push_back(cells);
  }
  return rows;
}

TEST(Harness, FormatDoubleRoundTrips) {
  for (double v : {0.1, 1.0 / 3.0, 1e-300, 123456789.123456789, -2.5e17}) {
    EXPECT_EQ(std::strtod(format_double(v).c_str(), nullptr), v);
  }
  EXPECT_EQ(format_double(NAN), "nan");
  EXPECT_EQ(format_double(-INFINITY), "-inf");
}

TEST(Harness, RunWritesReproducibleRecords) {
  const auto a = scratch("repro_a"), b = scratch("repro_b");
  const auto ra = run(parse_config(small_config(a)));
  RunOptions serial;
  serial.threads = 1;
  const auto rb = run(parse_config(small_config(b)), serial);
  for (const char* f : {"seed_1.csv", "seed_2.csv", "seed_3.csv", "aggregate.csv"}) {
    ASSERT_TRUE(fs::exists(a / f)) << f;
    EXPECT_EQ(slurp(a / f), slurp(b / f)) << f;
  }
  json sa = json::parse(slurp(a / "summary.json"));
  json sb = json::parse(slurp(b / "summary.json"));
  EXPECT_EQ(sa["config_hash"], ra.config_hash);
  EXPECT_FALSE(sa["diverged"].get<bool>());
  for (json* s : {&sa, &sb}) {
    s->erase("timestamp");
    s->erase("wall_time_seconds");
    (*s)["config"].erase("output_dir");
  }
  EXPECT_EQ(sa, sb);
  EXPECT_FALSE(rb.diverged);
  EXPECT_TRUE(sa["bound_report"].is_object());
}

TEST(Harness, SeedRowsSatisfyRecordInvariants) {
  const auto dir = scratch("rows");
  const auto r = run(parse_config(small_config(dir)));
  for (const auto& s : r.seeds) {
    ASSERT_EQ(s.rows.size(), 8u);
    for (std::size_t m = 1; m < s.rows.size(); ++m) {
      EXPECT_GT(s.rows[m].step, s.rows[m - 1].step);
      EXPECT_LE(s.rows[m].min_full_grad_norm, s.rows[m - 1].min_full_grad_norm);
    }
    EXPECT_EQ(s.rows.back().step, r.plan.K);
  }
  const auto csv = read_csv(dir / "seed_1.csv");
  ASSERT_EQ(csv.size(), 9u);
  EXPECT_EQ(csv[0].size(), 9u);
  EXPECT_EQ(csv[1][8], "4");   // batch in epoch 0
  EXPECT_EQ(csv[4][8], "8");   // doubled at epoch 3
}

TEST(Harness, AggregateIsRecomputableFromSeedFiles) {
  const auto dir = scratch("agg");
  run(parse_config(small_config(dir)));
  const auto agg = read_csv(dir / "aggregate.csv");
  std::vector<std::vector<std::vector<std::string>>> seeds;
  for (int s : {3, 1, 2}) seeds.push_back(read_csv(dir / ("seed_" + std::to_string(s) + ".csv")));
  ASSERT_EQ(agg.size(), 9u);
  // seed columns: loss 2, full_grad_norm 3, min_full_grad_norm 4; aggregate
  // triples start at 7, 10, 13.
  const int seed_col[] = {2, 3, 4};
  for (std::size_t row = 1; row < agg.size(); ++row) {
    for (int c = 0; c < 3; ++c) {
      double sum = 0, lo = INFINITY, hi = -INFINITY;
      for (const auto& s : seeds) {
        const double v = std::strtod(s[row][seed_col[c]].c_str(), nullptr);
        sum += v;
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
      EXPECT_EQ(agg[row][7 + 3 * c], format_double(sum / 3));
      EXPECT_EQ(agg[row][8 + 3 * c], format_double(lo));
      EXPECT_EQ(agg[row][9 + 3 * c], format_double(hi));
    }
    EXPECT_EQ(agg[row][6], "3");
  }
}

TEST(Harness, StableSgdConvergesToNoiseFloor) {
  const auto r = run(parse_config(sgd_quadratic(0.5, scratch("stable"))));
  EXPECT_FALSE(r.diverged);
  EXPECT_FALSE(r.summary["diverged"].get<bool>());
  const auto problem = make_problem(r.config.problem);
  const double f_star = *problem->constants().f_star;
  const double f0 = problem->loss(initial_point(r.config));
  for (const auto& s : r.seeds) {
    EXPECT_LT(s.rows.back().loss - f_star, 0.2);  // stationary excess is about 0.05
    EXPECT_LT(s.rows.back().loss, f0);
  }
}

TEST(Harness, UnstableSgdIsFlaggedDiverged) {
  const auto dir = scratch("unstable");
  const auto r = run(parse_config(sgd_quadratic(2.5, dir)));
  EXPECT_TRUE(r.diverged);
  for (const auto& s : r.seeds) {
    EXPECT_TRUE(s.diverged);
    EXPECT_LT(s.rows.size(), 10u);
    EXPECT_GT(std::abs(s.rows.back().loss), kDivergenceLoss);
  }
  const json summary = json::parse(slurp(dir / "summary.json"));
  EXPECT_TRUE(summary["diverged"].get<bool>());
  EXPECT_TRUE(fs::exists(dir / "seed_0.csv"));  // partial log flushed
}

TEST(Harness, PaperScaleExponentialBatchRun) {
  json j = json::parse(R"({
    "problem": {"name": "quadratic", "dim": 10, "n": 1024, "seed": 7, "kappa": 4.0},
    "optimizer": "qhm",
    "schedules": {
      "batch": {"kind": "exponential_bs", "b0": 8, "delta": 2, "E": 30},
      "lr": {"kind": "constant", "alpha_max": 0.1},
      "beta": {"kind": "step_decay", "beta_max": 0.9, "zeta": 0.5, "E": 30},
      "gamma": {"kind": "step_decay", "gamma_max": 0.7, "lambda": 0.5, "E": 30}
    },
    "epochs": 300,
    "seeds": [0, 1, 2]
  })");
  const auto dir = scratch("exp300");
  j["output_dir"] = dir.string();
  run(parse_config(j));
  const auto agg = read_csv(dir / "aggregate.csv");
  ASSERT_EQ(agg.size(), 301u);
  std::string header;
  std::ifstream(dir / "aggregate.csv") >> header;
  EXPECT_EQ(header, kAggregateCsvHeader);
}

TEST(Harness, BoundsReportWithoutTraining) {
  const auto c = parse_config(small_config(scratch("bounds")));
  std::string note;
  const auto r = bounds_report(c, &note);
  EXPECT_TRUE(r.all_dominated());
  EXPECT_TRUE(r.cor1.has_value());
  EXPECT_FALSE(fs::exists(c.output_dir));
}

json grid_4x3() {
  return json::parse(R"({"schedules.lr.alpha_max": [0.05, 0.1, 0.25, 0.5],
                         "schedules.beta.beta_max": [0.3, 0.5, 0.9]})");
}

TEST(Sweep, CartesianProductAndRanking) {
  const auto dir = scratch("sweep");
  json base = small_config(dir);
  base["seeds"] = json::array({1});
  const auto r = sweep(base, grid_4x3(), dir.string());
  ASSERT_EQ(r.leaderboard.size(), 12u);
  std::set<std::size_t> cells;
  for (std::size_t i = 0; i < r.leaderboard.size(); ++i) {
    const auto& c = r.leaderboard[i];
    cells.insert(c.index);
    EXPECT_EQ(c.status, "ok");
    if (i > 0) {
      const auto& p = r.leaderboard[i - 1];
      EXPECT_LE(*p.final_min_full_grad_norm, *c.final_min_full_grad_norm);
    }
  }
  EXPECT_EQ(cells.size(), 12u);
  const json board = json::parse(slurp(dir / "leaderboard.json"));
  EXPECT_EQ(board["leaderboard"].size(), 12u);
  EXPECT_EQ(board["leaderboard"][0]["rank"], 1);
}

TEST(Sweep, FailingCellsAreIsolated) {
  const auto dir = scratch("sweep_fail");
  json base = small_config(dir);
  base["seeds"] = json::array({1});
  const json grid = json::parse(R"({"schedules.beta.beta_max": [0.5, 1.5, 0.9]})");
  const auto r = sweep(base, grid, dir.string());
  ASSERT_EQ(r.leaderboard.size(), 3u);
  EXPECT_EQ(r.leaderboard[0].status, "ok");
  EXPECT_EQ(r.leaderboard[1].status, "ok");
  EXPECT_EQ(r.leaderboard[2].status, "config_error");
  EXPECT_EQ(r.leaderboard[2].index, 1u);
  EXPECT_FALSE(r.leaderboard[2].message.empty());
}

TEST(Sweep, EmptyDimensionIsRejected) {
  const auto dir = scratch("sweep_empty");
  try {
    sweep(small_config(dir), json::parse(R"({"schedules.lr.alpha_max": []})"), dir.string());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::config);
  }
  EXPECT_THROW(sweep(small_config(dir), json::object(), dir.string()), Error);
}

}  // namespace
}  // namespace qhm
