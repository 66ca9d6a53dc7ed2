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

// Command-line front end. Talks to the library through the C API only.
//
//   qhm run     --config cfg.json [--out dir] [--seeds 1,2,3] [--quiet]
//   qhm sweep   --config base.json --grid grid.json [--out dir] [--seeds ...]
//   qhm bounds  --config cfg.json [--out dir]
//   qhm convert --from nshb --alpha 0.1 --beta 0.9
//
// Exit codes: 0 ok, 1 other failure, 2 config error, 3 divergence,
// 4 bound domination failure.

#include <cerrno>
#include <cstdint>
#include <cstdlib>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "qhm/qhm.h"

namespace {

enum Exit { kOk = 0, kFailure = 1, kConfig = 2, kDiverged = 3, kBounds = 4 };

int exit_code(qhm_status s) {
  switch (s) {
    case QHM_OK: return kOk;
    case QHM_ERR_CONFIG:
    case QHM_ERR_VALIDATION:
    case QHM_ERR_RANGE:
    case QHM_ERR_INVALID_ARGUMENT: return kConfig;
    case QHM_ERR_DIVERGED: return kDiverged;
    case QHM_ERR_BOUND_VIOLATION: return kBounds;
    default: return kFailure;
  }
}

int report(qhm_status s) {
  if (s != QHM_OK) std::cerr << "qhm: " << qhm_status_name(s) << ": " << qhm_last_error() << '\n';
  return exit_code(s);
}

bool parse_seeds(const std::string& text, std::vector<std::uint64_t>& out) {
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty() || item.find_first_not_of("0123456789") != std::string::npos) return false;
    errno = 0;
    char* end = nullptr;
    const unsigned long long v = std::strtoull(item.c_str(), &end, 10);
    if (errno == ERANGE || *end != '\0') return false;
    out.push_back(v);
  }
  return !out.empty();
}

bool read_file(const std::string& path, std::string& out) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return false;
  std::ostringstream os;
  os << in.rdbuf();
  out = os.str();
  return true;
}

void print_line(const char* line, void*) { std::cout << line << '\n'; }

struct Common {
  std::string config;
  std::string out;
  std::string seeds;
};

// Loads the config and applies --out / --seeds. Returns an exit code, or -1
// when the caller should proceed.
int load(const Common& opt, qhm_config** cfg) {
  qhm_status s = qhm_config_load(opt.config.c_str(), cfg);
  if (s != QHM_OK) return report(s);
  if (!opt.seeds.empty()) {
    std::vector<std::uint64_t> seeds;
    if (!parse_seeds(opt.seeds, seeds)) {
      std::cerr << "qhm: config: --seeds expects comma-separated unsigned integers\n";
      return kConfig;
    }
    if ((s = qhm_config_set_seeds(*cfg, seeds.data(), seeds.size())) != QHM_OK) return report(s);
  }
  if (!opt.out.empty() && (s = qhm_config_set_output_dir(*cfg, opt.out.c_str())) != QHM_OK)
    return report(s);
  return -1;
}

int cmd_run(const Common& opt, bool quiet) {
  qhm_config* cfg = nullptr;
  if (int rc = load(opt, &cfg); rc >= 0) {
    qhm_config_free(cfg);
    return rc;
  }
  char* summary = nullptr;
  const qhm_status s = qhm_run(cfg, quiet ? nullptr : print_line, nullptr, &summary);
  if (summary && !quiet) {
    char* hash = nullptr;
    if (qhm_config_hash(cfg, &hash) == QHM_OK) std::cout << "config_hash " << hash << '\n';
    qhm_string_free(hash);
  }
  qhm_string_free(summary);
  qhm_config_free(cfg);
  return report(s);
}

int cmd_bounds(const Common& opt, bool quiet) {
  qhm_config* cfg = nullptr;
  if (int rc = load(opt, &cfg); rc >= 0) {
    qhm_config_free(cfg);
    return rc;
  }
  char* json = nullptr;
  const qhm_status s = qhm_bounds(cfg, opt.out.empty() ? nullptr : opt.out.c_str(), &json);
  if (json && !quiet) std::cout << json << '\n';
  qhm_string_free(json);
  qhm_config_free(cfg);
  return report(s);
}

int cmd_sweep(const Common& opt, const std::string& grid_path, bool quiet) {
  std::string base, grid;
  if (!read_file(opt.config, base)) {
    std::cerr << "qhm: config: cannot read '" << opt.config << "'\n";
    return kConfig;
  }
  if (!read_file(grid_path, grid)) {
    std::cerr << "qhm: config: cannot read '" << grid_path << "'\n";
    return kConfig;
  }
  std::vector<std::uint64_t> seeds;
  if (!opt.seeds.empty() && !parse_seeds(opt.seeds, seeds)) {
    std::cerr << "qhm: config: --seeds expects comma-separated unsigned integers\n";
    return kConfig;
  }
  const std::string out = opt.out.empty() ? "runs/sweep" : opt.out;
  char* board = nullptr;
  const qhm_status s = qhm_sweep(base.c_str(), grid.c_str(), out.c_str(), seeds.data(),
                                 seeds.size(), quiet ? nullptr : print_line, nullptr, &board);
  if (board && !quiet) std::cout << board << '\n';
  qhm_string_free(board);
  return report(s);
}

int cmd_convert(const std::string& from, double alpha, double beta, bool quiet) {
  double a = 0.0, b = 0.0;
  qhm_status s;
  if (from == "nshb") {
    s = qhm_convert_nshb_to_shb(alpha, beta, &a, &b);
  } else if (from == "shb") {
    s = qhm_convert_shb_to_nshb(alpha, beta, &a, &b);
  } else {
    std::cerr << "qhm: config: --from must be nshb or shb\n";
    return kConfig;
  }
  if (s == QHM_OK && !quiet) {
    char buf[128];
    std::snprintf(buf, sizeof buf, "{\"to\": \"%s\", \"alpha\": %.17g, \"beta\": %.17g}",
                  from == "nshb" ? "shb" : "nshb", a, b);
    std::cout << buf << '\n';
  }
  return report(s);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"QHM experiment harness"};
  app.require_subcommand(1);
  bool quiet = false;
  app.add_flag("--quiet", quiet, "Suppress progress output")->configurable(false);

  Common run_opt, sweep_opt, bounds_opt;
  std::string grid;
  auto add_common = [&quiet](CLI::App* sub, Common& c, bool with_seeds) {
    sub->add_option("--config", c.config, "Config JSON")->required();
    sub->add_option("--out", c.out, "Output directory (overrides output_dir)");
    if (with_seeds) sub->add_option("--seeds", c.seeds, "Comma-separated seeds, e.g. 1,2,3");
    sub->add_flag("--quiet", quiet, "Suppress progress output");
  };

  auto* run = app.add_subcommand("run", "Train every seed and write CSV logs and a summary");
  add_common(run, run_opt, true);
  auto* sw = app.add_subcommand("sweep", "Cartesian grid of runs plus a leaderboard");
  add_common(sw, sweep_opt, true);
  sw->add_option("--grid", grid, "Grid JSON: dotted config path -> array of values")->required();
  auto* bd = app.add_subcommand("bounds", "Evaluate the rate bounds for a config, no training");
  add_common(bd, bounds_opt, false);

  std::string from;
  double alpha = 0.0, beta = 0.0;
  auto* cv = app.add_subcommand("convert", "Convert heavy-ball hyperparameters between NSHB and SHB");
  cv->add_option("--from", from, "Source parameterization: nshb or shb")->required();
  cv->add_option("--alpha", alpha, "Step size")->required();
  cv->add_option("--beta", beta, "Momentum")->required();
  cv->add_flag("--quiet", quiet, "Suppress output");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kConfig;
  }

  if (run->parsed()) return cmd_run(run_opt, quiet);
  if (sw->parsed()) return cmd_sweep(sweep_opt, grid, quiet);
  if (bd->parsed()) return cmd_bounds(bounds_opt, quiet);
  return cmd_convert(from, alpha, beta, quiet);
}
