// Copyright 2026 The dp2 Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef DP2_TRAIN_HPP_
#define DP2_TRAIN_HPP_

#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "dp2/config.hpp"
#include "dp2/data.hpp"
#include "dp2/diagnostics.hpp"
#include "dp2/model.hpp"
#include "dp2/optimizer.hpp"

namespace dp2 {

struct MetricsRow {
  std::int64_t step = 0;
  std::int64_t epoch = 0;
  Phase phase = Phase::kSgd;
  double train_loss = 0.0;
  double train_metric = 0.0;
  double test_loss = 0.0;
  double test_metric = 0.0;
  double epsilon = 0.0;
  double clip_fraction = 0.0;
  double grad_l2_mean = 0.0;
  double d_l1 = 0.0;
  double hs_ratio = std::numeric_limits<double>::quiet_NaN();
};

struct RunResult {
  RunConfig config;  // resolved echo
  std::vector<MetricsRow> rows;
  std::int64_t steps = 0;
  double final_epsilon = std::numeric_limits<double>::infinity();
  std::int64_t ledger_steps = 0;
  double sampling_ratio = 0.0;
  EvalResult final_train;
  EvalResult final_test;
  double wall_seconds = 0.0;
  std::string run_dir;  // empty when file output is disabled

  // Diagnostics (populated when hs_logging is on / the optimizer keeps a
  // moment estimate).
  std::vector<double> hs_clean;
  std::vector<double> hs_noisy;
  double hs_clean_max = 0.0;
  double hs_noisy_max = 0.0;
  std::vector<PrecondSnapshot> snapshots;
  std::optional<MomentBoundResult> moment_bound;
};

std::string metrics_csv_header();
std::string metrics_csv_row(const MetricsRow& row);

// Resolves the dataset pair named by the config (synthetic or loaded).
std::pair<Dataset, Dataset> build_datasets(const RunConfig& cfg);

// Runs one seeded training loop; writes metrics.csv, summary.json and
// config.ini under the run directory unless cfg.write_files is false.
RunResult run_train(const RunConfig& cfg);

// Output directory resolution: cfg.out_dir if set, else $DP2_OUT_DIR or
// ./runs plus a config-hash subdirectory.
std::string resolve_run_dir(const RunConfig& cfg);

std::string summary_json(const RunResult& result);

struct SweepSpec {
  // Cartesian product over these key -> value-list axes.
  std::vector<std::pair<std::string, std::vector<std::string>>> grid;
  std::vector<std::uint64_t> seeds;  // empty: keep the base seed
};

struct SweepRow {
  std::vector<std::pair<std::string, std::string>> values;
  std::uint64_t seed = 0;
  double train_loss = 0.0;
  double train_metric = 0.0;
  double test_loss = 0.0;
  double test_metric = 0.0;
  double epsilon = std::numeric_limits<double>::infinity();
  std::string run_dir;
};

// One run per grid point per seed, each with its own rng, ledger, and output
// files; returns the joined summary (also written as sweep.csv when file
// output is on). Throws when the grid exceeds cfg.sweep_cap runs.
std::vector<SweepRow> run_sweep(const RunConfig& base, const SweepSpec& spec);

// Mean and sample standard deviation over seeds for one grid point.
struct SweepAggregate {
  std::vector<std::pair<std::string, std::string>> values;
  std::int64_t seeds = 0;
  double train_loss_mean = 0.0, train_loss_std = 0.0;
  double test_metric_mean = 0.0, test_metric_std = 0.0;
};

std::vector<SweepAggregate> aggregate_sweep(const std::vector<SweepRow>& rows);

}  // namespace dp2

#endif  // DP2_TRAIN_HPP_
