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

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "dp2/accountant.hpp"
#include "dp2/cli.hpp"
#include "dp2/train.hpp"
#include "json.hpp"

using namespace dp2;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "dp2_train_tests" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

RunConfig small_synth_config() {
  RunConfig cfg;
  cfg.model = "logreg";
  cfg.synth = true;
  cfg.synth_n = 400;
  cfg.synth_d = 40;
  cfg.synth_sparsity = 5;
  cfg.synth_informative = 10;
  cfg.synth_seed = 3;
  cfg.optimizer = "dp2-rmsprop";
  cfg.epochs = 2;
  cfg.batch_size = 32;
  cfg.s1 = 6;
  cfg.s2 = 6;
  cfg.sigma = 1.0;
  cfg.clip_sgd = 0.5;
  cfg.clip_adaptive = 5.0;
  cfg.lr_sgd = 0.1;
  cfg.lr_adaptive = 0.3;
  cfg.seed = 7;
  cfg.threads = 1;
  cfg.write_files = false;
  return cfg;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("plain sgd fits separable synthetic data above 95%") {
  RunConfig cfg = small_synth_config();
  cfg.optimizer = "sgd";
  cfg.synth_n = 2000;
  cfg.synth_d = 60;
  cfg.synth_sparsity = 8;
  cfg.synth_informative = 30;
  cfg.epochs = 100;
  cfg.batch_size = 50;
  cfg.lr_sgd = 3.0;
  cfg.sigma = 0.0;
  const RunResult result = run_train(cfg);
  CHECK(result.final_train.metric > 0.95);
  CHECK(std::isinf(result.final_epsilon));
}

TEST_CASE("identical config and seed give identical metrics twice") {
  RunConfig cfg = small_synth_config();
  cfg.write_files = true;
  const auto dir_a = temp_dir("det_a"), dir_b = temp_dir("det_b");
  cfg.out_dir = dir_a.string();
  run_train(cfg);
  cfg.out_dir = dir_b.string();
  run_train(cfg);
  const std::string csv_a = read_file(dir_a / "metrics.csv");
  const std::string csv_b = read_file(dir_b / "metrics.csv");
  CHECK(!csv_a.empty());
  CHECK(csv_a == csv_b);
}

TEST_CASE("metrics csv column order is pinned") {
  CHECK(metrics_csv_header() ==
        "step,epoch,phase,train_loss,train_metric,test_loss,test_metric,"
        "epsilon,clip_fraction,grad_l2_mean,D_l1,hs_ratio");
}

TEST_CASE("dp2 and dp-sgd spend the same epsilon in the summary") {
  RunConfig cfg = small_synth_config();
  const RunResult dp2_run = run_train(cfg);
  cfg.optimizer = "dpsgd";
  const RunResult sgd_run = run_train(cfg);
  CHECK(dp2_run.steps == sgd_run.steps);
  CHECK(dp2_run.final_epsilon ==
        doctest::Approx(sgd_run.final_epsilon).epsilon(1e-12));
  // offline recomputation from (q, sigma, steps)
  const double offline =
      epsilon_for(dp2_run.sampling_ratio, cfg.sigma, dp2_run.steps, cfg.delta);
  CHECK(dp2_run.final_epsilon == doctest::Approx(offline).epsilon(1e-9));
}

TEST_CASE("sigma=0 marks the run non-private in the summary json") {
  RunConfig cfg = small_synth_config();
  cfg.sigma = 0.0;
  const RunResult result = run_train(cfg);
  const auto j = nlohmann::json::parse(summary_json(result));
  CHECK(j["privacy"]["epsilon"] == "non-private");
}

TEST_CASE("config echo reproduces the run bit-exactly") {
  RunConfig cfg = small_synth_config();
  cfg.write_files = true;
  const auto dir_a = temp_dir("echo_a");
  cfg.out_dir = dir_a.string();
  const RunResult first = run_train(cfg);

  // feed the echoed config back in
  const auto echo_path = dir_a / "config.ini";
  REQUIRE(fs::exists(echo_path));
  RunConfig again = RunConfig::from_file(echo_path.string());
  const auto dir_b = temp_dir("echo_b");
  again.out_dir = dir_b.string();
  run_train(again);
  CHECK(read_file(dir_a / "metrics.csv") == read_file(dir_b / "metrics.csv"));
  CHECK(first.rows.size() > 0);
}

TEST_CASE("hs logging emits both clean and noisy series") {
  RunConfig cfg = small_synth_config();
  cfg.hs_logging = true;
  const RunResult result = run_train(cfg);
  CHECK(result.hs_clean.size() == result.hs_noisy.size());
  CHECK(result.hs_clean.size() > 0);
  CHECK(result.hs_clean_max > 0.0);
  const auto j = nlohmann::json::parse(summary_json(result));
  CHECK(j["diagnostics"]["hs_clean"].size() == result.hs_clean.size());
}

TEST_CASE("snapshots and moment_bound summary for dp2 runs") {
  RunConfig cfg = small_synth_config();
  cfg.clip_sgd = 1.0;
  const RunResult result = run_train(cfg);
  CHECK(result.snapshots.size() > 0);
  REQUIRE(result.moment_bound.has_value());
  CHECK(result.moment_bound->bound > 1.0);
}

TEST_CASE("sweep: singleton grid equals run_train and row counts match") {
  RunConfig base = small_synth_config();
  SweepSpec spec;
  spec.grid = {{"s1", {"6"}}};
  spec.seeds = {7};
  const auto rows = run_sweep(base, spec);
  REQUIRE(rows.size() == 1);
  const RunResult direct = run_train(base);
  CHECK(rows[0].train_loss == doctest::Approx(direct.final_train.loss));
  CHECK(rows[0].epsilon == doctest::Approx(direct.final_epsilon));

  SweepSpec bigger;
  bigger.grid = {{"s1", {"3", "6"}}, {"lr_adaptive", {"0.1", "0.3", "1"}}};
  bigger.seeds = {1, 2};
  const auto grid_rows = run_sweep(base, bigger);
  CHECK(grid_rows.size() == 12);  // |grid| * seeds
}

TEST_CASE("sweep aggregation reports mean and sample std over seeds") {
  std::vector<SweepRow> rows(4);
  rows[0].values = {{"s1", "6"}};
  rows[0].train_loss = 1.0;
  rows[1].values = {{"s1", "6"}};
  rows[1].train_loss = 3.0;
  rows[2].values = {{"s1", "12"}};
  rows[2].train_loss = 2.0;
  rows[3].values = {{"s1", "12"}};
  rows[3].train_loss = 2.0;
  const auto agg = aggregate_sweep(rows);
  REQUIRE(agg.size() == 2);
  CHECK(agg[0].seeds == 2);
  CHECK(agg[0].train_loss_mean == doctest::Approx(2.0));
  CHECK(agg[0].train_loss_std == doctest::Approx(std::sqrt(2.0)));
  CHECK(agg[1].train_loss_std == doctest::Approx(0.0));
}

TEST_CASE("sweep cap is enforced") {
  RunConfig base = small_synth_config();
  base.sweep_cap = 3;
  SweepSpec spec;
  spec.grid = {{"s1", {"2", "4", "6", "8"}}};
  CHECK_THROWS(run_sweep(base, spec));
}

TEST_CASE("cli: missing config file exits 2 and names the path") {
  std::ostringstream out, err;
  const int code =
      run_cli({"train", "--config", "/nonexistent/cfg.ini"}, out, err);
  CHECK(code == 2);
  CHECK(err.str().find("/nonexistent/cfg.ini") != std::string::npos);
}

TEST_CASE("cli: unknown config key fails with a message") {
  const auto dir = temp_dir("cli_badkey");
  const auto cfg_path = dir / "cfg.ini";
  {
    std::ofstream out(cfg_path);
    out << "synth = 1\nmodel = logreg\n";
  }
  std::ostringstream out, err;
  const int code = run_cli({"train", "--config", cfg_path.string(), "--set",
                            "no_such_key=1"},
                           out, err);
  CHECK(code == 1);
  CHECK(err.str().find("no_such_key") != std::string::npos);
}

TEST_CASE("cli: accountant prints epsilon consistent with the library") {
  std::ostringstream out, err;
  const int code = run_cli({"accountant", "--q", "1.0", "--sigma", "2.0",
                            "--steps", "1", "--delta", "1e-5"},
                           out, err);
  REQUIRE(code == 0);
  const double printed = std::stod(out.str());
  CHECK(printed == doctest::Approx(epsilon_for(1.0, 2.0, 1, 1e-5)));
}

TEST_CASE("cli: gen-data writes loadable files and train runs on them") {
  const auto dir = temp_dir("cli_gendata");
  const auto spec_path = dir / "synth.ini";
  {
    std::ofstream out(spec_path);
    out << "n = 300\nd = 30\nsparsity = 4\nnum_informative = 8\n"
        << "label_noise = 0\nseed = 5\n";
  }
  std::ostringstream out, err;
  const int code = run_cli({"gen-data", "--spec", spec_path.string(), "--out",
                            (dir / "data").string()},
                           out, err);
  REQUIRE(code == 0);
  REQUIRE(fs::exists(dir / "data" / "train.txt"));

  const auto cfg_path = dir / "cfg.ini";
  {
    std::ofstream cfg(cfg_path);
    cfg << "model = logreg\ndim = 30\n"
        << "train_path = " << (dir / "data" / "train.txt").string() << "\n"
        << "test_path = " << (dir / "data" / "test.txt").string() << "\n"
        << "optimizer = dpsgd\nepochs = 1\nbatch_size = 30\nthreads = 1\n"
        << "out_dir = " << (dir / "run").string() << "\n";
  }
  std::ostringstream out2, err2;
  const int code2 =
      run_cli({"train", "--config", cfg_path.string()}, out2, err2);
  CHECK(code2 == 0);
  CHECK(out2.str().find("epsilon") != std::string::npos);
  REQUIRE(fs::exists(dir / "run" / "summary.json"));

  std::ostringstream out3, err3;
  const int code3 =
      run_cli({"diagnose", "--run", (dir / "run").string()}, out3, err3);
  CHECK(code3 == 0);
  CHECK(out3.str().find("epsilon") != std::string::npos);
}

TEST_CASE("cli: set override changes behavior end to end") {
  const auto dir = temp_dir("cli_set");
  const auto cfg_path = dir / "cfg.ini";
  {
    std::ofstream out(cfg_path);
    out << "model = logreg\nsynth = 1\nsynth_n = 200\nsynth_d = 20\n"
        << "synth_sparsity = 3\nsynth_informative = 5\noptimizer = dpsgd\n"
        << "epochs = 1\nbatch_size = 20\nthreads = 1\n"
        << "out_dir = " << (dir / "run").string() << "\n";
  }
  std::ostringstream out, err;
  const int code = run_cli({"train", "--config", cfg_path.string(), "--set",
                            "sigma=0"},
                           out, err);
  REQUIRE(code == 0);
  CHECK(out.str().find("epsilon non-private") != std::string::npos);
}
