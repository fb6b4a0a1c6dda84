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

#include "dp2/cli.hpp"

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include "CLI11.hpp"
#include "json.hpp"

#include "dp2/accountant.hpp"
#include "dp2/config.hpp"
#include "dp2/data.hpp"
#include "dp2/train.hpp"

namespace dp2 {

namespace {

std::string format_double(double v) {
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

void require_config_file(const std::string& path) {
  if (!std::filesystem::exists(path)) {
    throw CLI::RuntimeError("config file not found: " + path, 2);
  }
}

int cmd_train(const std::string& config_path,
              const std::vector<std::string>& sets, std::ostream& out) {
  require_config_file(config_path);
  RunConfig cfg = RunConfig::from_file(config_path, sets);
  const RunResult result = run_train(cfg);
  out << "steps " << result.steps << '\n';
  out << "train_loss " << format_double(result.final_train.loss) << '\n';
  out << "train_metric " << format_double(result.final_train.metric) << '\n';
  out << "test_loss " << format_double(result.final_test.loss) << '\n';
  out << "test_metric " << format_double(result.final_test.metric) << '\n';
  out << "epsilon "
      << (std::isinf(result.final_epsilon)
              ? std::string("non-private")
              : format_double(result.final_epsilon))
      << '\n';
  out << "run_dir " << result.run_dir << '\n';
  return 0;
}

int cmd_sweep(const std::string& config_path,
              const std::vector<std::string>& sets,
              const std::vector<std::string>& grid_args,
              const std::string& seeds_arg, std::ostream& out) {
  require_config_file(config_path);
  RunConfig base = RunConfig::from_file(config_path, sets);
  SweepSpec spec;
  for (const auto& axis : grid_args) {
    auto [key, list] = parse_key_value(axis);
    std::vector<std::string> values;
    std::size_t start = 0;
    while (start <= list.size()) {
      const auto comma = list.find(',', start);
      values.push_back(list.substr(
          start, comma == std::string::npos ? std::string::npos
                                            : comma - start));
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    spec.grid.emplace_back(key, std::move(values));
  }
  if (!seeds_arg.empty()) {
    std::size_t start = 0;
    while (start <= seeds_arg.size()) {
      const auto comma = seeds_arg.find(',', start);
      const std::string one = seeds_arg.substr(
          start,
          comma == std::string::npos ? std::string::npos : comma - start);
      spec.seeds.push_back(std::stoull(one));
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
  }
  const auto rows = run_sweep(base, spec);
  for (const auto& row : rows) {
    for (const auto& [key, value] : row.values) {
      out << key << '=' << value << ' ';
    }
    out << "seed=" << row.seed << " train_loss="
        << format_double(row.train_loss)
        << " test_metric=" << format_double(row.test_metric) << " epsilon="
        << (std::isinf(row.epsilon) ? std::string("non-private")
                                    : format_double(row.epsilon))
        << '\n';
  }
  if (!spec.seeds.empty() && spec.seeds.size() > 1) {
    for (const auto& agg : aggregate_sweep(rows)) {
      for (const auto& [key, value] : agg.values) {
        out << key << '=' << value << ' ';
      }
      out << "train_loss " << format_double(agg.train_loss_mean) << " +- "
          << format_double(agg.train_loss_std) << ", test_metric "
          << format_double(agg.test_metric_mean) << " +- "
          << format_double(agg.test_metric_std) << " (" << agg.seeds
          << " seeds)\n";
    }
  }
  out << rows.size() << " runs\n";
  return 0;
}

int cmd_accountant(double q, double sigma, std::int64_t steps, double delta,
                   std::ostream& out) {
  const double eps = epsilon_for(q, sigma, steps, delta);
  out << format_double(eps) << '\n';
  return 0;
}

int cmd_gen_data(const std::string& spec_path, const std::string& out_dir,
                 std::ostream& out) {
  require_config_file(spec_path);
  SynthSpec spec;
  for (const auto& [key, value] : parse_ini(spec_path)) {
    if (key == "n") spec.n = std::stoll(value);
    else if (key == "d") spec.d = std::stoll(value);
    else if (key == "sparsity") spec.sparsity = std::stoll(value);
    else if (key == "num_informative") spec.num_informative = std::stoll(value);
    else if (key == "label_noise") spec.label_noise = std::stod(value);
    else if (key == "seed") spec.seed = std::stoull(value);
    else if (key == "zipf") spec.zipf = std::stod(value);
    else if (key == "value_scale_min") spec.value_scale_min = std::stod(value);
    else if (key == "nonneg_values") spec.nonneg_values = std::stoi(value) != 0;
    else if (key == "informative_tail_start") spec.informative_tail_start = std::stod(value);
    else throw std::runtime_error("unknown synth spec key '" + key + "'");
  }
  const auto [train, test] = gen_synthetic(spec);
  std::filesystem::create_directories(out_dir);
  save_sparse(train, out_dir + "/train.txt");
  save_sparse(test, out_dir + "/test.txt");
  out << "wrote " << train.size() << " train / " << test.size()
      << " test examples to " << out_dir << '\n';
  return 0;
}

int cmd_diagnose(const std::string& run_dir, std::ostream& out) {
  const std::string path = run_dir + "/summary.json";
  if (!std::filesystem::exists(path)) {
    throw CLI::RuntimeError("summary not found: " + path, 2);
  }
  std::ifstream in(path);
  nlohmann::json j;
  in >> j;
  out << "optimizer " << j["config"]["optimizer"].get<std::string>() << '\n';
  out << "steps " << j["final"]["steps"] << '\n';
  out << "train_loss " << j["final"]["train_loss"] << '\n';
  out << "test_metric " << j["final"]["test_metric"] << '\n';
  out << "epsilon " << j["privacy"]["epsilon"] << '\n';
  if (j.contains("diagnostics")) {
    const auto& d = j["diagnostics"];
    if (d.contains("hs_clean_max")) {
      out << "hs_clean_max " << d["hs_clean_max"] << '\n';
      out << "hs_noisy_max " << d["hs_noisy_max"] << '\n';
      out << "hs_points " << d["hs_clean"].size() << '\n';
    }
    if (d.contains("snapshots") && !d["snapshots"].empty()) {
      const auto& first = d["snapshots"].front();
      const auto& last = d["snapshots"].back();
      out << "snapshots " << d["snapshots"].size() << '\n';
      out << "first_snapshot step=" << first["step"] << " q50=" << first["q50"]
          << " q99=" << first["q99"] << '\n';
      out << "last_snapshot step=" << last["step"] << " q50=" << last["q50"]
          << " q99=" << last["q99"] << '\n';
    }
    if (d.contains("moment_bound")) {
      out << "moment_bound bound=" << d["moment_bound"]["bound"]
          << " empirical_mean=" << d["moment_bound"]["empirical_mean"] << " pass="
          << d["moment_bound"]["pass"] << '\n';
    }
  }
  return 0;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out,
            std::ostream& err) {
  CLI::App app{"differentially private optimization with delayed "
               "preconditioners"};
  app.require_subcommand(1);

  std::string config_path, spec_path, out_dir, run_dir, seeds_arg;
  std::vector<std::string> sets, grid_args;
  double q = 0.0, sigma = 0.0, delta = 1e-5;
  std::int64_t steps = 0;

  auto* train = app.add_subcommand("train", "run one training job");
  train->add_option("--config", config_path, "ini config file")->required();
  train->add_option("--set", sets, "override key=value");

  auto* sweep = app.add_subcommand("sweep", "grid of training jobs");
  sweep->add_option("--config", config_path, "ini config file")->required();
  sweep->add_option("--set", sets, "override key=value");
  sweep->add_option("--grid", grid_args, "axis key=v1,v2,...")->required();
  sweep->add_option("--seeds", seeds_arg, "comma-separated seeds");

  auto* accountant = app.add_subcommand("accountant", "print spent epsilon");
  accountant->add_option("--q", q, "sampling ratio")->required();
  accountant->add_option("--sigma", sigma, "noise multiplier")->required();
  accountant->add_option("--steps", steps, "composition count")->required();
  accountant->add_option("--delta", delta, "target delta")->required();

  auto* gen = app.add_subcommand("gen-data", "write synthetic sparse data");
  gen->add_option("--spec", spec_path, "synthetic spec ini")->required();
  gen->add_option("--out", out_dir, "output directory")->required();

  auto* diagnose = app.add_subcommand("diagnose", "re-emit run diagnostics");
  diagnose->add_option("--run", run_dir, "run directory")->required();

  try {
    // CLI11 parses argv-style reversed vectors.
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
    if (train->parsed()) return cmd_train(config_path, sets, out);
    if (sweep->parsed()) {
      return cmd_sweep(config_path, sets, grid_args, seeds_arg, out);
    }
    if (accountant->parsed()) {
      return cmd_accountant(q, sigma, steps, delta, out);
    }
    if (gen->parsed()) return cmd_gen_data(spec_path, out_dir, out);
    if (diagnose->parsed()) return cmd_diagnose(run_dir, out);
    err << "no subcommand\n";
    return 1;
  } catch (const CLI::RuntimeError& e) {
    err << e.what() << '\n';
    return e.get_exit_code();
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      out << app.help();
      return 0;
    }
    err << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace dp2
