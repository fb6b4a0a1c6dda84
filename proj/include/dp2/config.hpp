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

#ifndef DP2_CONFIG_HPP_
#define DP2_CONFIG_HPP_

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace dp2 {

enum class OptimizerKind {
  kDpSgd,
  kDpRmsProp,
  kDpAdaGrad,
  kDp2RmsProp,
  kDp2AdaGrad,
  kDp2Yogi,
  kAblation1,
  kAblation2,
  kSgd,
  kRmsProp,
  kDelayedRmsProp,
};

std::string to_string(OptimizerKind kind);
OptimizerKind optimizer_kind_from_string(const std::string& name);
bool optimizer_is_private(OptimizerKind kind);

// Flat key=value run configuration. Defaults follow the tuned sparse-text
// settings (lr 0.1/3, clips 0.5/5, delay 195, beta 0.9).
struct RunConfig {
  // model
  std::string model = "logreg";  // logreg | multilabel | matfac
  std::int64_t dim = 0;
  std::int64_t classes = 0;
  std::string multilabel_loss = "sigmoid";  // sigmoid | softmax
  std::int64_t num_users = 0;
  std::int64_t num_items = 0;
  std::int64_t embed_dim = 0;

  // data
  std::string train_path;
  std::string test_path;
  double split_test_fraction = 0.1;
  bool synth = false;
  std::int64_t synth_n = 10000;
  std::int64_t synth_d = 1000;
  std::int64_t synth_sparsity = 10;
  std::int64_t synth_informative = 50;
  double synth_label_noise = 0.0;
  std::uint64_t synth_seed = 1;
  double synth_zipf = 0.0;
  double synth_value_scale_min = 1.0;
  bool synth_nonneg = false;
  double synth_tail_start = 0.0;

  // optimizer
  std::string optimizer = "dp2-rmsprop";
  std::int64_t epochs = 100;
  std::int64_t batch_size = 64;
  double lr_sgd = 0.1;
  double lr_adaptive = 3.0;
  std::string lr_schedule = "constant";  // constant | invsqrt
  double lr_alpha0 = 0.1;
  double beta = 0.9;
  double eps_adapt = 1e-5;
  std::int64_t s1 = 195;
  std::int64_t s2 = 195;
  bool bias_correction = false;

  // privacy
  double sigma = 1.0;
  double clip_sgd = 0.5;
  double clip_adaptive = 5.0;
  double delta = 1e-5;

  // run
  std::uint64_t seed = 1;
  std::int64_t eval_every = 0;     // 0: once per epoch
  std::int64_t snapshot_every = 0; // 0: at eval points
  bool hs_logging = false;
  int threads = 0;                 // 0: all cores
  std::string out_dir;
  std::int64_t sweep_cap = 512;

  // Not a config key: tests and sweeps can keep runs in memory only.
  bool write_files = true;

  OptimizerKind optimizer_kind() const {
    return optimizer_kind_from_string(optimizer);
  }
  void validate() const;

  // Key order is fixed so the echo is stable.
  std::vector<std::pair<std::string, std::string>> entries() const;
  std::string echo_ini() const;

  void set(const std::string& key, const std::string& value);

  static RunConfig from_entries(
      const std::vector<std::pair<std::string, std::string>>& entries);
  // Throws std::runtime_error naming the path when the file is missing.
  static RunConfig from_file(const std::string& path,
                             const std::vector<std::string>& overrides = {});
};

// Parses "key=value" (used by --set and sweep grids).
std::pair<std::string, std::string> parse_key_value(const std::string& kv);

// Parses a flat ini-style file: '#' comments, blank lines, key = value.
std::vector<std::pair<std::string, std::string>> parse_ini(
    const std::string& path);

}  // namespace dp2

#endif  // DP2_CONFIG_HPP_
