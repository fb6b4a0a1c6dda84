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

#include "dp2/config.hpp"

#include <charconv>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace dp2 {

namespace {

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r\n");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r\n");
  return s.substr(begin, end - begin + 1);
}

std::string format_double(double v) {
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

double to_double(const std::string& key, const std::string& value) {
  char* end = nullptr;
  const double v = std::strtod(value.c_str(), &end);
  if (value.empty() || end != value.c_str() + value.size()) {
    throw std::runtime_error("config key '" + key + "': bad number '" +
                             value + "'");
  }
  return v;
}

std::int64_t to_int(const std::string& key, const std::string& value) {
  std::int64_t v = 0;
  const auto [ptr, ec] =
      std::from_chars(value.data(), value.data() + value.size(), v);
  if (ec != std::errc{} || ptr != value.data() + value.size()) {
    throw std::runtime_error("config key '" + key + "': bad integer '" +
                             value + "'");
  }
  return v;
}

std::uint64_t to_uint(const std::string& key, const std::string& value) {
  std::uint64_t v = 0;
  const auto [ptr, ec] =
      std::from_chars(value.data(), value.data() + value.size(), v);
  if (ec != std::errc{} || ptr != value.data() + value.size()) {
    throw std::runtime_error("config key '" + key + "': bad integer '" +
                             value + "'");
  }
  return v;
}

bool to_bool(const std::string& key, const std::string& value) {
  if (value == "1" || value == "true") return true;
  if (value == "0" || value == "false") return false;
  throw std::runtime_error("config key '" + key + "': bad boolean '" + value +
                           "'");
}

}  // namespace

std::string to_string(OptimizerKind kind) {
  switch (kind) {
    case OptimizerKind::kDpSgd: return "dpsgd";
    case OptimizerKind::kDpRmsProp: return "dp-rmsprop";
    case OptimizerKind::kDpAdaGrad: return "dp-adagrad";
    case OptimizerKind::kDp2RmsProp: return "dp2-rmsprop";
    case OptimizerKind::kDp2AdaGrad: return "dp2-adagrad";
    case OptimizerKind::kDp2Yogi: return "dp2-yogi";
    case OptimizerKind::kAblation1: return "ablation1";
    case OptimizerKind::kAblation2: return "ablation2";
    case OptimizerKind::kSgd: return "sgd";
    case OptimizerKind::kRmsProp: return "rmsprop";
    case OptimizerKind::kDelayedRmsProp: return "delayed-rmsprop";
  }
  throw std::logic_error("unknown optimizer kind");
}

OptimizerKind optimizer_kind_from_string(const std::string& name) {
  if (name == "dpsgd") return OptimizerKind::kDpSgd;
  if (name == "dp-rmsprop") return OptimizerKind::kDpRmsProp;
  if (name == "dp-adagrad") return OptimizerKind::kDpAdaGrad;
  if (name == "dp2-rmsprop") return OptimizerKind::kDp2RmsProp;
  if (name == "dp2-adagrad") return OptimizerKind::kDp2AdaGrad;
  if (name == "dp2-yogi") return OptimizerKind::kDp2Yogi;
  if (name == "ablation1") return OptimizerKind::kAblation1;
  if (name == "ablation2") return OptimizerKind::kAblation2;
  if (name == "sgd") return OptimizerKind::kSgd;
  if (name == "rmsprop") return OptimizerKind::kRmsProp;
  if (name == "delayed-rmsprop") return OptimizerKind::kDelayedRmsProp;
  throw std::runtime_error("unknown optimizer '" + name + "'");
}

bool optimizer_is_private(OptimizerKind kind) {
  switch (kind) {
    case OptimizerKind::kSgd:
    case OptimizerKind::kRmsProp:
    case OptimizerKind::kDelayedRmsProp:
      return false;
    default:
      return true;
  }
}

void RunConfig::validate() const {
  optimizer_kind();  // throws on unknown optimizer
  if (model != "logreg" && model != "multilabel" && model != "matfac") {
    throw std::runtime_error("unknown model '" + model + "'");
  }
  if (multilabel_loss != "sigmoid" && multilabel_loss != "softmax") {
    throw std::runtime_error("unknown multilabel_loss '" + multilabel_loss +
                             "'");
  }
  if (lr_schedule != "constant" && lr_schedule != "invsqrt") {
    throw std::runtime_error("unknown lr_schedule '" + lr_schedule + "'");
  }
  if (epochs < 1) throw std::runtime_error("epochs must be >= 1");
  if (batch_size < 1) throw std::runtime_error("batch_size must be >= 1");
  if (s1 < 1 || s2 < 1) throw std::runtime_error("s1 and s2 must be >= 1");
  if (!(beta > 0.0 && beta < 1.0)) {
    throw std::runtime_error("beta must be in (0, 1)");
  }
  if (!(eps_adapt > 0.0)) throw std::runtime_error("eps_adapt must be > 0");
  if (sigma < 0.0) throw std::runtime_error("sigma must be >= 0");
  if (!(clip_sgd > 0.0) || !(clip_adaptive > 0.0)) {
    throw std::runtime_error("clip thresholds must be > 0");
  }
  if (!(delta > 0.0 && delta < 1.0)) {
    throw std::runtime_error("delta must be in (0, 1)");
  }
  if (!synth && train_path.empty()) {
    throw std::runtime_error("either synth=1 or train_path is required");
  }
  if (model == "matfac" && !synth && !train_path.empty() &&
      !(split_test_fraction >= 0.0 && split_test_fraction < 1.0)) {
    throw std::runtime_error("split_test_fraction must be in [0, 1)");
  }
  if (sweep_cap < 1) throw std::runtime_error("sweep_cap must be >= 1");
}

std::vector<std::pair<std::string, std::string>> RunConfig::entries() const {
  std::vector<std::pair<std::string, std::string>> out;
  const auto add = [&](const char* key, std::string value) {
    out.emplace_back(key, std::move(value));
  };
  add("model", model);
  add("dim", std::to_string(dim));
  add("classes", std::to_string(classes));
  add("multilabel_loss", multilabel_loss);
  add("num_users", std::to_string(num_users));
  add("num_items", std::to_string(num_items));
  add("embed_dim", std::to_string(embed_dim));
  add("train_path", train_path);
  add("test_path", test_path);
  add("split_test_fraction", format_double(split_test_fraction));
  add("synth", synth ? "1" : "0");
  add("synth_n", std::to_string(synth_n));
  add("synth_d", std::to_string(synth_d));
  add("synth_sparsity", std::to_string(synth_sparsity));
  add("synth_informative", std::to_string(synth_informative));
  add("synth_label_noise", format_double(synth_label_noise));
  add("synth_seed", std::to_string(synth_seed));
  add("synth_zipf", format_double(synth_zipf));
  add("synth_value_scale_min", format_double(synth_value_scale_min));
  add("synth_nonneg", synth_nonneg ? "1" : "0");
  add("synth_tail_start", format_double(synth_tail_start));
  add("optimizer", optimizer);
  add("epochs", std::to_string(epochs));
  add("batch_size", std::to_string(batch_size));
  add("lr_sgd", format_double(lr_sgd));
  add("lr_adaptive", format_double(lr_adaptive));
  add("lr_schedule", lr_schedule);
  add("lr_alpha0", format_double(lr_alpha0));
  add("beta", format_double(beta));
  add("eps_adapt", format_double(eps_adapt));
  add("s1", std::to_string(s1));
  add("s2", std::to_string(s2));
  add("bias_correction", bias_correction ? "1" : "0");
  add("sigma", format_double(sigma));
  add("clip_sgd", format_double(clip_sgd));
  add("clip_adaptive", format_double(clip_adaptive));
  add("delta", format_double(delta));
  add("seed", std::to_string(seed));
  add("eval_every", std::to_string(eval_every));
  add("snapshot_every", std::to_string(snapshot_every));
  add("hs_logging", hs_logging ? "1" : "0");
  add("threads", std::to_string(threads));
  add("out_dir", out_dir);
  add("sweep_cap", std::to_string(sweep_cap));
  return out;
}

std::string RunConfig::echo_ini() const {
  std::ostringstream out;
  for (const auto& [key, value] : entries()) {
    out << key << " = " << value << '\n';
  }
  return out.str();
}

void RunConfig::set(const std::string& key, const std::string& value) {
  if (key == "model") model = value;
  else if (key == "dim") dim = to_int(key, value);
  else if (key == "classes") classes = to_int(key, value);
  else if (key == "multilabel_loss") multilabel_loss = value;
  else if (key == "num_users") num_users = to_int(key, value);
  else if (key == "num_items") num_items = to_int(key, value);
  else if (key == "embed_dim") embed_dim = to_int(key, value);
  else if (key == "train_path") train_path = value;
  else if (key == "test_path") test_path = value;
  else if (key == "split_test_fraction") split_test_fraction = to_double(key, value);
  else if (key == "synth") synth = to_bool(key, value);
  else if (key == "synth_n") synth_n = to_int(key, value);
  else if (key == "synth_d") synth_d = to_int(key, value);
  else if (key == "synth_sparsity") synth_sparsity = to_int(key, value);
  else if (key == "synth_informative") synth_informative = to_int(key, value);
  else if (key == "synth_label_noise") synth_label_noise = to_double(key, value);
  else if (key == "synth_seed") synth_seed = to_uint(key, value);
  else if (key == "synth_zipf") synth_zipf = to_double(key, value);
  else if (key == "synth_value_scale_min") synth_value_scale_min = to_double(key, value);
  else if (key == "synth_nonneg") synth_nonneg = to_bool(key, value);
  else if (key == "synth_tail_start") synth_tail_start = to_double(key, value);
  else if (key == "optimizer") optimizer = value;
  else if (key == "epochs") epochs = to_int(key, value);
  else if (key == "batch_size") batch_size = to_int(key, value);
  else if (key == "lr_sgd") lr_sgd = to_double(key, value);
  else if (key == "lr_adaptive") lr_adaptive = to_double(key, value);
  else if (key == "lr_schedule") lr_schedule = value;
  else if (key == "lr_alpha0") lr_alpha0 = to_double(key, value);
  else if (key == "beta") beta = to_double(key, value);
  else if (key == "eps_adapt") eps_adapt = to_double(key, value);
  else if (key == "s1") s1 = to_int(key, value);
  else if (key == "s2") s2 = to_int(key, value);
  else if (key == "bias_correction") bias_correction = to_bool(key, value);
  else if (key == "sigma") sigma = to_double(key, value);
  else if (key == "clip_sgd") clip_sgd = to_double(key, value);
  else if (key == "clip_adaptive") clip_adaptive = to_double(key, value);
  else if (key == "delta") delta = to_double(key, value);
  else if (key == "seed") seed = to_uint(key, value);
  else if (key == "eval_every") eval_every = to_int(key, value);
  else if (key == "snapshot_every") snapshot_every = to_int(key, value);
  else if (key == "hs_logging") hs_logging = to_bool(key, value);
  else if (key == "threads") threads = static_cast<int>(to_int(key, value));
  else if (key == "out_dir") out_dir = value;
  else if (key == "sweep_cap") sweep_cap = to_int(key, value);
  else throw std::runtime_error("unknown config key '" + key + "'");
}

RunConfig RunConfig::from_entries(
    const std::vector<std::pair<std::string, std::string>>& entries) {
  RunConfig cfg;
  for (const auto& [key, value] : entries) cfg.set(key, value);
  return cfg;
}

RunConfig RunConfig::from_file(const std::string& path,
                               const std::vector<std::string>& overrides) {
  RunConfig cfg = from_entries(parse_ini(path));
  for (const auto& kv : overrides) {
    const auto [key, value] = parse_key_value(kv);
    cfg.set(key, value);
  }
  cfg.validate();
  return cfg;
}

std::pair<std::string, std::string> parse_key_value(const std::string& kv) {
  const auto eq = kv.find('=');
  if (eq == std::string::npos) {
    throw std::runtime_error("expected key=value, got '" + kv + "'");
  }
  return {trim(kv.substr(0, eq)), trim(kv.substr(eq + 1))};
}

std::vector<std::pair<std::string, std::string>> parse_ini(
    const std::string& path) {
  if (!std::filesystem::exists(path)) {
    throw std::runtime_error("config file not found: " + path);
  }
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file: " + path);
  std::vector<std::pair<std::string, std::string>> out;
  std::string line;
  std::int64_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw std::runtime_error(path + ":" + std::to_string(line_no) +
                               ": expected key = value");
    }
    out.emplace_back(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return out;
}

}  // namespace dp2
