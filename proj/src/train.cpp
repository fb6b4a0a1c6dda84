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

#include "dp2/train.hpp"

#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "dp2/reference.hpp"
#include "json.hpp"

namespace dp2 {

namespace fs = std::filesystem;

namespace {

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

ModelSpec build_model_spec(const RunConfig& cfg, const Dataset& train) {
  if (cfg.model == "logreg") {
    const std::int64_t d = cfg.dim > 0 ? cfg.dim : train.dim;
    if (d < 1) throw std::runtime_error("logreg needs dim >= 1");
    return LogRegSpec{d};
  }
  if (cfg.model == "multilabel") {
    const std::int64_t d = cfg.dim > 0 ? cfg.dim : train.dim;
    if (d < 1 || cfg.classes < 2) {
      throw std::runtime_error("multilabel needs dim >= 1 and classes >= 2");
    }
    const MultiLabelLoss loss = cfg.multilabel_loss == "softmax"
                                    ? MultiLabelLoss::kSoftmax
                                    : MultiLabelLoss::kSigmoid;
    return MultiLabelSpec{d, cfg.classes, loss};
  }
  const std::int64_t users =
      cfg.num_users > 0 ? cfg.num_users : train.num_users;
  const std::int64_t items =
      cfg.num_items > 0 ? cfg.num_items : train.num_items;
  const std::int64_t embed = cfg.embed_dim > 0 ? cfg.embed_dim : 100;
  if (users < 1 || items < 1) {
    throw std::runtime_error("matfac needs num_users/num_items >= 1");
  }
  return MatFacSpec{users, items, embed};
}

// Per-run driver that owns every optimizer state variant.
class StepDriver {
 public:
  StepDriver(const RunConfig& cfg, std::int64_t param_dim,
             std::int64_t data_size)
      : kind_(cfg.optimizer_kind()), noise_rng_(cfg.seed, RngStream::kNoise) {
    privacy_.sigma = optimizer_is_private(kind_) ? cfg.sigma : 0.0;
    privacy_.clip_sgd = optimizer_is_private(kind_)
                            ? cfg.clip_sgd
                            : std::numeric_limits<double>::infinity();
    privacy_.clip_adaptive = optimizer_is_private(kind_)
                                 ? cfg.clip_adaptive
                                 : std::numeric_limits<double>::infinity();
    privacy_.batch_size = cfg.batch_size;
    privacy_.dataset_size = data_size;
    privacy_.delta = cfg.delta;
    privacy_.validate();

    opts_.lr.kind = cfg.lr_schedule == "invsqrt" ? LrSchedule::Kind::kInvSqrt
                                                 : LrSchedule::Kind::kConstant;
    opts_.lr.lr_sgd = cfg.lr_sgd;
    opts_.lr.lr_adaptive = cfg.lr_adaptive;
    opts_.lr.alpha0 = cfg.lr_alpha0;
    opts_.lr.validate();
    opts_.bias_correction = cfg.bias_correction;
    opts_.track_clean_grad = cfg.hs_logging;
    opts_.threads = cfg.threads;
    switch (kind_) {
      case OptimizerKind::kDp2AdaGrad: opts_.rule = UpdateRule::kAdaGrad; break;
      case OptimizerKind::kDp2Yogi: opts_.rule = UpdateRule::kYogi; break;
      case OptimizerKind::kDpAdaGrad: opts_.rule = UpdateRule::kAdaGrad; break;
      default: opts_.rule = UpdateRule::kRmsProp; break;
    }

    if (privacy_.is_private()) ledger_.emplace();

    switch (kind_) {
      case OptimizerKind::kDp2RmsProp:
      case OptimizerKind::kDp2AdaGrad:
      case OptimizerKind::kDp2Yogi:
      case OptimizerKind::kAblation2:
        dp2_state_ = DpSquaredState::init(param_dim, cfg.s1, cfg.s2, cfg.beta,
                                          cfg.eps_adapt);
        break;
      case OptimizerKind::kDpRmsProp:
      case OptimizerKind::kDpAdaGrad:
        adaptive_state_ =
            AdaptiveState::init(param_dim, cfg.beta, cfg.eps_adapt);
        break;
      case OptimizerKind::kAblation1:
        ablation1_state_ =
            Ablation1State::init(param_dim, cfg.s1, cfg.beta, cfg.eps_adapt);
        break;
      case OptimizerKind::kRmsProp:
        ref_rmsprop_ = reference::RmsPropState::init(param_dim, cfg.beta,
                                                     cfg.eps_adapt);
        break;
      case OptimizerKind::kDelayedRmsProp:
        ref_delayed_ = reference::DelayedRmsPropState::init(
            param_dim, cfg.s1, cfg.s2, cfg.beta, cfg.eps_adapt);
        break;
      default:
        break;
    }
  }

  StepReport step(ModelParams& params, const Dataset& data,
                  std::span<const std::int64_t> batch) {
    PrivacyLedger* ledger = ledger_ ? &*ledger_ : nullptr;
    switch (kind_) {
      case OptimizerKind::kDpSgd: {
        StepReport r = dp_sgd_step(params, data, batch, privacy_, opts_, t_,
                                   noise_rng_, ledger, ws_);
        ++t_;
        return r;
      }
      case OptimizerKind::kDpRmsProp:
      case OptimizerKind::kDpAdaGrad:
        return dp_adaptive_step(*adaptive_state_, params, data, batch,
                                privacy_, opts_, noise_rng_, ledger, ws_);
      case OptimizerKind::kDp2RmsProp:
      case OptimizerKind::kDp2AdaGrad:
      case OptimizerKind::kDp2Yogi:
        return dp2_step(*dp2_state_, params, data, batch, privacy_, opts_,
                        noise_rng_, ledger, ws_);
      case OptimizerKind::kAblation1:
        return ablation_variant1_step(*ablation1_state_, params, data, batch,
                                      privacy_, opts_, noise_rng_, ledger,
                                      ws_);
      case OptimizerKind::kAblation2:
        return ablation_variant2_step(*dp2_state_, params, data, batch,
                                      privacy_, opts_, noise_rng_, ledger,
                                      ws_);
      case OptimizerKind::kSgd: {
        StepReport r;
        r.precond_l1 =
            reference::sgd_step(params, data, batch,
                                opts_.lr.at(Phase::kSgd, t_));
        r.phase = Phase::kSgd;
        ++t_;
        return r;
      }
      case OptimizerKind::kRmsProp: {
        StepReport r;
        r.precond_l1 = reference::rmsprop_step(
            params, *ref_rmsprop_, data, batch,
            opts_.lr.at(Phase::kAdaptive, t_));
        r.phase = Phase::kAdaptive;
        ++t_;
        return r;
      }
      case OptimizerKind::kDelayedRmsProp: {
        StepReport r;
        r.phase = ref_delayed_->adaptive() ? Phase::kAdaptive : Phase::kSgd;
        r.precond_l1 = reference::delayed_rmsprop_step(
            params, *ref_delayed_, data, batch,
            opts_.lr.at(Phase::kSgd, ref_delayed_->t),
            opts_.lr.at(Phase::kAdaptive, ref_delayed_->t));
        return r;
      }
    }
    throw std::logic_error("unreachable optimizer kind");
  }

  const PrivacyConfig& privacy() const { return privacy_; }
  const PrivacyLedger* ledger() const { return ledger_ ? &*ledger_ : nullptr; }
  // Moment estimate, when the optimizer keeps one.
  const DenseVec* moment() const {
    if (dp2_state_) return &dp2_state_->moment;
    if (adaptive_state_) return &adaptive_state_->moment;
    if (ablation1_state_) return &ablation1_state_->moment;
    if (ref_rmsprop_) return &ref_rmsprop_->moment;
    if (ref_delayed_) return &ref_delayed_->moment;
    return nullptr;
  }
  const DpSquaredState* dp2_state() const {
    return dp2_state_ ? &*dp2_state_ : nullptr;
  }

 private:
  OptimizerKind kind_;
  PrivacyConfig privacy_;
  StepOptions opts_;
  Rng noise_rng_;
  BatchWorkspace ws_;
  std::int64_t t_ = 0;  // for stateless optimizers
  std::optional<PrivacyLedger> ledger_;
  std::optional<DpSquaredState> dp2_state_;
  std::optional<AdaptiveState> adaptive_state_;
  std::optional<Ablation1State> ablation1_state_;
  std::optional<reference::RmsPropState> ref_rmsprop_;
  std::optional<reference::DelayedRmsPropState> ref_delayed_;
};

}  // namespace

std::string metrics_csv_header() {
  return "step,epoch,phase,train_loss,train_metric,test_loss,test_metric,"
         "epsilon,clip_fraction,grad_l2_mean,D_l1,hs_ratio";
}

std::string metrics_csv_row(const MetricsRow& row) {
  std::ostringstream out;
  out << row.step << ',' << row.epoch << ','
      << (row.phase == Phase::kSgd ? "sgd" : "adaptive") << ','
      << format_double(row.train_loss) << ',' << format_double(row.train_metric)
      << ',' << format_double(row.test_loss) << ','
      << format_double(row.test_metric) << ',' << format_double(row.epsilon)
      << ',' << format_double(row.clip_fraction) << ','
      << format_double(row.grad_l2_mean) << ',' << format_double(row.d_l1)
      << ',' << format_double(row.hs_ratio);
  return out.str();
}

std::pair<Dataset, Dataset> build_datasets(const RunConfig& cfg) {
  if (cfg.synth) {
    SynthSpec spec;
    spec.n = cfg.synth_n;
    spec.d = cfg.synth_d;
    spec.sparsity = cfg.synth_sparsity;
    spec.num_informative = cfg.synth_informative;
    spec.label_noise = cfg.synth_label_noise;
    spec.seed = cfg.synth_seed;
    spec.zipf = cfg.synth_zipf;
    spec.value_scale_min = cfg.synth_value_scale_min;
    spec.nonneg_values = cfg.synth_nonneg;
    spec.informative_tail_start = cfg.synth_tail_start;
    return gen_synthetic(spec);
  }
  if (cfg.model == "matfac") {
    Dataset all = load_ratings(cfg.train_path);
    if (!cfg.test_path.empty()) {
      return {std::move(all), load_ratings(cfg.test_path)};
    }
    Rng rng(cfg.synth_seed, RngStream::kSplit);
    return split_dataset(all, cfg.split_test_fraction, rng);
  }
  Dataset train = load_sparse(cfg.train_path, cfg.dim);
  if (cfg.test_path.empty()) {
    throw std::runtime_error("test_path is required for sparse datasets");
  }
  Dataset test = load_sparse(cfg.test_path, train.dim);
  return {std::move(train), std::move(test)};
}

std::string resolve_run_dir(const RunConfig& cfg) {
  if (!cfg.out_dir.empty()) return cfg.out_dir;
  const char* env_root = std::getenv("DP2_OUT_DIR");
  const std::string root = env_root != nullptr ? env_root : "runs";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(fnv1a(cfg.echo_ini())));
  return root + "/run-" + std::string(buf);
}

std::string summary_json(const RunResult& result) {
  nlohmann::ordered_json j;
  for (const auto& [key, value] : result.config.entries()) {
    j["config"][key] = value;
  }
  j["final"]["steps"] = result.steps;
  j["final"]["train_loss"] = result.final_train.loss;
  j["final"]["train_metric"] = result.final_train.metric;
  j["final"]["test_loss"] = result.final_test.loss;
  j["final"]["test_metric"] = result.final_test.metric;
  if (std::isinf(result.final_epsilon)) {
    j["privacy"]["epsilon"] = "non-private";
  } else {
    j["privacy"]["epsilon"] = result.final_epsilon;
  }
  j["privacy"]["delta"] = result.config.delta;
  j["privacy"]["sigma"] = result.config.sigma;
  j["privacy"]["q"] = result.sampling_ratio;
  j["privacy"]["ledger_steps"] = result.ledger_steps;
  j["timing"]["wall_seconds"] = result.wall_seconds;
  if (!result.hs_clean.empty() || !result.hs_noisy.empty()) {
    j["diagnostics"]["hs_clean"] = result.hs_clean;
    j["diagnostics"]["hs_noisy"] = result.hs_noisy;
    j["diagnostics"]["hs_clean_max"] = result.hs_clean_max;
    j["diagnostics"]["hs_noisy_max"] = result.hs_noisy_max;
  }
  if (!result.snapshots.empty()) {
    auto& snaps = j["diagnostics"]["snapshots"];
    snaps = nlohmann::ordered_json::array();
    for (const auto& s : result.snapshots) {
      nlohmann::ordered_json one;
      one["step"] = s.step;
      one["q01"] = s.q01;
      one["q25"] = s.q25;
      one["q50"] = s.q50;
      one["q75"] = s.q75;
      one["q99"] = s.q99;
      one["bin_counts"] = s.bin_counts;
      snaps.push_back(std::move(one));
    }
  }
  if (result.moment_bound) {
    j["diagnostics"]["moment_bound"]["bound"] = result.moment_bound->bound;
    j["diagnostics"]["moment_bound"]["empirical_mean"] =
        result.moment_bound->empirical_mean;
    j["diagnostics"]["moment_bound"]["std_error"] = result.moment_bound->std_error;
    j["diagnostics"]["moment_bound"]["pass"] = result.moment_bound->pass;
  }
  return j.dump(2);
}

RunResult run_train(const RunConfig& cfg) {
  cfg.validate();
  const auto start = std::chrono::steady_clock::now();

  auto [train, test] = build_datasets(cfg);
  const std::int64_t n = train.size();
  if (cfg.batch_size > n) {
    throw std::runtime_error("batch_size exceeds training set size");
  }

  RunConfig resolved = cfg;
  resolved.dim = train.dim;
  resolved.num_users = train.num_users;
  resolved.num_items = train.num_items;
  if (cfg.model == "matfac" && cfg.embed_dim == 0) resolved.embed_dim = 100;

  Rng init_rng(cfg.seed, RngStream::kInit);
  ModelParams params = init_params(build_model_spec(cfg, train), init_rng);

  StepDriver driver(resolved, params.dim(), n);
  BatchSampler sampler(n, cfg.seed);

  const std::int64_t steps_per_epoch =
      (n + cfg.batch_size - 1) / cfg.batch_size;
  const std::int64_t total_steps = cfg.epochs * steps_per_epoch;
  const std::int64_t eval_every =
      cfg.eval_every > 0 ? cfg.eval_every : steps_per_epoch;
  const std::int64_t snapshot_every =
      cfg.snapshot_every > 0 ? cfg.snapshot_every : eval_every;

  RunResult result;
  result.config = resolved;
  result.sampling_ratio =
      static_cast<double>(cfg.batch_size) / static_cast<double>(n);

  std::ofstream csv;
  if (cfg.write_files) {
    result.run_dir = resolve_run_dir(cfg);
    fs::create_directories(result.run_dir);
    std::ofstream cfg_out(result.run_dir + "/config.ini");
    cfg_out << resolved.echo_ini();
    csv.open(result.run_dir + "/metrics.csv");
    if (!csv) throw std::runtime_error("cannot write metrics.csv");
    csv << metrics_csv_header() << '\n' << std::flush;
  }

  HsEstimate hs_clean(params.dim(), cfg.eps_adapt, cfg.s1);
  HsEstimate hs_noisy(params.dim(), cfg.eps_adapt, cfg.s1);
  MomentBoundAccumulator moment_bound;
  bool moment_bound_any = false;

  std::vector<std::int64_t> batch;
  double clip_frac_sum = 0.0;
  double grad_l2_sum = 0.0;
  std::int64_t since_eval = 0;

  for (std::int64_t t = 0; t < total_steps; ++t) {
    sampler.sample(cfg.batch_size, batch);
    const StepReport report = driver.step(params, train, batch);
    clip_frac_sum += report.clip_fraction;
    grad_l2_sum += report.raw_grad_l2_mean;
    ++since_eval;

    if (cfg.hs_logging && !std::isnan(report.clean_grad_l1) &&
        !std::isnan(report.accum_l1_over_s)) {
      hs_clean.update(report.clean_grad_l1, report.accum_l1_over_s);
      hs_noisy.update(report.update_l1, report.accum_l1_over_s);
    }

    const std::int64_t done = t + 1;
    if (done % snapshot_every == 0 || done == total_steps) {
      if (const DenseVec* moment = driver.moment()) {
        result.snapshots.push_back(snapshot_preconditioner(*moment, done));
        moment_bound.add(*moment);
        moment_bound_any = true;
      }
    }
    if (done % eval_every == 0 || done == total_steps) {
      MetricsRow row;
      row.step = done;
      row.epoch = done / steps_per_epoch;
      row.phase = report.phase;
      const EvalResult tr = batch_eval(params, train, cfg.threads);
      const EvalResult te = batch_eval(params, test, cfg.threads);
      row.train_loss = tr.loss;
      row.train_metric = tr.metric;
      row.test_loss = te.loss;
      row.test_metric = te.metric;
      row.epsilon = driver.ledger() != nullptr
                        ? driver.ledger()->epsilon(cfg.delta)
                        : std::numeric_limits<double>::infinity();
      row.clip_fraction = clip_frac_sum / static_cast<double>(since_eval);
      row.grad_l2_mean = grad_l2_sum / static_cast<double>(since_eval);
      row.d_l1 = report.precond_l1;
      row.hs_ratio = cfg.hs_logging && !hs_clean.ratios().empty()
                         ? hs_clean.ratios().back()
                         : std::numeric_limits<double>::quiet_NaN();
      result.rows.push_back(row);
      if (cfg.write_files) {
        csv << metrics_csv_row(row) << '\n' << std::flush;
      }
      clip_frac_sum = 0.0;
      grad_l2_sum = 0.0;
      since_eval = 0;
      if (done == total_steps) {
        result.final_train = tr;
        result.final_test = te;
      }
    }
  }

  result.steps = total_steps;
  result.final_epsilon = driver.ledger() != nullptr
                             ? driver.ledger()->epsilon(cfg.delta)
                             : std::numeric_limits<double>::infinity();
  result.ledger_steps =
      driver.ledger() != nullptr ? driver.ledger()->steps() : 0;
  result.hs_clean = hs_clean.ratios();
  result.hs_noisy = hs_noisy.ratios();
  result.hs_clean_max = hs_clean.max_ratio();
  result.hs_noisy_max = hs_noisy.max_ratio();
  if (moment_bound_any && driver.privacy().is_private() &&
      driver.dp2_state() != nullptr) {
    result.moment_bound = moment_bound.finish(driver.privacy().clip_sgd,
                                  driver.privacy().sigma, cfg.s1,
                                  cfg.batch_size);
  }
  const auto end = std::chrono::steady_clock::now();
  result.wall_seconds =
      std::chrono::duration<double>(end - start).count();
  if (cfg.write_files) {
    std::ofstream summary(result.run_dir + "/summary.json");
    summary << summary_json(result) << '\n';
  }
  return result;
}

std::vector<SweepRow> run_sweep(const RunConfig& base, const SweepSpec& spec) {
  std::vector<std::uint64_t> seeds = spec.seeds;
  if (seeds.empty()) seeds.push_back(base.seed);
  std::int64_t combos = 1;
  for (const auto& [key, values] : spec.grid) {
    if (values.empty()) throw std::runtime_error("empty grid axis: " + key);
    combos *= static_cast<std::int64_t>(values.size());
  }
  const std::int64_t total =
      combos * static_cast<std::int64_t>(seeds.size());
  if (total > base.sweep_cap) {
    throw std::runtime_error("sweep size " + std::to_string(total) +
                             " exceeds sweep_cap " +
                             std::to_string(base.sweep_cap));
  }

  const std::string sweep_root =
      base.write_files ? resolve_run_dir(base) : std::string();
  std::vector<SweepRow> rows;
  for (std::int64_t combo = 0; combo < combos; ++combo) {
    std::vector<std::pair<std::string, std::string>> assignment;
    std::int64_t rem = combo;
    for (const auto& [key, values] : spec.grid) {
      const auto k = static_cast<std::size_t>(
          rem % static_cast<std::int64_t>(values.size()));
      rem /= static_cast<std::int64_t>(values.size());
      assignment.emplace_back(key, values[k]);
    }
    for (const std::uint64_t seed : seeds) {
      RunConfig cfg = base;
      for (const auto& [key, value] : assignment) cfg.set(key, value);
      cfg.seed = seed;
      if (base.write_files) {
        std::string leaf;
        for (const auto& [key, value] : assignment) {
          leaf += key + "=" + value + ",";
        }
        leaf += "seed=" + std::to_string(seed);
        cfg.out_dir = sweep_root + "/" + leaf;
      }
      cfg.validate();
      const RunResult result = run_train(cfg);
      SweepRow row;
      row.values = assignment;
      row.seed = seed;
      row.train_loss = result.final_train.loss;
      row.train_metric = result.final_train.metric;
      row.test_loss = result.final_test.loss;
      row.test_metric = result.final_test.metric;
      row.epsilon = result.final_epsilon;
      row.run_dir = result.run_dir;
      rows.push_back(std::move(row));
    }
  }

  if (base.write_files) {
    fs::create_directories(sweep_root);
    std::ofstream out(sweep_root + "/sweep.csv");
    for (const auto& [key, values] : spec.grid) out << key << ',';
    out << "seed,train_loss,train_metric,test_loss,test_metric,epsilon,"
           "run_dir\n";
    for (const auto& row : rows) {
      for (const auto& [key, value] : row.values) out << value << ',';
      out << row.seed << ',' << format_double(row.train_loss) << ','
          << format_double(row.train_metric) << ','
          << format_double(row.test_loss) << ','
          << format_double(row.test_metric) << ','
          << format_double(row.epsilon) << ',' << row.run_dir << '\n';
    }
    std::ofstream agg(sweep_root + "/sweep_agg.csv");
    for (const auto& [key, values] : spec.grid) agg << key << ',';
    agg << "seeds,train_loss_mean,train_loss_std,test_metric_mean,"
           "test_metric_std\n";
    for (const auto& a : aggregate_sweep(rows)) {
      for (const auto& [key, value] : a.values) agg << value << ',';
      agg << a.seeds << ',' << format_double(a.train_loss_mean) << ','
          << format_double(a.train_loss_std) << ','
          << format_double(a.test_metric_mean) << ','
          << format_double(a.test_metric_std) << '\n';
    }
  }
  return rows;
}

std::vector<SweepAggregate> aggregate_sweep(const std::vector<SweepRow>& rows) {
  std::vector<SweepAggregate> out;
  const auto key_of = [](const SweepRow& row) {
    std::string key;
    for (const auto& [k, v] : row.values) key += k + "=" + v + ";";
    return key;
  };
  std::vector<std::string> seen;
  for (const auto& row : rows) {
    const std::string key = key_of(row);
    if (std::find(seen.begin(), seen.end(), key) != seen.end()) continue;
    seen.push_back(key);
    std::vector<double> losses, metrics;
    for (const auto& other : rows) {
      if (key_of(other) == key) {
        losses.push_back(other.train_loss);
        metrics.push_back(other.test_metric);
      }
    }
    const auto stats = [](const std::vector<double>& v) {
      const double n = static_cast<double>(v.size());
      double mean = 0.0;
      for (const double x : v) mean += x;
      mean /= n;
      double ss = 0.0;
      for (const double x : v) ss += (x - mean) * (x - mean);
      const double sd = v.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
      return std::pair(mean, sd);
    };
    SweepAggregate agg;
    agg.values = row.values;
    agg.seeds = static_cast<std::int64_t>(losses.size());
    std::tie(agg.train_loss_mean, agg.train_loss_std) = stats(losses);
    std::tie(agg.test_metric_mean, agg.test_metric_std) = stats(metrics);
    out.push_back(std::move(agg));
  }
  return out;
}

}  // namespace dp2
