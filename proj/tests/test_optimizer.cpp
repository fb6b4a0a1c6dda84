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
#include <numeric>
#include <vector>

#include "doctest.h"
#include "dp2/data.hpp"
#include "dp2/optimizer.hpp"
#include "dp2/reference.hpp"

using namespace dp2;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

Dataset synth(std::int64_t n, std::int64_t d, std::uint64_t seed) {
  SynthSpec spec{n, d, std::min<std::int64_t>(5, d), std::max<std::int64_t>(d / 4, 1), 0.0, seed};
  return gen_synthetic(spec).first;
}

PrivacyConfig nonprivate(std::int64_t b, std::int64_t n) {
  PrivacyConfig privacy;
  privacy.sigma = 0.0;
  privacy.clip_sgd = kInf;
  privacy.clip_adaptive = kInf;
  privacy.batch_size = b;
  privacy.dataset_size = n;
  return privacy;
}

double max_abs_diff(const DenseVec& a, const DenseVec& b) {
  double m = 0.0;
  for (std::int64_t j = 0; j < a.dim(); ++j) {
    m = std::max(m, std::fabs(a[j] - b[j]));
  }
  return m;
}

}  // namespace

TEST_CASE("phase schedule: s1 sgd reports then s2 adaptive per cycle") {
  const Dataset data = synth(40, 10, 1);
  Rng rng(2);
  ModelParams params = init_params(LogRegSpec{10}, rng);
  auto state = DpSquaredState::init(params.dim(), 3, 2, 0.9, 1e-3);
  const PrivacyConfig privacy = nonprivate(8, data.size());
  StepOptions opts;
  opts.lr.lr_sgd = 0.05;
  opts.lr.lr_adaptive = 0.05;
  BatchWorkspace ws;
  BatchSampler sampler(data.size(), 3);
  std::vector<std::int64_t> batch;
  Rng noise(1, RngStream::kNoise);
  for (int t = 0; t < 20; ++t) {
    sampler.sample(8, batch);
    const StepReport r =
        dp2_step(state, params, data, batch, privacy, opts, noise, nullptr, ws);
    const bool expect_sgd = t % 5 < 3;
    CHECK(r.phase == (expect_sgd ? Phase::kSgd : Phase::kAdaptive));
  }
}

TEST_CASE("moment update count is floor((T + s2) / (s1 + s2))") {
  const Dataset data = synth(30, 8, 2);
  const PrivacyConfig privacy = nonprivate(5, data.size());
  StepOptions opts;
  opts.lr.lr_sgd = 0.01;
  opts.lr.lr_adaptive = 0.01;
  for (std::int64_t total = 1; total <= 22; ++total) {
    Rng rng(4);
    ModelParams params = init_params(LogRegSpec{8}, rng);
    auto state = DpSquaredState::init(params.dim(), 3, 2, 0.9, 1e-3);
    BatchWorkspace ws;
    BatchSampler sampler(data.size(), 5);
    Rng noise(4, RngStream::kNoise);
    std::vector<std::int64_t> batch;
    for (std::int64_t t = 0; t < total; ++t) {
      sampler.sample(5, batch);
      dp2_step(state, params, data, batch, privacy, opts, noise, nullptr, ws);
    }
    CHECK(state.moment_updates == (total + 2) / 5);
  }
}

TEST_CASE("accumulator resets only at cycle boundaries") {
  const Dataset data = synth(30, 8, 3);
  Rng rng(5);
  ModelParams params = init_params(LogRegSpec{8}, rng);
  auto state = DpSquaredState::init(params.dim(), 2, 3, 0.9, 1e-3);
  const PrivacyConfig privacy = nonprivate(6, data.size());
  StepOptions opts;
  opts.lr.lr_sgd = 0.01;
  opts.lr.lr_adaptive = 0.01;
  BatchWorkspace ws;
  BatchSampler sampler(data.size(), 6);
  Rng noise(5, RngStream::kNoise);
  std::vector<std::int64_t> batch;
  for (std::int64_t t = 0; t < 15; ++t) {
    sampler.sample(6, batch);
    const double before = l1_norm(state.accum);
    const StepReport r =
        dp2_step(state, params, data, batch, privacy, opts, noise, nullptr, ws);
    const std::int64_t boundary = state.t % state.cycle();
    if (boundary == state.s1 || boundary == 0) {
      CHECK(l1_norm(state.accum) == 0.0);
    } else {
      // strictly grew: the noisy gradient was accumulated and kept
      CHECK(l1_norm(state.accum) > 0.0);
      CHECK(l1_norm(state.accum) >= before - 1e-12);
    }
    CHECK(r.moment_updated == (boundary == state.s1));
  }
}

TEST_CASE("first s1 steps of dp2 equal dp-sgd exactly") {
  const Dataset data = synth(60, 12, 4);
  Rng rng(7);
  const ModelParams start = init_params(LogRegSpec{12}, rng);
  PrivacyConfig privacy = nonprivate(10, data.size());
  privacy.sigma = 1.2;
  privacy.clip_sgd = 0.4;
  privacy.clip_adaptive = 3.0;
  StepOptions opts;
  opts.lr.lr_sgd = 0.1;
  opts.lr.lr_adaptive = 0.02;

  ModelParams via_dp2 = start;
  auto state = DpSquaredState::init(start.dim(), 4, 4, 0.9, 1e-5);
  BatchWorkspace ws1, ws2;
  BatchSampler sampler1(data.size(), 11), sampler2(data.size(), 11);
  Rng noise1(11, RngStream::kNoise), noise2(11, RngStream::kNoise);
  ModelParams via_sgd = start;
  std::vector<std::int64_t> batch;
  for (std::int64_t t = 0; t < 4; ++t) {
    sampler1.sample(10, batch);
    dp2_step(state, via_dp2, data, batch, privacy, opts, noise1, nullptr, ws1);
    sampler2.sample(10, batch);
    dp_sgd_step(via_sgd, data, batch, privacy, opts, t, noise2, nullptr, ws2);
    CHECK(via_dp2.flat == via_sgd.flat);
  }
}

TEST_CASE("non-private dp2 reduces to the delayed-preconditioner reference") {
  const Dataset data = synth(200, 25, 5);
  Rng rng(9);
  const ModelParams start = init_params(LogRegSpec{25}, rng);
  const PrivacyConfig privacy = nonprivate(16, data.size());
  StepOptions opts;
  opts.lr.lr_sgd = 0.3;
  opts.lr.lr_adaptive = 0.05;
  opts.threads = 1;

  ModelParams engine = start;
  auto state = DpSquaredState::init(start.dim(), 5, 5, 0.9, 1e-4);
  BatchWorkspace ws;
  Rng noise(13, RngStream::kNoise);

  ModelParams ref = start;
  auto ref_state =
      reference::DelayedRmsPropState::init(start.dim(), 5, 5, 0.9, 1e-4);

  BatchSampler sampler1(data.size(), 21), sampler2(data.size(), 21);
  std::vector<std::int64_t> batch;
  for (int t = 0; t < 120; ++t) {
    sampler1.sample(16, batch);
    dp2_step(state, engine, data, batch, privacy, opts, noise, nullptr, ws);
    sampler2.sample(16, batch);
    reference::delayed_rmsprop_step(ref, ref_state, data, batch, 0.3, 0.05);
    CHECK(max_abs_diff(engine.flat, ref.flat) <= 1e-12);
  }
}

TEST_CASE("non-private dp-sgd reduces to plain sgd") {
  const Dataset data = synth(100, 15, 6);
  Rng rng(10);
  const ModelParams start = init_params(LogRegSpec{15}, rng);
  const PrivacyConfig privacy = nonprivate(8, data.size());
  StepOptions opts;
  opts.lr.lr_sgd = 0.25;
  opts.threads = 1;
  ModelParams engine = start, ref = start;
  BatchWorkspace ws;
  Rng noise(1, RngStream::kNoise);
  BatchSampler sampler1(data.size(), 31), sampler2(data.size(), 31);
  std::vector<std::int64_t> batch;
  for (std::int64_t t = 0; t < 80; ++t) {
    sampler1.sample(8, batch);
    dp_sgd_step(engine, data, batch, privacy, opts, t, noise, nullptr, ws);
    sampler2.sample(8, batch);
    reference::sgd_step(ref, data, batch, 0.25);
    CHECK(max_abs_diff(engine.flat, ref.flat) <= 1e-12);
  }
}

TEST_CASE("non-private dp-adaptive reduces to textbook rmsprop") {
  const Dataset data = synth(100, 15, 7);
  Rng rng(12);
  const ModelParams start = init_params(LogRegSpec{15}, rng);
  const PrivacyConfig privacy = nonprivate(8, data.size());
  StepOptions opts;
  opts.lr.lr_adaptive = 0.05;
  opts.threads = 1;
  ModelParams engine = start, ref = start;
  auto state = AdaptiveState::init(start.dim(), 0.9, 1e-4);
  auto ref_state = reference::RmsPropState::init(start.dim(), 0.9, 1e-4);
  BatchWorkspace ws;
  Rng noise(1, RngStream::kNoise);
  BatchSampler sampler1(data.size(), 33), sampler2(data.size(), 33);
  std::vector<std::int64_t> batch;
  for (int t = 0; t < 80; ++t) {
    sampler1.sample(8, batch);
    dp_adaptive_step(state, engine, data, batch, privacy, opts, noise, nullptr,
                     ws);
    sampler2.sample(8, batch);
    reference::rmsprop_step(ref, ref_state, data, batch, 0.05);
    CHECK(max_abs_diff(engine.flat, ref.flat) <= 1e-12);
  }
}

// Independent re-simulation of the engine on a two-parameter logistic
// model with one example, replaying the same seeded noise sequence.
TEST_CASE("six-step trace oracle with clipping and noise") {
  Dataset data;
  data.kind = DataKind::kSparse;
  data.dim = 1;
  SparseExample ex;
  ex.features.dim = 1;
  ex.features.push(0, 1.5);
  ex.labels.push_back(1);
  data.examples.push_back(ex);

  PrivacyConfig privacy;
  privacy.sigma = 0.8;
  privacy.clip_sgd = 0.3;
  privacy.clip_adaptive = 4.0;
  privacy.batch_size = 1;
  privacy.dataset_size = 1;
  StepOptions opts;
  opts.lr.lr_sgd = 0.1;
  opts.lr.lr_adaptive = 0.05;
  opts.threads = 1;

  ModelParams params{LogRegSpec{1}, DenseVec(2, 0.0)};
  auto state = DpSquaredState::init(2, 2, 2, 0.9, 0.1);
  BatchWorkspace ws;
  Rng noise(77, RngStream::kNoise);
  const std::vector<std::int64_t> batch = {0};

  // trace state
  double w0 = 0.0, w1 = 0.0, v0 = 0.0, v1 = 0.0, G0 = 0.0, G1 = 0.0;
  Rng trace_noise(77, RngStream::kNoise);

  for (std::int64_t t = 0; t < 6; ++t) {
    dp2_step(state, params, data, batch, privacy, opts, noise, nullptr, ws);

    const bool sgd_phase = t % 4 < 2;
    const double d0 = sgd_phase ? 1.0 : std::sqrt(v0) + 0.1;
    const double d1 = sgd_phase ? 1.0 : std::sqrt(v1) + 0.1;
    const double threshold = sgd_phase ? 0.3 : 4.0;
    const double z = w0 * 1.5 + w1;
    const double resid = 1.0 / (1.0 + std::exp(-z)) - 1.0;
    double u0 = resid * 1.5 / d0;
    double u1 = resid / d1;
    const double norm = std::sqrt(u0 * u0 + u1 * u1);
    if (norm > threshold) {
      u0 *= threshold / norm;
      u1 *= threshold / norm;
    }
    u0 += 0.8 * threshold * trace_noise.normal();
    u1 += 0.8 * threshold * trace_noise.normal();
    G0 += u0;
    G1 += u1;
    const double lr = sgd_phase ? 0.1 : 0.05;
    w0 -= lr * u0;
    w1 -= lr * u1;
    if ((t + 1) % 4 == 2) {
      v0 = 0.9 * v0 + 0.1 * (G0 / 2.0) * (G0 / 2.0);
      v1 = 0.9 * v1 + 0.1 * (G1 / 2.0) * (G1 / 2.0);
      G0 = G1 = 0.0;
    } else if ((t + 1) % 4 == 0) {
      G0 = G1 = 0.0;
    }

    CHECK(params.flat[0] == doctest::Approx(w0).epsilon(1e-10));
    CHECK(params.flat[1] == doctest::Approx(w1).epsilon(1e-10));
    CHECK(state.moment[0] == doctest::Approx(v0).epsilon(1e-10));
    CHECK(state.moment[1] == doctest::Approx(v1).epsilon(1e-10));
  }
}

TEST_CASE("dp-sgd clipping caps the pre-noise batch sum at b*C") {
  const Dataset data = synth(50, 10, 8);
  Rng rng(15);
  ModelParams params = init_params(LogRegSpec{10}, rng);
  for (auto& w : params.flat) w = rng.normal() * 5.0;  // big gradients
  PrivacyConfig privacy = nonprivate(10, data.size());
  privacy.clip_sgd = 0.05;
  StepOptions opts;
  opts.lr.lr_sgd = 1.0;
  opts.threads = 1;
  const DenseVec before = params.flat;
  BatchWorkspace ws;
  Rng noise(1, RngStream::kNoise);
  std::vector<std::int64_t> batch(10);
  std::iota(batch.begin(), batch.end(), 0);
  dp_sgd_step(params, data, batch, privacy, opts, 0, noise, nullptr, ws);
  // update = lr * (sum / b); sum norm <= b * C
  DenseVec delta(params.dim(), 0.0);
  for (std::int64_t j = 0; j < params.dim(); ++j) {
    delta[j] = before[j] - params.flat[j];
  }
  CHECK(l2_norm(delta) <= 1.0 * 0.05 + 1e-12);
}

TEST_CASE("huge adaptivity constant makes dp-rmsprop follow sgd direction") {
  const Dataset data = synth(80, 12, 9);
  Rng rng(16);
  const ModelParams start = init_params(LogRegSpec{12}, rng);
  const PrivacyConfig privacy = nonprivate(16, data.size());
  StepOptions opts;
  opts.lr.lr_sgd = 1.0;
  opts.lr.lr_adaptive = 1.0;
  opts.threads = 1;

  ModelParams adaptive = start;
  auto state = AdaptiveState::init(start.dim(), 0.9, 1e6);
  BatchWorkspace ws;
  Rng noise(1, RngStream::kNoise);
  std::vector<std::int64_t> batch(16);
  std::iota(batch.begin(), batch.end(), 0);
  dp_adaptive_step(state, adaptive, data, batch, privacy, opts, noise, nullptr,
                   ws);
  ModelParams sgd = start;
  reference::sgd_step(sgd, data, batch, 1.0);

  double dot_ab = 0.0, na = 0.0, nb = 0.0;
  for (std::int64_t j = 0; j < start.dim(); ++j) {
    const double a = adaptive.flat[j] - start.flat[j];
    const double b = sgd.flat[j] - start.flat[j];
    dot_ab += a * b;
    na += a * a;
    nb += b * b;
  }
  CHECK(dot_ab / std::sqrt(na * nb) == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("adagrad moment never decreases") {
  const Dataset data = synth(60, 10, 10);
  Rng rng(17);
  ModelParams params = init_params(LogRegSpec{10}, rng);
  auto state = AdaptiveState::init(params.dim(), 0.9, 1e-3);
  PrivacyConfig privacy = nonprivate(8, data.size());
  privacy.sigma = 0.7;
  privacy.clip_sgd = 0.5;
  StepOptions opts;
  opts.rule = UpdateRule::kAdaGrad;
  opts.lr.lr_adaptive = 0.05;
  BatchWorkspace ws;
  Rng noise(3, RngStream::kNoise);
  BatchSampler sampler(data.size(), 8);
  std::vector<std::int64_t> batch;
  DenseVec prev = state.moment;
  for (int t = 0; t < 30; ++t) {
    sampler.sample(8, batch);
    dp_adaptive_step(state, params, data, batch, privacy, opts, noise, nullptr,
                     ws);
    for (std::int64_t j = 0; j < prev.dim(); ++j) {
      CHECK(state.moment[j] >= prev[j]);
    }
    prev = state.moment;
  }
}

TEST_CASE("ablation1 ledger cost is 2T - ceil(T/s)") {
  const Dataset data = synth(60, 10, 11);
  Rng rng(19);
  ModelParams params = init_params(LogRegSpec{10}, rng);
  auto state = Ablation1State::init(params.dim(), 3, 0.9, 1e-3);
  PrivacyConfig privacy = nonprivate(6, data.size());
  privacy.sigma = 1.0;
  privacy.clip_sgd = 0.5;
  privacy.clip_adaptive = 2.0;
  StepOptions opts;
  opts.lr.lr_sgd = 0.05;
  opts.lr.lr_adaptive = 0.05;
  BatchWorkspace ws;
  Rng noise(5, RngStream::kNoise);
  PrivacyLedger ledger;
  BatchSampler sampler(data.size(), 9);
  std::vector<std::int64_t> batch;
  const std::int64_t total = 7;
  for (std::int64_t t = 0; t < total; ++t) {
    sampler.sample(6, batch);
    ablation_variant1_step(state, params, data, batch, privacy, opts, noise,
                           &ledger, ws);
  }
  CHECK(ledger.steps() == 2 * total - (total + 2) / 3);  // 2T - ceil(T/s)
}

TEST_CASE("ablation1 one-cycle trace oracle") {
  Dataset data;
  data.kind = DataKind::kSparse;
  data.dim = 1;
  SparseExample ex;
  ex.features.dim = 1;
  ex.features.push(0, 2.0);
  ex.labels.push_back(0);
  data.examples.push_back(ex);

  PrivacyConfig privacy;
  privacy.sigma = 0.5;
  privacy.clip_sgd = 0.2;
  privacy.clip_adaptive = 1.0;
  privacy.batch_size = 1;
  privacy.dataset_size = 1;
  StepOptions opts;
  opts.lr.lr_sgd = 0.1;
  opts.lr.lr_adaptive = 0.05;
  opts.threads = 1;

  ModelParams params{LogRegSpec{1}, DenseVec(2, 0.0)};
  auto state = Ablation1State::init(2, 2, 0.9, 0.1);
  BatchWorkspace ws;
  Rng noise(91, RngStream::kNoise);
  const std::vector<std::int64_t> batch = {0};

  double w0 = 0.0, w1 = 0.0, v0 = 0.0, v1 = 0.0, G0 = 0.0, G1 = 0.0;
  Rng trace_noise(91, RngStream::kNoise);
  for (std::int64_t t = 0; t < 4; ++t) {
    ablation_variant1_step(state, params, data, batch, privacy, opts, noise,
                           nullptr, ws);

    const double z = w0 * 2.0 + w1;
    const double resid = 1.0 / (1.0 + std::exp(-z));  // label 0
    // raw query, clip 0.2
    double r0 = resid * 2.0, r1 = resid;
    const double rnorm = std::sqrt(r0 * r0 + r1 * r1);
    if (rnorm > 0.2) {
      r0 *= 0.2 / rnorm;
      r1 *= 0.2 / rnorm;
    }
    r0 += 0.5 * 0.2 * trace_noise.normal();
    r1 += 0.5 * 0.2 * trace_noise.normal();
    G0 += r0;
    G1 += r1;
    double f0, f1, lr;
    if (t % 2 == 0) {
      v0 = 0.9 * v0 + 0.1 * (G0 / 2.0) * (G0 / 2.0);
      v1 = 0.9 * v1 + 0.1 * (G1 / 2.0) * (G1 / 2.0);
      G0 = G1 = 0.0;
      f0 = r0;
      f1 = r1;
      lr = 0.1;
    } else {
      const double d0 = std::sqrt(v0) + 0.1, d1 = std::sqrt(v1) + 0.1;
      double p0 = resid * 2.0 / d0, p1 = resid / d1;
      const double pnorm = std::sqrt(p0 * p0 + p1 * p1);
      if (pnorm > 1.0) {
        p0 *= 1.0 / pnorm;
        p1 *= 1.0 / pnorm;
      }
      p0 += 0.5 * 1.0 * trace_noise.normal();
      p1 += 0.5 * 1.0 * trace_noise.normal();
      f0 = p0;
      f1 = p1;
      lr = 0.05;
    }
    w0 -= lr * f0;
    w1 -= lr * f1;

    CHECK(params.flat[0] == doctest::Approx(w0).epsilon(1e-10));
    CHECK(params.flat[1] == doctest::Approx(w1).epsilon(1e-10));
    CHECK(state.moment[0] == doctest::Approx(v0).epsilon(1e-10));
    CHECK(state.moment[1] == doctest::Approx(v1).epsilon(1e-10));
  }
}

TEST_CASE("ablation2 equals dp2 when noise and clipping are off") {
  const Dataset data = synth(120, 20, 12);
  Rng rng(21);
  const ModelParams start = init_params(LogRegSpec{20}, rng);
  const PrivacyConfig privacy = nonprivate(12, data.size());
  StepOptions opts;
  opts.lr.lr_sgd = 0.2;
  opts.lr.lr_adaptive = 0.05;
  opts.threads = 1;

  ModelParams a = start, b = start;
  auto state_a = DpSquaredState::init(start.dim(), 4, 4, 0.9, 1e-4);
  auto state_b = DpSquaredState::init(start.dim(), 4, 4, 0.9, 1e-4);
  BatchWorkspace ws_a, ws_b;
  Rng noise_a(1, RngStream::kNoise), noise_b(1, RngStream::kNoise);
  BatchSampler sampler_a(data.size(), 44), sampler_b(data.size(), 44);
  std::vector<std::int64_t> batch;
  for (int t = 0; t < 40; ++t) {
    sampler_a.sample(12, batch);
    dp2_step(state_a, a, data, batch, privacy, opts, noise_a, nullptr, ws_a);
    sampler_b.sample(12, batch);
    ablation_variant2_step(state_b, b, data, batch, privacy, opts, noise_b,
                           nullptr, ws_b);
    CHECK(max_abs_diff(a.flat, b.flat) <= 1e-12);
  }
}

TEST_CASE("noise-before-preconditioning scales noise by 1/D per coordinate") {
  // Unit-level form of the variant-2 release with a zero clean sum:
  // g = noise/b / D, so std per coordinate is sigma*C/(b*D_j).
  const double sigma = 1.0, threshold = 0.5;
  const std::int64_t b = 4, trials = 40000;
  const DenseVec precond({0.5, 2.0});
  Rng rng(47);
  DenseVec sum_sq(2, 0.0);
  for (std::int64_t i = 0; i < trials; ++i) {
    DenseVec g(2, 0.0);
    gaussian_mechanism_inplace(g, sigma, threshold, rng);
    scale_inplace(g, 1.0 / static_cast<double>(b));
    for (std::int64_t j = 0; j < 2; ++j) {
      g[j] /= precond[j];
      sum_sq[j] += g[j] * g[j];
    }
  }
  for (std::int64_t j = 0; j < 2; ++j) {
    const double sd = std::sqrt(sum_sq[j] / static_cast<double>(trials));
    const double expected =
        sigma * threshold / (static_cast<double>(b) * precond[j]);
    CHECK(sd == doctest::Approx(expected).epsilon(0.05));
  }
  // small-D coordinates receive amplified noise
  CHECK(sum_sq[0] > sum_sq[1]);
}

TEST_CASE("bias corrected moment") {
  const DenseVec accum({2.0, -4.0, 0.0});
  SUBCASE("sigma=0 leaves the square unchanged") {
    const DenseVec m = bias_corrected_moment(accum, 2, 0.0, 1.0, 8);
    CHECK(m[0] == doctest::Approx(1.0));
    CHECK(m[1] == doctest::Approx(4.0));
    CHECK(m[2] == 0.0);
  }
  SUBCASE("zero accumulator clamps at zero") {
    const DenseVec m =
        bias_corrected_moment(DenseVec(3, 0.0), 4, 2.0, 1.0, 8);
    for (double v : m) CHECK(v == 0.0);
  }
  SUBCASE("monte carlo expectation recovers the clean square within 2%") {
    // clean signal well above the averaged noise scale so the zero clamp
    // almost never engages
    const double sigma = 1.0, threshold = 1.0;
    const std::int64_t s = 4, b = 8, trials = 100000;
    const double clean_mean = 0.5;
    Rng rng(53);
    double acc_corrected = 0.0;
    for (std::int64_t i = 0; i < trials; ++i) {
      double accum_j = 0.0;
      for (std::int64_t k = 0; k < s; ++k) {
        accum_j += clean_mean + sigma * threshold * rng.normal() /
                                    static_cast<double>(b);
      }
      const DenseVec corrected = bias_corrected_moment(
          DenseVec({accum_j}), s, sigma, threshold, b);
      acc_corrected += corrected[0];
    }
    const double mean = acc_corrected / static_cast<double>(trials);
    CHECK(mean == doctest::Approx(clean_mean * clean_mean).epsilon(0.02));
  }
}

TEST_CASE("ledger parity: dp2 and dp-sgd spend identical epsilon") {
  const Dataset data = synth(128, 10, 13);
  Rng rng(23);
  PrivacyConfig privacy;
  privacy.sigma = 1.0;
  privacy.clip_sgd = 0.5;
  privacy.clip_adaptive = 5.0;
  privacy.batch_size = 16;
  privacy.dataset_size = data.size();
  StepOptions opts;
  opts.lr.lr_sgd = 0.1;
  opts.lr.lr_adaptive = 0.1;

  PrivacyLedger ledger_dp2, ledger_sgd;
  ModelParams params_a = init_params(LogRegSpec{10}, rng);
  ModelParams params_b = params_a;
  auto state = DpSquaredState::init(params_a.dim(), 3, 3, 0.9, 1e-5);
  BatchWorkspace ws;
  Rng noise_a(2, RngStream::kNoise), noise_b(2, RngStream::kNoise);
  BatchSampler sampler(data.size(), 2);
  std::vector<std::int64_t> batch;
  for (std::int64_t t = 0; t < 50; ++t) {
    sampler.sample(16, batch);
    dp2_step(state, params_a, data, batch, privacy, opts, noise_a,
             &ledger_dp2, ws);
    dp_sgd_step(params_b, data, batch, privacy, opts, t, noise_b, &ledger_sgd,
                ws);
  }
  CHECK(ledger_dp2.steps() == ledger_sgd.steps());
  CHECK(ledger_dp2.epsilon(1e-5) == ledger_sgd.epsilon(1e-5));
}

TEST_CASE("yogi moment stays nonnegative") {
  const Dataset data = synth(60, 10, 14);
  Rng rng(29);
  ModelParams params = init_params(LogRegSpec{10}, rng);
  auto state = DpSquaredState::init(params.dim(), 2, 2, 0.9, 1e-3);
  PrivacyConfig privacy = nonprivate(8, data.size());
  privacy.sigma = 1.0;
  privacy.clip_sgd = 0.5;
  privacy.clip_adaptive = 2.0;
  StepOptions opts;
  opts.rule = UpdateRule::kYogi;
  opts.lr.lr_sgd = 0.05;
  opts.lr.lr_adaptive = 0.05;
  BatchWorkspace ws;
  Rng noise(7, RngStream::kNoise);
  BatchSampler sampler(data.size(), 77);
  std::vector<std::int64_t> batch;
  for (int t = 0; t < 40; ++t) {
    sampler.sample(8, batch);
    dp2_step(state, params, data, batch, privacy, opts, noise, nullptr, ws);
    for (std::int64_t j = 0; j < state.moment.dim(); ++j) {
      CHECK(state.moment[j] >= 0.0);
    }
  }
}

TEST_CASE("invsqrt schedule decays like 1/sqrt(t+1)") {
  LrSchedule lr;
  lr.kind = LrSchedule::Kind::kInvSqrt;
  lr.alpha0 = 2.0;
  CHECK(lr.at(Phase::kSgd, 0) == doctest::Approx(2.0));
  CHECK(lr.at(Phase::kAdaptive, 3) == doctest::Approx(1.0));
  CHECK(lr.at(Phase::kSgd, 99) == doctest::Approx(0.2));
}
