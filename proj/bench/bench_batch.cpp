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

// Times the serial batch kernels against the OpenMP ones on a bag-of-words
// style workload and on full-dataset evaluation.

#include <chrono>
#include <cstdio>
#include <numeric>
#include <vector>

#include "dp2/batch.hpp"
#include "dp2/data.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

using namespace dp2;

namespace {

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                       start)
      .count();
}

}  // namespace

int main() {
  const SynthSpec spec{20000, 20000, 40, 2000, 0.0, 1};
  const Dataset data = gen_synthetic(spec).first;
  Rng rng(2);
  ModelParams params = init_params(LogRegSpec{spec.d}, rng);
  for (auto& w : params.flat) w = rng.normal() * 0.2;

  const std::int64_t batch_size = 512;
  std::vector<std::int64_t> batch(batch_size);
  std::iota(batch.begin(), batch.end(), 0);
  const ClipTask task{nullptr, 0.5};

  int max_threads = 1;
#ifdef _OPENMP
  max_threads = omp_get_max_threads();
#endif
  std::printf("batch gradient kernel: b=%lld d=%lld, %d repetitions\n",
              static_cast<long long>(batch_size),
              static_cast<long long>(spec.d), 200);

  BatchStats stats;
  auto start = std::chrono::steady_clock::now();
  for (int rep = 0; rep < 200; ++rep) {
    accumulate_clipped_serial(params, data, batch, std::span(&task, 1), false,
                              stats);
  }
  const double serial_s = seconds_since(start);
  std::printf("  serial          %8.3f ms/step\n", serial_s * 1000 / 200);

  for (int threads = 2; threads <= max_threads; threads *= 2) {
    BatchWorkspace ws;
    start = std::chrono::steady_clock::now();
    for (int rep = 0; rep < 200; ++rep) {
      accumulate_clipped(params, data, batch, std::span(&task, 1), false,
                         threads, ws, stats);
    }
    const double par_s = seconds_since(start);
    std::printf("  openmp %d threads %8.3f ms/step  (%.2fx)\n", threads,
                par_s * 1000 / 200, serial_s / par_s);
  }

  // Denser per-example gradients: one weight row per class.
  const SynthSpec ml_spec{2000, 2000, 40, 200, 0.0, 3};
  Dataset ml_data = gen_synthetic(ml_spec).first;
  for (auto& ex : ml_data.examples) {
    ex.labels.assign({1, 7, 19});
  }
  ModelParams ml_params =
      init_params(MultiLabelSpec{2000, 50, MultiLabelLoss::kSigmoid}, rng);
  for (auto& w : ml_params.flat) w = rng.normal() * 0.1;
  std::printf("multilabel gradient kernel: b=%lld d=%lld classes=50\n",
              static_cast<long long>(batch_size), 2000LL);
  start = std::chrono::steady_clock::now();
  for (int rep = 0; rep < 50; ++rep) {
    accumulate_clipped_serial(ml_params, ml_data, batch, std::span(&task, 1),
                              false, stats);
  }
  const double ml_serial = seconds_since(start);
  std::printf("  serial          %8.3f ms/step\n", ml_serial * 1000 / 50);
  for (int threads = 2; threads <= max_threads; threads *= 2) {
    BatchWorkspace ws;
    start = std::chrono::steady_clock::now();
    for (int rep = 0; rep < 50; ++rep) {
      accumulate_clipped(ml_params, ml_data, batch, std::span(&task, 1),
                         false, threads, ws, stats);
    }
    const double ml_par = seconds_since(start);
    std::printf("  openmp %d threads %8.3f ms/step  (%.2fx)\n", threads,
                ml_par * 1000 / 50, ml_serial / ml_par);
  }

  std::printf("dataset evaluation: n=%lld\n",
              static_cast<long long>(data.size()));
  start = std::chrono::steady_clock::now();
  for (int rep = 0; rep < 20; ++rep) batch_eval_serial(params, data);
  const double eval_serial = seconds_since(start);
  std::printf("  serial          %8.3f ms/eval\n", eval_serial * 1000 / 20);
  for (int threads = 2; threads <= max_threads; threads *= 2) {
    start = std::chrono::steady_clock::now();
    for (int rep = 0; rep < 20; ++rep) batch_eval(params, data, threads);
    const double eval_par = seconds_since(start);
    std::printf("  openmp %d threads %8.3f ms/eval  (%.2fx)\n", threads,
                eval_par * 1000 / 20, eval_serial / eval_par);
  }
  return 0;
}
