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

#include "dp2/batch.hpp"

#include <cmath>
#include <stdexcept>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace dp2 {

namespace {

void scatter_add(const std::int64_t* idx, const double* val, std::int64_t nnz,
                 double scale, DenseVec& accum,
                 std::vector<std::int64_t>* touched) {
  for (std::int64_t k = 0; k < nnz; ++k) {
    if (touched != nullptr && accum[idx[k]] == 0.0) {
      touched->push_back(idx[k]);
    }
    accum[idx[k]] += scale * val[k];
  }
}

// Preconditions, clips and scatters one example's gradient into `accum`.
// Returns true when clipping actually rescaled the gradient.
bool apply_task(const SparseVec& grad, const ClipTask& task, double raw_l2,
                std::vector<double>& scratch, DenseVec& accum,
                std::vector<std::int64_t>* touched) {
  const std::int64_t nnz = grad.nnz();
  const double* vals = grad.val.data();
  double norm = raw_l2;
  if (task.precond != nullptr) {
    scratch.resize(static_cast<std::size_t>(nnz));
    double sq = 0.0;
    for (std::int64_t k = 0; k < nnz; ++k) {
      const double v = grad.val[k] / (*task.precond)[grad.idx[k]];
      scratch[static_cast<std::size_t>(k)] = v;
      sq += v * v;
    }
    norm = std::sqrt(sq);
    vals = scratch.data();
  }
  double scale = 1.0;
  bool clipped = false;
  if (!std::isinf(task.threshold) && norm > task.threshold) {
    scale = task.threshold / norm;
    clipped = true;
  }
  scatter_add(grad.idx.data(), vals, nnz, scale, accum, touched);
  return clipped;
}

void accumulate_range(const ModelParams& params, const Dataset& data,
                      std::span<const std::int64_t> batch, std::int64_t lo,
                      std::int64_t hi, std::span<const ClipTask> tasks,
                      std::span<DenseVec> accums,
                      std::vector<std::vector<std::int64_t>>* touched,
                      DenseVec* raw_accum,
                      std::vector<std::int64_t>* raw_touched,
                      std::vector<double>& scratch,
                      std::span<std::int64_t> clip_counts, double& l2_sum) {
  for (std::int64_t i = lo; i < hi; ++i) {
    const SparseVec grad = per_example_grad(params, data, batch[i]);
    const double raw_l2 = l2_norm(grad);
    l2_sum += raw_l2;
    if (raw_accum != nullptr) {
      scatter_add(grad.idx.data(), grad.val.data(), grad.nnz(), 1.0,
                  *raw_accum, raw_touched);
    }
    for (std::size_t t = 0; t < tasks.size(); ++t) {
      if (apply_task(grad, tasks[t], raw_l2, scratch, accums[t],
                     touched != nullptr ? &(*touched)[t] : nullptr)) {
        ++clip_counts[t];
      }
    }
  }
}

void validate_tasks(std::span<const ClipTask> tasks, std::int64_t dim) {
  if (tasks.empty()) throw std::invalid_argument("no clip tasks");
  for (const auto& task : tasks) {
    if (!(task.threshold > 0.0)) {
      throw std::invalid_argument("clip threshold must be > 0");
    }
    if (task.precond != nullptr && task.precond->dim() != dim) {
      throw std::invalid_argument("preconditioner dimension mismatch");
    }
  }
}

// Adds the thread-local accumulation into `out` and restores the
// all-zero invariant, visiting only touched coordinates. Duplicate
// indices are harmless: the first visit moves the value and zeroes it.
void drain(DenseVec& accum, std::vector<std::int64_t>& touched,
           DenseVec& out) {
  for (const std::int64_t j : touched) {
    out[j] += accum[j];
    accum[j] = 0.0;
  }
  touched.clear();
}

}  // namespace

void BatchWorkspace::prepare(int threads, std::size_t tasks, std::int64_t dim,
                             bool want_raw) {
  const auto nt = static_cast<std::size_t>(threads);
  task_accum.resize(nt);
  scratch.resize(nt);
  clip_counts.resize(nt);
  touched.resize(nt);
  l2_sums.assign(nt, 0.0);
  raw_accum.resize(want_raw ? nt : 0);
  raw_touched.resize(want_raw ? nt : 0);
  for (std::size_t t = 0; t < nt; ++t) {
    task_accum[t].resize(tasks);
    touched[t].resize(tasks);
    for (auto& acc : task_accum[t]) {
      if (acc.dim() != dim) acc.resize(dim, 0.0);
    }
    clip_counts[t].assign(tasks, 0);
    if (want_raw && raw_accum[t].dim() != dim) raw_accum[t].resize(dim, 0.0);
  }
}

void accumulate_clipped_serial(const ModelParams& params, const Dataset& data,
                               std::span<const std::int64_t> batch,
                               std::span<const ClipTask> tasks, bool want_raw,
                               BatchStats& out) {
  const std::int64_t dim = params.dim();
  validate_tasks(tasks, dim);
  out.sums.resize(tasks.size());
  for (auto& s : out.sums) s.resize(dim, 0.0);
  out.clip_counts.assign(tasks.size(), 0);
  out.raw_l2_sum = 0.0;
  out.has_raw = want_raw;
  if (want_raw) out.raw_sum.resize(dim, 0.0);
  std::vector<double> scratch;
  accumulate_range(params, data, batch, 0,
                   static_cast<std::int64_t>(batch.size()), tasks, out.sums,
                   nullptr, want_raw ? &out.raw_sum : nullptr, nullptr,
                   scratch, out.clip_counts, out.raw_l2_sum);
}

void accumulate_clipped(const ModelParams& params, const Dataset& data,
                        std::span<const std::int64_t> batch,
                        std::span<const ClipTask> tasks, bool want_raw,
                        int threads, BatchWorkspace& ws, BatchStats& out) {
#ifdef _OPENMP
  const std::int64_t n = static_cast<std::int64_t>(batch.size());
  int nthreads = threads > 0 ? threads : omp_get_max_threads();
  if (nthreads > n) nthreads = static_cast<int>(n);
  if (nthreads <= 1) {
    accumulate_clipped_serial(params, data, batch, tasks, want_raw, out);
    return;
  }
  const std::int64_t dim = params.dim();
  validate_tasks(tasks, dim);
  ws.prepare(nthreads, tasks.size(), dim, want_raw);
#pragma omp parallel num_threads(nthreads)
  {
    const int tid = omp_get_thread_num();
    const std::int64_t lo = n * tid / nthreads;
    const std::int64_t hi = n * (tid + 1) / nthreads;
    accumulate_range(params, data, batch, lo, hi, tasks, ws.task_accum[tid],
                     &ws.touched[tid],
                     want_raw ? &ws.raw_accum[tid] : nullptr,
                     want_raw ? &ws.raw_touched[tid] : nullptr,
                     ws.scratch[tid], ws.clip_counts[tid], ws.l2_sums[tid]);
  }
  out.sums.resize(tasks.size());
  for (auto& s : out.sums) s.resize(dim, 0.0);
  out.clip_counts.assign(tasks.size(), 0);
  out.raw_l2_sum = 0.0;
  out.has_raw = want_raw;
  if (want_raw) out.raw_sum.resize(dim, 0.0);
  // Combine in thread order so results are reproducible for a fixed
  // thread count.
  for (int tid = 0; tid < nthreads; ++tid) {
    for (std::size_t t = 0; t < tasks.size(); ++t) {
      drain(ws.task_accum[tid][t], ws.touched[tid][t], out.sums[t]);
      out.clip_counts[t] += ws.clip_counts[tid][t];
    }
    if (want_raw) {
      drain(ws.raw_accum[tid], ws.raw_touched[tid], out.raw_sum);
    }
    out.raw_l2_sum += ws.l2_sums[tid];
  }
#else
  (void)threads;
  (void)ws;
  accumulate_clipped_serial(params, data, batch, tasks, want_raw, out);
#endif
}

}  // namespace dp2
