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

#ifndef DP2_BATCH_HPP_
#define DP2_BATCH_HPP_

#include <cstdint>
#include <span>
#include <vector>

#include "dp2/data.hpp"
#include "dp2/model.hpp"
#include "dp2/vec.hpp"

namespace dp2 {

// One clipped accumulation over the batch: per-example gradients divided
// coordinate-wise by *precond (identity when null), L2-clipped at
// `threshold`, then summed. Several tasks share one pass over the batch
// (the two-query ablation needs two).
struct ClipTask {
  const DenseVec* precond = nullptr;
  double threshold = 0.0;
};

struct BatchStats {
  std::vector<DenseVec> sums;             // per task
  std::vector<std::int64_t> clip_counts;  // per task
  double raw_l2_sum = 0.0;                // sum of raw per-example L2 norms
  DenseVec raw_sum;                        // unclipped raw sum, if requested
  bool has_raw = false;
};

// Reusable per-thread buffers; sized lazily. The dense per-thread
// accumulators are kept all-zero between calls and cleared through
// touched-index lists, so the parallel path costs O(nnz) per thread
// rather than O(dim).
class BatchWorkspace {
 public:
  void prepare(int threads, std::size_t tasks, std::int64_t dim,
               bool want_raw);

  std::vector<std::vector<DenseVec>> task_accum;  // [thread][task]
  std::vector<DenseVec> raw_accum;                // [thread]
  std::vector<std::vector<double>> scratch;       // [thread]
  std::vector<std::vector<std::int64_t>> clip_counts;
  std::vector<double> l2_sums;
  // indices written since the last combine; may contain duplicates
  std::vector<std::vector<std::vector<std::int64_t>>> touched;  // [t][task]
  std::vector<std::vector<std::int64_t>> raw_touched;           // [thread]
};

// Serial reference: strict example order, no auxiliary buffers.
void accumulate_clipped_serial(const ModelParams& params, const Dataset& data,
                               std::span<const std::int64_t> batch,
                               std::span<const ClipTask> tasks, bool want_raw,
                               BatchStats& out);

// OpenMP version: contiguous static chunks per thread, partials combined in
// thread order, so results are reproducible for a fixed thread count.
// threads <= 1 falls through to the serial path.
void accumulate_clipped(const ModelParams& params, const Dataset& data,
                        std::span<const std::int64_t> batch,
                        std::span<const ClipTask> tasks, bool want_raw,
                        int threads, BatchWorkspace& ws, BatchStats& out);

}  // namespace dp2

#endif  // DP2_BATCH_HPP_
