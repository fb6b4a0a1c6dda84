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

#ifndef DP2_DATA_HPP_
#define DP2_DATA_HPP_

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "dp2/model.hpp"
#include "dp2/rng.hpp"

namespace dp2 {

enum class DataKind { kSparse, kRatings };

// Immutable after load; shared reads are safe.
struct Dataset {
  DataKind kind = DataKind::kSparse;
  std::vector<SparseExample> examples;
  std::vector<RatingTriple> ratings;

  std::int64_t dim = 0;  // declared feature dimension for sparse data
  std::int64_t num_users = 0;
  std::int64_t num_items = 0;
  // Original file ids by dense index, in first-appearance order.
  std::vector<std::string> user_ids;
  std::vector<std::string> item_ids;

  std::int64_t size() const {
    return kind == DataKind::kSparse
               ? static_cast<std::int64_t>(examples.size())
               : static_cast<std::int64_t>(ratings.size());
  }
};

// Text format, one example per line:
//   label[,label...] idx:val idx:val ...
// Indices are 0-based and must be < dim. dim == 0 infers the dimension as
// max index + 1. Malformed input reports the offending line number.
Dataset load_sparse(const std::string& path, std::int64_t dim = 0);
void save_sparse(const Dataset& data, const std::string& path);

// Tab-separated "user item rating" triples. Ids are remapped to dense
// 0-based indices in first-appearance order; the original ids are kept so
// a save/load round trip reproduces the same mapping. Duplicate
// (user, item) pairs stay separate records.
Dataset load_ratings(const std::string& path);
void save_ratings(const Dataset& data, const std::string& path);

struct SynthSpec {
  std::int64_t n = 0;             // training examples; test set is n/5
  std::int64_t d = 0;             // feature dimension
  std::int64_t sparsity = 0;      // active features per example
  std::int64_t num_informative = 0;
  double label_noise = 0.0;       // flip probability
  std::uint64_t seed = 0;
  // 0: active features uniform over [0, d). > 0: feature j is drawn with
  // probability proportional to (j+1)^-zipf, giving the skewed frequency
  // profile of bag-of-words data (rare features stay informative).
  double zipf = 0.0;
  // 1: all feature values standard normal. < 1: feature j's values are
  // scaled by value_scale_min^(j/(d-1)), so coordinate scales span
  // [value_scale_min, 1] and a single SGD step size cannot serve them all.
  double value_scale_min = 1.0;
  // false: signed standard-normal values. true: absolute values, giving the
  // sign-coherent per-coordinate gradients of bag-of-words data.
  bool nonneg_values = false;
  // 0: informative features spread evenly over [0, d). > 0: spread evenly
  // over the rarest (1 - head_fraction) of the index range, leaving a
  // frequent-but-uninformative head (stopword-like structure).
  double informative_tail_start = 0.0;
};

// Sparse binary-classification data: a hidden weight vector supported on
// num_informative features spread evenly across [0, d), examples with
// `sparsity` active features (uniformly chosen by default) and
// standard-normal values, labels from the sign of the hidden dot product
// flipped with probability label_noise.
std::pair<Dataset, Dataset> gen_synthetic(const SynthSpec& spec);

// Random record-level split; `test_fraction` of records go to the second
// dataset. Dim metadata is copied to both halves.
std::pair<Dataset, Dataset> split_dataset(const Dataset& data,
                                          double test_fraction, Rng& rng);

// Uniform sampling without replacement, deterministic per seed. The
// internal permutation buffer persists across calls.
class BatchSampler {
 public:
  BatchSampler(std::int64_t n, std::uint64_t seed);

  // Fills `out` with b distinct indices. Throws if b > n or b <= 0.
  void sample(std::int64_t b, std::vector<std::int64_t>& out);

  std::int64_t population() const { return n_; }

 private:
  std::int64_t n_;
  std::vector<std::int64_t> perm_;
  Rng rng_;
};

}  // namespace dp2

#endif  // DP2_DATA_HPP_
