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

#ifndef DP2_PRIVACY_HPP_
#define DP2_PRIVACY_HPP_

#include <cstdint>
#include <limits>

#include "dp2/rng.hpp"
#include "dp2/vec.hpp"

namespace dp2 {

// Per-run privacy parameters. clip thresholds are per phase: clip_sgd caps
// raw per-example gradients, clip_adaptive caps preconditioned ones.
struct PrivacyConfig {
  double sigma = 0.0;
  double clip_sgd = std::numeric_limits<double>::infinity();
  double clip_adaptive = std::numeric_limits<double>::infinity();
  std::int64_t batch_size = 0;
  std::int64_t dataset_size = 0;
  double delta = 1e-5;

  bool is_private() const { return sigma > 0.0; }
  double sampling_ratio() const {
    return static_cast<double>(batch_size) /
           static_cast<double>(dataset_size);
  }
  // Throws std::invalid_argument on a malformed configuration.
  void validate() const;
};

// Whole-vector L2 rescaling: g * min(1, C / ||g||). C = +inf disables.
// Returns the applied scale (1.0 means no clipping happened).
double clip_inplace(SparseVec& g, double threshold);
double clip_inplace(DenseVec& g, double threshold);
SparseVec clip(const SparseVec& g, double threshold);
DenseVec clip(const DenseVec& g, double threshold);

// Adds iid N(0, (sigma*threshold)^2) per coordinate to the clipped sum.
// sigma == 0 is the identity. Deterministic given the rng state.
void gaussian_mechanism_inplace(DenseVec& sum, double sigma, double threshold,
                                Rng& rng);
DenseVec gaussian_mechanism(const DenseVec& sum, double sigma,
                            double threshold, Rng& rng);

}  // namespace dp2

#endif  // DP2_PRIVACY_HPP_
