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

#ifndef DP2_VEC_HPP_
#define DP2_VEC_HPP_

#include <cstdint>
#include <span>
#include <vector>

namespace dp2 {

// Fixed-length dense vector of doubles. All coordinate-wise binary ops
// require equal length and keep every value finite.
class DenseVec {
 public:
  DenseVec() = default;
  explicit DenseVec(std::int64_t dim, double fill = 0.0)
      : values_(static_cast<std::size_t>(dim), fill) {}
  explicit DenseVec(std::vector<double> values) : values_(std::move(values)) {}
  DenseVec(std::initializer_list<double> values) : values_(values) {}

  std::int64_t dim() const { return static_cast<std::int64_t>(values_.size()); }
  double operator[](std::int64_t i) const {
    return values_[static_cast<std::size_t>(i)];
  }
  double& operator[](std::int64_t i) {
    return values_[static_cast<std::size_t>(i)];
  }
  double* data() { return values_.data(); }
  const double* data() const { return values_.data(); }
  const std::vector<double>& values() const { return values_; }

  void fill(double x) { values_.assign(values_.size(), x); }
  void resize(std::int64_t dim, double fill = 0.0) {
    values_.assign(static_cast<std::size_t>(dim), fill);
  }

  auto begin() { return values_.begin(); }
  auto end() { return values_.end(); }
  auto begin() const { return values_.begin(); }
  auto end() const { return values_.end(); }

  bool operator==(const DenseVec& other) const = default;

 private:
  std::vector<double> values_;
};

// Sparse vector: strictly ascending indices, all < dim.
struct SparseVec {
  std::vector<std::int64_t> idx;
  std::vector<double> val;
  std::int64_t dim = 0;

  std::int64_t nnz() const { return static_cast<std::int64_t>(idx.size()); }
  void clear() {
    idx.clear();
    val.clear();
  }
  void push(std::int64_t i, double v) {
    idx.push_back(i);
    val.push_back(v);
  }
  // Throws std::invalid_argument if indices are not strictly ascending,
  // out of range, or any value is non-finite.
  void validate() const;
};

// Coordinate-wise operations. Pure forms allocate the result; the _inplace
// forms are used by the optimizer hot loops.
DenseVec ew_mul(const DenseVec& a, const DenseVec& b);
DenseVec ew_div(const DenseVec& a, const DenseVec& b);
DenseVec ew_square(const DenseVec& a);
DenseVec ew_sqrt_add(const DenseVec& a, double eps);
DenseVec axpy(double alpha, const DenseVec& x, const DenseVec& y);

void ew_square_inplace(DenseVec& a);
void ew_sqrt_add_into(const DenseVec& a, double eps, DenseVec& out);
void add_scaled_inplace(DenseVec& y, double alpha, const DenseVec& x);
void scale_inplace(DenseVec& a, double alpha);

double l1_norm(const DenseVec& a);
double l2_norm(const DenseVec& a);
double l2_norm(const SparseVec& a);
double dot(const DenseVec& a, const DenseVec& b);

DenseVec densify(const SparseVec& s);
// Drops explicit zeros.
SparseVec sparsify(const DenseVec& d);

// Throws if any value is NaN or infinite.
void check_finite(const DenseVec& a, const char* what);
void check_finite(double x, const char* what);

}  // namespace dp2

#endif  // DP2_VEC_HPP_
