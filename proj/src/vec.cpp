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

#include "dp2/vec.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace dp2 {

namespace {

void require_same_dim(const DenseVec& a, const DenseVec& b, const char* op) {
  if (a.dim() != b.dim()) {
    throw std::invalid_argument(std::string(op) + ": dimension mismatch (" +
                                std::to_string(a.dim()) + " vs " +
                                std::to_string(b.dim()) + ")");
  }
}

}  // namespace

void SparseVec::validate() const {
  if (idx.size() != val.size()) {
    throw std::invalid_argument("SparseVec: index/value length mismatch");
  }
  std::int64_t prev = -1;
  for (std::size_t k = 0; k < idx.size(); ++k) {
    if (idx[k] <= prev) {
      throw std::invalid_argument("SparseVec: indices not strictly ascending");
    }
    if (idx[k] >= dim) {
      throw std::invalid_argument("SparseVec: index " + std::to_string(idx[k]) +
                                  " out of range for dim " +
                                  std::to_string(dim));
    }
    if (!std::isfinite(val[k])) {
      throw std::invalid_argument("SparseVec: non-finite value");
    }
    prev = idx[k];
  }
}

DenseVec ew_mul(const DenseVec& a, const DenseVec& b) {
  require_same_dim(a, b, "ew_mul");
  DenseVec out(a.dim());
  for (std::int64_t j = 0; j < a.dim(); ++j) out[j] = a[j] * b[j];
  return out;
}

DenseVec ew_div(const DenseVec& a, const DenseVec& b) {
  require_same_dim(a, b, "ew_div");
  DenseVec out(a.dim());
  for (std::int64_t j = 0; j < a.dim(); ++j) {
    if (!(b[j] > 0.0)) {
      throw std::invalid_argument("ew_div: nonpositive divisor at coordinate " +
                                  std::to_string(j));
    }
    out[j] = a[j] / b[j];
  }
  check_finite(out, "ew_div");
  return out;
}

DenseVec ew_square(const DenseVec& a) {
  DenseVec out(a.dim());
  for (std::int64_t j = 0; j < a.dim(); ++j) out[j] = a[j] * a[j];
  return out;
}

DenseVec ew_sqrt_add(const DenseVec& a, double eps) {
  if (!(eps > 0.0)) throw std::invalid_argument("ew_sqrt_add: eps must be > 0");
  DenseVec out(a.dim());
  for (std::int64_t j = 0; j < a.dim(); ++j) {
    if (a[j] < 0.0) {
      throw std::invalid_argument(
          "ew_sqrt_add: negative input at coordinate " + std::to_string(j));
    }
    out[j] = std::sqrt(a[j]) + eps;
  }
  return out;
}

DenseVec axpy(double alpha, const DenseVec& x, const DenseVec& y) {
  require_same_dim(x, y, "axpy");
  DenseVec out(x.dim());
  for (std::int64_t j = 0; j < x.dim(); ++j) out[j] = alpha * x[j] + y[j];
  return out;
}

void ew_square_inplace(DenseVec& a) {
  for (auto& x : a) x *= x;
}

void ew_sqrt_add_into(const DenseVec& a, double eps, DenseVec& out) {
  if (!(eps > 0.0)) throw std::invalid_argument("ew_sqrt_add: eps must be > 0");
  out.resize(a.dim());
  for (std::int64_t j = 0; j < a.dim(); ++j) {
    if (a[j] < 0.0) {
      throw std::invalid_argument(
          "ew_sqrt_add: negative input at coordinate " + std::to_string(j));
    }
    out[j] = std::sqrt(a[j]) + eps;
  }
}

void add_scaled_inplace(DenseVec& y, double alpha, const DenseVec& x) {
  require_same_dim(x, y, "add_scaled");
  for (std::int64_t j = 0; j < x.dim(); ++j) y[j] += alpha * x[j];
}

void scale_inplace(DenseVec& a, double alpha) {
  for (auto& x : a) x *= alpha;
}

double l1_norm(const DenseVec& a) {
  double s = 0.0;
  for (double x : a) s += std::fabs(x);
  return s;
}

double l2_norm(const DenseVec& a) {
  double s = 0.0;
  for (double x : a) s += x * x;
  return std::sqrt(s);
}

double l2_norm(const SparseVec& a) {
  double s = 0.0;
  for (double x : a.val) s += x * x;
  return std::sqrt(s);
}

double dot(const DenseVec& a, const DenseVec& b) {
  require_same_dim(a, b, "dot");
  double s = 0.0;
  for (std::int64_t j = 0; j < a.dim(); ++j) s += a[j] * b[j];
  return s;
}

DenseVec densify(const SparseVec& s) {
  s.validate();
  DenseVec out(s.dim);
  for (std::int64_t k = 0; k < s.nnz(); ++k) out[s.idx[k]] = s.val[k];
  return out;
}

SparseVec sparsify(const DenseVec& d) {
  SparseVec out;
  out.dim = d.dim();
  for (std::int64_t j = 0; j < d.dim(); ++j) {
    if (d[j] != 0.0) out.push(j, d[j]);
  }
  return out;
}

void check_finite(const DenseVec& a, const char* what) {
  for (double x : a) {
    if (!std::isfinite(x)) {
      throw std::runtime_error(std::string(what) + ": non-finite value");
    }
  }
}

void check_finite(double x, const char* what) {
  if (!std::isfinite(x)) {
    throw std::runtime_error(std::string(what) + ": non-finite value");
  }
}

}  // namespace dp2
