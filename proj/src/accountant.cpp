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

#include "dp2/accountant.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace dp2 {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kInf = std::numeric_limits<double>::infinity();

double log_add(double a, double b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  const double hi = std::max(a, b), lo = std::min(a, b);
  return hi + std::log1p(std::exp(lo - hi));
}

// log(e^a - e^b) for a >= b; clamps tiny negative differences to -inf.
double log_sub(double a, double b) {
  if (b == kNegInf) return a;
  if (b >= a) return kNegInf;
  return a + std::log1p(-std::exp(b - a));
}

double log_erfc(double x) {
  const double r = std::erfc(x);
  if (r > 1e-300) return std::log(r);
  // Asymptotic expansion of log erfc for large x.
  const double x2 = x * x;
  return -0.5 * std::log(3.14159265358979323846) - std::log(x) - x2 -
         0.5 / x2 + 0.625 / (x2 * x2) - (37.0 / 24.0) / (x2 * x2 * x2) +
         (353.0 / 64.0) / (x2 * x2 * x2 * x2);
}

double log_binom(std::int64_t n, std::int64_t k) {
  return std::lgamma(static_cast<double>(n + 1)) -
         std::lgamma(static_cast<double>(k + 1)) -
         std::lgamma(static_cast<double>(n - k + 1));
}

// log E_{k~Bin(alpha,q)}-style moment sum for integer alpha:
//   A = sum_k C(alpha,k) q^k (1-q)^(alpha-k) exp(k(k-1)/(2 sigma^2)).
double log_a_int(double q, double sigma, std::int64_t alpha) {
  double log_a = kNegInf;
  const double log_q = std::log(q);
  const double log_1mq = std::log1p(-q);
  for (std::int64_t k = 0; k <= alpha; ++k) {
    double term = log_binom(alpha, k);
    if (k > 0) term += static_cast<double>(k) * log_q;
    if (k < alpha) term += static_cast<double>(alpha - k) * log_1mq;
    term += static_cast<double>(k * (k - 1)) / (2.0 * sigma * sigma);
    log_a = log_add(log_a, term);
  }
  return log_a;
}

// Fractional-order moment via the two-part series with erfc tail weights.
double log_a_frac(double q, double sigma, double alpha) {
  double log_a0 = kNegInf, log_a1 = kNegInf;
  const double z0 = sigma * sigma * std::log(1.0 / q - 1.0) + 0.5;
  const double log_q = std::log(q);
  const double log_1mq = std::log1p(-q);
  const double log_half = std::log(0.5);
  const double sqrt2_sigma = std::sqrt(2.0) * sigma;
  double log_coef = 0.0;  // log |binom(alpha, i)|, iteratively updated
  int sign = 1;
  for (std::int64_t i = 0;; ++i) {
    if (i > 0) {
      double factor = (alpha - static_cast<double>(i - 1)) /
                      static_cast<double>(i);
      if (factor == 0.0) break;  // integer alpha: series terminates
      if (factor < 0.0) {
        sign = -sign;
        factor = -factor;
      }
      log_coef += std::log(factor);
    }
    const double di = static_cast<double>(i);
    const double j = alpha - di;
    const double log_t0 = log_coef + di * log_q + j * log_1mq;
    const double log_t1 = log_coef + j * log_q + di * log_1mq;
    const double log_e0 = log_half + log_erfc((di - z0) / sqrt2_sigma);
    const double log_e1 = log_half + log_erfc((z0 - j) / sqrt2_sigma);
    const double log_s0 =
        log_t0 + (di * di - di) / (2.0 * sigma * sigma) + log_e0;
    const double log_s1 = log_t1 + (j * j - j) / (2.0 * sigma * sigma) + log_e1;
    if (sign > 0) {
      log_a0 = log_add(log_a0, log_s0);
      log_a1 = log_add(log_a1, log_s1);
    } else {
      log_a0 = log_sub(log_a0, log_s0);
      log_a1 = log_sub(log_a1, log_s1);
    }
    // Terms eventually decay only polynomially (|binom(alpha,i)| falls like
    // i^-(alpha+1)); A >= 1, so e^-30 tails are negligible.
    if (std::max(log_s0, log_s1) < -30.0) break;
    if (i > 1000000) {
      throw std::runtime_error("rdp series failed to converge");
    }
  }
  return log_add(log_a0, log_a1);
}

}  // namespace

std::vector<double> default_rdp_orders() {
  std::vector<double> orders = {1.25, 1.5, 1.75, 2.0};
  for (double a = 2.5; a <= 63.0; a += 0.5) orders.push_back(a);
  for (int a = 64; a <= 256; ++a) orders.push_back(static_cast<double>(a));
  return orders;
}

double rdp_subsampled_gaussian(double q, double sigma, double alpha) {
  if (!(q >= 0.0 && q <= 1.0)) {
    throw std::invalid_argument("sampling ratio must be in [0, 1]");
  }
  if (!(sigma > 0.0)) {
    throw std::invalid_argument("rdp needs sigma > 0");
  }
  if (!(alpha > 1.0)) {
    throw std::invalid_argument("rdp order must be > 1");
  }
  if (q == 0.0) return 0.0;
  if (q == 1.0) return alpha / (2.0 * sigma * sigma);
  const bool integer_alpha = std::floor(alpha) == alpha;
  const double log_a = integer_alpha
                           ? log_a_int(q, sigma,
                                       static_cast<std::int64_t>(alpha))
                           : log_a_frac(q, sigma, alpha);
  return std::max(0.0, log_a / (alpha - 1.0));
}

double rdp_to_epsilon(const std::vector<double>& orders,
                      const std::vector<double>& rdp, double delta) {
  if (!(delta > 0.0 && delta < 1.0)) {
    throw std::invalid_argument("delta must be in (0, 1)");
  }
  if (orders.size() != rdp.size() || orders.empty()) {
    throw std::invalid_argument("orders/rdp size mismatch");
  }
  const double log_inv_delta = std::log(1.0 / delta);
  double best = kInf;
  for (std::size_t i = 0; i < orders.size(); ++i) {
    if (!std::isfinite(rdp[i])) continue;
    best = std::min(best, rdp[i] + log_inv_delta / (orders[i] - 1.0));
  }
  return best;
}

PrivacyLedger::PrivacyLedger(std::vector<double> orders)
    : orders_(std::move(orders)), rdp_(orders_.size(), 0.0) {
  if (orders_.empty()) {
    throw std::invalid_argument("PrivacyLedger: empty order grid");
  }
}

void PrivacyLedger::record_step(double q, double sigma) {
  record_steps(q, sigma, 1);
}

void PrivacyLedger::record_steps(double q, double sigma, std::int64_t count) {
  if (count <= 0) return;
  if (sigma == 0.0) {
    unbounded_ = true;
    steps_ += count;
    return;
  }
  if (q != cached_q_ || sigma != cached_sigma_) {
    cached_row_.resize(orders_.size());
    for (std::size_t i = 0; i < orders_.size(); ++i) {
      cached_row_[i] = rdp_subsampled_gaussian(q, sigma, orders_[i]);
    }
    cached_q_ = q;
    cached_sigma_ = sigma;
  }
  for (std::size_t i = 0; i < orders_.size(); ++i) {
    rdp_[i] += static_cast<double>(count) * cached_row_[i];
  }
  steps_ += count;
}

double PrivacyLedger::epsilon(double delta) const {
  if (unbounded_) return kInf;
  if (steps_ == 0) return 0.0;
  return rdp_to_epsilon(orders_, rdp_, delta);
}

double epsilon_for(double q, double sigma, std::int64_t steps, double delta,
                   const std::vector<double>& orders) {
  if (steps == 0) return 0.0;
  if (sigma == 0.0) return kInf;
  std::vector<double> rdp(orders.size());
  for (std::size_t i = 0; i < orders.size(); ++i) {
    rdp[i] = static_cast<double>(steps) *
             rdp_subsampled_gaussian(q, sigma, orders[i]);
  }
  return rdp_to_epsilon(orders, rdp, delta);
}

double calibrate_sigma(double target_eps, double delta, double q,
                       std::int64_t steps, double sigma_ceiling) {
  if (!(target_eps > 0.0)) {
    throw std::invalid_argument("calibrate_sigma: target_eps must be > 0");
  }
  const auto orders = default_rdp_orders();
  if (epsilon_for(q, sigma_ceiling, steps, delta, orders) > target_eps) {
    throw std::runtime_error(
        "calibrate_sigma: target unreachable below sigma ceiling");
  }
  double lo = 1e-2;
  if (epsilon_for(q, lo, steps, delta, orders) <= target_eps) return lo;
  double hi = sigma_ceiling;
  while (hi - lo > 1e-3) {
    const double mid = 0.5 * (lo + hi);
    if (epsilon_for(q, mid, steps, delta, orders) <= target_eps) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return hi;
}

}  // namespace dp2
